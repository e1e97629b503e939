#include "trussest/simulation.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>

#include "trussest/config.hpp"
#include "trussest/linalg.hpp"
#include "trussest/signal.hpp"

namespace trussest {

namespace {

std::vector<int> fused_camera_rows(const CameraModel& cam, const std::vector<TrackedDof>& exclude) {
  std::vector<int> rows;
  for (int i = 0; i < cam.size(); ++i) {
    bool excluded = false;
    for (const auto& ex : exclude)
      if (ex.node == cam.tracked[i].node && ex.axis == cam.tracked[i].axis) excluded = true;
    if (!excluded) rows.push_back(i);
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------- truth

TruthTrajectory simulate_truth(const AssembledModel& model, const GroundMotion& motion, double T,
                               double dt_fine, double dt_out) {
  if (!(T > 0.0) || !(dt_fine > 0.0) || !(dt_out > 0.0))
    throw std::invalid_argument("simulate_truth: T, dt_fine and dt_out must be positive");
  const double ratio = dt_out / dt_fine;
  const long sub = std::lround(ratio);
  if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-9 * ratio)
    throw std::invalid_argument("simulate_truth: dt_out must be an integer multiple of dt_fine");
  motion.validate();

  const int n = model.n;
  const ModalBasis full = solve_modes(model, n);
  const Eigen::VectorXd gamma =
      full.Phi.transpose() * (model.M * influence_vector(model.dof_map, motion.direction));

  // Per-mode propagator of [eta, eta_dot, a, a_dot] over one fine step.
  std::vector<Eigen::Matrix<double, 2, 4>> prop(n);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(4, 4);
    const double w = full.omega[i], z = full.zeta[i];
    aug(0, 1) = 1.0;
    aug(1, 0) = -w * w;
    aug(1, 1) = -2.0 * z * w;
    aug(1, 2) = -gamma[i];
    aug(2, 3) = 1.0;
    prop[i] = expm(aug * dt_fine).topRows(2);
  }

  const long ticks = static_cast<long>(std::floor(T / dt_out + 1e-9)) + 1;
  TruthTrajectory tr;
  tr.dt = dt_out;
  tr.q.reserve(ticks);
  tr.qd.reserve(ticks);

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n), etad = Eigen::VectorXd::Zero(n);
  auto emit = [&](long k) {
    tr.q.push_back(full.Phi * eta);
    tr.qd.push_back(full.Phi * etad);
    if (!motion.displacement.empty())
      tr.table_displacement.push_back(motion.displacement_at(static_cast<double>(k) * dt_out));
  };
  emit(0);
  long j = 0;
  double a_now = motion.accel_at(0.0);
  for (long k = 1; k < ticks; ++k) {
    for (long s = 0; s < sub; ++s, ++j) {
      const double a_next = motion.accel_at(static_cast<double>(j + 1) * dt_fine);
      const double slope = (a_next - a_now) / dt_fine;
      for (int i = 0; i < n; ++i) {
        const auto& P = prop[i];
        const double e0 = eta[i], e1 = etad[i];
        eta[i] = P(0, 0) * e0 + P(0, 1) * e1 + P(0, 2) * a_now + P(0, 3) * slope;
        etad[i] = P(1, 0) * e0 + P(1, 1) * e1 + P(1, 2) * a_now + P(1, 3) * slope;
      }
      a_now = a_next;
    }
    emit(k);
  }
  return tr;
}

// ---------------------------------------------------------------- sensors

SensorSamples sample_sensors(const TruthTrajectory& truth, const StrainGaugeSet& gauges,
                             const CameraModel& camera, const TruthNoise& noise,
                             std::uint64_t gauge_seed, std::uint64_t camera_seed) {
  if (noise.sigma_b < 0 || noise.sigma_c < 0 || noise.sigma_cam < 0 || noise.gauge_offset < 0)
    throw std::invalid_argument("sensor noise levels must be nonnegative");
  camera.validate();
  SensorSamples out;
  out.gauge_ids = gauges.element_ids;
  const int m = gauges.size();

  std::mt19937_64 grng(gauge_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd sigma(m), offset(m);
  for (int i = 0; i < m; ++i) {
    sigma[i] = gauges.kinematics[i].cls == ElementClass::Bracing ? noise.sigma_b : noise.sigma_c;
    offset[i] = noise.gauge_offset > 0.0 ? noise.gauge_offset * normal(grng) : 0.0;
  }
  out.gauges.reserve(truth.q.size());
  for (const auto& q : truth.q) {
    Eigen::VectorXd y = element_forces_nodal(q, gauges) + offset;
    for (int i = 0; i < m; ++i)
      if (sigma[i] > 0.0) y[i] += sigma[i] * normal(grng);
    out.gauges.push_back(std::move(y));
  }

  std::mt19937_64 crng(camera_seed);
  out.camera_at_tick.assign(truth.q.size(), -1);
  for (long k = camera.lag; k < static_cast<long>(truth.q.size()); ++k) {
    if (k % camera.rate_divisor != 0) continue;
    const long kappa = k - camera.lag;
    Eigen::VectorXd d = camera_displacement(truth.q[kappa], camera);
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (noise.sigma_cam > 0.0) d[i] += noise.sigma_cam * normal(crng);
    out.camera_at_tick[k] = static_cast<int>(out.camera.size());
    out.camera.push_back({kappa, k, camera.p0 - d});
  }
  return out;
}

// ---------------------------------------------------------------- configuration

GroundMotion make_excitation(const ExcitationSpec& spec) {
  GroundMotion g;
  if (spec.type == "quake") {
    g = kanai_tajimi(spec.quake, spec.seed, spec.direction);
    g.scale(spec.quake_scale);
    g.parameters["scale"] = spec.quake_scale;
  } else if (spec.type == "chirp") {
    g = chirp(spec.chirp_f0, spec.chirp_f1, spec.chirp_duration, spec.chirp_amplitude,
              1.0 / spec.noise_fs, spec.direction);
  } else if (spec.type == "noise") {
    g = band_limited_noise(spec.noise_fs, spec.noise_f_lo, spec.noise_f_hi, spec.noise_rms,
                           spec.noise_duration, spec.seed, spec.direction);
  } else {
    throw std::invalid_argument("unknown excitation type '" + spec.type + "'");
  }
  return g;
}

StiffnessParams tuned_stiffness() {
  StiffnessParams p;
  p.alpha0 = 3.43 * 0.05;
  p.alpha1 = 2.99 * 0.005;
  p.k_b = 1.79 * 18200.0;
  p.k_ca = 0.70 * 19500.0;
  p.k_cp = 1.29 * 22100.0;
  return p;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.truth_params = tuned_stiffness();
  c.filter_params = tuned_stiffness();
  c.estimator.q = 1e-8;
  c.estimator.f_s = c.f_sg;
  return c;
}

void ExperimentConfig::validate() const {
  if (!(f_sg > 0.0)) throw std::invalid_argument("f_sg must be positive");
  if (camera.rate_divisor < 1) throw std::invalid_argument("camera rate divisor must be >= 1");
  if (camera.lag < 0) throw std::invalid_argument("camera lag must be >= 0");
  if (std::fmod(f_sg, static_cast<double>(camera.rate_divisor)) != 0.0)
    throw std::invalid_argument("f_sg must be divisible by the camera rate divisor");
  const double ratio = 1.0 / (f_sg * dt_fine);
  if (!(dt_fine > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1)
    throw std::invalid_argument("gauge period must be an integer multiple of dt_fine");
  if (n_p < 1) throw std::invalid_argument("n_p must be >= 1");
  if (!(r_b > 0.0) || !(r_c > 0.0) || !(r_t > 0.0))
    throw std::invalid_argument("filter noise variances must be positive");
  if (duration < 0.0) throw std::invalid_argument("duration must be nonnegative");
  truth_params.validate();
  filter_params.validate();
}

std::vector<TrackedDof> default_ldv_channels(Axis direction) {
  if (direction == Axis::Y) return {{11, Axis::Y}, {16, Axis::Y}, {23, Axis::Y}};
  return {{11, Axis::X}, {13, Axis::X}, {23, Axis::X}};
}

TrussGeometry experiment_geometry(const ExperimentConfig& cfg) {
  if (!cfg.model_file.empty()) return load_model_file(cfg.model_file).geometry;
  return build_scale_model(cfg.scale);
}

CameraModel make_camera(const AssembledModel& model, const CameraSettings& s, double r_t) {
  CameraModel c;
  c.tracked = s.tracked.empty() ? default_tracked_dofs() : s.tracked;
  Eigen::Vector3d centre = Eigen::Vector3d::Zero();
  double y_min = 0.0;
  for (size_t i = 0; i < c.tracked.size(); ++i) {
    const auto& P = model.geometry.node(c.tracked[i].node).position;
    centre += P;
    y_min = i == 0 ? P.y() : std::min(y_min, P.y());
  }
  if (!c.tracked.empty()) centre /= static_cast<double>(c.tracked.size());
  centre.y() = y_min - s.standoff;
  c.intrinsics = s.intrinsics;
  c.extrinsics = Extrinsics::facing_plus_y(centre);
  c.lens = s.lens;
  c.calibration = s.calibration;
  c.lag = s.lag;
  c.rate_divisor = s.rate_divisor;
  c.r_t = r_t;
  c.pixel_roundtrip = s.pixel_roundtrip;
  c.depth = s.depth;
  c.pixel_quantization = s.pixel_quantization;
  c.attach(model);
  c.validate();
  return c;
}

FilterModel build_filter_model(const TrussGeometry& geometry, const StiffnessParams& params,
                               int n_p, double dt, const std::vector<int>& gauge_ids, double r_b,
                               double r_c, const CameraModel& camera_template,
                               const std::vector<int>& fused_channels) {
  FilterModel fm;
  fm.model = assemble(geometry, params);
  fm.basis = solve_modes(fm.model, n_p);
  fm.gauges = StrainGaugeSet::from_model(fm.model, gauge_ids, r_b, r_c);
  CameraModel cam = camera_template;
  cam.attach(fm.model);
  fm.camera = cam.subset(fused_channels);
  fm.F = discretize(continuous_system_matrix(fm.basis), dt);
  return fm;
}

// ---------------------------------------------------------------- estimation

EstimationRun run_estimator(const FilterModel& fm, const EstimatorSettings& settings,
                            const SensorSamples& samples, const std::vector<int>& gauge_rows,
                            const std::vector<int>& camera_rows, bool track_health,
                            const std::vector<Eigen::VectorXd>* x_true) {
  const ModalForceModel forces(fm.gauges, fm.basis);
  if (forces.size() != static_cast<int>(gauge_rows.size()))
    throw std::invalid_argument("run_estimator: gauge rows do not match the filter gauge set");
  if (fm.camera.size() != static_cast<int>(camera_rows.size()))
    throw std::invalid_argument("run_estimator: camera rows do not match the fused camera");
  FusionEstimator est(fm.F, forces, build_R_sg(fm.gauges), forces.jacobian_at_rest(),
                      camera_matrix(fm.camera, fm.basis), fm.camera.p0, build_R_cam(fm.camera),
                      fm.camera.lag, settings);

  EstimationRun run;
  const size_t N = samples.gauges.size();
  run.x_hat.reserve(N);
  Eigen::VectorXd y_sg(static_cast<Eigen::Index>(gauge_rows.size()));
  CameraSample cs;
  cs.y.resize(static_cast<Eigen::Index>(camera_rows.size()));
  for (size_t k = 0; k < N; ++k) {
    for (size_t i = 0; i < gauge_rows.size(); ++i) y_sg[i] = samples.gauges[k][gauge_rows[i]];
    const CameraSample* cam = nullptr;
    if (k < samples.camera_at_tick.size() && samples.camera_at_tick[k] >= 0 && !camera_rows.empty()) {
      const auto& s = samples.camera[samples.camera_at_tick[k]];
      cs.capture_tick = s.capture_tick;
      cs.delivery_tick = s.delivery_tick;
      for (size_t i = 0; i < camera_rows.size(); ++i) cs.y[i] = s.y[camera_rows[i]];
      cam = &cs;
    }
    const FilterState* st = nullptr;
    try {
      st = &est.step(gauge_rows.empty() ? nullptr : &y_sg, cam);
    } catch (const std::runtime_error&) {
      run.finite = false;
      break;
    }
    if (!st->x.allFinite() || !st->P.allFinite()) {
      run.finite = false;
      break;
    }
    run.x_hat.push_back(st->x);
    if (track_health) {
      run.trace_P.push_back(st->P.trace());
      run.nis_sg.push_back(st->nis_sg);
      run.nis_cam.push_back(st->nis_cam);
      const double tr = st->P.trace();
      run.psd_margin.push_back(tr > 0.0 ? min_symmetric_eigenvalue(st->P) / tr : 0.0);
    }
    if (x_true && k < x_true->size()) {
      const Eigen::VectorXd e = (*x_true)[k] - st->x;
      run.nees.push_back(e.dot(st->P.ldlt().solve(e)));
    }
  }
  run.strain_updates = est.strain_updates();
  run.camera_updates = est.oosm_updates();
  return run;
}

ExperimentData generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.geometry = experiment_geometry(cfg);
  d.truth_model = assemble(d.geometry, cfg.truth_params);
  d.camera = make_camera(d.truth_model, cfg.camera, cfg.r_t);
  d.gauges = StrainGaugeSet::from_model(d.truth_model, {}, cfg.r_b, cfg.r_c);
  d.motion = make_excitation(cfg.excitation);
  const double T = cfg.duration > 0.0 ? cfg.duration : d.motion.duration();
  d.truth = simulate_truth(d.truth_model, d.motion, T, cfg.dt_fine, 1.0 / cfg.f_sg);
  d.samples = sample_sensors(d.truth, d.gauges, d.camera, cfg.truth_noise, cfg.gauge_seed,
                             cfg.camera_seed);
  return d;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, generate_data(cfg));
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg, const ExperimentData& data) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const double dt = 1.0 / cfg.f_sg;

  std::vector<int> gauge_rows;
  std::vector<int> gauge_ids = cfg.gauge_ids;
  if (gauge_ids.empty()) gauge_ids = data.samples.gauge_ids;
  for (int id : gauge_ids) {
    int row = -1;
    for (size_t i = 0; i < data.samples.gauge_ids.size(); ++i)
      if (data.samples.gauge_ids[i] == id) row = static_cast<int>(i);
    if (row < 0) throw std::invalid_argument("no gauge samples for element " + std::to_string(id));
    gauge_rows.push_back(row);
  }
  const std::vector<int> cam_rows = fused_camera_rows(data.camera, cfg.camera_exclude);

  EstimatorSettings settings = cfg.estimator;
  settings.f_s = cfg.f_sg;
  const FilterModel fm = build_filter_model(data.geometry, cfg.filter_params, cfg.n_p, dt, gauge_ids,
                                            cfg.r_b, cfg.r_c, data.camera, cam_rows);
  const Eigen::MatrixXd proj = fm.basis.Phi.transpose() * fm.model.M;
  const int np = fm.basis.n_p();
  std::vector<Eigen::VectorXd> x_true;
  x_true.reserve(data.truth.q.size());
  for (size_t k = 0; k < data.truth.q.size(); ++k) {
    Eigen::VectorXd x(2 * np);
    x.head(np) = proj * data.truth.q[k];
    x.tail(np) = proj * data.truth.qd[k];
    x_true.push_back(std::move(x));
  }
  const EstimationRun run =
      run_estimator(fm, settings, data.samples, gauge_rows, cam_rows, true, &x_true);
  if (!run.finite) throw std::runtime_error("estimator diverged (non-finite state)");

  ExperimentRecord rec;
  rec.dt = dt;
  rec.truth = data.truth;
  rec.samples = data.samples;
  rec.fused_gauges = gauge_ids;
  rec.fused_camera_channels = cam_rows;
  rec.x_hat = run.x_hat;
  rec.trace_P = run.trace_P;
  rec.nis_sg = run.nis_sg;
  rec.nis_cam = run.nis_cam;
  rec.psd_margin = run.psd_margin;
  rec.nees = run.nees;
  rec.x_true = std::move(x_true);
  rec.n_sg = static_cast<int>(gauge_rows.size());
  rec.n_cam = static_cast<int>(cam_rows.size());
  rec.burn_in_ticks = static_cast<int>(std::lround(cfg.burn_in * cfg.f_sg));

  const auto ldv = cfg.ldv.empty() ? default_ldv_channels(cfg.excitation.direction) : cfg.ldv;
  for (const auto& ch : ldv) {
    const int dof = fm.model.dof_map.index(ch.node, ch.axis);
    if (dof < 0) throw std::invalid_argument("reference channel on a fixed DOF");
    rec.ldv_names.push_back(std::to_string(ch.node) + axis_char(ch.axis));
    rec.ldv_dofs.push_back(dof);
    std::vector<double> tr, es, po;
    for (size_t k = 0; k < rec.x_hat.size(); ++k) {
      tr.push_back(rec.truth.q[k][dof]);
      es.push_back(fm.basis.Phi.row(dof).dot(rec.x_hat[k].head(np)));
      po.push_back(0.0);
    }
    rec.ldv_truth.push_back(std::move(tr));
    rec.ldv_estimate.push_back(std::move(es));
    rec.ldv_prediction_only.push_back(std::move(po));
  }
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::pair<double, double> chi_square_band(int dof, double confidence) {
  if (dof < 1) throw std::invalid_argument("chi-square band needs dof >= 1");
  boost::math::chi_squared dist(dof);
  const double a = 0.5 * (1.0 - confidence);
  return {boost::math::quantile(dist, a), boost::math::quantile(dist, 1.0 - a)};
}

MetricsReport metrics(const ExperimentRecord& rec) {
  MetricsReport r;
  const size_t N = rec.x_hat.size();
  const size_t k0 = std::min(N, static_cast<size_t>(std::max(0, rec.burn_in_ticks)));
  if (N <= k0 || rec.ldv_truth.empty()) throw std::invalid_argument("metrics: empty overlap between estimates and references");

  double ss = 0.0, ss_po = 0.0;
  for (size_t c = 0; c < rec.ldv_truth.size(); ++c) {
    std::vector<double> tr(rec.ldv_truth[c].begin() + k0, rec.ldv_truth[c].begin() + N);
    std::vector<double> es(rec.ldv_estimate[c].begin() + k0, rec.ldv_estimate[c].begin() + N);
    std::vector<double> po(rec.ldv_prediction_only[c].begin() + k0, rec.ldv_prediction_only[c].begin() + N);
    ChannelMetrics m;
    m.name = rec.ldv_names[c];
    m.rmse = rmse(tr, es);
    m.peak_error = peak_abs_error(tr, es);
    m.lag = cross_correlation_lag(tr, es, 50);
    m.rmse_prediction_only = rmse(tr, po);
    ss += m.rmse * m.rmse;
    ss_po += m.rmse_prediction_only * m.rmse_prediction_only;
    r.channels.push_back(m);
  }
  r.rmse_total = std::sqrt(ss / static_cast<double>(r.channels.size()));
  r.rmse_prediction_only_total = std::sqrt(ss_po / static_cast<double>(r.channels.size()));

  long n_sg = 0, in_sg = 0, n_cam = 0, in_cam = 0;
  double sum_nis = 0.0;
  if (rec.n_sg > 0) {
    const auto band = chi_square_band(rec.n_sg);
    for (double v : rec.nis_sg) {
      if (!std::isfinite(v)) continue;
      ++n_sg;
      sum_nis += v;
      if (v >= band.first && v <= band.second) ++in_sg;
    }
  }
  if (rec.n_cam > 0) {
    const auto band = chi_square_band(rec.n_cam);
    for (double v : rec.nis_cam) {
      if (!std::isfinite(v)) continue;
      ++n_cam;
      if (v >= band.first && v <= band.second) ++in_cam;
    }
  }
  r.strain_updates = n_sg;
  r.camera_updates = n_cam;
  r.nis_sg_in_band = n_sg ? static_cast<double>(in_sg) / n_sg : 0.0;
  r.nis_cam_in_band = n_cam ? static_cast<double>(in_cam) / n_cam : 0.0;
  r.mean_nis_sg = n_sg ? sum_nis / n_sg : 0.0;
  double nees = 0.0;
  for (double v : rec.nees) nees += v;
  r.mean_nees = rec.nees.empty() ? 0.0 : nees / static_cast<double>(rec.nees.size());
  r.min_psd_margin = rec.psd_margin.empty() ? 0.0 : *std::min_element(rec.psd_margin.begin(), rec.psd_margin.end());
  r.runtime_s = rec.runtime_s;
  return r;
}


PlacementResult placement_for(const ExperimentConfig& cfg) {
  cfg.validate();
  const TrussGeometry g = experiment_geometry(cfg);
  const AssembledModel model = assemble(g, cfg.filter_params);
  const CameraModel cam = make_camera(model, cfg.camera, cfg.r_t);
  const FilterModel fm = build_filter_model(g, cfg.filter_params, cfg.n_p, 1.0 / cfg.f_sg, cfg.gauge_ids,
                                            cfg.r_b, cfg.r_c, cam, fused_camera_rows(cam, cfg.camera_exclude));
  const ModalForceModel forces(fm.gauges, fm.basis);
  return greedy_prune(fm.F, forces.jacobian_at_rest(), fm.gauges.element_ids,
                      camera_matrix(fm.camera, fm.basis));
}

std::vector<AblationPoint> run_ablation(const ExperimentConfig& cfg, const std::vector<int>& sizes) {
  const PlacementResult place = placement_for(cfg);
  const ExperimentData data = generate_data(cfg);
  std::vector<AblationPoint> out;
  for (int n : sizes) {
    ExperimentConfig c = cfg;
    c.gauge_ids = place.set_for(n);
    AblationPoint a;
    a.n_sg = n;
    a.gauges = c.gauge_ids;
    a.report = metrics(run_experiment(c, data));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace trussest
