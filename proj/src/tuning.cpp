#include "trussest/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace trussest {

const std::array<const char*, kTuningParams>& tuning_param_names() {
  static const std::array<const char*, kTuningParams> n = {"alpha0", "alpha1", "k_b", "k_ca", "k_cp",
                                                           "q",      "r_b",    "r_c", "r_t"};
  return n;
}

const std::array<const char*, kTuningParams>& tuning_param_table_labels() {
  static const std::array<const char*, kTuningParams> n = {"alpha1", "alpha2", "k_b", "k_ca", "k_cp",
                                                           "q",      "r_b",    "r_c", "r_t"};
  return n;
}

ParamVector physical_params(const StiffnessParams& s, double q, double r_b, double r_c, double r_t) {
  ParamVector p;
  p << s.alpha0, s.alpha1, s.k_b, s.k_ca, s.k_cp, q, r_b, r_c, r_t;
  return p;
}

ParamVector TuningProblem::table_lower() {
  ParamVector v;
  v << 0.01, 0.01, 0.5, 0.5, 0.5, 0.01, 0.01, 0.01, 0.01;
  return v;
}

ParamVector TuningProblem::table_upper() {
  ParamVector v;
  v << 100, 100, 2, 2, 2, 100, 100, 100, 100;
  return v;
}

std::vector<TrackedDof> default_reference_channels() {
  return {{6, Axis::X}, {13, Axis::X}, {22, Axis::X}, {5, Axis::Z}, {14, Axis::Z}, {21, Axis::Z}};
}

std::vector<int> TuningProblem::reference_rows() const {
  std::vector<int> rows;
  for (const auto& r : references) {
    int found = -1;
    for (int i = 0; i < camera.size(); ++i)
      if (camera.tracked[i].node == r.node && camera.tracked[i].axis == r.axis) found = i;
    if (found < 0)
      throw std::invalid_argument("reference channel " + std::to_string(r.node) + axis_char(r.axis) +
                                  " is not tracked by the camera");
    rows.push_back(found);
  }
  return rows;
}

std::vector<int> TuningProblem::fused_rows() const {
  const auto ref = reference_rows();
  std::vector<int> rows;
  for (int i = 0; i < camera.size(); ++i)
    if (std::find(ref.begin(), ref.end(), i) == ref.end()) rows.push_back(i);
  return rows;
}

void TuningProblem::validate() const {
  for (int i = 0; i < kTuningParams; ++i) {
    if (!(p0[i] > 0.0) && !(i < 2 && p0[i] == 0.0))
      throw std::invalid_argument(std::string("initial guess for ") + tuning_param_names()[i] +
                                  " must be positive");
    if (!(lower[i] > 0.0) || lower[i] > 1.0 || upper[i] < 1.0)
      throw std::invalid_argument(std::string("bounds for ") + tuning_param_names()[i] +
                                  " must satisfy 0 < lower <= 1 <= upper");
  }
  if (references.empty()) throw std::invalid_argument("tuning needs at least one reference channel");
  reference_rows();
  if (k0 < 0) throw std::invalid_argument("k0 must be nonnegative");
  if (dataset.gauges.empty()) throw std::invalid_argument("tuning dataset is empty");
  if (static_cast<size_t>(k0) >= dataset.gauges.size())
    throw std::invalid_argument("k0 lies beyond the end of the dataset");
}

TunedSystem apply_params(const ParamVector& p, const TuningProblem& problem) {
  const ParamVector phys = problem.p0.cwiseProduct(p);
  TunedSystem t;
  t.params = problem.base;
  t.params.alpha0 = phys[0];
  t.params.alpha1 = phys[1];
  t.params.k_b = phys[2];
  t.params.k_ca = phys[3];
  t.params.k_cp = phys[4];
  t.q = phys[5];
  t.r_b = phys[6];
  t.r_c = phys[7];
  t.r_t = phys[8];
  t.params.validate();
  t.settings = problem.estimator;
  t.settings.q = t.q;
  t.settings.f_s = problem.f_sg;
  CameraModel cam = problem.camera;
  cam.r_t = t.r_t;
  const auto ids = problem.gauge_ids.empty() ? problem.dataset.gauge_ids : problem.gauge_ids;
  t.filter = build_filter_model(problem.geometry, t.params, problem.n_p, 1.0 / problem.f_sg, ids,
                                t.r_b, t.r_c, cam, problem.fused_rows());
  return t;
}

double reference_cost(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimate,
                      double cutoff_hz, double sample_rate_hz) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols() ||
      reference.size() == 0)
    throw std::invalid_argument("reference cost: sequences must be nonempty and of equal shape");
  const auto c = HighPassCoefficients::butterworth(cutoff_hz, sample_rate_hz);
  HighPassState hr(c, static_cast<int>(reference.cols()));
  HighPassState he(c, static_cast<int>(reference.cols()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < reference.rows(); ++k) {
    const Eigen::VectorXd a = highpass_step(hr, reference.row(k).transpose());
    const Eigen::VectorXd b = highpass_step(he, estimate.row(k).transpose());
    acc += (a - b).cwiseAbs().sum();
  }
  return acc / static_cast<double>(reference.size());
}

double cost(const ParamVector& p, const TuningProblem& problem) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  TunedSystem t;
  try {
    t = apply_params(p, problem);
  } catch (const std::runtime_error&) {
    return inf;
  }
  std::vector<int> gauge_rows;
  const auto ids = problem.gauge_ids.empty() ? problem.dataset.gauge_ids : problem.gauge_ids;
  for (int id : ids) {
    const auto it = std::find(problem.dataset.gauge_ids.begin(), problem.dataset.gauge_ids.end(), id);
    if (it == problem.dataset.gauge_ids.end())
      throw std::invalid_argument("dataset has no gauge on element " + std::to_string(id));
    gauge_rows.push_back(static_cast<int>(it - problem.dataset.gauge_ids.begin()));
  }
  const auto run =
      run_estimator(t.filter, t.settings, problem.dataset, gauge_rows, problem.fused_rows(), false);
  if (!run.finite) return inf;

  const auto ref_rows = problem.reference_rows();
  CameraModel ref = problem.camera.subset(ref_rows);
  const Eigen::MatrixXd C = camera_matrix(ref, t.filter.basis);
  std::vector<const CameraSample*> used;
  for (const auto& s : problem.dataset.camera)
    if (s.capture_tick >= problem.k0 && s.capture_tick < static_cast<long>(run.x_hat.size()))
      used.push_back(&s);
  if (used.empty()) return inf;
  Eigen::MatrixXd Yr(used.size(), ref_rows.size()), Ye(used.size(), ref_rows.size());
  for (size_t i = 0; i < used.size(); ++i) {
    for (size_t j = 0; j < ref_rows.size(); ++j)
      Yr(i, j) = problem.camera.p0[ref_rows[j]] - used[i]->y[ref_rows[j]];
    Ye.row(i) = (C * run.x_hat[used[i]->capture_tick]).transpose();
  }
  const double v = reference_cost(Yr, Ye, problem.reference_cutoff_hz,
                                  problem.f_sg / problem.camera.rate_divisor);
  return std::isfinite(v) ? v : inf;
}

MinimizeResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                               const std::vector<Eigen::VectorXd>& starts,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                               const TuneOptions& o) {
  if (starts.empty()) throw std::invalid_argument("minimizer needs at least one start");
  const Eigen::Index n = lo.size();
  MinimizeResult res;
  res.f = std::numeric_limits<double>::infinity();
  auto clamp = [&](Eigen::VectorXd x) { return x.cwiseMax(lo).cwiseMin(hi).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    if (res.evaluations >= o.max_evaluations) return std::numeric_limits<double>::infinity();
    const double v = f(x);
    ++res.evaluations;
    res.values.push_back(v);
    if (v < res.f || res.x.size() == 0) {
      if (v < res.f) res.f = v;
      res.x = x;
    }
    res.trace.push_back(res.f);
    return v;
  };

  for (size_t s = 0; s < starts.size(); ++s) {
    const int remaining = o.max_evaluations - res.evaluations;
    if (remaining <= n + 1) break;
    const int budget = remaining / static_cast<int>(starts.size() - s);
    const int stop_at = res.evaluations + budget;

    std::vector<Eigen::VectorXd> X;
    X.push_back(clamp(starts[s]));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd y = X[0];
      y[i] += o.initial_step;
      if (y[i] > hi[i]) y[i] = X[0][i] - o.initial_step;
      X.push_back(clamp(y));
    }
    std::vector<double> F;
    for (const auto& x : X) F.push_back(eval(x));

    while (res.evaluations < stop_at) {
      std::vector<size_t> idx(X.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return F[a] < F[b]; });
      std::vector<Eigen::VectorXd> Xs;
      std::vector<double> Fs;
      for (size_t i : idx) {
        Xs.push_back(X[i]);
        Fs.push_back(F[i]);
      }
      X = std::move(Xs);
      F = std::move(Fs);

      double size = 0.0;
      for (size_t i = 1; i < X.size(); ++i) size = std::max(size, (X[i] - X[0]).cwiseAbs().maxCoeff());
      if (size <= o.x_tol && std::abs(F.back() - F.front()) <= o.f_tol * (1.0 + std::abs(F.front())))
        break;

      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (size_t i = 0; i + 1 < X.size(); ++i) c += X[i];
      c /= static_cast<double>(n);
      const Eigen::VectorXd xr = clamp(c + (c - X.back()));
      const double fr = eval(xr);
      if (fr < F.front()) {
        const Eigen::VectorXd xe = clamp(c + 2.0 * (c - X.back()));
        const double fe = res.evaluations < stop_at ? eval(xe) : fr;
        if (fe < fr) {
          X.back() = xe;
          F.back() = fe;
        } else {
          X.back() = xr;
          F.back() = fr;
        }
        continue;
      }
      if (fr < F[F.size() - 2]) {
        X.back() = xr;
        F.back() = fr;
        continue;
      }
      const bool outside = fr < F.back();
      const Eigen::VectorXd xc = outside ? clamp(c + 0.5 * (xr - c)) : clamp(c + 0.5 * (X.back() - c));
      const double fc = eval(xc);
      if (fc < std::min(fr, F.back())) {
        X.back() = xc;
        F.back() = fc;
        continue;
      }
      for (size_t i = 1; i < X.size() && res.evaluations < stop_at; ++i) {
        X[i] = clamp(X[0] + 0.5 * (X[i] - X[0]));
        F[i] = eval(X[i]);
      }
    }
  }
  return res;
}

TuneResult tune(const TuningProblem& problem, const TuneOptions& options) {
  problem.validate();
  std::vector<int> free;
  for (int i = 0; i < kTuningParams; ++i)
    if (problem.upper[i] > problem.lower[i]) free.push_back(i);

  ParamVector fixed = ParamVector::Ones();
  TuneResult out;
  auto to_params = [&](const Eigen::VectorXd& z) {
    ParamVector p = fixed;
    for (size_t j = 0; j < free.size(); ++j) p[free[j]] = std::exp(z[j]);
    return p;
  };

  if (free.empty()) {
    out.p_star = fixed;
    out.cost = cost(fixed, problem);
    out.evaluations = 1;
    out.trace = {out.cost};
    out.costs = {out.cost};
  } else {
    const Eigen::Index n = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      lo[j] = std::log(problem.lower[free[j]]);
      hi[j] = std::log(problem.upper[free[j]]);
    }
    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(n)};
    std::mt19937_64 rng(options.seed);
    for (int s = 1; s < options.starts; ++s) {
      Eigen::VectorXd z(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        std::uniform_real_distribution<double> u(0.75 * lo[j], 0.75 * hi[j]);
        z[j] = u(rng);
      }
      starts.push_back(z);
    }
    const auto r = nelder_mead_box([&](const Eigen::VectorXd& z) { return cost(to_params(z), problem); },
                                   starts, lo, hi, options);
    if (!std::isfinite(r.f)) throw std::runtime_error("tuning failed: every cost evaluation diverged");
    out.p_star = to_params(r.x);
    out.cost = r.f;
    out.evaluations = r.evaluations;
    out.trace = r.trace;
    out.costs = r.values;
  }
  out.physical = problem.p0.cwiseProduct(out.p_star);
  return out;
}

TwinSetup default_twin() {
  TwinSetup t;
  ExperimentConfig& c = t.config;
  c = ExperimentConfig::defaults();
  c.filter_params = StiffnessParams{};
  c.truth_params = StiffnessParams{};
  c.excitation.type = "chirp";
  c.excitation.direction = Axis::X;
  c.camera_exclude = default_reference_channels();
  c.truth_noise.sigma_b = c.truth_noise.sigma_c = 0.01;
  c.truth_noise.sigma_cam = 2e-5;
  c.r_b = c.r_c = 1e-4;
  c.r_t = 4e-10;
  return t;
}

TuningProblem make_twin_problem(const TwinSetup& twin) {
  ExperimentConfig cfg = twin.config;
  cfg.truth_params.k_b *= twin.stiffness_multipliers[0];
  cfg.truth_params.k_ca *= twin.stiffness_multipliers[1];
  cfg.truth_params.k_cp *= twin.stiffness_multipliers[2];
  const ExperimentData data = generate_data(cfg);

  TuningProblem p;
  p.geometry = data.geometry;
  p.base = cfg.filter_params;
  p.p0 = physical_params(cfg.filter_params, cfg.estimator.q, cfg.r_b, cfg.r_c, cfg.r_t);
  p.lower = ParamVector::Ones();
  p.upper = ParamVector::Ones();
  for (int i = 2; i <= 4; ++i) {
    p.lower[i] = TuningProblem::table_lower()[i];
    p.upper[i] = TuningProblem::table_upper()[i];
  }
  p.references = cfg.camera_exclude.empty() ? default_reference_channels() : cfg.camera_exclude;
  p.camera = data.camera;
  p.dataset = data.samples;
  p.gauge_ids = cfg.gauge_ids;
  p.n_p = cfg.n_p;
  p.f_sg = cfg.f_sg;
  p.k0 = static_cast<int>(std::lround(cfg.burn_in * cfg.f_sg));
  p.estimator = cfg.estimator;
  return p;
}

}  // namespace trussest
