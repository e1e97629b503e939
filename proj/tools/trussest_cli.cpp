#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trussest/config.hpp"
#include "trussest/io.hpp"
#include "trussest/modal.hpp"
#include "trussest/placement.hpp"
#include "trussest/simulation.hpp"
#include "trussest/tuning.hpp"

namespace fs = std::filesystem;
using namespace trussest;

namespace {

struct Globals {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string config_text;
};

ExperimentConfig load(Globals& g) {
  ExperimentConfig c = ExperimentConfig::defaults();
  if (!g.config.empty()) {
    g.config_text = read_text_file(g.config);
    c = load_experiment_config(g.config);
  }
  if (g.seed) {
    c.excitation.seed = *g.seed;
    c.gauge_seed = *g.seed * 2 + 1;
    c.camera_seed = *g.seed * 2 + 2;
  }
  return c;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

std::ofstream open_out(const Globals& g, const std::string& name) {
  std::ofstream f(out_path(g, name));
  if (!f) throw std::runtime_error("cannot write '" + out_path(g, name) + "'");
  return f;
}

void sidecar(const Globals& g, const std::string& name, const ExperimentConfig& c, const std::string& cmd) {
  write_sidecar(out_path(g, name + ".json"), g.config_text,
                {{"excitation", c.excitation.seed}, {"gauges", c.gauge_seed}, {"camera", c.camera_seed}}, cmd);
}

struct ModelChoice {
  TrussGeometry geometry;
  StiffnessParams params;
};

ModelChoice pick_model(const std::string& model_file, const ExperimentConfig& c) {
  ModelChoice m;
  const std::string file = model_file.empty() ? c.model_file : model_file;
  if (!file.empty()) {
    const ModelFile mf = load_model_file(file);
    m.geometry = mf.geometry;
    m.params = mf.has_params ? mf.params : c.filter_params;
  } else {
    m.geometry = build_scale_model(c.scale);
    m.params = c.filter_params;
  }
  return m;
}

void print_metrics(const MetricsReport& r, int n_sg) {
  std::cout << std::setprecision(4);
  std::cout << "n_sg " << n_sg << "  rmse " << r.rmse_total << " m  prediction-only " << r.rmse_prediction_only_total
            << " m  nis in band " << r.nis_sg_in_band << "  min psd margin " << r.min_psd_margin << '\n';
  for (const auto& ch : r.channels)
    std::cout << "  " << ch.name << "  rmse " << ch.rmse << "  peak " << ch.peak_error << "  lag " << ch.lag << '\n';
}

nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json j;
  j["rmse_total_m"] = r.rmse_total;
  j["rmse_prediction_only_m"] = r.rmse_prediction_only_total;
  j["nis_sg_in_band"] = r.nis_sg_in_band;
  j["nis_cam_in_band"] = r.nis_cam_in_band;
  j["mean_nis_sg"] = r.mean_nis_sg;
  j["mean_nees"] = r.mean_nees;
  j["min_psd_margin"] = r.min_psd_margin;
  j["strain_updates"] = r.strain_updates;
  j["camera_updates"] = r.camera_updates;
  j["runtime_s"] = r.runtime_s;
  for (const auto& c : r.channels)
    j["channels"][c.name] = {{"rmse_m", c.rmse}, {"peak_error_m", c.peak_error}, {"lag", c.lag},
                             {"rmse_prediction_only_m", c.rmse_prediction_only}};
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truss state estimation from strain gauges and a camera"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment configuration (INI)");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; }, "Base random seed");

  std::string model_file;
  int n_modes = 10, min_sensors = 0;
  auto* model = app.add_subcommand("model", "Assemble the structural model and dump M, K, D");
  model->add_option("--model", model_file, "Model file (INI)");
  auto* modes = app.add_subcommand("modes", "Eigenfrequencies, damping and mode shape kinds");
  modes->add_option("--model", model_file, "Model file (INI)");
  modes->add_option("-n,--n-modes", n_modes, "Number of modes")->check(CLI::PositiveNumber);
  auto* place = app.add_subcommand("place", "Greedy strain gauge placement curve");
  place->add_option("--model", model_file, "Model file (INI)");
  place->add_option("--min-sensors", min_sensors, "Stop pruning at this count")->check(CLI::NonNegativeNumber);
  std::string ex_type, ex_dir;
  auto* excite = app.add_subcommand("excite", "Generate a base excitation record");
  excite->add_option("--type", ex_type, "quake, chirp or noise");
  excite->add_option("--direction", ex_dir, "x or y");
  app.add_subcommand("simulate", "Simulate the truth response and sample the sensors");
  std::string dataset;
  auto* estimate = app.add_subcommand("estimate", "Run the fusion estimator");
  estimate->add_option("--dataset", dataset, "Sensor CSV from simulate; simulated afresh when omitted");
  int max_evals = 500;
  auto* tune_cmd = app.add_subcommand("tune", "Self-tune model and noise parameters");
  tune_cmd->add_option("--dataset", dataset, "Sensor CSV; a synthetic twin is used when omitted");
  tune_cmd->add_option("--max-evals", max_evals, "Cost evaluation budget")->check(CLI::PositiveNumber);
  bool ablation = false;
  auto* report = app.add_subcommand("report", "Print estimation metrics");
  report->add_flag("--ablation", ablation, "Compare 60, 40 and 20 gauges");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load(g);
    const std::string cmd = app.get_subcommands().front()->get_name();

    if (cmd == "model") {
      const ModelChoice m = pick_model(model_file, cfg);
      const AssembledModel am = assemble(m.geometry, m.params);
      auto f = open_out(g, "model.ini");
      write_model(f, m.geometry, m.params);
      for (auto [name, mat] : {std::pair{"M", &am.M}, std::pair{"K", &am.K}, std::pair{"D", &am.D}}) {
        auto o = open_out(g, std::string(name) + ".csv");
        write_matrix(o, name, *mat);
      }
      std::cout << am.geometry.nodes.size() << " nodes, " << am.geometry.elements.size() << " elements, "
                << am.n << " free DOFs, total mass " << am.M.trace() / 3.0 << " kg\n";
    } else if (cmd == "modes") {
      const ModelChoice m = pick_model(model_file, cfg);
      const AssembledModel am = assemble(m.geometry, m.params);
      const ModalBasis b = solve_modes(am, std::min(n_modes, am.n));
      auto f = open_out(g, "modes.csv");
      f << "mode,frequency_hz,zeta,kind\n";
      const Eigen::VectorXd hz = b.frequencies_hz();
      for (int i = 0; i < b.n_p(); ++i) {
        const auto s = classify_mode(am, b.Phi.col(i));
        f << i + 1 << ',' << hz[i] << ',' << b.zeta[i] << ',' << to_string(s.kind) << '\n';
        std::printf("%3d  %8.4f Hz  zeta %.4f  %s\n", i + 1, hz[i], b.zeta[i], to_string(s.kind).c_str());
      }
      auto p = open_out(g, "Phi.csv");
      write_matrix(p, "Phi", b.Phi);
    } else if (cmd == "place") {
      if (!model_file.empty()) cfg.model_file = model_file;
      const ModelChoice m = pick_model(model_file, cfg);
      cfg.filter_params = m.params;
      PlacementResult r = placement_for(cfg);
      if (min_sensors > 0) {
        std::vector<std::pair<int, double>> kept;
        for (const auto& pt : r.trace_curve)
          if (pt.first >= min_sensors) kept.push_back(pt);
        r.trace_curve = kept;
      }
      auto f = open_out(g, "curve.csv");
      write_curve_csv(f, r);
      nlohmann::json j;
      j["removal_order"] = r.removal_order;
      for (const auto& [n, ids] : r.selected_sets)
        if (n >= min_sensors) j["sets"][std::to_string(n)] = ids;
      open_out(g, "sets.json") << j.dump(1) << '\n';
      for (int n : {60, 40, 20})
        for (const auto& pt : r.trace_curve)
          if (pt.first == n) std::cout << "n_sg " << n << "  normalized trace " << pt.second << '\n';
    } else if (cmd == "excite") {
      if (!ex_type.empty()) cfg.excitation.type = ex_type;
      if (!ex_dir.empty()) cfg.excitation.direction = parse_axis(ex_dir);
      const GroundMotion gm = make_excitation(cfg.excitation);
      auto f = open_out(g, "motion.csv");
      write_motion_csv(f, gm);
      sidecar(g, "motion", cfg, "excite");
      std::cout << gm.type << " record, " << gm.accel.size() << " samples, peak " << gm.peak_accel() << " m/s^2\n";
    } else if (cmd == "simulate") {
      const ExperimentData d = generate_data(cfg);
      const auto ldv = cfg.ldv.empty() ? default_ldv_channels(cfg.excitation.direction) : cfg.ldv;
      std::vector<std::string> names;
      std::vector<std::vector<double>> values;
      for (const auto& ch : ldv) {
        const int dof = d.truth_model.dof_map.index(ch.node, ch.axis);
        if (dof < 0) throw std::invalid_argument("reference channel on a fixed DOF");
        names.push_back(channel_name(ch));
        std::vector<double> v;
        for (const auto& q : d.truth.q) v.push_back(q[dof]);
        values.push_back(std::move(v));
      }
      auto f = open_out(g, "sensors.csv");
      write_sensor_csv(f, d.samples, d.camera, 1.0 / cfg.f_sg, names, values);
      auto m = open_out(g, "motion.csv");
      write_motion_csv(m, d.motion);
      sidecar(g, "sensors", cfg, "simulate");
      std::cout << d.truth.ticks() << " ticks, " << d.samples.gauge_ids.size() << " gauges, "
                << d.samples.camera.size() << " camera frames\n";
    } else if (cmd == "estimate") {
      if (dataset.empty()) {
        const ExperimentRecord rec = run_experiment(cfg);
        const MetricsReport r = metrics(rec);
        auto f = open_out(g, "estimate.csv");
        write_estimate_csv(f, rec);
        open_out(g, "metrics.json") << metrics_json(r).dump(2) << '\n';
        print_metrics(r, rec.n_sg);
      } else {
        const TrussGeometry geom = experiment_geometry(cfg);
        const AssembledModel am = assemble(geom, cfg.filter_params);
        const CameraModel cam = make_camera(am, cfg.camera, cfg.r_t);
        std::ifstream in(dataset);
        if (!in) throw std::runtime_error("cannot open dataset '" + dataset + "'");
        const SensorSamples s = read_sensor_csv(in, cam, 1.0 / cfg.f_sg);
        std::vector<int> rows, cam_rows;
        const auto ids = cfg.gauge_ids.empty() ? s.gauge_ids : cfg.gauge_ids;
        for (int id : ids) {
          auto it = std::find(s.gauge_ids.begin(), s.gauge_ids.end(), id);
          if (it == s.gauge_ids.end()) throw std::invalid_argument("dataset lacks gauge " + std::to_string(id));
          rows.push_back(static_cast<int>(it - s.gauge_ids.begin()));
        }
        for (int i = 0; i < cam.size(); ++i) {
          bool ex = false;
          for (const auto& e : cfg.camera_exclude) ex |= e.node == cam.tracked[i].node && e.axis == cam.tracked[i].axis;
          if (!ex) cam_rows.push_back(i);
        }
        const FilterModel fm = build_filter_model(geom, cfg.filter_params, cfg.n_p, 1.0 / cfg.f_sg, ids,
                                                  cfg.r_b, cfg.r_c, cam, cam_rows);
        EstimatorSettings es = cfg.estimator;
        es.f_s = cfg.f_sg;
        const EstimationRun run = run_estimator(fm, es, s, rows, cam_rows, true);
        if (!run.finite) throw std::runtime_error("estimator diverged (non-finite state)");
        ExperimentRecord rec;
        rec.dt = 1.0 / cfg.f_sg;
        rec.x_hat = run.x_hat;
        rec.trace_P = run.trace_P;
        rec.nis_sg = run.nis_sg;
        rec.nis_cam = run.nis_cam;
        auto f = open_out(g, "estimate.csv");
        write_estimate_csv(f, rec);
        std::cout << run.x_hat.size() << " ticks estimated, " << run.strain_updates << " strain and "
                  << run.camera_updates << " camera updates\n";
      }
      sidecar(g, "estimate", cfg, "estimate");
    } else if (cmd == "tune") {
      TuningProblem p;
      if (dataset.empty()) {
        p = make_twin_problem(default_twin());
      } else {
        p.geometry = experiment_geometry(cfg);
        p.base = cfg.filter_params;
        p.p0 = physical_params(cfg.filter_params, cfg.estimator.q, cfg.r_b, cfg.r_c, cfg.r_t);
        p.lower = TuningProblem::table_lower();
        p.upper = TuningProblem::table_upper();
        p.references = cfg.camera_exclude.empty() ? default_reference_channels() : cfg.camera_exclude;
        const AssembledModel am = assemble(p.geometry, cfg.filter_params);
        p.camera = make_camera(am, cfg.camera, cfg.r_t);
        std::ifstream in(dataset);
        if (!in) throw std::runtime_error("cannot open dataset '" + dataset + "'");
        p.dataset = read_sensor_csv(in, p.camera, 1.0 / cfg.f_sg);
        p.gauge_ids = cfg.gauge_ids;
        p.n_p = cfg.n_p;
        p.f_sg = cfg.f_sg;
        p.k0 = static_cast<int>(std::lround(cfg.burn_in * cfg.f_sg));
        p.estimator = cfg.estimator;
      }
      TuneOptions o;
      o.max_evaluations = max_evals;
      if (g.seed) o.seed = *g.seed;
      const TuneResult r = tune(p, o);
      nlohmann::json j;
      for (int i = 0; i < kTuningParams; ++i)
        j["parameters"].push_back({{"name", tuning_param_names()[i]},
                                   {"table_label", tuning_param_table_labels()[i]},
                                   {"initial_guess", p.p0[i]},
                                   {"lower", p.lower[i]},
                                   {"upper", p.upper[i]},
                                   {"normalized", r.p_star[i]},
                                   {"physical", r.physical[i]}});
      j["cost"] = r.cost;
      j["evaluations"] = r.evaluations;
      open_out(g, "p_star.json") << j.dump(2) << '\n';
      auto f = open_out(g, "cost_trace.csv");
      f << std::setprecision(12) << "evaluation,cost,best\n";
      for (size_t i = 0; i < r.trace.size(); ++i) f << i + 1 << ',' << r.costs[i] << ',' << r.trace[i] << '\n';
      for (int i = 0; i < kTuningParams; ++i)
        std::printf("%-7s %10.4g  p = %.4f\n", tuning_param_names()[i], r.physical[i], r.p_star[i]);
      std::printf("cost %.6g after %d evaluations\n", r.cost, r.evaluations);
    } else if (cmd == "report") {
      if (ablation) {
        for (const auto& a : run_ablation(cfg, {60, 40, 20})) print_metrics(a.report, a.n_sg);
      } else {
        const ExperimentRecord rec = run_experiment(cfg);
        print_metrics(metrics(rec), rec.n_sg);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "trussest: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
