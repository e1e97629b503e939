#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trussest/config.hpp"
#include "trussest/excitation.hpp"
#include "trussest/linalg.hpp"
#include "trussest/measurement.hpp"
#include "trussest/modal.hpp"
#include "trussest/placement.hpp"
#include "trussest/simulation.hpp"
#include "trussest/tuning.hpp"

namespace py = pybind11;
using namespace trussest;

namespace {

py::dict metrics_dict(const MetricsReport& r) {
  py::dict d;
  d["rmse_total"] = r.rmse_total;
  d["rmse_prediction_only"] = r.rmse_prediction_only_total;
  d["nis_sg_in_band"] = r.nis_sg_in_band;
  d["nis_cam_in_band"] = r.nis_cam_in_band;
  d["mean_nis_sg"] = r.mean_nis_sg;
  d["mean_nees"] = r.mean_nees;
  d["min_psd_margin"] = r.min_psd_margin;
  d["strain_updates"] = r.strain_updates;
  d["camera_updates"] = r.camera_updates;
  d["runtime_s"] = r.runtime_s;
  py::dict ch;
  for (const auto& c : r.channels) {
    py::dict e;
    e["rmse"] = c.rmse;
    e["peak_error"] = c.peak_error;
    e["lag"] = c.lag;
    e["rmse_prediction_only"] = c.rmse_prediction_only;
    ch[py::str(c.name)] = e;
  }
  d["channels"] = ch;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Truss modal model, strain/camera fusion estimator and sensor placement";

  py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<StiffnessParams>(m, "StiffnessParams")
      .def(py::init<>())
      .def_readwrite("k_b", &StiffnessParams::k_b)
      .def_readwrite("k_ca", &StiffnessParams::k_ca)
      .def_readwrite("k_cp", &StiffnessParams::k_cp)
      .def_readwrite("alpha0", &StiffnessParams::alpha0)
      .def_readwrite("alpha1", &StiffnessParams::alpha1)
      .def_readwrite("k_plate", &StiffnessParams::k_plate)
      .def("validate", &StiffnessParams::validate);
  m.def("tuned_stiffness", &tuned_stiffness);

  py::class_<AssembledModel>(m, "AssembledModel")
      .def_readonly("M", &AssembledModel::M)
      .def_readonly("K", &AssembledModel::K)
      .def_readonly("D", &AssembledModel::D)
      .def_readonly("n", &AssembledModel::n)
      .def("dof_index", [](const AssembledModel& a, int node, const std::string& axis) {
        return a.dof_map.index(node, parse_axis(axis));
      });

  m.def(
      "scale_model",
      [](const StiffnessParams& p, int modules) {
        ScaleModelConfig c;
        c.modules = modules;
        return assemble(build_scale_model(c), p);
      },
      py::arg("params") = tuned_stiffness(), py::arg("modules") = 5);
  m.def(
      "load_model",
      [](const std::string& path) {
        const ModelFile f = load_model_file(path);
        return assemble(f.geometry, f.has_params ? f.params : tuned_stiffness());
      },
      py::arg("path"));

  py::class_<ModalBasis>(m, "ModalBasis")
      .def_readonly("Phi", &ModalBasis::Phi)
      .def_readonly("omega", &ModalBasis::omega)
      .def_readonly("zeta", &ModalBasis::zeta)
      .def("frequencies_hz", &ModalBasis::frequencies_hz);
  m.def("solve_modes", py::overload_cast<const AssembledModel&, int>(&solve_modes), py::arg("model"),
        py::arg("n_p") = 10);
  m.def("solve_modes_mk",
        py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&, int, double, double>(&solve_modes),
        py::arg("M"), py::arg("K"), py::arg("n_p"), py::arg("alpha0") = 0.0, py::arg("alpha1") = 0.0);
  m.def("mode_kind", [](const AssembledModel& a, const Eigen::VectorXd& phi) {
    return to_string(classify_mode(a, phi).kind);
  });
  m.def("modal_damping", py::overload_cast<double, double, double>(&modal_damping), py::arg("omega"),
        py::arg("alpha0"), py::arg("alpha1"));

  m.def("expm", &expm, py::arg("A"));
  m.def("solve_discrete_lyapunov", &solve_discrete_lyapunov, py::arg("F"), py::arg("Q"),
        py::arg("rel_tol") = 1e-14, py::arg("max_iter") = 200);

  m.def(
      "highpass_coefficients",
      [](double fc, double fs) {
        const auto c = HighPassCoefficients::butterworth(fc, fs);
        return py::make_tuple(c.b0, c.b1, c.a1);
      },
      py::arg("fc"), py::arg("fs"));

  m.def(
      "kanai_tajimi",
      [](std::uint64_t seed, double dominant_hz, double std_hz, double pga, double duration) {
        KanaiTajimiParams p;
        p.dominant_freq = dominant_hz;
        p.freq_std = std_hz;
        p.target_pga = pga;
        p.duration = duration;
        const GroundMotion g = kanai_tajimi(p, seed);
        return py::make_tuple(g.dt, g.accel);
      },
      py::arg("seed") = 1, py::arg("dominant_hz") = 4.0, py::arg("std_hz") = 4.0,
      py::arg("pga") = 0.37 * 9.81, py::arg("duration") = 20.0);
  m.def("chirp_peak_displacement", &chirp_peak_displacement, py::arg("f0"), py::arg("f1"), py::arg("T"),
        py::arg("amplitude"));

  m.def(
      "placement",
      [](const std::string& config) {
        const ExperimentConfig c = config.empty() ? ExperimentConfig::defaults() : load_experiment_config(config);
        const PlacementResult r = placement_for(c);
        py::dict d;
        d["removal_order"] = r.removal_order;
        d["curve"] = r.trace_curve;
        d["sets"] = r.selected_sets;
        return d;
      },
      py::arg("config") = "");

  m.def(
      "run_experiment",
      [](const std::string& config, std::vector<int> gauges) {
        ExperimentConfig c = config.empty() ? ExperimentConfig::defaults() : load_experiment_config(config);
        if (!gauges.empty()) c.gauge_ids = gauges;
        py::gil_scoped_release release;
        const MetricsReport r = metrics(run_experiment(c));
        py::gil_scoped_acquire acquire;
        return metrics_dict(r);
      },
      py::arg("config") = "", py::arg("gauges") = std::vector<int>{});

  m.def(
      "tune_twin",
      [](int max_evaluations) {
        const TuningProblem p = make_twin_problem(default_twin());
        TuneOptions o;
        o.max_evaluations = max_evaluations;
        TuneResult r;
        {
          py::gil_scoped_release release;
          r = tune(p, o);
        }
        py::dict d;
        d["normalized"] = Eigen::VectorXd(r.p_star);
        d["physical"] = Eigen::VectorXd(r.physical);
        d["cost"] = r.cost;
        d["evaluations"] = r.evaluations;
        d["trace"] = r.trace;
        return d;
      },
      py::arg("max_evaluations") = 500);
}
