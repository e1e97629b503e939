#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trussest/simulation.hpp"

namespace trussest {

// Order of the tunable vector: alpha0, alpha1, k_b, k_ca, k_cp, q, r_b, r_c, r_t.
constexpr int kTuningParams = 9;
using ParamVector = Eigen::Matrix<double, kTuningParams, 1>;

const std::array<const char*, kTuningParams>& tuning_param_names();
// Alternative labels for the two Rayleigh rows (alpha1, alpha2 numbering).
const std::array<const char*, kTuningParams>& tuning_param_table_labels();

ParamVector physical_params(const StiffnessParams& s, double q, double r_b, double r_c, double r_t);

struct TuningProblem {
  TrussGeometry geometry;
  StiffnessParams base;          // k_plate and any fields outside the vector
  ParamVector p0;                // physical initial guess
  ParamVector lower, upper;      // normalized multipliers
  std::vector<TrackedDof> references;
  CameraModel camera;            // every tracked channel, geometry attached
  SensorSamples dataset;
  std::vector<int> gauge_ids;    // empty uses all recorded gauges
  int n_p = 10;
  double f_sg = 200.0;
  int k0 = 200;
  double reference_cutoff_hz = 0.1;
  EstimatorSettings estimator;

  static ParamVector table_lower();
  static ParamVector table_upper();
  void validate() const;
  // Channel indices into `camera` split into fused and reference sets.
  std::vector<int> reference_rows() const;
  std::vector<int> fused_rows() const;
};

std::vector<TrackedDof> default_reference_channels();

struct TunedSystem {
  StiffnessParams params;
  double q = 0, r_b = 0, r_c = 0, r_t = 0;
  FilterModel filter;
  EstimatorSettings settings;
};

TunedSystem apply_params(const ParamVector& p, const TuningProblem& problem);

// Mean absolute high-passed residual between held-out camera references and
// the estimate at the capture tick. +inf when the filter diverges.
double cost(const ParamVector& p, const TuningProblem& problem);

// Cost from precomputed reference and estimated displacement sequences
// (rows = camera samples, cols = channels).
double reference_cost(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimate,
                      double cutoff_hz, double sample_rate_hz);

struct TuneOptions {
  int max_evaluations = 500;
  int starts = 3;
  double x_tol = 1e-4;  // simplex size in log space
  double f_tol = 1e-10;
  double initial_step = 0.25;  // log-space simplex edge
  std::uint64_t seed = 7;
};

struct TuneResult {
  ParamVector p_star;           // normalized
  ParamVector physical;
  double cost = 0.0;
  int evaluations = 0;
  std::vector<double> trace;    // best-so-far after every evaluation
  std::vector<double> costs;    // raw evaluated cost
};

TuneResult tune(const TuningProblem& problem, const TuneOptions& options = {});

// Box-constrained Nelder-Mead on an arbitrary objective. Variables outside
// [lo, hi] are projected back.
struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  std::vector<double> trace;
  std::vector<double> values;
};
MinimizeResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                               const std::vector<Eigen::VectorXd>& starts,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                               const TuneOptions& options);

// Problem over a synthetic twin. Stiffness multipliers apply to the truth while
// the filter starts from the unscaled values. Only the spring constants are free.
struct TwinSetup {
  std::array<double, 3> stiffness_multipliers = {1.5, 0.8, 1.2};
  ExperimentConfig config;
};
TwinSetup default_twin();
TuningProblem make_twin_problem(const TwinSetup& twin);

}  // namespace trussest
