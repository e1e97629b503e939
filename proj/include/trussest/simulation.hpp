#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trussest/estimator.hpp"
#include "trussest/excitation.hpp"
#include "trussest/measurement.hpp"
#include "trussest/modal.hpp"
#include "trussest/placement.hpp"
#include "trussest/structure.hpp"

namespace trussest {

// Relative nodal displacements and velocities at every output tick.
struct TruthTrajectory {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> q;
  std::vector<Eigen::VectorXd> qd;
  std::vector<double> table_displacement;  // empty unless the motion carries it

  int ticks() const { return static_cast<int>(q.size()); }
};

// Full-order modal superposition with the exact first-order-hold propagator
// per mode under the effective load -M iota a_g(t). dt_out must be an integer
// multiple of dt_fine. Initial conditions are at rest.
TruthTrajectory simulate_truth(const AssembledModel& model, const GroundMotion& motion, double T,
                               double dt_fine, double dt_out);

struct TruthNoise {
  double sigma_b = 1.0;       // N, bracing gauges
  double sigma_c = 1.0;       // N, column gauges
  double gauge_offset = 0.0;  // N, std of a constant per-gauge offset
  double sigma_cam = 5e-5;    // m, camera position noise
};

struct SensorSamples {
  std::vector<int> gauge_ids;
  std::vector<Eigen::VectorXd> gauges;  // one per tick, all gauges
  std::vector<CameraSample> camera;     // ordered by delivery tick, y = p0 - d
  std::vector<int> camera_at_tick;      // delivery tick -> sample index or -1
};

// Gauges are read every tick. Camera samples are delivered on ticks that are
// multiples of the rate divisor and at least the lag, each captured lag
// ticks earlier.
SensorSamples sample_sensors(const TruthTrajectory& truth, const StrainGaugeSet& gauges,
                             const CameraModel& camera, const TruthNoise& noise,
                             std::uint64_t gauge_seed, std::uint64_t camera_seed);

struct ExcitationSpec {
  std::string type = "quake";  // quake, chirp, noise
  Axis direction = Axis::X;
  KanaiTajimiParams quake;
  double quake_scale = 1.0 / 18.0;
  double chirp_f0 = 0.1, chirp_f1 = 6.0, chirp_duration = 10.0, chirp_amplitude = 2e-3;
  double noise_f_lo = 0.5, noise_f_hi = 20.0, noise_rms = 0.1, noise_duration = 20.0;
  double noise_fs = 1000.0;
  std::uint64_t seed = 1;
};

GroundMotion make_excitation(const ExcitationSpec& spec);

struct CameraSettings {
  int lag = 3;
  int rate_divisor = 2;
  double standoff = 2.0;
  Intrinsics intrinsics;
  Distortion lens;
  Distortion calibration;
  bool pixel_roundtrip = true;
  DepthMode depth = DepthMode::Exact;
  double pixel_quantization = 0.0;
  std::vector<TrackedDof> tracked;  // empty selects the default LEDs
};

struct ExperimentConfig {
  ScaleModelConfig scale;
  std::string model_file;  // explicit truss model; overrides scale when set
  StiffnessParams truth_params;
  StiffnessParams filter_params;
  CameraSettings camera;
  ExcitationSpec excitation;
  double f_sg = 200.0;
  double dt_fine = 1e-3;
  double duration = 0.0;  // 0 uses the excitation length
  TruthNoise truth_noise;
  int n_p = 10;
  EstimatorSettings estimator;
  double r_b = 1.0, r_c = 1.0, r_t = 2.5e-9;
  std::vector<int> gauge_ids;  // empty uses every element
  // Camera channels withheld from fusion (e.g. tuning references).
  std::vector<TrackedDof> camera_exclude;
  std::vector<TrackedDof> ldv;  // empty selects the defaults for the direction
  std::uint64_t gauge_seed = 11;
  std::uint64_t camera_seed = 12;
  double burn_in = 1.0;  // s, skipped by metrics

  static ExperimentConfig defaults();
  void validate() const;
};

StiffnessParams tuned_stiffness();

std::vector<TrackedDof> default_ldv_channels(Axis direction);

struct ExperimentRecord {
  double dt = 0.0;
  TruthTrajectory truth;
  SensorSamples samples;
  std::vector<int> fused_gauges;
  std::vector<int> fused_camera_channels;
  std::vector<Eigen::VectorXd> x_hat;
  std::vector<Eigen::VectorXd> x_true;  // truth projected on the filter basis
  std::vector<double> trace_P;
  std::vector<double> nis_sg;
  std::vector<double> nis_cam;
  std::vector<double> nees;
  std::vector<double> psd_margin;  // min eigenvalue of P / trace(P)
  std::vector<std::string> ldv_names;
  std::vector<int> ldv_dofs;
  std::vector<std::vector<double>> ldv_truth;
  std::vector<std::vector<double>> ldv_estimate;
  std::vector<std::vector<double>> ldv_prediction_only;
  int n_sg = 0;
  int n_cam = 0;
  int burn_in_ticks = 0;
  double runtime_s = 0.0;
};

struct ChannelMetrics {
  std::string name;
  double rmse = 0.0;
  double peak_error = 0.0;
  int lag = 0;
  double rmse_prediction_only = 0.0;
};

struct MetricsReport {
  std::vector<ChannelMetrics> channels;
  double rmse_total = 0.0;  // over all reference channels
  double rmse_prediction_only_total = 0.0;
  double nis_sg_in_band = 0.0;   // fraction of strain updates inside the 95% band
  double nis_cam_in_band = 0.0;
  double mean_nis_sg = 0.0;
  double mean_nees = 0.0;
  double min_psd_margin = 0.0;
  long strain_updates = 0;
  long camera_updates = 0;
  double runtime_s = 0.0;
};

// Model-side bundle shared by the harness and the tuner.
struct FilterModel {
  AssembledModel model;
  ModalBasis basis;
  StrainGaugeSet gauges;
  CameraModel camera;  // fused channels only
  Eigen::MatrixXd F;
};

FilterModel build_filter_model(const TrussGeometry& geometry, const StiffnessParams& params,
                               int n_p, double dt, const std::vector<int>& gauge_ids,
                               double r_b, double r_c, const CameraModel& camera_template,
                               const std::vector<int>& fused_channels);

TrussGeometry experiment_geometry(const ExperimentConfig& cfg);
CameraModel make_camera(const AssembledModel& model, const CameraSettings& s, double r_t);

// Runs an estimator over recorded samples. Returns one posterior per tick.
struct EstimationRun {
  std::vector<Eigen::VectorXd> x_hat;
  std::vector<double> trace_P, nis_sg, nis_cam, psd_margin, nees;
  long strain_updates = 0;
  long camera_updates = 0;
  bool finite = true;
};
EstimationRun run_estimator(const FilterModel& fm, const EstimatorSettings& settings,
                            const SensorSamples& samples, const std::vector<int>& gauge_rows,
                            const std::vector<int>& camera_rows, bool track_health = true,
                            const std::vector<Eigen::VectorXd>* x_true = nullptr);

struct ExperimentData {
  TrussGeometry geometry;
  AssembledModel truth_model;
  CameraModel camera;  // all channels, attached to the truth model
  StrainGaugeSet gauges;
  GroundMotion motion;
  TruthTrajectory truth;
  SensorSamples samples;
};

// Simulate and sample without estimating.
ExperimentData generate_data(const ExperimentConfig& cfg);

ExperimentRecord run_experiment(const ExperimentConfig& cfg);
ExperimentRecord run_experiment(const ExperimentConfig& cfg, const ExperimentData& data);
MetricsReport metrics(const ExperimentRecord& record);

// Greedy gauge pruning on the filter model of cfg with every camera channel
// kept (minus exclusions).
PlacementResult placement_for(const ExperimentConfig& cfg);

struct AblationPoint {
  int n_sg = 0;
  std::vector<int> gauges;
  MetricsReport report;
};
// Same data for every size; gauge sets from placement_for.
std::vector<AblationPoint> run_ablation(const ExperimentConfig& cfg, const std::vector<int>& sizes);

// Two-sided 95% chi-square band for dof degrees of freedom.
std::pair<double, double> chi_square_band(int dof, double confidence = 0.95);

}  // namespace trussest
