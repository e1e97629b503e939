#pragma once

#include <deque>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "trussest/measurement.hpp"
#include "trussest/modal.hpp"

namespace trussest {

enum class LagNoise { SqrtLag, Linear, None };

struct EstimatorSettings {
  double q = 1e-7;
  double P0 = 1e-4;
  bool highpass = true;
  double f_c = 0.1;    // Hz
  double f_s = 200.0;  // Hz, strain-gauge rate
  // Process noise over an l-step leap: sqrt(l) Q by default.
  LagNoise lag_noise = LagNoise::SqrtLag;
  // Evaluate the equivalent-innovation covariance in its unsimplified form.
  bool literal_s_star = false;
  // Use h(x) = H0 x instead of the nonlinear element forces.
  bool linear_strain = false;
  bool compute_nis = true;
  int buffer_depth = 0;  // 0 selects lag + 1
};

struct FilterState {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  long tick = -1;
  HighPassState hp_meas;
  HighPassState hp_pred;
  double nis_sg = std::numeric_limits<double>::quiet_NaN();
  double nis_cam = std::numeric_limits<double>::quiet_NaN();
};

FilterState initial_filter_state(int n_x, int n_sg, const EstimatorSettings& settings);

// x = F x, P = F P F^T + Q, tick advanced by one.
FilterState predict(const FilterState& state, const Eigen::MatrixXd& F);

// Linear Kalman correction with the given innovation and measurement matrix.
// Sets *nis to the normalized innovation squared when requested.
FilterState kalman_update(const FilterState& state, const Eigen::VectorXd& innovation,
                          const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                          double* nis = nullptr);

// EKF update with strain-gauge forces. With high-pass enabled, measured and
// predicted forces pass through the two filters held in the state.
FilterState update_strain(const FilterState& state, const Eigen::VectorXd& y_sg,
                          const ModalForceModel& forces, const Eigen::MatrixXd& R_sg,
                          bool highpass = true, bool compute_nis = true);
FilterState update_strain(const FilterState& state, const Eigen::VectorXd& y_sg,
                          const StrainGaugeSet& gauges, const ModalBasis& basis,
                          bool highpass = true);
// Linear variant h = H0 x.
FilterState update_strain_linear(const FilterState& state, const Eigen::VectorXd& y_sg,
                                 const Eigen::MatrixXd& H0, const Eigen::MatrixXd& R_sg,
                                 bool highpass = false, bool compute_nis = true);

struct OosmEntry {
  long tick = 0;
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
};

class OosmBuffer {
 public:
  OosmBuffer() = default;
  OosmBuffer(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q, int lag, int depth = 0,
             LagNoise noise = LagNoise::SqrtLag);

  void push(long tick, const Eigen::VectorXd& x, const Eigen::MatrixXd& P);
  const OosmEntry& posterior(long tick) const;
  bool contains(long tick) const;

  int lag() const { return lag_; }
  int depth() const { return depth_; }
  int size() const { return static_cast<int>(entries_.size()); }

  // Leap matrices for a given lag; the configured lag is cached.
  Eigen::MatrixXd forward(int lag) const;   // F^l
  Eigen::MatrixXd backward(int lag) const;  // (F^l)^-1
  Eigen::MatrixXd lag_noise(int lag) const;

 private:
  Eigen::MatrixXd F_, Q_;
  int lag_ = 0;
  int depth_ = 0;
  LagNoise noise_ = LagNoise::SqrtLag;
  Eigen::MatrixXd F_l_, F_back_, Q_l_;
  std::deque<OosmEntry> entries_;
};

// One-step l-lag update with a camera sample captured at state.tick - lag.
// y_cam follows the convention y = p0 - displacement.
FilterState oosm_update(const FilterState& state, const Eigen::VectorXd& y_cam,
                        const OosmBuffer& buffer, const Eigen::VectorXd& p0,
                        const Eigen::MatrixXd& C_t, const Eigen::MatrixXd& R_cam, int lag = -1,
                        bool literal_s_star = false);
FilterState oosm_update(const FilterState& state, const Eigen::VectorXd& y_cam,
                        const OosmBuffer& buffer, const CameraModel& camera,
                        const ModalBasis& basis);

struct CameraSample {
  long capture_tick = 0;
  long delivery_tick = 0;
  Eigen::VectorXd y;
};

class FusionEstimator {
 public:
  FusionEstimator(const Eigen::MatrixXd& F, const ModalForceModel& forces,
                  const Eigen::MatrixXd& R_sg, const Eigen::MatrixXd& H0,
                  const Eigen::MatrixXd& C_t, const Eigen::VectorXd& p0,
                  const Eigen::MatrixXd& R_cam, int lag, const EstimatorSettings& settings);
  FusionEstimator(const ModalBasis& basis, const StrainGaugeSet& gauges,
                  const CameraModel& camera, double dt, const EstimatorSettings& settings);

  // One gauge tick: predict, optional strain update, optional OOSM update.
  const FilterState& step(const Eigen::VectorXd* y_sg, const CameraSample* camera);

  const FilterState& state() const { return state_; }
  const OosmBuffer& buffer() const { return buffer_; }
  const EstimatorSettings& settings() const { return settings_; }
  long strain_updates() const { return strain_updates_; }
  long oosm_updates() const { return oosm_updates_; }
  int lag() const { return lag_; }
  const Eigen::MatrixXd& C_t() const { return C_t_; }
  const Eigen::MatrixXd& F() const { return F_; }

 private:
  Eigen::MatrixXd F_;
  ModalForceModel forces_;
  Eigen::MatrixXd R_sg_, H0_, C_t_;
  Eigen::VectorXd p0_;
  Eigen::MatrixXd R_cam_;
  int lag_ = 0;
  EstimatorSettings settings_;
  FilterState state_;
  OosmBuffer buffer_;
  long strain_updates_ = 0;
  long oosm_updates_ = 0;
};

}  // namespace trussest
