#include "trussest/estimator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trussest/linalg.hpp"

namespace trussest {

FilterState initial_filter_state(int n_x, int n_sg, const EstimatorSettings& s) {
  if (n_x <= 0) throw std::invalid_argument("filter state dimension must be positive");
  if (!(s.q >= 0.0) || !(s.P0 >= 0.0))
    throw std::invalid_argument("process noise and initial covariance must be nonnegative");
  FilterState st;
  st.x = Eigen::VectorXd::Zero(n_x);
  st.P = s.P0 * Eigen::MatrixXd::Identity(n_x, n_x);
  st.Q = s.q * Eigen::MatrixXd::Identity(n_x, n_x);
  st.tick = -1;
  const auto hp = HighPassCoefficients::butterworth(s.f_c, s.f_s);
  st.hp_meas = HighPassState(hp, n_sg, true);
  st.hp_pred = HighPassState(hp, n_sg, true);
  return st;
}

FilterState predict(const FilterState& state, const Eigen::MatrixXd& F) {
  if (F.rows() != state.x.size() || F.cols() != state.x.size())
    throw std::invalid_argument("predict: transition matrix does not match the state");
  FilterState out = state;
  out.x = F * state.x;
  out.P = F * state.P * F.transpose() + state.Q;
  symmetrize(out.P);
  out.tick = state.tick + 1;
  return out;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_innovation(const Eigen::MatrixXd& S, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    std::ostringstream os;
    os << who << ": innovation covariance is not positive definite (singular values "
       << sv(sv.size() - 1) << " .. " << sv(0) << ")";
    throw std::runtime_error(os.str());
  }
  return llt;
}

}  // namespace

FilterState kalman_update(const FilterState& state, const Eigen::VectorXd& innovation,
                          const Eigen::MatrixXd& H, const Eigen::MatrixXd& R, double* nis) {
  const Eigen::Index m = innovation.size();
  if (H.rows() != m || H.cols() != state.x.size() || R.rows() != m || R.cols() != m)
    throw std::invalid_argument("kalman_update: dimension mismatch");
  FilterState out = state;
  if (m == 0) return out;
  const Eigen::MatrixXd PHt = state.P * H.transpose();
  const Eigen::MatrixXd S = H * PHt + R;
  const auto llt = factor_innovation(S, "kalman_update");
  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();
  out.x = state.x + K * innovation;
  out.P = state.P - K * PHt.transpose();
  symmetrize(out.P);
  if (nis) *nis = innovation.dot(llt.solve(innovation));
  return out;
}

FilterState update_strain(const FilterState& state, const Eigen::VectorXd& y_sg,
                          const ModalForceModel& forces, const Eigen::MatrixXd& R_sg,
                          bool highpass, bool compute_nis) {
  if (y_sg.size() != forces.size())
    throw std::invalid_argument("update_strain: measurement has " + std::to_string(y_sg.size()) +
                                " channels, gauge set has " + std::to_string(forces.size()));
  FilterState work = state;
  Eigen::MatrixXd H;
  const Eigen::VectorXd h = forces.evaluate(state.x, &H);
  Eigen::VectorXd nu;
  if (highpass) {
    nu = highpass_step(work.hp_meas, y_sg) - highpass_step(work.hp_pred, h);
  } else {
    nu = y_sg - h;
  }
  double nis = std::numeric_limits<double>::quiet_NaN();
  FilterState out = kalman_update(work, nu, H, R_sg, compute_nis ? &nis : nullptr);
  out.nis_sg = nis;
  return out;
}

FilterState update_strain(const FilterState& state, const Eigen::VectorXd& y_sg,
                          const StrainGaugeSet& gauges, const ModalBasis& basis, bool highpass) {
  return update_strain(state, y_sg, ModalForceModel(gauges, basis), build_R_sg(gauges), highpass);
}

FilterState update_strain_linear(const FilterState& state, const Eigen::VectorXd& y_sg,
                                 const Eigen::MatrixXd& H0, const Eigen::MatrixXd& R_sg,
                                 bool highpass, bool compute_nis) {
  if (y_sg.size() != H0.rows())
    throw std::invalid_argument("update_strain_linear: measurement dimension mismatch");
  FilterState work = state;
  const Eigen::VectorXd h = H0 * state.x;
  Eigen::VectorXd nu;
  if (highpass) {
    nu = highpass_step(work.hp_meas, y_sg) - highpass_step(work.hp_pred, h);
  } else {
    nu = y_sg - h;
  }
  double nis = std::numeric_limits<double>::quiet_NaN();
  FilterState out = kalman_update(work, nu, H0, R_sg, compute_nis ? &nis : nullptr);
  out.nis_sg = nis;
  return out;
}

// ---------------------------------------------------------------- OOSM buffer

OosmBuffer::OosmBuffer(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Q, int lag, int depth,
                       LagNoise noise)
    : F_(F), Q_(Q), lag_(lag), depth_(std::max(depth, lag + 1)), noise_(noise) {
  if (lag < 0) throw std::invalid_argument("OOSM lag must be nonnegative");
  if (F.rows() != F.cols() || Q.rows() != F.rows() || Q.cols() != F.cols())
    throw std::invalid_argument("OOSM buffer: F and Q must be square and of equal size");
  F_l_ = matrix_power(F_, lag_);
  F_back_ = F_l_.partialPivLu().inverse();
  Q_l_ = lag_noise(lag_);
}

void OosmBuffer::push(long tick, const Eigen::VectorXd& x, const Eigen::MatrixXd& P) {
  if (!entries_.empty() && tick != entries_.back().tick + 1)
    throw std::invalid_argument("OOSM buffer entries must be contiguous in tick");
  entries_.push_back({tick, x, P});
  while (static_cast<int>(entries_.size()) > depth_) entries_.pop_front();
}

bool OosmBuffer::contains(long tick) const {
  return !entries_.empty() && tick >= entries_.front().tick && tick <= entries_.back().tick;
}

const OosmEntry& OosmBuffer::posterior(long tick) const {
  if (!contains(tick)) {
    std::ostringstream os;
    os << "OOSM buffer miss: tick " << tick << " not stored";
    if (!entries_.empty()) os << " (holding " << entries_.front().tick << ".." << entries_.back().tick << ")";
    throw std::out_of_range(os.str());
  }
  return entries_[static_cast<size_t>(tick - entries_.front().tick)];
}

Eigen::MatrixXd OosmBuffer::forward(int lag) const {
  return lag == lag_ ? F_l_ : matrix_power(F_, lag);
}

Eigen::MatrixXd OosmBuffer::backward(int lag) const {
  return lag == lag_ ? F_back_ : Eigen::MatrixXd(matrix_power(F_, lag).partialPivLu().inverse());
}

Eigen::MatrixXd OosmBuffer::lag_noise(int lag) const {
  if (lag == lag_ && Q_l_.size() > 0) return Q_l_;
  switch (noise_) {
    case LagNoise::SqrtLag: return std::sqrt(static_cast<double>(lag)) * Q_;
    case LagNoise::Linear: return static_cast<double>(lag) * Q_;
    case LagNoise::None: return Eigen::MatrixXd::Zero(Q_.rows(), Q_.cols());
  }
  return Q_;
}

// ---------------------------------------------------------------- OOSM update

FilterState oosm_update(const FilterState& state, const Eigen::VectorXd& y_cam,
                        const OosmBuffer& buffer, const Eigen::VectorXd& p0,
                        const Eigen::MatrixXd& C_t, const Eigen::MatrixXd& R_cam, int lag,
                        bool literal_s_star) {
  const Eigen::Index nx = state.x.size();
  const Eigen::Index m = y_cam.size();
  if (C_t.rows() != m || C_t.cols() != nx || p0.size() != m || R_cam.rows() != m ||
      R_cam.cols() != m)
    throw std::invalid_argument("oosm_update: dimension mismatch");
  if (lag < 0) lag = buffer.lag();
  if (m == 0) return state;

  const Eigen::VectorXd& x_k = state.x;
  const Eigen::MatrixXd& P_k = state.P;
  const Eigen::MatrixXd P_old = lag == 0 ? P_k : buffer.posterior(state.tick - lag).P;

  const Eigen::MatrixXd F_l = buffer.forward(lag);
  const Eigen::MatrixXd F_back = buffer.backward(lag);
  const Eigen::MatrixXd Q_l = buffer.lag_noise(lag);

  Eigen::MatrixXd P_pred = F_l * P_old * F_l.transpose() + Q_l;
  symmetrize(P_pred);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nx, nx);

  Eigen::MatrixXd S_inv;
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(P_pred);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("oosm_update: leap covariance factorization failed");
    const Eigen::MatrixXd P_pred_inv = ldlt.solve(I);
    if (literal_s_star) {
      const Eigen::MatrixXd P_k_inv = P_k.ldlt().solve(I);
      const Eigen::MatrixXd inner = P_pred_inv + P_k_inv - P_pred_inv;
      S_inv = P_pred_inv - P_pred_inv * inner.ldlt().solve(P_pred_inv);
    } else {
      S_inv = P_pred_inv - P_pred_inv * P_k * P_pred_inv;
    }
  }
  symmetrize(S_inv);

  const Eigen::MatrixXd P_xv = Q_l - P_pred * S_inv * Q_l;
  const Eigen::VectorXd x_retro = F_back * x_k;
  Eigen::MatrixXd P_retro = F_back * (P_k + Q_l - P_xv - P_xv.transpose()) * F_back.transpose();
  symmetrize(P_retro);

  const Eigen::MatrixXd P_xy = (P_k - P_xv) * F_back.transpose() * C_t.transpose();
  const Eigen::MatrixXd S_cam = C_t * P_retro * C_t.transpose() + R_cam;
  const auto llt = factor_innovation(S_cam, "oosm_update");
  const Eigen::MatrixXd W = llt.solve(P_xy.transpose()).transpose();
  const Eigen::VectorXd nu = p0 - y_cam - C_t * x_retro;

  FilterState out = state;
  out.x = x_k + W * nu;
  out.P = P_k - W * P_xy.transpose();
  symmetrize(out.P);
  out.nis_cam = nu.dot(llt.solve(nu));
  return out;
}

FilterState oosm_update(const FilterState& state, const Eigen::VectorXd& y_cam,
                        const OosmBuffer& buffer, const CameraModel& camera,
                        const ModalBasis& basis) {
  return oosm_update(state, y_cam, buffer, camera.p0, camera_matrix(camera, basis),
                     build_R_cam(camera), camera.lag);
}

// ---------------------------------------------------------------- orchestration

FusionEstimator::FusionEstimator(const Eigen::MatrixXd& F, const ModalForceModel& forces,
                                 const Eigen::MatrixXd& R_sg, const Eigen::MatrixXd& H0,
                                 const Eigen::MatrixXd& C_t, const Eigen::VectorXd& p0,
                                 const Eigen::MatrixXd& R_cam, int lag,
                                 const EstimatorSettings& settings)
    : F_(F),
      forces_(forces),
      R_sg_(R_sg),
      H0_(H0),
      C_t_(C_t),
      p0_(p0),
      R_cam_(R_cam),
      lag_(lag),
      settings_(settings) {
  const int n_sg = static_cast<int>(R_sg.rows());
  state_ = initial_filter_state(static_cast<int>(F.rows()), n_sg, settings);
  buffer_ = OosmBuffer(F, state_.Q, lag, settings.buffer_depth, settings.lag_noise);
}

FusionEstimator::FusionEstimator(const ModalBasis& basis, const StrainGaugeSet& gauges,
                                 const CameraModel& camera, double dt,
                                 const EstimatorSettings& settings)
    : FusionEstimator(discretize(continuous_system_matrix(basis), dt),
                      ModalForceModel(gauges, basis), build_R_sg(gauges),
                      ModalForceModel(gauges, basis).jacobian_at_rest(),
                      camera_matrix(camera, basis), camera.p0, build_R_cam(camera), camera.lag,
                      settings) {}

const FilterState& FusionEstimator::step(const Eigen::VectorXd* y_sg, const CameraSample* camera) {
  state_ = predict(state_, F_);
  state_.nis_sg = std::numeric_limits<double>::quiet_NaN();
  state_.nis_cam = std::numeric_limits<double>::quiet_NaN();
  if (y_sg) {
    state_ = settings_.linear_strain
                 ? update_strain_linear(state_, *y_sg, H0_, R_sg_, settings_.highpass,
                                        settings_.compute_nis)
                 : update_strain(state_, *y_sg, forces_, R_sg_, settings_.highpass,
                                 settings_.compute_nis);
    ++strain_updates_;
  }
  if (camera) {
    const long lag = state_.tick - camera->capture_tick;
    if (lag < 0) throw std::invalid_argument("camera sample captured in the future");
    if (lag > 0 && !buffer_.contains(state_.tick - lag))
      throw std::out_of_range("OOSM buffer miss: lag " + std::to_string(lag) + " exceeds buffer depth " +
                              std::to_string(buffer_.depth()));
    state_ = oosm_update(state_, camera->y, buffer_, p0_, C_t_, R_cam_, static_cast<int>(lag),
                         settings_.literal_s_star);
    ++oosm_updates_;
  }
  buffer_.push(state_.tick, state_.x, state_.P);
  return state_;
}

}  // namespace trussest
