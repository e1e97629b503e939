#pragma once

// Linear systems with lagged camera outputs, its simulated truth and an
// in-sequence reprocessing reference filter.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "trussest/estimator.hpp"
#include "trussest/linalg.hpp"
#include "trussest/measurement.hpp"
#include "trussest/modal.hpp"
#include "trussest/simulation.hpp"

namespace trussest::testing {

struct LinearCase {
  Eigen::MatrixXd F, H, R, C, Rc;
  Eigen::VectorXd p0;
  double q = 0.0;
  double P0 = 1e-4;
  int lag = 1;
  int divisor = 2;
  int steps = 1000;
  std::uint64_t seed = 1;
};

struct LinearData {
  std::vector<Eigen::VectorXd> x;      // truth per tick
  std::vector<Eigen::VectorXd> y;      // strain-like outputs per tick
  std::vector<CameraSample> camera;    // delivery order
  std::vector<int> camera_at_tick;
};

inline LinearCase make_linear_case(double q, int lag, std::uint64_t seed = 1) {
  LinearCase c;
  const double dt = 0.005;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  const double w1 = 2 * M_PI * 1.0, w2 = 2 * M_PI * 3.3, z = 0.02;
  A(0, 2) = 1;
  A(1, 3) = 1;
  A(2, 0) = -w1 * w1;
  A(2, 2) = -2 * z * w1;
  A(3, 1) = -w2 * w2;
  A(3, 3) = -2 * z * w2;
  c.F = expm(A * dt);
  c.H.resize(2, 4);
  c.H << 300.0, -120.0, 0, 0, 80.0, 250.0, 0, 0;
  c.R = 0.09 * Eigen::MatrixXd::Identity(2, 2);
  c.C.resize(2, 4);
  c.C << 1.0, 0.4, 0, 0, -0.3, 1.0, 0, 0;
  c.Rc = 1e-8 * Eigen::MatrixXd::Identity(2, 2);
  c.p0 = Eigen::Vector2d(0.5, -0.25);
  c.q = q;
  c.lag = lag;
  c.seed = seed;
  return c;
}

// The scale model linearized about rest: ten modes, all 60 gauges and the
// default camera with its nominal 0.05 mm pixel noise.
inline LinearCase make_truss_case(double q, int lag, std::uint64_t seed = 1) {
  const AssembledModel m = assemble(build_scale_model(), tuned_stiffness());
  const ModalBasis b = solve_modes(m, 10);
  const auto g = StrainGaugeSet::from_model(m, {}, 1.0, 1.0);
  CameraModel cam = default_camera(m);
  cam.r_t = 2.5e-9;
  LinearCase c;
  c.F = discretize(continuous_system_matrix(b), 0.005);
  c.H = ModalForceModel(g, b).jacobian_at_rest();
  c.R = build_R_sg(g);
  c.C = camera_matrix(cam, b);
  c.Rc = build_R_cam(cam);
  c.p0 = cam.p0;
  c.q = q;
  c.lag = lag;
  c.seed = seed;
  return c;
}

inline LinearData simulate_linear(const LinearCase& c) {
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd;
  const Eigen::Index nx = c.F.rows();
  auto gauss = [&](Eigen::Index n, double s) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = s * nd(rng);
    return v;
  };
  LinearData d;
  Eigen::VectorXd x = gauss(nx, std::sqrt(c.P0));
  for (int k = 0; k < c.steps; ++k) {
    x = c.F * x + gauss(nx, std::sqrt(c.q));
    d.x.push_back(x);
    d.y.push_back(c.H * x + gauss(c.H.rows(), std::sqrt(c.R(0, 0))));
  }
  d.camera_at_tick.assign(c.steps, -1);
  for (int k = c.lag; k < c.steps; ++k) {
    if (k % c.divisor != 0) continue;
    const int kappa = k - c.lag;
    CameraSample s{kappa, k, c.p0 - (c.C * d.x[kappa] + gauss(c.C.rows(), std::sqrt(c.Rc(0, 0))))};
    d.camera_at_tick[k] = static_cast<int>(d.camera.size());
    d.camera.push_back(s);
  }
  return d;
}

inline EstimatorSettings linear_settings(const LinearCase& c) {
  EstimatorSettings s;
  s.q = c.q;
  s.P0 = c.P0;
  s.highpass = false;
  s.linear_strain = true;
  return s;
}

// Estimates after every tick from the lag-aware fusion estimator.
// min_margin, when given, receives the smallest eigenvalue of P over trace(P).
inline std::vector<Eigen::VectorXd> run_oosm(const LinearCase& c, const LinearData& d,
                                             bool literal = false, double* min_margin = nullptr) {
  EstimatorSettings s = linear_settings(c);
  s.literal_s_star = literal;
  FusionEstimator est(c.F, ModalForceModel{}, c.R, c.H, c.C, c.p0, c.Rc, c.lag, s);
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < c.steps; ++k) {
    const int ci = d.camera_at_tick[k];
    const FilterState& st = est.step(&d.y[k], ci >= 0 ? &d.camera[ci] : nullptr);
    out.push_back(st.x);
    if (min_margin) {
      const double m = min_symmetric_eigenvalue(st.P) / st.P.trace();
      *min_margin = k == 0 ? m : std::min(*min_margin, m);
    }
  }
  return out;
}

// Reference: every camera sample applied at its capture tick, and at tick k
// only samples delivered by k count. S_j is the in-sequence posterior at j;
// the estimate at k restarts from S_{k-lag} and replays the strain updates.
inline std::vector<Eigen::VectorXd> run_reprocessing_oracle(const LinearCase& c, const LinearData& d) {
  const EstimatorSettings s = linear_settings(c);
  const FilterState init = initial_filter_state(static_cast<int>(c.F.rows()), static_cast<int>(c.H.rows()), s);
  std::vector<int> captured_at(c.steps, -1);
  for (size_t i = 0; i < d.camera.size(); ++i) captured_at[d.camera[i].capture_tick] = static_cast<int>(i);

  std::vector<FilterState> seq;
  FilterState st = init;
  for (int j = 0; j < c.steps; ++j) {
    st = predict(st, c.F);
    st = kalman_update(st, d.y[j] - c.H * st.x, c.H, c.R);
    if (captured_at[j] >= 0) {
      const auto& cam = d.camera[captured_at[j]];
      st = kalman_update(st, c.p0 - cam.y - c.C * st.x, c.C, c.Rc);
    }
    seq.push_back(st);
  }
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < c.steps; ++k) {
    const int b = k - c.lag;
    FilterState r = b >= 0 ? seq[b] : init;
    for (int j = std::max(b + 1, 0); j <= k; ++j) {
      r = predict(r, c.F);
      r = kalman_update(r, d.y[j] - c.H * r.x, c.H, c.R);
    }
    out.push_back(r.x);
  }
  return out;
}

inline double state_rmse(const std::vector<Eigen::VectorXd>& est, const std::vector<Eigen::VectorXd>& truth) {
  double s = 0.0;
  for (size_t k = 0; k < est.size(); ++k) s += (est[k] - truth[k]).squaredNorm();
  return std::sqrt(s / static_cast<double>(est.size()));
}

}  // namespace trussest::testing
