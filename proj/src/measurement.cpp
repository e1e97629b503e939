#include "trussest/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace trussest {

// ---------------------------------------------------------------- strain gauges

Eigen::VectorXd StrainGaugeSet::bracing_indicator() const {
  Eigen::VectorXd b(size());
  for (int i = 0; i < size(); ++i) b[i] = kinematics[i].cls == ElementClass::Bracing ? 1.0 : 0.0;
  return b;
}

Eigen::VectorXd StrainGaugeSet::column_indicator() const {
  return Eigen::VectorXd::Ones(size()) - bracing_indicator();
}

void StrainGaugeSet::validate() const {
  if (element_ids.size() != kinematics.size())
    throw std::invalid_argument("strain gauge set: ids and kinematics differ in length");
  if (!(r_b > 0.0) || !(r_c > 0.0))
    throw std::invalid_argument("strain gauge noise variances must be positive");
}

StrainGaugeSet StrainGaugeSet::from_model(const AssembledModel& model, const std::vector<int>& ids,
                                          double r_b, double r_c) {
  StrainGaugeSet s;
  s.r_b = r_b;
  s.r_c = r_c;
  if (ids.empty()) {
    for (const auto& k : model.element_kinematics) {
      s.element_ids.push_back(k.element_id);
      s.kinematics.push_back(k);
    }
  } else {
    std::set<int> seen;
    for (int id : ids) {
      if (!seen.insert(id).second)
        throw std::invalid_argument("strain gauge on element " + std::to_string(id) + " listed twice");
      s.element_ids.push_back(id);
      s.kinematics.push_back(model.kinematics(id));
    }
  }
  s.validate();
  return s;
}

double element_force(const ElementKinematics& kin, const Eigen::VectorXd& q) {
  const double len = (kin.relative_displacement(q) + kin.e0).norm();
  if (!(len > 0.0))
    throw std::runtime_error("element " + std::to_string(kin.element_id) + " collapsed to zero length");
  return kin.gamma * (len - kin.L0);
}

Eigen::VectorXd element_forces_nodal(const Eigen::VectorXd& q, const StrainGaugeSet& gauges) {
  Eigen::VectorXd f(gauges.size());
  for (int i = 0; i < gauges.size(); ++i) f[i] = element_force(gauges.kinematics[i], q);
  return f;
}

namespace {

Eigen::VectorXd nodal_from_modal(const Eigen::VectorXd& x, const ModalBasis& basis) {
  if (x.size() != 2 * basis.n_p())
    throw std::invalid_argument("state dimension " + std::to_string(x.size()) +
                                " does not match 2*n_p = " + std::to_string(2 * basis.n_p()));
  return basis.Phi * x.head(basis.n_p());
}

}  // namespace

Eigen::VectorXd element_force(const Eigen::VectorXd& x, const StrainGaugeSet& gauges,
                              const ModalBasis& basis) {
  return element_forces_nodal(nodal_from_modal(x, basis), gauges);
}

Eigen::MatrixXd force_jacobian(const Eigen::VectorXd& x, const StrainGaugeSet& gauges,
                               const ModalBasis& basis) {
  const Eigen::VectorXd q = nodal_from_modal(x, basis);
  const int n = static_cast<int>(basis.Phi.rows());
  const int np = basis.n_p();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(gauges.size(), 2 * np);
  for (int i = 0; i < gauges.size(); ++i) {
    const auto& k = gauges.kinematics[i];
    const Eigen::Vector3d e = k.relative_displacement(q) + k.e0;
    const double len = e.norm();
    if (!(len > 0.0))
      throw std::runtime_error("element " + std::to_string(k.element_id) + " collapsed; Jacobian undefined");
    H.row(i).head(np) = k.gamma * (e / len).transpose() * k.d_matrix(n) * basis.Phi;
  }
  return H;
}

ModalForceModel::ModalForceModel(const StrainGaugeSet& gauges, const ModalBasis& basis)
    : n_p_(basis.n_p()) {
  const int m = gauges.size();
  gamma_.resize(m);
  L0_.resize(m);
  e0_.resize(m);
  dphi_.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& k = gauges.kinematics[i];
    gamma_[i] = k.gamma;
    L0_[i] = k.L0;
    e0_[i] = k.e0;
    Eigen::Matrix<double, 3, Eigen::Dynamic> dp = Eigen::MatrixXd::Zero(3, n_p_);
    for (int a = 0; a < 3; ++a) {
      if (k.dofs_b[a] >= 0) dp.row(a) += basis.Phi.row(k.dofs_b[a]);
      if (k.dofs_a[a] >= 0) dp.row(a) -= basis.Phi.row(k.dofs_a[a]);
    }
    dphi_[i] = dp;
  }
}

Eigen::VectorXd ModalForceModel::evaluate(const Eigen::VectorXd& x, Eigen::MatrixXd* H) const {
  if (x.size() != 2 * n_p_) throw std::invalid_argument("force model: state dimension mismatch");
  const int m = size();
  Eigen::VectorXd h(m);
  if (H) H->setZero(m, 2 * n_p_);
  const auto eta = x.head(n_p_);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector3d e = dphi_[i] * eta + e0_[i];
    const double len = e.norm();
    if (!(len > 0.0)) throw std::runtime_error("element collapsed to zero length");
    h[i] = gamma_[i] * (len - L0_[i]);
    if (H) H->row(i).head(n_p_) = (gamma_[i] / len) * e.transpose() * dphi_[i];
  }
  return h;
}

Eigen::MatrixXd ModalForceModel::jacobian_at_rest() const {
  Eigen::MatrixXd H;
  evaluate(Eigen::VectorXd::Zero(2 * n_p_), &H);
  return H;
}

Eigen::MatrixXd build_R_sg(const StrainGaugeSet& gauges) {
  gauges.validate();
  Eigen::VectorXd diag = gauges.bracing_indicator() * gauges.r_b + gauges.column_indicator() * gauges.r_c;
  return diag.asDiagonal();
}

// ---------------------------------------------------------------- high-pass

HighPassCoefficients HighPassCoefficients::butterworth(double f_c, double f_s) {
  if (!(f_c > 0.0) || !(f_s > 0.0) || !(f_c < 0.5 * f_s))
    throw std::invalid_argument("high-pass cutoff must satisfy 0 < f_c < f_s/2");
  const double K = std::tan(std::numbers::pi * f_c / f_s);
  HighPassCoefficients c;
  c.b0 = 1.0 / (1.0 + K);
  c.b1 = -c.b0;
  c.a1 = (K - 1.0) / (K + 1.0);
  return c;
}

HighPassState::HighPassState(const HighPassCoefficients& c, int channels, bool prime)
    : coeffs(c),
      prev_in(Eigen::VectorXd::Zero(channels)),
      prev_out(Eigen::VectorXd::Zero(channels)),
      prime_on_first(prime) {}

Eigen::VectorXd highpass_step(HighPassState& s, const Eigen::VectorXd& u) {
  if (u.size() != s.prev_in.size())
    throw std::invalid_argument("high-pass: channel count mismatch");
  if (!s.primed) {
    if (s.prime_on_first) s.prev_in = u;
    s.primed = true;
  }
  Eigen::VectorXd y = s.coeffs.b0 * u + s.coeffs.b1 * s.prev_in - s.coeffs.a1 * s.prev_out;
  s.prev_in = u;
  s.prev_out = y;
  return y;
}

// ---------------------------------------------------------------- camera

Extrinsics Extrinsics::facing_plus_y(const Eigen::Vector3d& C) {
  Extrinsics e;
  e.R << 1, 0, 0,
         0, 0, -1,
         0, 1, 0;
  e.t = -e.R * C;
  return e;
}

void CameraModel::attach(const AssembledModel& model) {
  const int m = size();
  p0.resize(m);
  dof_index.assign(m, -1);
  node_dofs.assign(m, {{-1, -1, -1}});
  rest_positions.assign(m, Eigen::Vector3d::Zero());
  for (int i = 0; i < m; ++i) {
    const auto& td = tracked[i];
    if (!model.geometry.has_node(td.node))
      throw std::invalid_argument("camera tracks missing node " + std::to_string(td.node));
    const int idx = model.dof_map.index(td.node, td.axis);
    if (idx < 0)
      throw std::invalid_argument("camera tracks fixed DOF " + std::to_string(td.node) +
                                  axis_char(td.axis));
    dof_index[i] = idx;
    for (Axis a : {Axis::X, Axis::Y, Axis::Z})
      node_dofs[i][static_cast<int>(a)] = model.dof_map.index(td.node, a);
    rest_positions[i] = model.geometry.node(td.node).position;
    p0[i] = rest_positions[i][static_cast<int>(td.axis)];
  }
}

void CameraModel::validate() const {
  if (rate_divisor < 1) throw std::invalid_argument("camera rate divisor must be >= 1");
  if (lag < 0) throw std::invalid_argument("camera lag must be >= 0");
  if (!(r_t > 0.0)) throw std::invalid_argument("camera noise variance must be positive");
  const Eigen::Matrix3d RtR = extrinsics.R.transpose() * extrinsics.R;
  if ((RtR - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("camera rotation is not orthonormal");
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw std::invalid_argument("camera focal lengths must be positive");
  if (static_cast<int>(dof_index.size()) != size())
    throw std::invalid_argument("camera model is not attached to a structural model");
}

CameraModel CameraModel::subset(const std::vector<int>& channels) const {
  CameraModel c = *this;
  c.tracked.clear();
  c.dof_index.clear();
  c.node_dofs.clear();
  c.rest_positions.clear();
  c.p0.resize(static_cast<Eigen::Index>(channels.size()));
  for (size_t j = 0; j < channels.size(); ++j) {
    const int i = channels[j];
    if (i < 0 || i >= size()) throw std::invalid_argument("camera channel out of range");
    c.tracked.push_back(tracked[i]);
    if (!dof_index.empty()) {
      c.dof_index.push_back(dof_index[i]);
      c.node_dofs.push_back(node_dofs[i]);
      c.rest_positions.push_back(rest_positions[i]);
      c.p0[static_cast<Eigen::Index>(j)] = p0[i];
    }
  }
  return c;
}

int CameraModel::channel(int node, Axis axis) const {
  for (int i = 0; i < size(); ++i)
    if (tracked[i].node == node && tracked[i].axis == axis) return i;
  return -1;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& P, const Intrinsics& K, const Extrinsics& ext) {
  const Eigen::Vector3d pc = ext.R * P + ext.t;
  if (!(pc.z() > 0.0)) throw std::invalid_argument("point is not in front of the camera");
  return {K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy};
}

Eigen::Vector2d project_point(const Eigen::Vector3d& P, const CameraModel& camera) {
  return project_point(P, camera.intrinsics, camera.extrinsics);
}

Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double z_c, const Intrinsics& K,
                             const Extrinsics& ext) {
  if (!(z_c > 0.0)) throw std::invalid_argument("back-projection depth must be positive");
  const Eigen::Vector3d pc((pixel.x() - K.cx) / K.fx * z_c, (pixel.y() - K.cy) / K.fy * z_c, z_c);
  return ext.R.transpose() * (pc - ext.t);
}

Eigen::Vector2d distort_point(const Eigen::Vector2d& vw, const Distortion& d) {
  const double v = vw.x(), w = vw.y();
  const double r2 = v * v + w * w;
  const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  return {v * radial + 2.0 * d.p1 * v * w + d.p2 * (r2 + 2.0 * v * v),
          w * radial + 2.0 * d.p2 * v * w + d.p1 * (r2 + 2.0 * w * w)};
}

Eigen::Vector2d undistort_point(const Eigen::Vector2d& vwd, const Distortion& d, double tol,
                                int max_iter) {
  if (d.is_zero()) return vwd;
  Eigen::Vector2d p = vwd;
  for (int it = 0; it < max_iter; ++it) {
    const double v = p.x(), w = p.y();
    const double r2 = v * v + w * w;
    const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
    const double dv = 2.0 * d.p1 * v * w + d.p2 * (r2 + 2.0 * v * v);
    const double dw = 2.0 * d.p2 * v * w + d.p1 * (r2 + 2.0 * w * w);
    const Eigen::Vector2d next((vwd.x() - dv) / radial, (vwd.y() - dw) / radial);
    if (!next.allFinite()) break;
    const double step = (next - p).norm();
    p = next;
    if (step <= tol * std::max(1.0, p.norm())) return p;
  }
  throw std::runtime_error("undistort_point: fixed-point iteration did not converge");
}

Eigen::MatrixXd camera_matrix(const CameraModel& camera, const ModalBasis& basis) {
  if (static_cast<int>(camera.dof_index.size()) != camera.size())
    throw std::invalid_argument("camera model is not attached to a structural model");
  const int np = basis.n_p();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(camera.size(), 2 * np);
  for (int i = 0; i < camera.size(); ++i) {
    if (camera.dof_index[i] < 0 || camera.dof_index[i] >= basis.Phi.rows())
      throw std::invalid_argument("camera DOF outside the modal basis");
    C.row(i).head(np) = basis.Phi.row(camera.dof_index[i]);
  }
  return C;
}

Eigen::VectorXd camera_output(const Eigen::VectorXd& x, const CameraModel& camera,
                              const ModalBasis& basis) {
  return camera_matrix(camera, basis) * x;
}

Eigen::VectorXd camera_displacement(const Eigen::VectorXd& q, const CameraModel& camera) {
  const int m = camera.size();
  Eigen::VectorXd out(m);
  const auto& K = camera.intrinsics;
  const auto& ext = camera.extrinsics;
  for (int i = 0; i < m; ++i) {
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a)
      if (camera.node_dofs[i][a] >= 0) u[a] = q[camera.node_dofs[i][a]];
    const int ax = static_cast<int>(camera.tracked[i].axis);
    if (!camera.pixel_roundtrip) {
      out[i] = u[ax];
      continue;
    }
    const Eigen::Vector3d P = camera.rest_positions[i] + u;
    const Eigen::Vector3d pc = ext.R * P + ext.t;
    if (!(pc.z() > 0.0)) throw std::invalid_argument("tracked point is not in front of the camera");
    const Eigen::Vector2d normalized(pc.x() / pc.z(), pc.y() / pc.z());
    const Eigen::Vector2d nd = distort_point(normalized, camera.lens);
    Eigen::Vector2d pix(K.fx * nd.x() + K.cx, K.fy * nd.y() + K.cy);
    if (camera.pixel_quantization > 0.0) {
      const double s = camera.pixel_quantization;
      pix = (pix / s).array().round().matrix() * s;
    }
    const Eigen::Vector2d nd_meas((pix.x() - K.cx) / K.fx, (pix.y() - K.cy) / K.fy);
    const Eigen::Vector2d n_meas = undistort_point(nd_meas, camera.calibration);
    const double z_c = camera.depth == DepthMode::Exact
                           ? pc.z()
                           : (ext.R * camera.rest_positions[i] + ext.t).z();
    const Eigen::Vector3d pc_est(n_meas.x() * z_c, n_meas.y() * z_c, z_c);
    const Eigen::Vector3d P_est = ext.R.transpose() * (pc_est - ext.t);
    out[i] = P_est[ax] - camera.rest_positions[i][ax];
  }
  return out;
}

Eigen::MatrixXd build_R_cam(const CameraModel& camera) {
  if (!(camera.r_t > 0.0)) throw std::invalid_argument("camera noise variance must be positive");
  return camera.r_t * Eigen::MatrixXd::Identity(camera.size(), camera.size());
}

std::vector<TrackedDof> default_tracked_dofs() {
  std::vector<TrackedDof> t;
  for (int level = 1; level <= 5; ++level)
    for (int corner : {0, 1})
      for (Axis a : {Axis::X, Axis::Z}) t.push_back({scale_node_id(level, corner), a});
  return t;
}

CameraModel default_camera(const AssembledModel& model, double standoff) {
  CameraModel c;
  c.tracked = default_tracked_dofs();
  Eigen::Vector3d centre = Eigen::Vector3d::Zero();
  double y_min = 0.0;
  for (size_t i = 0; i < c.tracked.size(); ++i) {
    const auto& P = model.geometry.node(c.tracked[i].node).position;
    centre += P;
    y_min = i == 0 ? P.y() : std::min(y_min, P.y());
  }
  centre /= static_cast<double>(c.tracked.size());
  centre.y() = y_min - standoff;
  c.extrinsics = Extrinsics::facing_plus_y(centre);
  c.attach(model);
  return c;
}

}  // namespace trussest
