#include "trussest/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "trussest/linalg.hpp"
#include "trussest/measurement.hpp"

namespace trussest {

Eigen::VectorXd ModalBasis::frequencies_hz() const { return omega / (2.0 * std::numbers::pi); }

ModalBasis solve_modes(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K, int n_p, double alpha0,
                       double alpha1) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || K.rows() != n || K.cols() != n)
    throw std::invalid_argument("solve_modes: M and K must be square and of equal size");
  if (n_p < 1 || n_p > n)
    throw std::invalid_argument("solve_modes: n_p must lie in [1, " + std::to_string(n) + "]");

  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_modes: Cholesky factorization failed, M is not positive definite");
  // A = L^-1 K L^-T
  const Eigen::MatrixXd LinvK = llt.matrixL().solve(K);
  Eigen::MatrixXd A = llt.matrixL().solve(LinvK.transpose());
  symmetrize(A);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw std::runtime_error("solve_modes: eigen solver failed");

  const Eigen::VectorXd lam = es.eigenvalues().head(n_p);
  if (lam.minCoeff() <= 0.0)
    throw std::runtime_error("solve_modes: nonpositive eigenvalue " + std::to_string(lam.minCoeff()) +
                             " (stiffness matrix not positive definite)");

  ModalBasis b;
  b.Phi = llt.matrixU().solve(es.eigenvectors().leftCols(n_p));
  for (int j = 0; j < n_p; ++j) {
    Eigen::Index imax = 0;
    b.Phi.col(j).cwiseAbs().maxCoeff(&imax);
    if (b.Phi(imax, j) < 0.0) b.Phi.col(j) *= -1.0;
  }
  b.omega = lam.cwiseSqrt();
  b.zeta = modal_damping(b.omega, alpha0, alpha1);
  return b;
}

ModalBasis solve_modes(const AssembledModel& model, int n_p) {
  return solve_modes(model.M, model.K, n_p, model.params.alpha0, model.params.alpha1);
}

double modal_damping(double omega, double alpha0, double alpha1) {
  if (!(omega > 0.0)) throw std::invalid_argument("modal_damping: omega must be positive");
  return 0.5 * (alpha0 / omega + alpha1 * omega);
}

Eigen::VectorXd modal_damping(const Eigen::VectorXd& omega, double alpha0, double alpha1) {
  Eigen::VectorXd z(omega.size());
  for (Eigen::Index i = 0; i < omega.size(); ++i) z[i] = modal_damping(omega[i], alpha0, alpha1);
  return z;
}

Eigen::MatrixXd continuous_system_matrix(const ModalBasis& basis) {
  const int np = basis.n_p();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * np, 2 * np);
  A.topRightCorner(np, np).setIdentity();
  A.bottomLeftCorner(np, np) = (-basis.omega.array().square()).matrix().asDiagonal();
  A.bottomRightCorner(np, np) =
      (-2.0 * basis.zeta.array() * basis.omega.array()).matrix().asDiagonal();
  return A;
}

Eigen::MatrixXd discretize(const Eigen::MatrixXd& A, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  return expm(A * dt);
}

ModalStateSpace build_state_space(const ModalBasis& basis, const AssembledModel& model,
                                  const Eigen::MatrixXd& actuators,
                                  const Eigen::MatrixXd& disturbances,
                                  const StrainGaugeSet* gauges, const CameraModel* camera,
                                  double dt) {
  const int np = basis.n_p();
  if (basis.Phi.rows() != model.n)
    throw std::invalid_argument("build_state_space: basis does not match the model");
  auto lift = [&](const Eigen::MatrixXd& G, const char* what) {
    if (G.size() == 0) return Eigen::MatrixXd(2 * np, 0);
    if (G.rows() != model.n)
      throw std::invalid_argument(std::string("build_state_space: ") + what +
                                  " map must have one row per free DOF");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * np, G.cols());
    out.bottomRows(np) = basis.Phi.transpose() * G;
    return out;
  };

  ModalStateSpace ss;
  ss.dt = dt;
  ss.A = continuous_system_matrix(basis);
  ss.B = lift(actuators, "actuator");
  ss.E = lift(disturbances, "disturbance");
  ss.C_t = camera ? camera_matrix(*camera, basis) : Eigen::MatrixXd(0, 2 * np);
  ss.H0 = gauges ? ModalForceModel(*gauges, basis).jacobian_at_rest() : Eigen::MatrixXd(0, 2 * np);
  ss.F = discretize(ss.A, dt);
  return ss;
}

Eigen::MatrixXd base_excitation_map(const AssembledModel& model, Axis axis) {
  return -(model.M * influence_vector(model.dof_map, axis));
}

ModeSignature classify_mode(const AssembledModel& model, const Eigen::VectorXd& phi) {
  if (phi.size() != model.n) throw std::invalid_argument("classify_mode: shape length differs from model size");
  double z_top = -INFINITY;
  for (const auto& nd : model.geometry.nodes)
    if (model.dof_map.contains(nd.id)) z_top = std::max(z_top, nd.position.z());
  std::vector<const Node*> top;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& nd : model.geometry.nodes)
    if (model.dof_map.contains(nd.id) && std::abs(nd.position.z() - z_top) < 1e-9) {
      top.push_back(&nd);
      c += nd.position.head<2>();
    }
  c /= static_cast<double>(top.size());
  auto comp = [&](int node, Axis a) {
    const int i = model.dof_map.index(node, a);
    return i < 0 ? 0.0 : phi[i];
  };
  ModeSignature s;
  double r2 = 0.0, moment = 0.0;
  for (const Node* nd : top) {
    const Eigen::Vector2d r = nd->position.head<2>() - c;
    const double ux = comp(nd->id, Axis::X), uy = comp(nd->id, Axis::Y);
    s.tx += ux;
    s.ty += uy;
    s.tz += comp(nd->id, Axis::Z);
    moment += r.x() * uy - r.y() * ux;
    r2 += r.squaredNorm();
  }
  const double m = static_cast<double>(top.size());
  s.tx /= m;
  s.ty /= m;
  s.tz /= m;
  if (r2 > 0.0) s.twist = (moment / m) / std::sqrt(r2 / m);

  const double peak = phi.cwiseAbs().maxCoeff();
  const double ax = std::abs(s.tx), ay = std::abs(s.ty), at = std::abs(s.twist), az = std::abs(s.tz);
  const double best = std::max({ax, ay, at, az});
  if (peak == 0.0 || best < 0.2 * peak) s.kind = ModeKind::Other;
  else if (best == ax) s.kind = ModeKind::BendingX;
  else if (best == ay) s.kind = ModeKind::BendingY;
  else if (best == at) s.kind = ModeKind::Torsion;
  else s.kind = ModeKind::Vertical;
  return s;
}

std::string to_string(ModeKind k) {
  switch (k) {
    case ModeKind::BendingX: return "bending-x";
    case ModeKind::BendingY: return "bending-y";
    case ModeKind::Torsion: return "torsion";
    case ModeKind::Vertical: return "vertical";
    case ModeKind::Other: return "other";
  }
  return "other";
}

}  // namespace trussest
