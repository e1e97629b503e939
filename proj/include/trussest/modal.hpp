#pragma once

#include <string>

#include <Eigen/Dense>

#include "trussest/structure.hpp"

namespace trussest {

struct StrainGaugeSet;
struct CameraModel;

struct ModalBasis {
  Eigen::MatrixXd Phi;    // n x n_p, mass-normalized
  Eigen::VectorXd omega;  // rad/s, ascending
  Eigen::VectorXd zeta;

  int n_p() const { return static_cast<int>(omega.size()); }
  Eigen::VectorXd frequencies_hz() const;
};

// Lowest n_p modes of (K - w^2 M) phi = 0 by Cholesky reduction of M.
// Damping ratios follow from the model's Rayleigh coefficients.
ModalBasis solve_modes(const AssembledModel& model, int n_p);
ModalBasis solve_modes(const Eigen::MatrixXd& M, const Eigen::MatrixXd& K, int n_p,
                       double alpha0 = 0.0, double alpha1 = 0.0);

Eigen::VectorXd modal_damping(const Eigen::VectorXd& omega, double alpha0, double alpha1);
double modal_damping(double omega, double alpha0, double alpha1);

struct ModalStateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd E;
  Eigen::MatrixXd C_t;
  Eigen::MatrixXd H0;
  Eigen::MatrixXd F;
  double dt = 0.0;

  int n_x() const { return static_cast<int>(A.rows()); }
};

Eigen::MatrixXd continuous_system_matrix(const ModalBasis& basis);

// F = exp(A dt).
Eigen::MatrixXd discretize(const Eigen::MatrixXd& A, double dt);

// actuators: n x n_a force map F_a; disturbances: n x n_d map E_d. Either may
// have zero columns. gauges and camera may be null for an empty output.
ModalStateSpace build_state_space(const ModalBasis& basis, const AssembledModel& model,
                                  const Eigen::MatrixXd& actuators,
                                  const Eigen::MatrixXd& disturbances,
                                  const StrainGaugeSet* gauges, const CameraModel* camera,
                                  double dt);

enum class ModeKind { BendingX, BendingY, Torsion, Vertical, Other };

// Motion of the uppermost node level: mean translations, and the in-plane
// rotation expressed as tangential displacement at the mean corner radius.
struct ModeSignature {
  double tx = 0, ty = 0, twist = 0, tz = 0;
  ModeKind kind = ModeKind::Other;
};

ModeSignature classify_mode(const AssembledModel& model, const Eigen::VectorXd& phi);
std::string to_string(ModeKind k);
inline bool is_bending(ModeKind k) { return k == ModeKind::BendingX || k == ModeKind::BendingY; }

// E_d for base excitation along axis: -M iota.
Eigen::MatrixXd base_excitation_map(const AssembledModel& model, Axis axis);

}  // namespace trussest
