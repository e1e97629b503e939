#pragma once

#include <Eigen/Dense>

namespace trussest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant. Accurate to roughly machine precision for finite input.
MatrixXd expm(const MatrixXd& A);

/// Solves X = F X F^T + Q for a Schur-stable F using the doubling iteration
///   X_{j+1} = X_j + F_j X_j F_j^T,  F_{j+1} = F_j^2.
/// Throws std::runtime_error if F is not stable or the iteration stalls.
MatrixXd solve_discrete_lyapunov(const MatrixXd& F, const MatrixXd& Q,
                                 double rel_tol = 1e-14, int max_iter = 200);

double spectral_radius(const MatrixXd& A);

/// Smallest eigenvalue of the symmetric part of P.
double min_symmetric_eigenvalue(const MatrixXd& P);

inline void symmetrize(MatrixXd& P) { P = 0.5 * (P + P.transpose()).eval(); }

/// True when P is symmetric to within tol (relative to its max entry) and its
/// smallest eigenvalue is not below -psd_tol * trace(P).
bool is_symmetric_psd(const MatrixXd& P, double psd_tol = 1e-10);

MatrixXd matrix_power(const MatrixXd& A, int exponent);

}  // namespace trussest
