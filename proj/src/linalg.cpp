#include "trussest/linalg.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace trussest {

MatrixXd expm(const MatrixXd& A) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("expm: matrix must be square");
  }
  const Eigen::Index n = A.rows();
  if (n == 0) return A;
  if (!A.allFinite()) {
    throw std::invalid_argument("expm: matrix has non-finite entries");
  }

  // Higham (2005) degree-13 coefficients and the theta_13 threshold.
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  }
  const MatrixXd As = A / std::ldexp(1.0, squarings);

  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd A2 = As * As;
  const MatrixXd A4 = A2 * A2;
  const MatrixXd A6 = A4 * A2;

  const MatrixXd U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
                           b[5] * A4 + b[3] * A2 + b[1] * I);
  const MatrixXd V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                     b[4] * A4 + b[2] * A2 + b[0] * I;

  MatrixXd R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) R = (R * R).eval();
  return R;
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& F, const MatrixXd& Q,
                                 double rel_tol, int max_iter) {
  if (F.rows() != F.cols() || Q.rows() != Q.cols() || F.rows() != Q.rows()) {
    throw std::invalid_argument(
        "solve_discrete_lyapunov: F and Q must be square and of equal size");
  }
  const double rho = spectral_radius(F);
  if (!(rho < 1.0)) {
    throw std::runtime_error(
        "solve_discrete_lyapunov: transition matrix is not stable (spectral radius " +
        std::to_string(rho) + ")");
  }

  MatrixXd X = Q;
  MatrixXd Fj = F;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd increment = Fj * X * Fj.transpose();
    X += increment;
    Fj = (Fj * Fj).eval();
    const double scale = std::max(X.cwiseAbs().maxCoeff(), 1e-300);
    if (increment.cwiseAbs().maxCoeff() <= rel_tol * scale &&
        Fj.cwiseAbs().maxCoeff() < 1e-8) {
      symmetrize(X);
      return X;
    }
  }
  throw std::runtime_error("solve_discrete_lyapunov: doubling did not converge");
}

double spectral_radius(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spectral_radius: eigenvalue computation failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const MatrixXd& P) {
  const MatrixXd S = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric_psd(const MatrixXd& P, double psd_tol) {
  const double scale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  const double trace = P.trace();
  return min_symmetric_eigenvalue(P) >= -psd_tol * std::abs(trace);
}

MatrixXd matrix_power(const MatrixXd& A, int exponent) {
  if (exponent < 0) throw std::invalid_argument("matrix_power: negative exponent");
  MatrixXd result = MatrixXd::Identity(A.rows(), A.cols());
  MatrixXd base = A;
  while (exponent > 0) {
    if (exponent & 1) result = (result * base).eval();
    base = (base * base).eval();
    exponent >>= 1;
  }
  return result;
}

}  // namespace trussest
