#include "trussest/placement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trussest/linalg.hpp"

namespace trussest {

Eigen::MatrixXd observability_gramian(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H_stack) {
  if (H_stack.cols() != F.rows())
    throw std::invalid_argument("observability_gramian: output matrix does not match F");
  return solve_discrete_lyapunov(F.transpose(), H_stack.transpose() * H_stack, 1e-15);
}

const std::vector<int>& PlacementResult::set_for(int n_sg) const {
  auto it = selected_sets.find(n_sg);
  if (it == selected_sets.end())
    throw std::out_of_range("placement result has no set with " + std::to_string(n_sg) + " gauges");
  return it->second;
}

PlacementResult greedy_prune(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H0,
                             const std::vector<int>& element_ids, const Eigen::MatrixXd& C_t,
                             const PlacementOptions& options) {
  const Eigen::Index nx = F.rows();
  if (H0.rows() != static_cast<Eigen::Index>(element_ids.size()))
    throw std::invalid_argument("greedy_prune: one element id per gauge row required");
  if (H0.cols() != nx || (C_t.size() > 0 && C_t.cols() != nx))
    throw std::invalid_argument("greedy_prune: output matrices do not match F");
  if (options.min_sensors < 0) throw std::invalid_argument("greedy_prune: negative target");

  Eigen::MatrixXd H = H0;
  Eigen::MatrixXd C = C_t;
  if (options.weighted) {
    if (options.gauge_variances.size() != H.rows())
      throw std::invalid_argument("greedy_prune: one variance per gauge required");
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      if (!(options.gauge_variances[i] > 0.0))
        throw std::invalid_argument("greedy_prune: variances must be positive");
      H.row(i) /= std::sqrt(options.gauge_variances[i]);
    }
    if (!(options.camera_variance > 0.0))
      throw std::invalid_argument("greedy_prune: camera variance must be positive");
    C /= std::sqrt(options.camera_variance);
  }

  // trace(W_o) = sum_j ||H F^j||_F^2 = sum over rows h of h G h^T with
  // G = F G F^T + I, so each row contributes an independent score.
  const Eigen::MatrixXd G =
      solve_discrete_lyapunov(F, Eigen::MatrixXd::Identity(nx, nx), 1e-15);
  Eigen::VectorXd score(H.rows());
  for (Eigen::Index i = 0; i < H.rows(); ++i) score[i] = H.row(i) * G * H.row(i).transpose();
  const double camera_trace = C.size() > 0 ? (C * G * C.transpose()).trace() : 0.0;

  std::vector<int> keep(H.rows());
  for (size_t i = 0; i < keep.size(); ++i) keep[i] = static_cast<int>(i);
  auto current_trace = [&] {
    long double t = camera_trace;
    for (int i : keep) t += score[i];
    return static_cast<double>(t);
  };
  double trace = current_trace();

  PlacementResult res;
  res.full_trace = trace;
  res.camera_trace = camera_trace;
  const double norm = trace > 0.0 ? trace : 1.0;

  auto record = [&] {
    std::vector<int> ids;
    for (int i : keep) ids.push_back(element_ids[i]);
    std::sort(ids.begin(), ids.end());
    const int n = static_cast<int>(keep.size());
    res.trace_curve.emplace_back(n, trace / norm);
    res.selected_sets[n] = ids;
  };
  record();

  while (static_cast<int>(keep.size()) > options.min_sensors) {
    // Removing row i leaves trace - score[i]; the best removal has the
    // smallest score, ties to the lowest element id.
    const double tie = 1e-12 * norm;
    size_t best = 0;
    for (size_t j = 1; j < keep.size(); ++j) {
      const double sj = score[keep[j]], sb = score[keep[best]];
      if (sj < sb - tie || (std::abs(sj - sb) <= tie && element_ids[keep[j]] < element_ids[keep[best]]))
        best = j;
    }
    res.removal_order.push_back(element_ids[keep[best]]);
    keep.erase(keep.begin() + static_cast<long>(best));
    trace = current_trace();
    record();
  }
  return res;
}

}  // namespace trussest
