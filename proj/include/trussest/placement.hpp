#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace trussest {

// W_o = F^T W_o F + H^T H.
Eigen::MatrixXd observability_gramian(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H_stack);

struct PlacementResult {
  std::vector<int> removal_order;                      // element ids
  std::vector<std::pair<int, double>> trace_curve;     // (n_sg, normalized trace)
  std::map<int, std::vector<int>> selected_sets;       // n_sg -> retained ids
  double full_trace = 0.0;
  double camera_trace = 0.0;

  const std::vector<int>& set_for(int n_sg) const;
};

struct PlacementOptions {
  int min_sensors = 0;
  // Scale gauge rows by 1/sqrt(variance) and camera rows by 1/sqrt(r_t).
  bool weighted = false;
  Eigen::VectorXd gauge_variances;  // used when weighted
  double camera_variance = 1.0;
};

// Greedy backward elimination. H0 rows belong to element_ids; camera rows in
// C_t are kept throughout.
PlacementResult greedy_prune(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H0,
                             const std::vector<int>& element_ids, const Eigen::MatrixXd& C_t,
                             const PlacementOptions& options = {});

}  // namespace trussest
