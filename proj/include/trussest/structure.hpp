#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "trussest/types.hpp"

namespace trussest {

struct Node {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct Element {
  int id = 0;
  int node_a = 0;
  int node_b = 0;
  ElementClass cls = ElementClass::Bracing;
  double mass = 0.0;  // kg, lumped half to each endpoint
  // Per-element spring constant in N/m; replaces the class value when set.
  std::optional<double> stiffness;
};

// Rigid floor/ceiling plate. Its mass is split equally over its nodes. When
// membrane_ties is set, every node pair of the plate is joined by a stiff
// spring so that the plate cannot deform in its own plane.
struct Plate {
  std::vector<int> nodes;
  double mass = 0.0;
  bool membrane_ties = true;
};

struct FixedDof {
  int node = 0;
  Axis axis = Axis::X;
};

struct TrussGeometry {
  std::vector<Node> nodes;
  std::vector<Element> elements;
  std::vector<Plate> plates;
  std::vector<FixedDof> constrained_dofs;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  const Node& node(int id) const;
  const Element& element(int id) const;
  bool has_node(int id) const;
};

struct ScaleModelConfig {
  int modules = 5;
  double footprint = 0.26;      // m, square side
  double module_height = 0.40;  // m
  double plate_mass = 5.0;      // kg per ceiling plate
  double top_plate_mass = 3.5;  // kg, uppermost plate (no actuators mounted)
  double column_mass = 0.4;     // kg per column
  double bracing_mass = 0.05;   // kg per diagonal
  bool element_mass = true;
  bool plate_ties = true;
  // Element ids of active columns. Empty means the default layout: one active
  // column per module below the top, rotating around the corners.
  std::vector<int> active_columns;
};

struct StiffnessParams {
  double k_b = 18200.0;   // N/m
  double k_ca = 19500.0;  // N/m
  double k_cp = 22100.0;  // N/m
  double alpha0 = 0.05;   // 1/s
  double alpha1 = 0.005;  // s
  double k_plate = 1e7;   // N/m, membrane ties

  void validate() const;
  double for_class(ElementClass c) const;
};

// Node/axis to free-DOF index. Fixed DOFs map to -1.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const TrussGeometry& g);

  int index(int node, Axis axis) const;
  int size() const { return static_cast<int>(dofs_.size()); }
  const std::vector<std::pair<int, Axis>>& dofs() const { return dofs_; }
  bool contains(int node) const { return node_slots_.count(node) > 0; }

 private:
  std::map<int, std::array<int, 3>> node_slots_;
  std::vector<std::pair<int, Axis>> dofs_;
};

struct ElementKinematics {
  int element_id = 0;
  ElementClass cls = ElementClass::Bracing;
  double gamma = 0.0;
  double L0 = 0.0;
  Eigen::Vector3d e0 = Eigen::Vector3d::Zero();
  // Free-DOF indices of the endpoint displacements, -1 where fixed.
  std::array<int, 3> dofs_a{{-1, -1, -1}};
  std::array<int, 3> dofs_b{{-1, -1, -1}};

  // d q: displacement of node b minus displacement of node a.
  Eigen::Vector3d relative_displacement(const Eigen::VectorXd& q) const;
  // Dense 3 x n form of d.
  Eigen::MatrixXd d_matrix(int n) const;
};

struct AssembledModel {
  Eigen::MatrixXd M;
  Eigen::MatrixXd K;
  Eigen::MatrixXd D;
  DofMap dof_map;
  int n = 0;
  std::vector<ElementKinematics> element_kinematics;
  TrussGeometry geometry;
  StiffnessParams params;

  const ElementKinematics& kinematics(int element_id) const;
};

TrussGeometry build_scale_model(const ScaleModelConfig& cfg = {});

// Node id of corner c (0..3, counter-clockwise from the origin) on level j.
inline int scale_node_id(int level, int corner) { return 4 * level + corner + 1; }

AssembledModel assemble(const TrussGeometry& geometry, const StiffnessParams& params);

// Stiffness of all rods and ties. With unconstrained set, returns the full
// 3N x 3N matrix in node order (nodes sorted by id) before elimination.
Eigen::MatrixXd stiffness_matrix(const TrussGeometry& geometry, const StiffnessParams& params,
                                 bool unconstrained = false);

std::vector<ElementKinematics> element_kinematics(const TrussGeometry& geometry,
                                                  const DofMap& dof_map,
                                                  const StiffnessParams& params);

// Rigid-body influence vector: ones on every free DOF along axis.
Eigen::VectorXd influence_vector(const DofMap& dof_map, Axis axis);

}  // namespace trussest
