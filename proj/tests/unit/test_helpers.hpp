#pragma once

#include "trussest/structure.hpp"

namespace trussest::testing {

// Line of springs along x, node 1 grounded, y and z blocked everywhere.
inline TrussGeometry x_chain(int springs, double spacing = 1.0, double node_mass = 1.0,
                             double k = 1.0) {
  TrussGeometry g;
  for (int i = 0; i <= springs; ++i) g.nodes.push_back({i + 1, Eigen::Vector3d(spacing * i, 0, 0)});
  for (int i = 1; i <= springs; ++i) {
    g.elements.push_back({i, i, i + 1, ElementClass::Bracing, 0.0, k});
    g.plates.push_back({{i + 1}, node_mass, false});
  }
  g.constrained_dofs.push_back({1, Axis::X});
  for (int i = 0; i <= springs; ++i) {
    g.constrained_dofs.push_back({i + 1, Axis::Y});
    g.constrained_dofs.push_back({i + 1, Axis::Z});
  }
  return g;
}

inline StiffnessParams undamped() {
  StiffnessParams p;
  p.alpha0 = 0.0;
  p.alpha1 = 0.0;
  return p;
}

}  // namespace trussest::testing
