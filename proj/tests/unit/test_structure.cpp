#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "trussest/structure.hpp"

using namespace trussest;
using trussest::testing::undamped;
using trussest::testing::x_chain;

TEST(ScaleModel, DefaultCounts) {
  const TrussGeometry g = build_scale_model();
  EXPECT_EQ(g.nodes.size(), 24u);
  EXPECT_EQ(g.elements.size(), 60u);
  const AssembledModel m = assemble(g, StiffnessParams{});
  // 20 free nodes with three translations each.
  EXPECT_EQ(m.n, 60);
}

TEST(ScaleModel, OneModule) {
  ScaleModelConfig c;
  c.modules = 1;
  const TrussGeometry g = build_scale_model(c);
  EXPECT_EQ(g.nodes.size(), 8u);
  EXPECT_EQ(g.elements.size(), 12u);
  EXPECT_EQ(assemble(g, StiffnessParams{}).n, 12);
}

TEST(ScaleModel, MassBookkeeping) {
  ScaleModelConfig c;
  c.modules = 2;
  c.plate_mass = 1.0;
  c.top_plate_mass = 1.0;
  const TrussGeometry g = build_scale_model(c);
  const AssembledModel m = assemble(g, StiffnessParams{});
  // Every free node carries its share on all three axes; grounded nodes drop
  // the halves of the first-storey elements that land on them.
  double free_mass = 2 * 1.0;
  for (const auto& e : g.elements) {
    if (m.dof_map.contains(e.node_a) && m.dof_map.index(e.node_a, Axis::X) >= 0) free_mass += 0.5 * e.mass;
    if (m.dof_map.contains(e.node_b) && m.dof_map.index(e.node_b, Axis::X) >= 0) free_mass += 0.5 * e.mass;
  }
  EXPECT_NEAR(m.M.trace(), 3.0 * free_mass, 1e-12);
  EXPECT_TRUE(m.M.isDiagonal());
}

TEST(ScaleModel, ActiveColumnLayout) {
  const TrussGeometry g = build_scale_model();
  int active = 0;
  for (const auto& e : g.elements) active += e.cls == ElementClass::ActiveColumn;
  EXPECT_EQ(active, 4);
  ScaleModelConfig c;
  c.active_columns = {2};
  EXPECT_THROW(build_scale_model(ScaleModelConfig{.active_columns = {6}}), std::invalid_argument);
  EXPECT_EQ(build_scale_model(c).element(2).cls, ElementClass::ActiveColumn);
}

TEST(Assembly, SingleRod) {
  TrussGeometry g = x_chain(1, 0.4, 1.0, 18200.0);
  g.elements[0].stiffness.reset();
  const AssembledModel m = assemble(g, StiffnessParams{});
  ASSERT_EQ(m.n, 1);
  EXPECT_DOUBLE_EQ(m.K(0, 0), 18200.0);
}

TEST(Assembly, TwoSpringChain) {
  const AssembledModel m = assemble(x_chain(2), undamped());
  Eigen::Matrix2d K;
  K << 2, -1, -1, 1;
  EXPECT_LT((m.K - K).norm(), 1e-14);
  EXPECT_LT((m.M - Eigen::Matrix2d::Identity()).norm(), 1e-14);
  EXPECT_EQ(m.D.norm(), 0.0);
}

TEST(Assembly, RayleighDamping) {
  const AssembledModel m = assemble(build_scale_model(), StiffnessParams{});
  const StiffnessParams p;
  EXPECT_LT((m.D - p.alpha0 * m.M - p.alpha1 * m.K).norm(), 1e-9);
}

TEST(Assembly, RigidTranslationNullspace) {
  const TrussGeometry g = build_scale_model();
  const Eigen::MatrixXd K = stiffness_matrix(g, StiffnessParams{}, true);
  for (int a = 0; a < 3; ++a) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(K.rows());
    for (Eigen::Index i = a; i < u.size(); i += 3) u[i] = 1.0;
    EXPECT_LT((K * u).cwiseAbs().maxCoeff(), 1e-9 * K.cwiseAbs().maxCoeff());
  }
}

TEST(Assembly, AxialStretchForce) {
  TrussGeometry g;
  g.nodes = {{1, {0, 0, 0}}, {2, {0.3, 0.2, 0.1}}};
  g.elements = {{1, 1, 2, ElementClass::Bracing, 0.0, std::nullopt}};
  g.constrained_dofs = {{1, Axis::X}, {1, Axis::Y}, {1, Axis::Z}};
  const Eigen::MatrixXd K = stiffness_matrix(g, StiffnessParams{}, true);
  const Eigen::Vector3d e = (g.nodes[1].position - g.nodes[0].position).normalized();
  const double delta = 1e-4;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
  u.segment<3>(3) = delta * e;
  const Eigen::VectorXd f = K * u;
  EXPECT_NEAR(f.segment<3>(3).dot(e), 18200.0 * delta, 1e-9);
}

TEST(Assembly, MechanismIsReported) {
  TrussGeometry g;
  g.nodes = {{1, {0, 0, 0}}, {2, {1, 0, 0}}};
  g.elements = {{1, 1, 2, ElementClass::Bracing, 1.0, std::nullopt}};
  g.constrained_dofs = {{1, Axis::X}, {1, Axis::Y}, {1, Axis::Z}};
  EXPECT_THROW(assemble(g, StiffnessParams{}), std::runtime_error);
}

TEST(Assembly, InvalidGeometry) {
  TrussGeometry g = x_chain(1);
  g.elements.push_back({2, 1, 7, ElementClass::Bracing, 0.0, std::nullopt});
  EXPECT_THROW(assemble(g, StiffnessParams{}), std::invalid_argument);
  TrussGeometry h = x_chain(1);
  h.constrained_dofs.clear();
  EXPECT_THROW(h.validate(), std::invalid_argument);
  StiffnessParams p;
  p.k_b = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Kinematics, SingleRod) {
  TrussGeometry g;
  g.nodes = {{1, {0, 0, 0}}, {2, {0.4, 0, 0}}};
  g.elements = {{1, 1, 2, ElementClass::Bracing, 1.0, std::nullopt}};
  g.constrained_dofs = {{1, Axis::X}, {1, Axis::Y}, {1, Axis::Z}};
  const DofMap map(g);
  const auto kin = element_kinematics(g, map, StiffnessParams{});
  ASSERT_EQ(kin.size(), 1u);
  EXPECT_LT((kin[0].e0 - Eigen::Vector3d(0.4, 0, 0)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(kin[0].L0, 0.4);
  const Eigen::Vector3d q(1e-3, -2e-3, 3e-3);
  EXPECT_LT((kin[0].relative_displacement(q) - q).norm(), 1e-15);
}

TEST(Kinematics, RestLengthsAndRandomDisplacement) {
  ScaleModelConfig c;
  c.modules = 2;
  const AssembledModel m = assemble(build_scale_model(c), StiffnessParams{});
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.n);
  for (const auto& k : m.element_kinematics)
    EXPECT_NEAR((k.relative_displacement(zero) + k.e0).norm(), k.L0, 1e-15);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.01);
  Eigen::VectorXd q(m.n);
  for (int i = 0; i < m.n; ++i) q[i] = nd(rng);
  for (const auto& e : m.geometry.elements) {
    auto pos = [&](int node) {
      Eigen::Vector3d p = m.geometry.node(node).position;
      for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
        const int i = m.dof_map.index(node, a);
        if (i >= 0) p[static_cast<int>(a)] += q[i];
      }
      return p;
    };
    const double direct = (pos(e.node_b) - pos(e.node_a)).norm();
    const auto& k = m.kinematics(e.id);
    const double via = (k.e0 + k.d_matrix(m.n) * q).norm();
    EXPECT_NEAR(via / direct, 1.0, 1e-12);
  }
}

TEST(Influence, OnesAlongAxis) {
  const AssembledModel m = assemble(build_scale_model(), StiffnessParams{});
  const Eigen::VectorXd iota = influence_vector(m.dof_map, Axis::Y);
  EXPECT_DOUBLE_EQ(iota.sum(), 20.0);
  EXPECT_DOUBLE_EQ(iota[m.dof_map.index(5, Axis::Y)], 1.0);
  EXPECT_DOUBLE_EQ(iota[m.dof_map.index(5, Axis::X)], 0.0);
}
