#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "trussest/tuning.hpp"

using namespace trussest;

namespace {

class Twin : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { problem_ = new TuningProblem(make_twin_problem(default_twin())); }
  static void TearDownTestSuite() {
    delete problem_;
    problem_ = nullptr;
  }
  static const TuningProblem& problem() { return *problem_; }

 private:
  static TuningProblem* problem_;
};

TuningProblem* Twin::problem_ = nullptr;

ParamVector multipliers(double kb, double kca, double kcp) {
  ParamVector p = ParamVector::Ones();
  p[2] = kb;
  p[3] = kca;
  p[4] = kcp;
  return p;
}

}  // namespace

TEST(Params, NamesAndLabels) {
  EXPECT_STREQ(tuning_param_names()[0], "alpha0");
  EXPECT_STREQ(tuning_param_table_labels()[0], "alpha1");
  EXPECT_STREQ(tuning_param_table_labels()[1], "alpha2");
  EXPECT_STREQ(tuning_param_names()[8], "r_t");
}

TEST(Params, TableBounds) {
  const ParamVector lo = TuningProblem::table_lower(), hi = TuningProblem::table_upper();
  for (int i = 0; i < kTuningParams; ++i) {
    EXPECT_LT(lo[i], 1.0);
    EXPECT_GT(hi[i], 1.0);
  }
  EXPECT_EQ(lo[2], 0.5);
  EXPECT_EQ(hi[4], 2.0);
}

TEST_F(Twin, OnesReproduceInitialModel) {
  const TunedSystem t = apply_params(ParamVector::Ones(), problem());
  const AssembledModel ref = assemble(problem().geometry, problem().base);
  EXPECT_LT((t.filter.model.K - ref.K).cwiseAbs().maxCoeff(), 1e-12 * ref.K.cwiseAbs().maxCoeff());
  EXPECT_LT((t.filter.model.M - ref.M).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((t.filter.model.D - ref.D).cwiseAbs().maxCoeff(), 1e-12 * ref.D.cwiseAbs().maxCoeff());
}

TEST_F(Twin, MultiplierScalesBracing) {
  TuningProblem p = problem();
  p.p0[2] = 18200.0;
  const TunedSystem t = apply_params(multipliers(1.79, 1.0, 1.0), p);
  EXPECT_NEAR(t.params.k_b, 32578.0, 1e-9);
}

TEST_F(Twin, JointStiffnessScalingScalesFrequencies) {
  const double lambda = 1.44;
  TuningProblem p = problem();
  const ModalBasis b0 = apply_params(ParamVector::Ones(), p).filter.basis;
  // The membrane ties are springs too, so they scale with the others.
  p.base.k_plate *= lambda;
  const ParamVector m = multipliers(lambda, lambda, lambda);
  const ModalBasis b1 = apply_params(m, p).filter.basis;
  for (int i = 0; i < b0.n_p(); ++i) EXPECT_NEAR(b1.omega[i] / b0.omega[i], std::sqrt(lambda), 1e-9);
}

TEST(ReferenceCost, ZeroAndHomogeneous) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1e-3);
  Eigen::MatrixXd Y(400, 3), Z(400, 3);
  for (Eigen::Index i = 0; i < Y.size(); ++i) {
    Y(i) = nd(rng);
    Z(i) = nd(rng);
  }
  EXPECT_EQ(reference_cost(Y, Y, 0.1, 100.0), 0.0);
  const double c1 = reference_cost(Y, Y + Z, 0.1, 100.0);
  const double c3 = reference_cost(Y, Y + 3.0 * Z, 0.1, 100.0);
  EXPECT_GT(c1, 0.0);
  EXPECT_NEAR(c3 / c1, 3.0, 1e-12);
  // A constant offset is removed by the high-pass.
  EXPECT_LT(reference_cost(Y, Y.array() + 0.5, 0.1, 100.0), 1e-2);
}

TEST_F(Twin, TrueParametersMinimizeCostOverRandomDraws) {
  const TwinSetup twin = default_twin();
  const ParamVector p_true =
      multipliers(twin.stiffness_multipliers[0], twin.stiffness_multipliers[1], twin.stiffness_multipliers[2]);
  const double c_true = cost(p_true, problem());
  ASSERT_TRUE(std::isfinite(c_true));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(std::log(0.5), std::log(2.0));
  int worse = 0;
  for (int i = 0; i < 50; ++i) {
    const ParamVector p = multipliers(std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)));
    worse += cost(p, problem()) >= c_true;
  }
  EXPECT_EQ(worse, 50);
}

TEST_F(Twin, ProblemValidation) {
  EXPECT_NO_THROW(problem().validate());
  EXPECT_EQ(problem().reference_rows().size(), 6u);
  EXPECT_EQ(problem().fused_rows().size() + 6, static_cast<size_t>(problem().camera.size()));
  TuningProblem bad = problem();
  bad.lower[2] = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = problem();
  bad.references.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(NelderMead, QuadraticInBox) {
  TuneOptions o;
  o.max_evaluations = 400;
  o.starts = 2;
  const auto f = [](const Eigen::VectorXd& x) {
    return std::pow(std::log(x[0] / 1.3), 2) + 2.0 * std::pow(std::log(x[1] / 0.7), 2);
  };
  const MinimizeResult r = nelder_mead_box(f, {Eigen::Vector2d(1.0, 1.0)}, Eigen::Vector2d(0.5, 0.5),
                                           Eigen::Vector2d(2.0, 2.0), o);
  EXPECT_NEAR(r.x[0], 1.3, 1e-3);
  EXPECT_NEAR(r.x[1], 0.7, 1e-3);
  EXPECT_LE(r.evaluations, 400);
  for (size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST(NelderMead, ProjectsOntoBounds) {
  TuneOptions o;
  o.max_evaluations = 300;
  const auto f = [](const Eigen::VectorXd& x) { return (x - Eigen::Vector2d(5.0, 0.1)).squaredNorm(); };
  const MinimizeResult r = nelder_mead_box(f, {Eigen::Vector2d(1.0, 1.0)}, Eigen::Vector2d(0.5, 0.5),
                                           Eigen::Vector2d(2.0, 2.0), o);
  EXPECT_NEAR(r.x[0], 2.0, 1e-6);
  EXPECT_NEAR(r.x[1], 0.5, 1e-6);
}
