#include <gtest/gtest.h>

#include <cmath>

#include "ontram/effects.hpp"
#include "ontram/logistic.hpp"
#include "test_support.hpp"

using namespace ontram;

namespace {

ModelParams effect_model(const Eigen::VectorXd& theta, double beta_baseline, double beta_treat,
                         int favorable_cut) {
  ModelParams params;
  params.scale.class_count = static_cast<int>(theta.size()) + 1;
  params.scale.favorable_cut = favorable_cut;
  params.cutpoints = CutpointVector::from_theta(theta);
  params.linear.beta.resize(2);
  params.linear.beta << beta_baseline, beta_treat;
  params.linear.feature_names = {"baseline", "treatment"};
  params.linear.treatment_index = 1;
  return params;
}

DesignMatrix tiny_design(const ModelParams& params, const Eigen::MatrixXd& x,
                         const Eigen::VectorXi& y) {
  DesignMatrix design;
  design.x = x;
  design.feature_names = params.linear.feature_names;
  design.treatment_index = params.linear.treatment_index;
  design.outcome = y;
  design.embeddings.resize(x.rows(), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) design.ids.push_back("p" + std::to_string(i));
  design.scale = params.scale;
  return design;
}

// Favorable/arm vectors reconstructed from the published 2x2 counts:
// treated 70 favorable / 140 unfavorable, control 46 / 193.
void trial_counts(std::vector<int>& favorable, std::vector<int>& arms) {
  favorable.clear();
  arms.clear();
  auto add = [&](int fav, int arm, int count) {
    for (int i = 0; i < count; ++i) {
      favorable.push_back(fav);
      arms.push_back(arm);
    }
  };
  add(1, 1, 70);
  add(0, 1, 140);
  add(1, 0, 46);
  add(0, 0, 193);
}

}  // namespace

TEST(CounterfactualPredict, NullEffectGivesZeroIte) {
  Eigen::VectorXd theta(2);
  theta << -1.0, 1.0;
  const ModelParams params = effect_model(theta, 0.7, 0.0, 0);
  Eigen::VectorXd x(2);
  x << 0.4, 1.0;
  const CounterfactualPair pair = counterfactual_predict(params, x);
  EXPECT_TRUE(pair.probs_treated.isApprox(pair.probs_control));
  EXPECT_DOUBLE_EQ(pair.favorable_treated - pair.favorable_control, 0.0);
}

TEST(CounterfactualPredict, ProtectiveTreatmentShift) {
  Eigen::VectorXd theta(2);
  theta << 0.0, 1.0;
  const ModelParams params = effect_model(theta, 0.0, -1.0, 0);
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  const CounterfactualPair pair = counterfactual_predict(params, x);
  EXPECT_NEAR(pair.favorable_treated, latent_cdf(1.0), 1e-15);
  EXPECT_NEAR(pair.favorable_control, 0.5, 1e-15);
  EXPECT_NEAR(pair.favorable_treated - pair.favorable_control, 0.23105857863000487, 1e-12);
}

TEST(CounterfactualPredict, CumulativeOddsRatioIsExpMinusBetaT) {
  rng::engine g = rng::make_engine(14);
  auto params = testsupport::make_random_model(6, 4, 0, {}, g);
  params.linear.treatment_index = 2;
  Eigen::VectorXd x(4);
  for (int j = 0; j < 4; ++j) x[j] = rng::uniform(g, -1.0, 1.0);
  const double beta_t = params.linear.beta[2];
  Eigen::VectorXd x1 = x, x0 = x;
  x1[2] = 1.0;
  x0[2] = 0.0;
  for (int k = 1; k <= params.scale.cut_count(); ++k) {
    const double f1 = latent_cdf(transformation(params, k, x1));
    const double f0 = latent_cdf(transformation(params, k, x0));
    const double ratio = (f1 / (1.0 - f1)) / (f0 / (1.0 - f0));
    EXPECT_NEAR(ratio, std::exp(-beta_t), 1e-9 * std::exp(-beta_t));
  }
}

TEST(IteTable, IdenticalPatientsShareIte) {
  Eigen::VectorXd theta(2);
  theta << -0.5, 1.0;
  const ModelParams params = effect_model(theta, 0.4, -0.6, 0);
  Eigen::MatrixXd x(2, 2);
  x << 1.2, 1.0, 1.2, 0.0;  // same covariates, different observed arm
  Eigen::VectorXi y(2);
  y << 0, 2;
  const auto records = ite_table(params, tiny_design(params, x, y));
  EXPECT_DOUBLE_EQ(records[0].ite, records[1].ite);
  EXPECT_EQ(records[0].arm, 1);
  EXPECT_EQ(records[1].arm, 0);
  EXPECT_EQ(records[0].favorable, 1);
  EXPECT_EQ(records[1].favorable, 0);
  EXPECT_DOUBLE_EQ(records[0].ite, records[0].p_treated - records[0].p_control);
}

TEST(IteTable, NullTreatmentZeroIteWhileRiskVaries) {
  Eigen::VectorXd theta(2);
  theta << -0.5, 1.0;
  const ModelParams params = effect_model(theta, 0.8, 0.0, 0);
  Eigen::MatrixXd x(3, 2);
  x << -1.0, 1.0, 0.0, 0.0, 1.0, 1.0;
  Eigen::VectorXi y(3);
  y << 0, 1, 2;
  const auto records = ite_table(params, tiny_design(params, x, y));
  for (const auto& r : records) EXPECT_DOUBLE_EQ(r.ite, 0.0);
  EXPECT_NE(records[0].p_treated, records[2].p_treated);
}

TEST(IteTable, HomogeneousOddsRatioStillVariesIte) {
  // Baseline risk sweeps across the favorable cut; the odds ratio is constant
  // but the risk-difference ITE is not, peaking near favorable probability 0.5.
  Eigen::VectorXd theta(2);
  theta << 0.0, 2.0;
  const ModelParams params = effect_model(theta, 1.0, -0.8, 0);
  const int n = 21;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = -4.0 + 0.4 * i;
    x(i, 1) = 0.0;
    y[i] = 1;
  }
  const auto records = ite_table(params, tiny_design(params, x, y));
  double lo = 2.0, hi = -2.0, best_fav = -1.0;
  for (const auto& r : records) {
    EXPECT_GT(r.ite, 0.0);  // beta_t < 0 is protective
    if (r.ite < lo) lo = r.ite;
    if (r.ite > hi) {
      hi = r.ite;
      best_fav = r.p_control;
    }
  }
  EXPECT_GT(hi, lo + 0.05);
  EXPECT_GT(best_fav, 0.3);
  EXPECT_LT(best_fav, 0.7);
}

TEST(AteObserved, ReconstructsTrialEstimate) {
  std::vector<int> favorable, arms;
  trial_counts(favorable, arms);
  const double ate = ate_observed(favorable, arms);
  EXPECT_NEAR(ate, 70.0 / 210.0 - 46.0 / 239.0, 1e-15);
  EXPECT_NEAR(ate, 0.14086, 5e-6);
  EXPECT_NEAR(ate, 0.3333 - 0.1925, 5e-4);
}

TEST(AteObserved, EdgeValues) {
  EXPECT_DOUBLE_EQ(ate_observed({1, 0, 1, 0}, {1, 1, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(ate_observed({1, 1, 0, 0}, {1, 1, 0, 0}), 1.0);
  EXPECT_THROW(ate_observed({1, 0}, {1, 1}), data_error);
}

TEST(AteOddsRatio, ReconstructsTrialEstimate) {
  std::vector<int> favorable, arms;
  trial_counts(favorable, arms);
  const double ratio = ate_odds_ratio(favorable, arms);
  EXPECT_NEAR(ratio, (70.0 / 140.0) / (46.0 / 193.0), 1e-15);
  EXPECT_NEAR(ratio, 2.09, 0.01);
  EXPECT_NEAR(ratio, 2.098, 0.001);
}

TEST(AteOddsRatio, SymmetricTables) {
  EXPECT_DOUBLE_EQ(ate_odds_ratio({1, 0, 1, 0}, {1, 1, 0, 0}), 1.0);
  std::vector<int> favorable, arms;
  for (int i = 0; i < 10; ++i) {
    favorable.insert(favorable.end(), {1, 0, 1, 0});
    arms.insert(arms.end(), {1, 1, 0, 0});
  }
  EXPECT_DOUBLE_EQ(ate_odds_ratio(favorable, arms), 1.0);
}

TEST(AteOddsRatio, ZeroCellRejected) {
  EXPECT_THROW(ate_odds_ratio({1, 1, 1, 0}, {1, 1, 0, 0}), numeric_error);
}

TEST(AteCalibration, NullModelEqualsObservedAte) {
  Eigen::VectorXd theta(2);
  theta << -0.5, 1.0;
  const ModelParams params = effect_model(theta, 0.8, 0.0, 0);
  Eigen::MatrixXd x(4, 2);
  x << -1.0, 1.0, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0;
  Eigen::VectorXi y(4);
  y << 0, 1, 2, 0;
  const auto design = tiny_design(params, x, y);
  const auto records = ite_table(params, design);
  std::vector<int> favorable = {1, 0, 0, 1};
  std::vector<int> arms = {1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(ate_calibration(records, favorable, arms), ate_observed(favorable, arms));
}

TEST(OddsRatioReport, ExpArithmetic) {
  Eigen::VectorXd theta(2);
  theta << -0.5, 1.0;
  const ModelParams params = effect_model(theta, 0.0, -std::log(2.0), 0);
  const auto rows = odds_ratio_report(params);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].feature, "baseline");
  EXPECT_DOUBLE_EQ(rows[0].odds_ratio, 1.0);
  EXPECT_EQ(rows[1].feature, "treatment");
  EXPECT_DOUBLE_EQ(rows[1].odds_ratio, 0.5);
}
