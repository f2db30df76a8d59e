#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ontram/adam.hpp"
#include "ontram/oracle.hpp"
#include "ontram/train.hpp"
#include "test_support.hpp"

using namespace ontram;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ModelParams po_model(const Eigen::VectorXd& theta, const Eigen::VectorXd& beta,
                     Eigen::Index treatment_index = 0) {
  ModelParams params;
  params.scale.class_count = static_cast<int>(theta.size()) + 1;
  params.scale.favorable_cut = params.scale.class_count > 2 ? 1 : 0;
  params.cutpoints = CutpointVector::from_theta(theta);
  params.linear.beta = beta;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    params.linear.feature_names.push_back("f" + std::to_string(j));
  params.linear.treatment_index = treatment_index;
  return params;
}

}  // namespace

TEST(AdamStep, ZeroGradientLeavesParamsUnchanged) {
  AdamState state = AdamState::init(3, {});
  Eigen::VectorXd params = vec({1.0, -2.0, 0.5});
  const Eigen::VectorXd before = params;
  adam_step(state, params, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
  EXPECT_TRUE(params.isApprox(before));
}

TEST(AdamStep, BiasCorrectedFirstStep) {
  AdamState state = AdamState::init(1, {1e-3, 0.9, 0.999, 1e-8});
  Eigen::VectorXd params = vec({0.0});
  adam_step(state, params, vec({0.5}), Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(params[0], -9.99999980e-4, 1e-12);
}

TEST(AdamStep, FullFreezeBlocksAnyGradient) {
  AdamState state = AdamState::init(2, {});
  Eigen::VectorXd params = vec({1.0, 2.0});
  adam_step(state, params, vec({100.0, -3.0}), Eigen::VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(params[0], 1.0);
  EXPECT_DOUBLE_EQ(params[1], 2.0);
  EXPECT_DOUBLE_EQ(state.m.norm(), 0.0);
}

TEST(AdamStep, NonFiniteGradientFailsFast) {
  AdamState state = AdamState::init(1, {});
  Eigen::VectorXd params = vec({0.0});
  EXPECT_THROW(
      adam_step(state, params, vec({std::numeric_limits<double>::quiet_NaN()}),
                Eigen::VectorXd::Ones(1)),
      numeric_error);
}

TEST(Train, ZeroLearningRateKeepsInitialParams) {
  rng::engine g = rng::make_engine(1);
  auto params = po_model(vec({-1.0, 0.5}), vec({0.3, -0.2}));
  Batch data = testsupport::sample_po_batch(params, 50, g);
  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 16;
  config.learning_rate = 0.0;
  config.trainable = {true, true, false};
  const TrainTrace trace = train(params, data, std::nullopt, config);
  EXPECT_TRUE(flatten(trace.final_params).isApprox(flatten(params)));
}

TEST(Train, DeterministicGivenSeed) {
  rng::engine g = rng::make_engine(2);
  auto params = po_model(vec({-0.5, 0.5, 1.5}), vec({0.4, -0.4}));
  Batch data = testsupport::sample_po_batch(params, 120, g);
  Batch val = testsupport::sample_po_batch(params, 30, g);
  TrainConfig config;
  config.epochs = 20;
  config.batch_size = 32;
  config.seed = 99;
  config.trainable = {true, true, false};
  const TrainTrace a = train(params, data, val, config);
  const TrainTrace b = train(params, data, val, config);
  ASSERT_EQ(a.train_nll.size(), b.train_nll.size());
  for (std::size_t i = 0; i < a.train_nll.size(); ++i) {
    EXPECT_EQ(a.train_nll[i], b.train_nll[i]);
    EXPECT_EQ(a.val_nll[i], b.val_nll[i]);
  }
  EXPECT_EQ(flatten(a.final_params), flatten(b.final_params));
}

TEST(Train, FrozenParametersAreBitIdentical) {
  rng::engine g = rng::make_engine(3);
  auto params = po_model(vec({-1.0, 1.0}), vec({0.2, -0.6, 0.1}));
  Batch data = testsupport::sample_po_batch(params, 80, g);
  TrainConfig config;
  config.epochs = 15;
  config.batch_size = 16;
  config.trainable = {false, true, false};
  const TrainTrace trace = train(params, data, std::nullopt, config);
  EXPECT_EQ(trace.final_params.cutpoints.gamma(), params.cutpoints.gamma());
  EXPECT_FALSE(trace.final_params.linear.beta.isApprox(params.linear.beta));
}

TEST(Train, FullBatchNllMonotoneAtSmallLearningRate) {
  rng::engine g = rng::make_engine(4);
  auto truth = po_model(vec({-1.0, 0.0, 1.0}), vec({0.5, -0.5}));
  Batch data = testsupport::sample_po_batch(truth, 200, g);
  ModelParams init = parameter_init(truth.scale, truth.linear.feature_names,
                                    truth.linear.treatment_index, data.y, 0, {}, 0.3, 0);
  TrainConfig config;
  config.epochs = 200;
  config.batch_size = 200;
  config.learning_rate = 1e-3;
  config.trainable = {true, true, false};
  const TrainTrace trace = train(init, data, std::nullopt, config);
  for (std::size_t e = 1; e < trace.train_nll.size(); ++e)
    EXPECT_LE(trace.train_nll[e], trace.train_nll[e - 1] + 1e-12) << "epoch " << e;
}

TEST(Train, TwoClassReachesLogisticRegressionOptimum) {
  rng::engine g = rng::make_engine(5);
  auto truth = po_model(vec({0.3}), vec({0.8, -0.5}));
  Batch data = testsupport::sample_po_batch(truth, 200, g);
  ModelParams init = parameter_init(truth.scale, truth.linear.feature_names,
                                    truth.linear.treatment_index, data.y, 0, {}, 0.3, 0);
  TrainConfig config;
  config.epochs = 3000;
  config.batch_size = 200;
  config.trainable = {true, true, false};
  const TrainTrace trace = train(init, data, std::nullopt, config);
  const double optimum = oracle::logistic_regression_optimum_nll(data.x, data.y);
  EXPECT_GE(trace.train_nll.back(), optimum - 1e-9);
  EXPECT_NEAR(trace.train_nll.back(), optimum, 1e-3);
}

TEST(Train, RecoversCoefficientsOnSyntheticData) {
  rng::engine g = rng::make_engine(6);
  auto truth = po_model(vec({-2.0, -1.0, 0.5, 1.5}), vec({0.6, -0.4, 0.9}), 2);
  Batch data = testsupport::sample_po_batch(truth, 4000, g);
  ModelParams init = parameter_init(truth.scale, truth.linear.feature_names,
                                    truth.linear.treatment_index, data.y, 0, {}, 0.3, 0);
  TrainConfig config;
  config.epochs = 400;
  config.batch_size = 128;
  config.seed = 7;
  config.trainable = {true, true, false};
  const TrainTrace trace = train(init, data, std::nullopt, config);
  for (Eigen::Index j = 0; j < 3; ++j)
    EXPECT_NEAR(trace.final_params.linear.beta[j], truth.linear.beta[j], 0.15) << "beta " << j;
}

TEST(ParameterInit, BalancedBinaryOutcome) {
  Eigen::VectorXi y(4);
  y << 0, 1, 0, 1;
  const ModelParams params = parameter_init({2, 0}, {"t"}, 0, y, 0, {}, 0.3, 0);
  EXPECT_DOUBLE_EQ(params.cutpoints.theta()[0], 0.0);
}

TEST(ParameterInit, QuantileMatchedCutpoints) {
  Eigen::VectorXi y(8);
  y << 0, 0, 1, 1, 1, 1, 2, 2;
  const ModelParams params = parameter_init({3, 0}, {"t"}, 0, y, 0, {}, 0.3, 0);
  EXPECT_NEAR(params.cutpoints.theta()[0], -1.0986122886681098, 1e-12);
  EXPECT_NEAR(params.cutpoints.theta()[1], 1.0986122886681098, 1e-12);
}

TEST(ParameterInit, BetaZeroForAnySeed) {
  Eigen::VectorXi y(6);
  y << 0, 1, 2, 2, 1, 0;
  for (std::uint64_t seed : {0ULL, 123ULL, 999ULL}) {
    const ModelParams params = parameter_init({3, 0}, {"a", "b"}, 1, y, 4, {8, 4}, 0.3, seed);
    EXPECT_DOUBLE_EQ(params.linear.beta.norm(), 0.0);
    EXPECT_TRUE(params.head.has_value());
  }
}

TEST(ParameterInit, SingleClassOutcomeRejected) {
  Eigen::VectorXi y = Eigen::VectorXi::Zero(10);
  EXPECT_THROW(parameter_init({3, 0}, {"t"}, 0, y, 0, {}, 0.3, 0), numeric_error);
}

TEST(ParameterInit, ExtremeFrequenciesClampedToSix) {
  Eigen::VectorXi y(1000);
  y.setConstant(1);
  y[0] = 0;
  y[999] = 2;
  const ModelParams params = parameter_init({3, 0}, {"t"}, 0, y, 0, {}, 0.3, 0);
  EXPECT_GE(params.cutpoints.theta()[0], -6.0);
  EXPECT_LE(params.cutpoints.theta()[1], 6.0);
}

TEST(StagedFit, ClinicalOnlyHasNoHead) {
  rng::engine g = rng::make_engine(8);
  auto truth = po_model(vec({-1.0, 1.0}), vec({0.5, -0.5}));
  Batch data = testsupport::sample_po_batch(truth, 150, g);
  StagedConfig config;
  config.clinical.epochs = 30;
  config.clinical.batch_size = 32;
  const StagedFitResult fit = staged_fit(data, std::nullopt, truth.linear.feature_names,
                                         truth.linear.treatment_index, truth.scale, config);
  EXPECT_FALSE(fit.params.head.has_value());
  EXPECT_FALSE(fit.head.has_value());
}

TEST(StagedFit, ZeroEpochFinetuneReturnsStageBParams) {
  rng::engine g = rng::make_engine(9);
  auto truth = po_model(vec({-1.0, 1.0}), vec({0.5, -0.5}));
  Batch data = testsupport::sample_po_batch(truth, 100, g);
  data.embeddings.resize(100, 3);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 3; ++j) data.embeddings(i, j) = rng::uniform(g, -1.0, 1.0);
  StagedConfig config;
  config.clinical.epochs = 20;
  config.clinical.batch_size = 32;
  config.head.epochs = 10;
  config.head.batch_size = 16;
  config.finetune.epochs = 0;
  config.head_hidden = {6, 4};
  const StagedFitResult fit = staged_fit(data, std::nullopt, truth.linear.feature_names,
                                         truth.linear.treatment_index, truth.scale, config);
  ASSERT_TRUE(fit.head.has_value());
  ASSERT_TRUE(fit.finetune.has_value());
  EXPECT_EQ(flatten(fit.params), flatten(fit.head->final_params));
  EXPECT_TRUE(fit.finetune->train_nll.empty());
}

TEST(StagedFit, AllZeroEmbeddingsLeaveFavorableProbabilitiesNearStageA) {
  rng::engine g = rng::make_engine(10);
  auto truth = po_model(vec({-1.5, -0.5, 0.5, 1.5}), vec({0.6, -0.6}));
  Batch data = testsupport::sample_po_batch(truth, 400, g);
  Batch with_emb = data;
  with_emb.embeddings = Eigen::MatrixXd::Zero(400, 4);

  StagedConfig config;
  config.clinical.epochs = 400;
  config.clinical.batch_size = 128;
  config.head.epochs = 30;
  config.head.batch_size = 16;
  config.finetune.epochs = 10;
  config.finetune.batch_size = 16;
  config.head_hidden = {8, 4};
  const StagedFitResult fit = staged_fit(with_emb, std::nullopt, truth.linear.feature_names,
                                         truth.linear.treatment_index, truth.scale, config);

  const ModelParams& stage_a = fit.clinical.final_params;
  Eigen::VectorXd zero_emb = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd x = data.x.row(i).transpose();
    const double fav_a = favorable_probability(stage_a, x);
    const double fav_c = favorable_probability(fit.params, x, zero_emb);
    EXPECT_NEAR(fav_a, fav_c, 0.02);
  }
}
