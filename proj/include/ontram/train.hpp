#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ontram/adam.hpp"
#include "ontram/errors.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/logistic.hpp"
#include "ontram/model.hpp"
#include "ontram/rng.hpp"

namespace ontram {

enum class TrainStage { clinical, head, finetune };

inline std::string to_string(TrainStage stage) {
  switch (stage) {
    case TrainStage::clinical: return "clinical";
    case TrainStage::head: return "head";
    case TrainStage::finetune: return "finetune";
  }
  return "clinical";
}

// Per-stage optimization settings. Defaults follow the published schedule:
// clinical 10000 epochs / batch 128 / Adam defaults; head-only batch 2,
// lr 1e-4, weight decay 1e-6; fine-tune 150 epochs at lr 1e-6.
struct TrainConfig {
  TrainStage stage = TrainStage::clinical;
  int epochs = 10000;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  bool dropout = false;
  std::uint64_t seed = 0;
  TrainableGroups trainable;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (epochs < 0) throw config_error("TrainConfig: epochs must be >= 0");
    if (batch_size < 1) throw config_error("TrainConfig: batch size must be >= 1");
    if (learning_rate < 0.0) throw config_error("TrainConfig: learning rate must be >= 0");
    if (weight_decay < 0.0) throw config_error("TrainConfig: weight decay must be >= 0");
  }

  static TrainConfig clinical_defaults() {
    TrainConfig c;
    c.stage = TrainStage::clinical;
    c.trainable = {true, true, false};
    return c;
  }

  static TrainConfig head_defaults() {
    TrainConfig c;
    c.stage = TrainStage::head;
    c.epochs = 150;
    c.batch_size = 2;
    c.learning_rate = 1e-4;
    c.weight_decay = 1e-6;
    c.dropout = true;
    c.trainable = {false, false, true};
    return c;
  }

  static TrainConfig finetune_defaults() {
    TrainConfig c;
    c.stage = TrainStage::finetune;
    c.epochs = 150;
    c.batch_size = 2;
    c.learning_rate = 1e-6;
    c.dropout = true;
    c.trainable = {true, true, true};
    return c;
  }
};

// Per-epoch objective values plus the final parameters. Wall-clock stays
// in memory only; serialized artifacts must be byte-identical across runs.
struct TrainTrace {
  std::vector<double> train_nll;
  std::vector<double> val_nll;  // empty when no validation batch was given
  ModelParams final_params;
  TrainConfig config;
  double wall_seconds = 0.0;
};

namespace detail {

inline Batch take_rows(const Batch& batch, const std::vector<std::size_t>& rows, std::size_t begin,
                       std::size_t end) {
  Batch out;
  const Eigen::Index n = static_cast<Eigen::Index>(end - begin);
  out.x.resize(n, batch.x.cols());
  out.embeddings.resize(n, batch.embeddings.cols());
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[begin + static_cast<std::size_t>(i)]);
    out.x.row(i) = batch.x.row(r);
    if (batch.embeddings.cols() > 0) out.embeddings.row(i) = batch.embeddings.row(r);
    out.y[i] = batch.y[r];
  }
  return out;
}

}  // namespace detail

// Minibatch Adam over seeded shuffles. No early stopping: validation NLL is
// recorded for monitoring only and the final epoch's parameters are returned.
inline TrainTrace train(const ModelParams& init, const Batch& train_data,
                        const std::optional<Batch>& val_data, const TrainConfig& config) {
  config.validate();
  detail::check_batch(init, train_data);
  if (val_data) detail::check_batch(init, *val_data);

  const auto started = std::chrono::steady_clock::now();
  TrainTrace trace;
  trace.config = config;
  trace.final_params = init;
  if (config.epochs == 0) return trace;

  ModelParams params = init;
  Eigen::VectorXd flat = flatten(params);
  const Eigen::VectorXd mask = trainable_mask(params, config.trainable);
  // Decoupled weight decay touches trainable head parameters only.
  const Eigen::VectorXd decay_mask = mask.cwiseProduct(head_mask(params));
  AdamState state = AdamState::init(
      flat.size(), {config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon});

  rng::engine shuffle_rng = rng::make_engine(rng::derive_seed(config.seed, 1));
  rng::engine dropout_rng = rng::make_engine(rng::derive_seed(config.seed, 2));

  const std::size_t n = static_cast<std::size_t>(train_data.rows());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const std::size_t batch_size = std::min<std::size_t>(n, static_cast<std::size_t>(config.batch_size));
  const bool use_dropout = config.dropout && params.head.has_value();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng::shuffle(order, shuffle_rng);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      const Batch minibatch = detail::take_rows(train_data, order, begin, end);
      DropoutMasks masks;
      const DropoutMasks* mask_ptr = nullptr;
      if (use_dropout) {
        masks = params.head->make_dropout_masks(minibatch.rows(), dropout_rng);
        mask_ptr = &masks;
      }
      const Eigen::VectorXd grad = flatten(nll_gradient(params, minibatch, mask_ptr));
      adam_step(state, flat, grad, mask);
      if (config.weight_decay > 0.0)
        flat.array() -=
            config.learning_rate * config.weight_decay * decay_mask.array() * flat.array();
      unflatten(flat, params);
    }
    trace.train_nll.push_back(negative_log_likelihood(params, train_data));
    if (val_data) trace.val_nll.push_back(negative_log_likelihood(params, *val_data));
  }

  trace.final_params = params;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return trace;
}

// Cut-point starting values: theta_{k+1} = logit of the empirical cumulative
// outcome frequency through class k, clamped to [-6, 6] and kept strictly
// increasing. Beta starts at zero, head weights Glorot-uniform.
inline ModelParams parameter_init(const OutcomeScale& scale,
                                  const std::vector<std::string>& feature_names,
                                  Eigen::Index treatment_index, const Eigen::VectorXi& outcomes,
                                  Eigen::Index embedding_dim,
                                  const std::vector<Eigen::Index>& head_hidden,
                                  double dropout_rate, std::uint64_t seed) {
  scale.validate();
  if (outcomes.size() == 0) throw data_error("parameter_init: no outcomes");
  std::vector<long> counts(static_cast<std::size_t>(scale.class_count), 0);
  for (Eigen::Index i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] < 0 || outcomes[i] >= scale.class_count)
      throw data_error("parameter_init: outcome class out of range");
    counts[static_cast<std::size_t>(outcomes[i])] += 1;
  }
  const long observed_classes =
      std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; });
  if (observed_classes < 2)
    throw numeric_error("parameter_init: degenerate outcome distribution (single class)");

  Eigen::VectorXd theta(scale.cut_count());
  long cum = 0;
  for (int k = 0; k < scale.cut_count(); ++k) {
    cum += counts[static_cast<std::size_t>(k)];
    const double p = static_cast<double>(cum) / static_cast<double>(outcomes.size());
    double value;
    if (p <= 0.0)
      value = -6.0;
    else if (p >= 1.0)
      value = 6.0;
    else
      value = std::clamp(logit(p), -6.0, 6.0);
    if (k > 0) value = std::max(value, theta[k - 1] + 1e-3);
    theta[k] = value;
  }

  ModelParams params;
  params.scale = scale;
  params.cutpoints = CutpointVector::from_theta(theta);
  params.linear.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature_names.size()));
  params.linear.feature_names = feature_names;
  params.linear.treatment_index = treatment_index;
  if (embedding_dim > 0) {
    rng::engine g = rng::make_engine(rng::derive_seed(seed, 3));
    params.head = EmbeddingHead::init(embedding_dim, head_hidden, dropout_rate, g);
  }
  params.validate();
  return params;
}

struct StagedConfig {
  TrainConfig clinical = TrainConfig::clinical_defaults();
  TrainConfig head = TrainConfig::head_defaults();
  TrainConfig finetune = TrainConfig::finetune_defaults();
  std::vector<Eigen::Index> head_hidden = {256, 128};
  double dropout_rate = 0.3;
  std::uint64_t init_seed = 0;
};

struct StagedFitResult {
  ModelParams params;
  TrainTrace clinical;
  std::optional<TrainTrace> head;
  std::optional<TrainTrace> finetune;
};

// The staged schedule. Stage A fits cut-points and linear coefficients on
// clinical data alone. With embeddings present, stage B attaches a head to
// the stage-A parameters and trains it (gamma/beta frozen by default), and
// stage C fine-tunes everything. A stage configured with 0 epochs is skipped.
inline StagedFitResult staged_fit(const Batch& train_data, const std::optional<Batch>& val_data,
                                  const std::vector<std::string>& feature_names,
                                  Eigen::Index treatment_index, const OutcomeScale& scale,
                                  const StagedConfig& config) {
  const bool with_embeddings = train_data.embeddings.cols() > 0;

  Batch clinical_train = train_data;
  clinical_train.embeddings.resize(train_data.rows(), 0);
  std::optional<Batch> clinical_val;
  if (val_data) {
    clinical_val = *val_data;
    clinical_val->embeddings.resize(val_data->rows(), 0);
  }

  StagedFitResult result;
  const ModelParams init = parameter_init(scale, feature_names, treatment_index, clinical_train.y,
                                          0, {}, config.dropout_rate, config.init_seed);
  result.clinical = train(init, clinical_train, clinical_val, config.clinical);
  result.params = result.clinical.final_params;
  if (!with_embeddings) return result;

  // Clinical parts carry over; the head starts fresh.
  ModelParams staged = result.params;
  rng::engine g = rng::make_engine(rng::derive_seed(config.init_seed, 4));
  staged.head =
      EmbeddingHead::init(train_data.embeddings.cols(), config.head_hidden, config.dropout_rate, g);

  result.head = train(staged, train_data, val_data, config.head);
  staged = result.head->final_params;

  result.finetune = train(staged, train_data, val_data, config.finetune);
  result.params = result.finetune->final_params;
  return result;
}

}  // namespace ontram
