#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/serialize.hpp"
#include "ontram/simulate.hpp"
#include "ontram/train.hpp"

namespace ontram {

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw config_error("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw config_error("config: unknown key '" + key + "' in " + where);
}

}  // namespace detail

// One structured document drives the whole pipeline; all seeds are explicit
// and the document round-trips losslessly through to_json/from_json.
struct RunConfig {
  std::string label = "model";
  std::string cohort_csv;
  std::optional<std::string> embeddings_csv;
  std::string output_dir = "out";
  FeatureSchema schema;

  int folds = 5;
  double validation_fraction = 0.15;
  int impute_k = 5;

  std::uint64_t split_seed = 1;
  std::uint64_t train_seed = 2;
  std::uint64_t bootstrap_seed = 3;
  std::uint64_t truncation_seed = 4;

  TrainConfig stage_clinical = TrainConfig::clinical_defaults();
  TrainConfig stage_head = TrainConfig::head_defaults();
  TrainConfig stage_finetune = TrainConfig::finetune_defaults();
  std::vector<Eigen::Index> head_hidden = {256, 128};
  double dropout_rate = 0.3;

  std::size_t bootstrap_replicates = 1000;
  double bootstrap_alpha = 0.05;
  int bootstrap_threads = 1;

  std::size_t or_replicates = 200;
  int or_epochs = 1000;

  std::vector<std::string> metrics = {"nll", "auc", "brier", "c_for_benefit", "ate_mean_ite"};

  std::optional<GeneratorSpec> simulate;
  std::optional<std::uint64_t> simulate_head_seed;
  std::vector<Eigen::Index> simulate_head_hidden;

  void validate() const {
    schema.validate();
    if (folds < 2) throw config_error("config: folds must be >= 2");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw config_error("config: validation_fraction must be in (0,1)");
    if (impute_k < 1) throw config_error("config: impute_k must be >= 1");
    stage_clinical.validate();
    stage_head.validate();
    stage_finetune.validate();
    if (bootstrap_replicates < 2) throw config_error("config: bootstrap replicates must be >= 2");
    if (!(bootstrap_alpha > 0.0 && bootstrap_alpha < 1.0))
      throw config_error("config: bootstrap alpha must be in (0,1)");
    if (bootstrap_threads < 1) throw config_error("config: bootstrap threads must be >= 1");
    if (or_replicates < 2) throw config_error("config: odds-ratio replicates must be >= 2");
    if (or_epochs < 1) throw config_error("config: odds-ratio epochs must be >= 1");
    const std::set<std::string> known = {"nll", "auc", "brier", "c_for_benefit", "ate_mean_ite"};
    for (const std::string& m : metrics)
      if (!known.count(m)) throw config_error("config: unknown metric '" + m + "'");
    if (simulate) simulate->validate();
  }
};

namespace detail {

inline json stage_to_json(const TrainConfig& c) {
  json out;
  out["epochs"] = c.epochs;
  out["batch_size"] = c.batch_size;
  out["learning_rate"] = c.learning_rate;
  out["weight_decay"] = c.weight_decay;
  out["dropout"] = c.dropout;
  out["train_cutpoints"] = c.trainable.cutpoints;
  out["train_linear"] = c.trainable.linear;
  out["train_head"] = c.trainable.head;
  return out;
}

inline TrainConfig stage_from_json(const json& j, TrainConfig base, const std::string& where) {
  check_keys(j,
             {"epochs", "batch_size", "learning_rate", "weight_decay", "dropout",
              "train_cutpoints", "train_linear", "train_head"},
             where);
  if (j.contains("epochs")) base.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("weight_decay")) base.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("dropout")) base.dropout = j.at("dropout").get<bool>();
  if (j.contains("train_cutpoints")) base.trainable.cutpoints = j.at("train_cutpoints").get<bool>();
  if (j.contains("train_linear")) base.trainable.linear = j.at("train_linear").get<bool>();
  if (j.contains("train_head")) base.trainable.head = j.at("train_head").get<bool>();
  return base;
}

inline json generator_to_json(const GeneratorSpec& spec) {
  json out;
  out["n"] = spec.n;
  out["outcome_classes"] = spec.scale.class_count;
  out["favorable_max"] = spec.scale.favorable_cut;
  json covs = json::array();
  for (const CovariateSpec& c : spec.covariates) {
    json cov;
    cov["name"] = c.name;
    cov["kind"] = c.binary ? "binary" : "continuous";
    if (c.binary) cov["p"] = c.bernoulli_p;
    covs.push_back(std::move(cov));
  }
  out["covariates"] = std::move(covs);
  out["theta"] = vector_to_json(CutpointVector(spec.gamma).theta());
  out["beta"] = vector_to_json(spec.beta);
  out["treatment_beta"] = spec.treatment_beta;
  out["treatment_probability"] = spec.treatment_probability;
  out["embedding_dim"] = spec.embedding_dim;
  out["seed"] = spec.seed;
  return out;
}

inline GeneratorSpec generator_from_json(const json& j) {
  check_keys(j,
             {"n", "outcome_classes", "favorable_max", "covariates", "theta", "beta",
              "treatment_beta", "treatment_probability", "embedding_dim", "seed", "head_hidden",
              "head_seed"},
             "simulate");
  GeneratorSpec spec;
  if (j.contains("n")) spec.n = j.at("n").get<int>();
  if (j.contains("outcome_classes")) spec.scale.class_count = j.at("outcome_classes").get<int>();
  if (j.contains("favorable_max")) spec.scale.favorable_cut = j.at("favorable_max").get<int>();
  spec.covariates.clear();
  for (const json& cov : j.at("covariates")) {
    check_keys(cov, {"name", "kind", "p"}, "simulate.covariates");
    CovariateSpec c;
    c.name = cov.at("name").get<std::string>();
    const std::string kind = cov.at("kind").get<std::string>();
    if (kind == "binary")
      c.binary = true;
    else if (kind != "continuous")
      throw config_error("simulate: covariate kind must be continuous or binary");
    if (cov.contains("p")) c.bernoulli_p = cov.at("p").get<double>();
    spec.covariates.push_back(std::move(c));
  }
  spec.gamma = CutpointVector::from_theta(vector_from_json(j.at("theta"))).gamma();
  spec.beta = vector_from_json(j.at("beta"));
  if (j.contains("treatment_beta")) spec.treatment_beta = j.at("treatment_beta").get<double>();
  if (j.contains("treatment_probability"))
    spec.treatment_probability = j.at("treatment_probability").get<double>();
  if (j.contains("embedding_dim")) spec.embedding_dim = j.at("embedding_dim").get<int>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("head_hidden") && spec.embedding_dim > 0) {
    const auto hidden = j.at("head_hidden").get<std::vector<Eigen::Index>>();
    rng::engine g = rng::make_engine(
        j.contains("head_seed") ? j.at("head_seed").get<std::uint64_t>() : spec.seed + 1);
    spec.true_head = EmbeddingHead::init(spec.embedding_dim, hidden, 0.3, g);
  }
  return spec;
}

}  // namespace detail

inline json config_to_json(const RunConfig& config) {
  json out;
  out["format_version"] = kFormatVersion;
  out["label"] = config.label;
  json data;
  data["cohort_csv"] = config.cohort_csv;
  data["embeddings_csv"] = config.embeddings_csv ? json(*config.embeddings_csv) : json(nullptr);
  data["output_dir"] = config.output_dir;
  out["data"] = std::move(data);
  out["schema"] = schema_to_json(config.schema);
  out["folds"] = config.folds;
  out["validation_fraction"] = config.validation_fraction;
  out["impute_k"] = config.impute_k;
  json seeds;
  seeds["split"] = config.split_seed;
  seeds["train"] = config.train_seed;
  seeds["bootstrap"] = config.bootstrap_seed;
  seeds["truncation"] = config.truncation_seed;
  out["seeds"] = std::move(seeds);
  json stages;
  stages["clinical"] = detail::stage_to_json(config.stage_clinical);
  stages["head"] = detail::stage_to_json(config.stage_head);
  stages["finetune"] = detail::stage_to_json(config.stage_finetune);
  out["stages"] = std::move(stages);
  out["head_hidden"] = config.head_hidden;
  out["dropout_rate"] = config.dropout_rate;
  json bootstrap;
  bootstrap["replicates"] = config.bootstrap_replicates;
  bootstrap["alpha"] = config.bootstrap_alpha;
  bootstrap["threads"] = config.bootstrap_threads;
  out["bootstrap"] = std::move(bootstrap);
  json orb;
  orb["replicates"] = config.or_replicates;
  orb["epochs"] = config.or_epochs;
  out["odds_ratio_bootstrap"] = std::move(orb);
  out["metrics"] = config.metrics;
  if (config.simulate) {
    json sim = detail::generator_to_json(*config.simulate);
    if (!config.simulate_head_hidden.empty()) sim["head_hidden"] = config.simulate_head_hidden;
    if (config.simulate_head_seed) sim["head_seed"] = *config.simulate_head_seed;
    out["simulate"] = std::move(sim);
  }
  return out;
}

inline RunConfig config_from_json(const json& j) {
  detail::check_keys(j,
                     {"format_version", "label", "data", "schema", "folds", "validation_fraction",
                      "impute_k", "seeds", "stages", "head_hidden", "dropout_rate", "bootstrap",
                      "odds_ratio_bootstrap", "metrics", "simulate"},
                     "config");
  if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
    throw config_error("config: unsupported format version");
  RunConfig config;
  if (j.contains("label")) config.label = j.at("label").get<std::string>();
  if (j.contains("data")) {
    const json& data = j.at("data");
    detail::check_keys(data, {"cohort_csv", "embeddings_csv", "output_dir"}, "data");
    if (data.contains("cohort_csv")) config.cohort_csv = data.at("cohort_csv").get<std::string>();
    if (data.contains("embeddings_csv") && !data.at("embeddings_csv").is_null())
      config.embeddings_csv = data.at("embeddings_csv").get<std::string>();
    if (data.contains("output_dir")) config.output_dir = data.at("output_dir").get<std::string>();
  }
  config.schema = schema_from_json(j.at("schema"));
  if (j.contains("folds")) config.folds = j.at("folds").get<int>();
  if (j.contains("validation_fraction"))
    config.validation_fraction = j.at("validation_fraction").get<double>();
  if (j.contains("impute_k")) config.impute_k = j.at("impute_k").get<int>();
  if (j.contains("seeds")) {
    const json& seeds = j.at("seeds");
    detail::check_keys(seeds, {"split", "train", "bootstrap", "truncation"}, "seeds");
    if (seeds.contains("split")) config.split_seed = seeds.at("split").get<std::uint64_t>();
    if (seeds.contains("train")) config.train_seed = seeds.at("train").get<std::uint64_t>();
    if (seeds.contains("bootstrap"))
      config.bootstrap_seed = seeds.at("bootstrap").get<std::uint64_t>();
    if (seeds.contains("truncation"))
      config.truncation_seed = seeds.at("truncation").get<std::uint64_t>();
  }
  if (j.contains("stages")) {
    const json& stages = j.at("stages");
    detail::check_keys(stages, {"clinical", "head", "finetune"}, "stages");
    if (stages.contains("clinical"))
      config.stage_clinical =
          detail::stage_from_json(stages.at("clinical"), TrainConfig::clinical_defaults(), "stages.clinical");
    if (stages.contains("head"))
      config.stage_head =
          detail::stage_from_json(stages.at("head"), TrainConfig::head_defaults(), "stages.head");
    if (stages.contains("finetune"))
      config.stage_finetune = detail::stage_from_json(stages.at("finetune"),
                                                      TrainConfig::finetune_defaults(), "stages.finetune");
  }
  if (j.contains("head_hidden"))
    config.head_hidden = j.at("head_hidden").get<std::vector<Eigen::Index>>();
  if (j.contains("dropout_rate")) config.dropout_rate = j.at("dropout_rate").get<double>();
  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    detail::check_keys(b, {"replicates", "alpha", "threads"}, "bootstrap");
    if (b.contains("replicates"))
      config.bootstrap_replicates = b.at("replicates").get<std::size_t>();
    if (b.contains("alpha")) config.bootstrap_alpha = b.at("alpha").get<double>();
    if (b.contains("threads")) config.bootstrap_threads = b.at("threads").get<int>();
  }
  if (j.contains("odds_ratio_bootstrap")) {
    const json& orb = j.at("odds_ratio_bootstrap");
    detail::check_keys(orb, {"replicates", "epochs"}, "odds_ratio_bootstrap");
    if (orb.contains("replicates")) config.or_replicates = orb.at("replicates").get<std::size_t>();
    if (orb.contains("epochs")) config.or_epochs = orb.at("epochs").get<int>();
  }
  if (j.contains("metrics")) config.metrics = j.at("metrics").get<std::vector<std::string>>();
  if (j.contains("simulate")) {
    config.simulate = detail::generator_from_json(j.at("simulate"));
    if (j.at("simulate").contains("head_hidden"))
      config.simulate_head_hidden =
          j.at("simulate").at("head_hidden").get<std::vector<Eigen::Index>>();
    if (j.at("simulate").contains("head_seed"))
      config.simulate_head_seed = j.at("simulate").at("head_seed").get<std::uint64_t>();
  }
  config.validate();
  return config;
}

}  // namespace ontram
