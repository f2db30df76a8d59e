#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/model.hpp"
#include "ontram/rng.hpp"
#include "ontram/schema.hpp"

namespace ontram {

struct CovariateSpec {
  std::string name;
  bool binary = false;
  double bernoulli_p = 0.5;  // binary covariates only
};

// A randomized trial drawn from a known ONTRAM: covariates standard normal
// or Bernoulli, arms Bernoulli(treatment_probability), outcomes through the
// latent logistic route.
struct GeneratorSpec {
  int n = 449;
  OutcomeScale scale{7, 2};
  std::vector<CovariateSpec> covariates;
  Eigen::VectorXd gamma;  // raw cut-point parameters, size K-1
  Eigen::VectorXd beta;   // aligned to `covariates`
  double treatment_beta = 0.0;
  double treatment_probability = 0.5;
  int embedding_dim = 0;
  std::optional<EmbeddingHead> true_head;  // requires embedding_dim > 0
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw config_error("GeneratorSpec: n must be >= 1");
    scale.validate();
    if (gamma.size() != scale.cut_count())
      throw config_error("GeneratorSpec: gamma size must be K-1");
    if (beta.size() != static_cast<Eigen::Index>(covariates.size()))
      throw config_error("GeneratorSpec: beta size must match covariates");
    if (!(treatment_probability > 0.0 && treatment_probability < 1.0))
      throw config_error("GeneratorSpec: treatment probability must be in (0,1)");
    if (embedding_dim < 0) throw config_error("GeneratorSpec: negative embedding_dim");
    if (true_head && embedding_dim < 1)
      throw config_error("GeneratorSpec: head requires embedding_dim >= 1");
    if (true_head && true_head->embedding_dim() != embedding_dim)
      throw config_error("GeneratorSpec: head embedding dimension mismatch");
    CutpointVector check(gamma);  // throws on non-finite theta
  }

  // The generating model, feature order: covariates then treatment.
  ModelParams true_params() const {
    ModelParams params;
    params.scale = scale;
    params.cutpoints = CutpointVector(gamma);
    params.linear.beta.resize(beta.size() + 1);
    params.linear.beta.head(beta.size()) = beta;
    params.linear.beta[beta.size()] = treatment_beta;
    for (const CovariateSpec& c : covariates) params.linear.feature_names.push_back(c.name);
    params.linear.feature_names.push_back("treatment");
    params.linear.treatment_index = beta.size();
    params.head = true_head;
    params.validate();
    return params;
  }

  // Desk-scale default mirroring the trial cohort shape: n = 449, K = 7,
  // mixed continuous/binary covariates, a protective treatment effect.
  static GeneratorSpec cohort_shaped(std::uint64_t seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.covariates = {
        {"age", false, 0.0},          {"nihss", false, 0.0},
        {"glucose", false, 0.0},      {"sys_bp", false, 0.0},
        {"onset_to_door", false, 0.0}, {"pre_mrs_0_2", true, 0.2},
        {"ivt", true, 0.9},           {"diabetes", true, 0.13},
        {"hypertension", true, 0.45}, {"smoker", true, 0.28},
        {"prev_stroke", true, 0.11},
    };
    spec.beta.resize(11);
    spec.beta << 0.45, 0.55, 0.2, 0.15, 0.05, 0.6, -0.15, 0.25, 0.2, -0.2, 0.3;
    spec.treatment_beta = -0.74;  // treatment odds ratio ~ 0.48 for worse outcomes
    Eigen::VectorXd theta(6);
    theta << -1.9, -1.0, -0.3, 0.6, 1.7, 2.9;
    spec.gamma = CutpointVector::from_theta(theta).gamma();
    return spec;
  }
};

struct GeneratedRct {
  CohortTable cohort;
  std::vector<double> true_ite;  // per patient, from the generating model
  ModelParams truth;
};

// Sampling is per-patient seeded (derive_seed(seed, patient)), so the table
// is independent of generation order or parallelism.
inline GeneratedRct generate_rct(const GeneratorSpec& spec) {
  spec.validate();
  GeneratedRct out;
  out.truth = spec.true_params();

  FeatureSchema schema;
  schema.id_column = "id";
  schema.outcome_scale = spec.scale;
  for (const CovariateSpec& c : spec.covariates)
    schema.columns.push_back(
        {c.name, c.binary ? ColumnKind::binary : ColumnKind::continuous, ColumnRole::covariate, {}});
  schema.columns.push_back({"treatment", ColumnKind::binary, ColumnRole::treatment, {}});
  schema.columns.push_back({"outcome", ColumnKind::continuous, ColumnRole::outcome, {}});
  for (int j = 0; j < spec.embedding_dim; ++j)
    schema.columns.push_back(
        {"emb_" + std::to_string(j), ColumnKind::continuous, ColumnRole::embedding, {}});

  out.cohort.schema = schema;
  out.cohort.columns.assign(schema.columns.size(), {});
  const auto& theta = out.truth.cutpoints.theta();
  const Eigen::Index P = spec.beta.size();

  for (int i = 0; i < spec.n; ++i) {
    rng::engine g = rng::make_engine(rng::derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    out.cohort.ids.push_back("p" + std::to_string(i + 1));

    double shift = 0.0;
    for (Eigen::Index j = 0; j < P; ++j) {
      const CovariateSpec& c = spec.covariates[static_cast<std::size_t>(j)];
      const double v = c.binary ? (rng::bernoulli(g, c.bernoulli_p) ? 1.0 : 0.0) : rng::normal(g);
      out.cohort.columns[static_cast<std::size_t>(j)].push_back(v);
      shift += spec.beta[j] * v;
    }
    const double arm = rng::bernoulli(g, spec.treatment_probability) ? 1.0 : 0.0;
    out.cohort.columns[static_cast<std::size_t>(P)].push_back(arm);

    Eigen::VectorXd embedding(spec.embedding_dim);
    for (int j = 0; j < spec.embedding_dim; ++j) embedding[j] = rng::normal(g);
    double eta = 0.0;
    if (spec.true_head) eta = spec.true_head->forward(embedding.transpose()).eta[0];

    const double z = rng::logistic(g);
    const double total_shift = shift + spec.treatment_beta * arm + eta;
    int cls = 0;
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      if (theta[k] - total_shift < z) ++cls;
    out.cohort.columns[static_cast<std::size_t>(P) + 1].push_back(static_cast<double>(cls));
    for (int j = 0; j < spec.embedding_dim; ++j)
      out.cohort.columns[static_cast<std::size_t>(P) + 2 + static_cast<std::size_t>(j)].push_back(
          embedding[j]);

    // Ground-truth ITE by counterfactual toggling of the generating model.
    const double cut = theta[spec.scale.favorable_cut];
    const double base = shift + eta;
    out.true_ite.push_back(latent_cdf(cut - base - spec.treatment_beta) - latent_cdf(cut - base));
  }
  out.cohort.validate();
  return out;
}

}  // namespace ontram
