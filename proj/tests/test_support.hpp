#pragma once

// Shared generators for randomized tests. Scales are kept moderate so that
// probabilities stay far from the clamp floor and ReLU pre-activations stay
// away from the kink, keeping finite differences trustworthy.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ontram/likelihood.hpp"
#include "ontram/model.hpp"
#include "ontram/rng.hpp"

namespace ontram::testsupport {

inline ModelParams make_random_model(int K, int P, int d_emb, const std::vector<Eigen::Index>& hidden,
                                     rng::engine& g) {
  ModelParams params;
  params.scale.class_count = K;
  params.scale.favorable_cut = K > 2 ? 1 : 0;
  Eigen::VectorXd gamma(K - 1);
  gamma[0] = rng::uniform(g, -2.0, 0.0);
  for (int k = 1; k < K - 1; ++k) gamma[k] = rng::uniform(g, -1.5, 0.5);
  params.cutpoints = CutpointVector(gamma);
  params.linear.beta.resize(P);
  for (int j = 0; j < P; ++j) params.linear.beta[j] = rng::uniform(g, -1.0, 1.0);
  params.linear.feature_names.clear();
  for (int j = 0; j < P; ++j) params.linear.feature_names.push_back("f" + std::to_string(j));
  params.linear.treatment_index = 0;
  if (d_emb > 0) params.head = EmbeddingHead::init(d_emb, hidden, 0.3, g);
  return params;
}

inline Batch make_random_batch(const ModelParams& params, int n, rng::engine& g) {
  Batch batch;
  batch.x.resize(n, params.linear.beta.size());
  for (Eigen::Index i = 0; i < batch.x.rows(); ++i)
    for (Eigen::Index j = 0; j < batch.x.cols(); ++j) batch.x(i, j) = rng::uniform(g, -1.5, 1.5);
  const Eigen::Index d = params.head ? params.head->embedding_dim() : 0;
  batch.embeddings.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) batch.embeddings(i, j) = rng::uniform(g, -1.0, 1.0);
  batch.y.resize(n);
  for (int i = 0; i < n; ++i)
    batch.y[i] = static_cast<int>(rng::uniform_below(g, params.scale.class_count));
  return batch;
}

// Draws a proportional-odds cohort through the latent-variable route:
// z ~ standard logistic, class = #{k : theta_k - shift < z}. The treatment
// column is Bernoulli(0.5), all other covariates standard normal.
inline Batch sample_po_batch(const ModelParams& params, int n, rng::engine& g) {
  Batch batch;
  const Eigen::Index P = params.linear.beta.size();
  batch.x.resize(n, P);
  batch.embeddings.resize(n, 0);
  batch.y.resize(n);
  const auto& theta = params.cutpoints.theta();
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < P; ++j)
      batch.x(i, j) = j == params.linear.treatment_index ? (rng::bernoulli(g, 0.5) ? 1.0 : 0.0)
                                                         : rng::normal(g);
    const double shift = batch.x.row(i).dot(params.linear.beta);
    const double z = rng::logistic(g);
    int cls = 0;
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      if (theta[k] - shift < z) ++cls;
    batch.y[i] = cls;
  }
  return batch;
}

// True when every class probability in the batch sits comfortably above the
// clamp floor and every hidden pre-activation is far from the ReLU kink;
// finite differences with step ~1e-5 are then free of kink artifacts.
inline bool finite_difference_safe(const ModelParams& params, const Batch& batch,
                                   double kink_margin = 1e-3, double prob_margin = 1e-8) {
  if (params.head) {
    const HeadActivations fwd = params.head->forward(batch.embeddings);
    for (const auto& pre : fwd.pre)
      if (pre.array().abs().minCoeff() < kink_margin) return false;
  }
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const Eigen::VectorXd probs = class_probabilities(
        params, batch.x.row(i).transpose(),
        params.head ? std::optional<Eigen::VectorXd>(batch.embeddings.row(i).transpose())
                    : std::nullopt);
    if (probs[batch.y[i]] < prob_margin) return false;
  }
  return true;
}

}  // namespace ontram::testsupport
