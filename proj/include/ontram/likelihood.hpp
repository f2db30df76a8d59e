#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ontram/errors.hpp"
#include "ontram/logistic.hpp"
#include "ontram/model.hpp"

namespace ontram {

// Class probabilities are clamped below at this floor before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

// Rows aligned to a ModelParams feature list. `embeddings` has zero columns
// for clinical-only models. Class indices are 0-based (mRS value = index).
struct Batch {
  Eigen::MatrixXd x;
  Eigen::MatrixXd embeddings;
  Eigen::VectorXi y;

  Eigen::Index rows() const { return x.rows(); }
};

namespace detail {

inline void check_row(const ModelParams& params, const Eigen::VectorXd& x,
                      const std::optional<Eigen::VectorXd>& e) {
  if (x.size() != params.linear.beta.size())
    throw data_error("feature vector length does not match beta");
  if (params.head.has_value() != e.has_value())
    throw data_error("embedding must be present exactly when the model has a head");
  if (e && e->size() != params.head->embedding_dim())
    throw data_error("embedding dimension mismatch");
}

inline double row_shift(const ModelParams& params, const Eigen::VectorXd& x,
                        const std::optional<Eigen::VectorXd>& e) {
  check_row(params, x, e);
  double shift = params.linear.beta.dot(x);
  if (params.head) shift += params.head->forward(e->transpose()).eta[0];
  return shift;
}

inline void check_batch(const ModelParams& params, const Batch& batch) {
  if (batch.rows() == 0) throw data_error("empty batch");
  if (batch.x.cols() != params.linear.beta.size())
    throw data_error("batch feature count does not match beta");
  if (batch.y.size() != batch.rows()) throw data_error("batch outcome length mismatch");
  if (params.head) {
    if (batch.embeddings.rows() != batch.rows() ||
        batch.embeddings.cols() != params.head->embedding_dim())
      throw data_error("batch embedding shape mismatch");
  } else if (batch.embeddings.cols() != 0) {
    throw data_error("embeddings supplied to a model without a head");
  }
  for (Eigen::Index i = 0; i < batch.y.size(); ++i)
    if (batch.y[i] < 0 || batch.y[i] >= params.scale.class_count)
      throw data_error("observed class out of range");
}

// Linear + head shift for every row. Fills `fwd` when the model has a head.
inline Eigen::VectorXd batch_shift(const ModelParams& params, const Batch& batch,
                                   const DropoutMasks* masks, HeadActivations* fwd) {
  Eigen::VectorXd shift = batch.x * params.linear.beta;
  if (params.head) {
    HeadActivations local = params.head->forward(batch.embeddings, masks);
    shift += local.eta;
    if (fwd) *fwd = std::move(local);
  }
  return shift;
}

}  // namespace detail

// The transformation-function value h = theta_k - x.beta - eta(e) at cut k
// (1-based, 1..K-1). Dropout is never applied here.
inline double transformation(const ModelParams& params, int k, const Eigen::VectorXd& x,
                             const std::optional<Eigen::VectorXd>& e = std::nullopt) {
  if (k < 1 || k > params.scale.cut_count())
    throw data_error("transformation: cut index out of range");
  return params.cutpoints.theta()[k - 1] - detail::row_shift(params, x, e);
}

// p_k = F_Z(h_{k+1}) - F_Z(h_k) with F_Z(h_0) = 0 and F_Z(h_K) = 1.
inline Eigen::VectorXd class_probabilities(const ModelParams& params, const Eigen::VectorXd& x,
                                           const std::optional<Eigen::VectorXd>& e = std::nullopt) {
  const double shift = detail::row_shift(params, x, e);
  const int K = params.scale.class_count;
  Eigen::VectorXd probs(K);
  double prev = 0.0;
  for (int k = 0; k < K; ++k) {
    const double next = k == K - 1 ? 1.0 : latent_cdf(params.cutpoints.theta()[k] - shift);
    probs[k] = next - prev;
    prev = next;
  }
  return probs;
}

// P(class <= favorable_cut) = F_Z(h_{c+1}), the closed form of the partial sum.
inline double favorable_probability(const ModelParams& params, const Eigen::VectorXd& x,
                                    const std::optional<Eigen::VectorXd>& e = std::nullopt) {
  const double shift = detail::row_shift(params, x, e);
  return latent_cdf(params.cutpoints.theta()[params.scale.favorable_cut] - shift);
}

// Mean negative log-likelihood over the batch. A dropout mask makes this the
// training-mode objective; without one the value is deterministic.
inline double negative_log_likelihood(const ModelParams& params, const Batch& batch,
                                      const DropoutMasks* masks = nullptr) {
  detail::check_batch(params, batch);
  const Eigen::VectorXd shift = detail::batch_shift(params, batch, masks, nullptr);
  const auto& theta = params.cutpoints.theta();
  const int K = params.scale.class_count;
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const int y = batch.y[i];
    const double upper = y == K - 1 ? 1.0 : latent_cdf(theta[y] - shift[i]);
    const double lower = y == 0 ? 0.0 : latent_cdf(theta[y - 1] - shift[i]);
    total -= std::log(std::max(upper - lower, kProbabilityFloor));
  }
  return total / static_cast<double>(batch.rows());
}

// Exact gradient of negative_log_likelihood at `params`. When a dropout mask
// is supplied it must be the one used for the matching NLL evaluation.
inline Gradient nll_gradient(const ModelParams& params, const Batch& batch,
                             const DropoutMasks* masks = nullptr) {
  detail::check_batch(params, batch);
  HeadActivations fwd;
  const Eigen::VectorXd shift = detail::batch_shift(params, batch, masks, &fwd);
  const auto& theta = params.cutpoints.theta();
  const int K = params.scale.class_count;
  const double inv_n = 1.0 / static_cast<double>(batch.rows());

  Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(K - 1);
  Eigen::VectorXd d_shift(batch.rows());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const int y = batch.y[i];
    const bool has_upper = y < K - 1;
    const bool has_lower = y > 0;
    const double f_upper = has_upper ? latent_pdf(theta[y] - shift[i]) : 0.0;
    const double f_lower = has_lower ? latent_pdf(theta[y - 1] - shift[i]) : 0.0;
    const double upper = has_upper ? latent_cdf(theta[y] - shift[i]) : 1.0;
    const double lower = has_lower ? latent_cdf(theta[y - 1] - shift[i]) : 0.0;
    const double p = upper - lower;
    if (p <= kProbabilityFloor) {
      // Clamped rows contribute the constant log(floor); zero gradient.
      d_shift[i] = 0.0;
      continue;
    }
    const double scale = inv_n / p;
    if (has_upper) g_theta[y] -= f_upper * scale;
    if (has_lower) g_theta[y - 1] += f_lower * scale;
    d_shift[i] = (f_upper - f_lower) * scale;
  }

  Gradient grad;
  // Chain rule through theta_k = theta_{k-1} + exp(gamma_k): suffix sums.
  grad.gamma.resize(K - 1);
  double suffix = 0.0;
  for (Eigen::Index k = K - 2; k >= 0; --k) {
    suffix += g_theta[k];
    grad.gamma[k] = k == 0 ? suffix : std::exp(params.cutpoints.gamma()[k]) * suffix;
  }
  grad.beta = batch.x.transpose() * d_shift;
  if (params.head)
    grad.head = params.head->backward(batch.embeddings, fwd, d_shift, masks);
  if (!grad.gamma.allFinite() || !grad.beta.allFinite())
    throw numeric_error("nll_gradient: non-finite gradient");
  return grad;
}

}  // namespace ontram
