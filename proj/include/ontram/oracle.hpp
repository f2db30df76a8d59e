#pragma once

// Independent brute-force reference implementations used by the test and
// acceptance suites. These share domain types with the library but none of
// its computational paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ontram/effects.hpp"
#include "ontram/errors.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/model.hpp"
#include "ontram/rng.hpp"

namespace ontram::oracle {

// Central finite differences of the (clamped) NLL over every flattened
// coordinate. Dropout must be off.
inline Eigen::VectorXd finite_difference_gradient(const ModelParams& params, const Batch& batch,
                                                  double step = 1e-5) {
  ModelParams work = params;
  const Eigen::VectorXd base = flatten(work);
  Eigen::VectorXd grad(base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd bumped = base;
    bumped[i] = base[i] + step;
    unflatten(bumped, work);
    const double plus = negative_log_likelihood(work, batch);
    bumped[i] = base[i] - step;
    unflatten(bumped, work);
    const double minus = negative_log_likelihood(work, batch);
    grad[i] = (plus - minus) / (2.0 * step);
  }
  unflatten(base, work);
  return grad;
}

// Literal double loop over all (positive, negative) pairs, 0.5 credit on ties.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw data_error("oracle::auc: length mismatch");
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  if (pairs == 0) throw undefined_statistic("oracle::auc: needs both classes");
  return wins / static_cast<double>(pairs);
}

// Per-row recomputation of the mean ordinal NLL from first principles.
inline double ordinal_nll(const ModelParams& params, const Batch& batch) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    double shift = 0.0;
    for (Eigen::Index j = 0; j < batch.x.cols(); ++j)
      shift += batch.x(i, j) * params.linear.beta[j];
    if (params.head) {
      // One-row forward through the head, written out longhand.
      Eigen::VectorXd a = batch.embeddings.row(i).transpose();
      for (std::size_t l = 0; l + 1 < params.head->weights.size(); ++l) {
        Eigen::VectorXd pre = params.head->weights[l] * a + params.head->biases[l];
        a = pre.cwiseMax(0.0);
      }
      shift += (params.head->weights.back() * a)(0) + params.head->biases.back()[0];
    }
    const int y = batch.y[i];
    const int K = params.scale.class_count;
    auto cdf = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double hi = y == K - 1 ? 1.0 : cdf(params.cutpoints.theta()[y] - shift);
    const double lo = y == 0 ? 0.0 : cdf(params.cutpoints.theta()[y - 1] - shift);
    total -= std::log(std::max(hi - lo, kProbabilityFloor));
  }
  return total / static_cast<double>(batch.rows());
}

// Exhaustive pair-of-pairs C-for-benefit with its own matching code. The
// matching contract (sort each arm by (ite, id); seeded shuffle-truncate the
// larger arm; pair rank to rank) is shared with metrics.hpp; credits are
// accumulated in half-units so the tally is exact.
inline double c_for_benefit(const std::vector<IteRecord>& records,
                            std::uint64_t truncation_seed) {
  std::vector<IteRecord> treated, untreated;
  for (const IteRecord& r : records) (r.arm == 1 ? treated : untreated).push_back(r);
  if (treated.size() < 2 || untreated.size() < 2)
    throw undefined_statistic("oracle::c_for_benefit: need 2 patients per arm");
  auto order = [](const IteRecord& a, const IteRecord& b) {
    return a.ite != b.ite ? a.ite < b.ite : a.id < b.id;
  };
  std::sort(treated.begin(), treated.end(), order);
  std::sort(untreated.begin(), untreated.end(), order);
  const std::size_t m = std::min(treated.size(), untreated.size());
  auto shrink = [&](std::vector<IteRecord>& arm) {
    if (arm.size() == m) return;
    std::vector<std::size_t> keep(arm.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    rng::engine g = rng::make_engine(rng::derive_seed(truncation_seed, 17));
    rng::shuffle(keep, g);
    keep.resize(m);
    std::sort(keep.begin(), keep.end());
    std::vector<IteRecord> kept;
    for (std::size_t i : keep) kept.push_back(arm[i]);
    arm = std::move(kept);
  };
  shrink(treated);
  shrink(untreated);

  std::vector<double> predicted(m);
  std::vector<int> observed(m);
  for (std::size_t i = 0; i < m; ++i) {
    predicted[i] = 0.5 * (treated[i].ite + untreated[i].ite);
    observed[i] = treated[i].favorable - untreated[i].favorable;
  }
  long long half_credits = 0;
  long long informative = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j || observed[i] <= observed[j]) continue;  // i strictly larger observed benefit
      ++informative;
      if (predicted[i] > predicted[j])
        half_credits += 2;
      else if (predicted[i] == predicted[j])
        half_credits += 1;
    }
  if (informative == 0)
    throw undefined_statistic("oracle::c_for_benefit: no informative comparisons");
  return static_cast<double>(half_credits) / static_cast<double>(2 * informative);
}

// Binary logistic regression N(y=1) = sigmoid(a + x.b) fitted by Newton
// iterations (iterated reweighted least squares). Returns the minimal mean
// NLL. Used as the convex-optimum reference for K = 2 models.
inline double logistic_regression_optimum_nll(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXi& y, int max_iter = 100,
                                              double tol = 1e-12) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.cols());
  Eigen::VectorXd yd = y.cast<double>();
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = design * coef;
    const Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::VectorXd grad = design.transpose() * (mu - yd);
    const Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    coef -= hess.ldlt().solve(grad);
    const Eigen::VectorXd eta2 = design * coef;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-eta2[i]));
      nll -= yd[i] * std::log(std::max(p, kProbabilityFloor)) +
             (1.0 - yd[i]) * std::log(std::max(1.0 - p, kProbabilityFloor));
    }
    nll /= static_cast<double>(n);
    if (std::abs(prev - nll) < tol) return nll;
    prev = nll;
  }
  return prev;
}

}  // namespace ontram::oracle
