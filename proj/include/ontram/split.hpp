#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/rng.hpp"
#include "ontram/schema.hpp"

namespace ontram {

// Stratified test-fold assignment plus per-fold train/validation flags.
struct FoldPlan {
  int folds = 5;
  std::uint64_t seed = 0;
  std::string stratification;         // "ordinal" or "binary"
  std::vector<int> fold;              // per row, 1..folds
  std::vector<std::vector<char>> validation;  // [fold-1][row], 1 = validation; rows in the
                                              // fold itself carry 0

  std::vector<std::size_t> test_rows(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold.size(); ++r)
      if (fold[r] == f) out.push_back(r);
    return out;
  }
  std::vector<std::size_t> train_rows(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold.size(); ++r)
      if (fold[r] != f && !validation[static_cast<std::size_t>(f - 1)][r]) out.push_back(r);
    return out;
  }
  std::vector<std::size_t> validation_rows(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold.size(); ++r)
      if (fold[r] != f && validation[static_cast<std::size_t>(f - 1)][r]) out.push_back(r);
    return out;
  }
};

namespace detail {

// Stratum labels: ordinal outcome class when every class has at least
// `folds` members, otherwise the favorable/unfavorable dichotomy.
inline std::pair<std::vector<int>, std::string> stratum_labels(const CohortTable& table,
                                                               int folds) {
  const Eigen::VectorXi outcomes = table.outcomes();
  std::map<int, int> counts;
  for (Eigen::Index i = 0; i < outcomes.size(); ++i) counts[outcomes[i]] += 1;
  bool ordinal_ok = true;
  for (int k = 0; k < table.schema.outcome_scale.class_count; ++k) {
    const auto it = counts.find(k);
    if (it == counts.end() || it->second < folds) ordinal_ok = false;
  }
  std::vector<int> labels(table.rows());
  if (ordinal_ok) {
    for (std::size_t r = 0; r < table.rows(); ++r) labels[r] = outcomes[static_cast<Eigen::Index>(r)];
    return {labels, "ordinal"};
  }
  const std::vector<int> fav = table.favorable_labels();
  for (std::size_t r = 0; r < table.rows(); ++r) labels[r] = fav[r];
  return {labels, "binary"};
}

}  // namespace detail

// Seeded per-stratum shuffle followed by round-robin fold assignment, so each
// fold's class counts sit within one patient of the global proportions.
inline FoldPlan stratified_kfold(const CohortTable& table, int folds, std::uint64_t seed) {
  if (folds < 2) throw config_error("stratified_kfold: folds must be >= 2");
  if (table.rows() < static_cast<std::size_t>(folds))
    throw data_error("stratified_kfold: fewer rows than folds");

  FoldPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  auto [labels, kind] = detail::stratum_labels(table, folds);
  plan.stratification = kind;
  plan.fold.assign(table.rows(), 0);

  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t r = 0; r < table.rows(); ++r) strata[labels[r]].push_back(r);

  rng::engine g = rng::make_engine(rng::derive_seed(seed, 11));
  for (auto& [label, rows] : strata) {
    rng::shuffle(rows, g);
    for (std::size_t i = 0; i < rows.size(); ++i)
      plan.fold[rows[i]] = static_cast<int>(i % static_cast<std::size_t>(folds)) + 1;
  }
  return plan;
}

// Validation flags over a row subset: stratified, round-half-up total of
// max(1, round(fraction * n)), apportioned by largest remainder.
inline std::vector<char> train_val_split(const std::vector<std::size_t>& rows,
                                         const std::vector<int>& stratum_labels, double fraction,
                                         std::uint64_t seed, std::size_t total_rows) {
  if (rows.size() < 2) throw data_error("train_val_split: need at least 2 rows");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw config_error("train_val_split: fraction must be in (0,1)");

  const double n = static_cast<double>(rows.size());
  std::size_t total_val =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * n + 0.5)));
  total_val = std::min(total_val, rows.size() - 1);

  std::map<int, std::vector<std::size_t>> strata;  // label -> positions into `rows`
  for (std::size_t i = 0; i < rows.size(); ++i) strata[stratum_labels[rows[i]]].push_back(i);

  // Largest-remainder apportionment of total_val across strata.
  struct Share {
    int label;
    std::size_t size;
    std::size_t base;
    double remainder;
    std::size_t give = 0;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [label, members] : strata) {
    const double exact = fraction * static_cast<double>(members.size()) /
                         (fraction * n) * static_cast<double>(total_val);
    const auto base = std::min(members.size(), static_cast<std::size_t>(std::floor(exact)));
    shares.push_back({label, members.size(), base, exact - std::floor(exact)});
    assigned += base;
  }
  std::vector<std::size_t> order(shares.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (shares[a].remainder != shares[b].remainder) return shares[a].remainder > shares[b].remainder;
    if (shares[a].size != shares[b].size) return shares[a].size > shares[b].size;
    return shares[a].label < shares[b].label;
  });
  std::size_t remaining = total_val > assigned ? total_val - assigned : 0;
  while (remaining > 0) {
    bool progressed = false;
    for (std::size_t idx : order) {
      if (remaining == 0) break;
      Share& s = shares[idx];
      if (s.base + s.give < s.size) {
        s.give += 1;
        remaining -= 1;
        progressed = true;
      }
    }
    if (!progressed) break;
  }

  std::vector<char> validation(total_rows, 0);
  rng::engine g = rng::make_engine(rng::derive_seed(seed, 13));
  for (Share& s : shares) {
    auto members = strata[s.label];
    rng::shuffle(members, g);
    const std::size_t take = s.base + s.give;
    for (std::size_t i = 0; i < take; ++i) validation[rows[members[i]]] = 1;
  }
  return validation;
}

// Full cross-validation plan: fold labels plus a train/validation split of
// each fold's complement, everything derived from one seed.
inline FoldPlan build_fold_plan(const CohortTable& table, int folds, double val_fraction,
                                std::uint64_t seed) {
  FoldPlan plan = stratified_kfold(table, folds, seed);
  const auto [labels, kind] = detail::stratum_labels(table, folds);
  plan.validation.resize(static_cast<std::size_t>(folds));
  for (int f = 1; f <= folds; ++f) {
    std::vector<std::size_t> complement;
    for (std::size_t r = 0; r < table.rows(); ++r)
      if (plan.fold[r] != f) complement.push_back(r);
    plan.validation[static_cast<std::size_t>(f - 1)] = train_val_split(
        complement, labels, val_fraction, rng::derive_seed(seed, 1000 + static_cast<std::uint64_t>(f)),
        table.rows());
  }
  return plan;
}

}  // namespace ontram
