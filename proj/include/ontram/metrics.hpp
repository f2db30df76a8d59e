#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "ontram/effects.hpp"
#include "ontram/errors.hpp"
#include "ontram/rng.hpp"

namespace ontram {

// Mann-Whitney AUC via midranks; ties credit 0.5. Bit-identical to the
// all-pairs double loop.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw data_error("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw data_error("roc_auc: labels must be 0/1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw undefined_statistic("roc_auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double wins =
      rank_sum_pos - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double brier(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) throw data_error("brier: bad input");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - static_cast<double>(labels[i]);
    total += d * d;
  }
  return total / static_cast<double>(scores.size());
}

// Mean binary NLL with scores clamped to [1e-12, 1 - 1e-12].
inline double test_binary_nll(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw data_error("test_binary_nll: bad input");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], 1e-12, 1.0 - 1e-12);
    total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

// One treated and one untreated patient matched by predicted-benefit rank.
struct MatchedPair {
  double predicted_benefit = 0.0;  // mean of the two ites
  int observed_benefit = 0;        // treated favorable - untreated favorable
};

// Matching contract shared with the oracle implementation: sort each arm by
// (ite, id) ascending; reduce the larger arm to the smaller arm's size by a
// seeded Fisher-Yates shuffle of its positions, keeping the first m sorted
// back into rank order; then pair rank to rank.
inline std::vector<MatchedPair> match_benefit_pairs(const std::vector<IteRecord>& records,
                                                    std::uint64_t truncation_seed) {
  std::vector<const IteRecord*> treated, untreated;
  for (const IteRecord& r : records) (r.arm == 1 ? treated : untreated).push_back(&r);
  if (treated.size() < 2 || untreated.size() < 2)
    throw undefined_statistic("c_for_benefit: need at least 2 patients per arm");
  auto by_ite = [](const IteRecord* a, const IteRecord* b) {
    if (a->ite != b->ite) return a->ite < b->ite;
    return a->id < b->id;
  };
  std::sort(treated.begin(), treated.end(), by_ite);
  std::sort(untreated.begin(), untreated.end(), by_ite);

  const std::size_t m = std::min(treated.size(), untreated.size());
  auto truncate = [&](std::vector<const IteRecord*>& arm) {
    if (arm.size() == m) return;
    std::vector<std::size_t> keep(arm.size());
    std::iota(keep.begin(), keep.end(), 0);
    rng::engine g = rng::make_engine(rng::derive_seed(truncation_seed, 17));
    rng::shuffle(keep, g);
    keep.resize(m);
    std::sort(keep.begin(), keep.end());
    std::vector<const IteRecord*> kept;
    kept.reserve(m);
    for (std::size_t idx : keep) kept.push_back(arm[idx]);
    arm = std::move(kept);
  };
  truncate(treated);
  truncate(untreated);

  std::vector<MatchedPair> pairs(m);
  for (std::size_t i = 0; i < m; ++i) {
    pairs[i].predicted_benefit = 0.5 * (treated[i]->ite + untreated[i]->ite);
    pairs[i].observed_benefit = treated[i]->favorable - untreated[i]->favorable;
  }
  return pairs;
}

// C-for-benefit: over all pair-of-pairs with different observed benefit, the
// fraction where the larger observed benefit comes with the larger predicted
// benefit; predicted ties credit 0.5.
inline double c_for_benefit(const std::vector<IteRecord>& records, std::uint64_t truncation_seed) {
  const std::vector<MatchedPair> pairs = match_benefit_pairs(records, truncation_seed);
  double credit = 0.0;
  long informative = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (pairs[i].observed_benefit == pairs[j].observed_benefit) continue;
      ++informative;
      const MatchedPair& hi =
          pairs[i].observed_benefit > pairs[j].observed_benefit ? pairs[i] : pairs[j];
      const MatchedPair& lo =
          pairs[i].observed_benefit > pairs[j].observed_benefit ? pairs[j] : pairs[i];
      if (hi.predicted_benefit > lo.predicted_benefit)
        credit += 1.0;
      else if (hi.predicted_benefit == lo.predicted_benefit)
        credit += 0.5;
    }
  }
  if (informative == 0)
    throw undefined_statistic("c_for_benefit: no pairs with differing observed benefit");
  return credit / static_cast<double>(informative);
}

// Empirical quantile with linear interpolation between order statistics at
// h = p(n-1)+1; used for bootstrap quantiles and interquartile ranges.
inline double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw data_error("empirical_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct CiResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Basic bootstrap over patient-level resamples. Each replicate's indices
// derive from (seed, replicate), so any thread count yields identical output.
// Replicates where the statistic is undefined are replaced by redraws from
// indices B, B+1, ...; more than 10% undefined draws is an error.
inline std::vector<CiResult> bootstrap_ci_multi(
    const std::function<Eigen::VectorXd(const std::vector<std::size_t>&)>& statistic,
    std::size_t n, std::size_t replicates, double alpha, std::uint64_t seed, int threads = 1) {
  if (n == 0) throw data_error("bootstrap_ci_multi: empty data");
  if (replicates < 2) throw config_error("bootstrap_ci_multi: need at least 2 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("bootstrap_ci_multi: bad alpha");

  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  const Eigen::VectorXd point = statistic(identity);

  auto resample = [&](std::uint64_t replicate) {
    rng::engine g = rng::make_engine(rng::derive_seed(seed, replicate));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = rng::uniform_below(g, n);
    return rows;
  };

  std::vector<Eigen::VectorXd> draws(replicates);
  std::vector<char> defined(replicates, 0);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      try {
        draws[b] = statistic(resample(b));
        defined[b] = 1;
      } catch (const undefined_statistic&) {
        defined[b] = 0;
      }
    }
  };
  if (threads <= 1) {
    run_range(0, replicates);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (replicates + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(replicates, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Deterministic sequential redraws for undefined replicates.
  std::size_t undefined_draws =
      static_cast<std::size_t>(std::count(defined.begin(), defined.end(), 0));
  const std::size_t cap = replicates / 10;
  std::uint64_t next = replicates;
  for (std::size_t b = 0; b < replicates; ++b) {
    while (!defined[b]) {
      if (undefined_draws > cap)
        throw numeric_error("bootstrap: more than 10% of resamples left the statistic undefined");
      try {
        draws[b] = statistic(resample(next++));
        defined[b] = 1;
      } catch (const undefined_statistic&) {
        ++undefined_draws;
      }
    }
  }

  std::vector<CiResult> out(static_cast<std::size_t>(point.size()));
  for (Eigen::Index s = 0; s < point.size(); ++s) {
    std::vector<double> values(replicates);
    for (std::size_t b = 0; b < replicates; ++b) values[b] = draws[b][s];
    const double q_hi = empirical_quantile(values, 1.0 - alpha / 2.0);
    const double q_lo = empirical_quantile(values, alpha / 2.0);
    out[static_cast<std::size_t>(s)] = {point[s], 2.0 * point[s] - q_hi, 2.0 * point[s] - q_lo};
  }
  return out;
}

inline CiResult bootstrap_ci(
    const std::function<double(const std::vector<std::size_t>&)>& statistic, std::size_t n,
    std::size_t replicates = 1000, double alpha = 0.05, std::uint64_t seed = 0, int threads = 1) {
  auto wrapped = [&](const std::vector<std::size_t>& rows) {
    return Eigen::VectorXd::Constant(1, statistic(rows)).eval();
  };
  return bootstrap_ci_multi(wrapped, n, replicates, alpha, seed, threads)[0];
}

// Descriptive cohort summary grouped by favorable/unfavorable outcome:
// count (percent) for binary and categorical covariates, median
// [interquartile range] for continuous ones.
struct DescriptiveSummary {
  struct Row {
    std::string label;
    std::string unfavorable;
    std::string favorable;
  };
  std::size_t n_unfavorable = 0;
  std::size_t n_favorable = 0;
  std::vector<Row> rows;
};

namespace detail {

inline std::string trimmed_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline std::string count_percent(long count, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%ld (%.1f)", count,
                n == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(n));
  return buf;
}

inline std::string median_iqr(std::vector<double> values) {
  const double med = empirical_quantile(values, 0.5);
  const double q1 = empirical_quantile(values, 0.25);
  const double q3 = empirical_quantile(values, 0.75);
  return trimmed_number(med) + " [" + trimmed_number(q1) + ", " + trimmed_number(q3) + "]";
}

}  // namespace detail

inline DescriptiveSummary descriptive_summary(const CohortTable& cohort) {
  cohort.validate();
  const std::vector<int> fav = cohort.favorable_labels();
  DescriptiveSummary summary;
  std::vector<std::size_t> group[2];  // 0 = unfavorable, 1 = favorable
  for (std::size_t r = 0; r < cohort.rows(); ++r) group[fav[r]].push_back(r);
  summary.n_unfavorable = group[0].size();
  summary.n_favorable = group[1].size();
  if (group[0].empty() || group[1].empty())
    throw data_error("descriptive_summary: both outcome groups must be non-empty");

  auto add_row = [&](const std::string& label, auto&& cell) {
    summary.rows.push_back({label, cell(group[0]), cell(group[1])});
  };

  std::vector<std::size_t> described = cohort.schema.covariate_columns();
  described.insert(described.begin(), cohort.schema.treatment_column());
  for (std::size_t c : described) {
    const ColumnSpec& spec = cohort.schema.columns[c];
    if (spec.kind == ColumnKind::continuous) {
      add_row(spec.name, [&](const std::vector<std::size_t>& rows) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t r : rows)
          if (!CohortTable::is_missing(cohort.columns[c][r])) values.push_back(cohort.columns[c][r]);
        return values.empty() ? std::string("-") : detail::median_iqr(std::move(values));
      });
    } else if (spec.kind == ColumnKind::binary) {
      add_row(spec.name + " (yes)", [&](const std::vector<std::size_t>& rows) {
        long count = 0;
        for (std::size_t r : rows)
          if (cohort.columns[c][r] == 1.0) ++count;
        return detail::count_percent(count, rows.size());
      });
    } else {
      for (std::size_t l = 0; l < spec.levels.size(); ++l) {
        add_row(spec.name + " (" + spec.levels[l] + ")", [&](const std::vector<std::size_t>& rows) {
          long count = 0;
          for (std::size_t r : rows)
            if (cohort.columns[c][r] == static_cast<double>(l)) ++count;
          return detail::count_percent(count, rows.size());
        });
      }
    }
  }
  return summary;
}

}  // namespace ontram
