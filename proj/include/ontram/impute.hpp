#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/schema.hpp"

namespace ontram {

// k-nearest-neighbor imputation of covariate cells. Distances are Euclidean
// over the covariate columns observed in the target row: continuous columns
// standardized with fitting-partition statistics, binary/categorical columns
// contribute 0/1 mismatch. Donors are the fitting rows that are complete in
// every covariate column, so held-out rows never influence the fill values.
class KnnImputer {
 public:
  static KnnImputer fit(const CohortTable& train, int k) {
    if (k < 1) throw config_error("KnnImputer: k must be >= 1");
    train.validate();
    KnnImputer imputer;
    imputer.k_ = k;
    imputer.covariates_ = train.schema.covariate_columns();

    // Per-column check: a covariate missing in every fitting row cannot be imputed.
    for (std::size_t c : imputer.covariates_) {
      bool any = false;
      for (std::size_t r = 0; r < train.rows(); ++r)
        if (!CohortTable::is_missing(train.columns[c][r])) {
          any = true;
          break;
        }
      if (!any)
        throw data_error("KnnImputer: column " + train.schema.columns[c].name +
                         " is missing in all fitting rows");
    }

    // Distance standardization from observed fitting values (population SD).
    imputer.mean_.assign(imputer.covariates_.size(), 0.0);
    imputer.sd_.assign(imputer.covariates_.size(), 1.0);
    for (std::size_t f = 0; f < imputer.covariates_.size(); ++f) {
      const std::size_t c = imputer.covariates_[f];
      if (train.schema.columns[c].kind != ColumnKind::continuous) continue;
      double sum = 0.0, sumsq = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < train.rows(); ++r) {
        const double v = train.columns[c][r];
        if (CohortTable::is_missing(v)) continue;
        sum += v;
        sumsq += v * v;
        ++n;
      }
      const double mean = sum / static_cast<double>(n);
      const double var = std::max(sumsq / static_cast<double>(n) - mean * mean, 0.0);
      imputer.mean_[f] = mean;
      imputer.sd_[f] = std::sqrt(var);
    }

    // Donor pool: fitting rows complete in all covariate columns.
    for (std::size_t r = 0; r < train.rows(); ++r) {
      bool complete = true;
      for (std::size_t c : imputer.covariates_)
        if (CohortTable::is_missing(train.columns[c][r])) {
          complete = false;
          break;
        }
      if (!complete) continue;
      std::vector<double> donor(imputer.covariates_.size());
      for (std::size_t f = 0; f < imputer.covariates_.size(); ++f)
        donor[f] = train.columns[imputer.covariates_[f]][r];
      imputer.donors_.push_back(std::move(donor));
    }
    if (imputer.donors_.size() < static_cast<std::size_t>(k))
      throw data_error("KnnImputer: need at least k=" + std::to_string(k) +
                       " complete fitting rows, found " + std::to_string(imputer.donors_.size()));
    imputer.kinds_.clear();
    imputer.levels_.clear();
    for (std::size_t c : imputer.covariates_) {
      imputer.kinds_.push_back(train.schema.columns[c].kind);
      imputer.levels_.push_back(train.schema.columns[c].levels);
    }
    return imputer;
  }

  // Fills every missing covariate cell; other columns pass through unchanged.
  CohortTable apply(const CohortTable& table) const {
    CohortTable out = table;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      std::vector<std::size_t> missing_features;
      for (std::size_t f = 0; f < covariates_.size(); ++f)
        if (CohortTable::is_missing(table.columns[covariates_[f]][r])) missing_features.push_back(f);
      if (missing_features.empty()) continue;

      const std::vector<std::size_t> neighbors = nearest(table, r);
      for (std::size_t f : missing_features)
        out.columns[covariates_[f]][r] = impute_value(f, neighbors);
    }
    out.validate();
    return out;
  }

  int k() const { return k_; }
  std::size_t donor_count() const { return donors_.size(); }

 private:
  std::vector<std::size_t> nearest(const CohortTable& table, std::size_t row) const {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(donors_.size());
    for (std::size_t d = 0; d < donors_.size(); ++d) {
      double dist = 0.0;
      for (std::size_t f = 0; f < covariates_.size(); ++f) {
        const double v = table.columns[covariates_[f]][row];
        if (CohortTable::is_missing(v)) continue;
        if (kinds_[f] == ColumnKind::continuous) {
          const double scale = sd_[f] > 0.0 ? sd_[f] : 1.0;
          const double diff = (v - donors_[d][f]) / scale;
          dist += diff * diff;
        } else {
          dist += v == donors_[d][f] ? 0.0 : 1.0;
        }
      }
      scored.emplace_back(dist, d);
    }
    // Distance ties resolve to the earlier donor row.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(k_); ++i) out.push_back(scored[i].second);
    return out;
  }

  double impute_value(std::size_t feature, const std::vector<std::size_t>& neighbors) const {
    if (kinds_[feature] == ColumnKind::continuous) {
      double sum = 0.0;
      for (std::size_t d : neighbors) sum += donors_[d][feature];
      return sum / static_cast<double>(neighbors.size());
    }
    // Mode over neighbors; ties pick the lexicographically smallest level
    // name (binary levels read as "0" < "1").
    std::map<long, int> counts;
    for (std::size_t d : neighbors) counts[static_cast<long>(donors_[d][feature])] += 1;
    auto level_name = [&](long level) {
      return kinds_[feature] == ColumnKind::categorical
                 ? levels_[feature][static_cast<std::size_t>(level)]
                 : std::to_string(level);
    };
    long best = counts.begin()->first;
    int best_count = counts.begin()->second;
    for (const auto& [level, count] : counts)
      if (count > best_count ||
          (count == best_count && level_name(level) < level_name(best))) {
        best = level;
        best_count = count;
      }
    return static_cast<double>(best);
  }

  int k_ = 5;
  std::vector<std::size_t> covariates_;
  std::vector<ColumnKind> kinds_;
  std::vector<std::vector<std::string>> levels_;
  std::vector<double> mean_;
  std::vector<double> sd_;
  std::vector<std::vector<double>> donors_;

  friend struct ImputerCodec;  // serialization
};

// Fit-and-apply on the same table (training-partition use).
inline CohortTable knn_impute(const CohortTable& table, int k = 5) {
  return KnnImputer::fit(table, k).apply(table);
}

}  // namespace ontram
