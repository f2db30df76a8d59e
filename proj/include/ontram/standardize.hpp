#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/schema.hpp"

namespace ontram {

// Fully numeric view of a cohort: standardized design matrix, outcome vector,
// treatment column position, raw embeddings and patient ids.
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> feature_names;
  Eigen::Index treatment_index = -1;
  Eigen::VectorXi outcome;
  Eigen::MatrixXd embeddings;
  std::vector<std::string> ids;
  OutcomeScale scale;

  Batch batch() const {
    Batch b;
    b.x = x;
    b.embeddings = embeddings;
    b.y = outcome;
    return b;
  }
};

// Continuous covariates map to (x - mean) / sd with training-row statistics
// (population SD); categorical covariates expand into dummies against the
// first declared level; binary covariates and the treatment indicator pass
// through as 0/1. Embeddings pass through untouched.
class StandardizerParams {
 public:
  static StandardizerParams fit(const CohortTable& train) {
    train.validate();
    StandardizerParams out;
    out.schema_ = train.schema;
    for (std::size_t c : train.schema.covariate_columns()) {
      const ColumnSpec& spec = train.schema.columns[c];
      for (std::size_t r = 0; r < train.rows(); ++r)
        if (CohortTable::is_missing(train.columns[c][r]))
          throw data_error("StandardizerParams: missing cell in " + spec.name +
                           "; impute before fitting");
      if (spec.kind == ColumnKind::continuous) {
        double sum = 0.0, sumsq = 0.0;
        const double n = static_cast<double>(train.rows());
        for (double v : train.columns[c]) {
          sum += v;
          sumsq += v * v;
        }
        const double mean = sum / n;
        const double var = std::max(sumsq / n - mean * mean, 0.0);
        if (!(var > 0.0))
          throw numeric_error("StandardizerParams: constant continuous column " + spec.name);
        out.means_.push_back(mean);
        out.sds_.push_back(std::sqrt(var));
      } else {
        out.means_.push_back(0.0);
        out.sds_.push_back(1.0);
      }
    }
    return out;
  }

  // Design layout: covariates in schema order (categoricals expanded into
  // one dummy per non-reference level), treatment indicator last.
  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (std::size_t c : schema_.covariate_columns()) {
      const ColumnSpec& spec = schema_.columns[c];
      if (spec.kind == ColumnKind::categorical) {
        for (std::size_t l = 1; l < spec.levels.size(); ++l)
          names.push_back(spec.name + "=" + spec.levels[l]);
      } else {
        names.push_back(spec.name);
      }
    }
    names.push_back(schema_.columns[schema_.treatment_column()].name);
    return names;
  }

  DesignMatrix apply(const CohortTable& table) const {
    table.validate();
    if (table.schema.covariate_columns().size() != schema_.covariate_columns().size())
      throw data_error("StandardizerParams: schema mismatch at apply time");

    const std::vector<std::string> names = feature_names();
    DesignMatrix design;
    design.feature_names = names;
    design.treatment_index = static_cast<Eigen::Index>(names.size()) - 1;
    design.ids = table.ids;
    design.scale = table.schema.outcome_scale;
    design.outcome = table.outcomes();

    const std::size_t n = table.rows();
    design.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    const auto covariates = table.schema.covariate_columns();
    for (std::size_t r = 0; r < n; ++r) {
      Eigen::Index at = 0;
      for (std::size_t f = 0; f < covariates.size(); ++f) {
        const std::size_t c = covariates[f];
        const ColumnSpec& spec = table.schema.columns[c];
        const double v = table.columns[c][r];
        if (CohortTable::is_missing(v))
          throw data_error("StandardizerParams: missing cell in " + spec.name +
                           "; impute before applying");
        if (spec.kind == ColumnKind::categorical) {
          const auto level = static_cast<std::size_t>(v);
          if (level >= spec.levels.size())
            throw data_error("StandardizerParams: unseen level index in " + spec.name);
          for (std::size_t l = 1; l < spec.levels.size(); ++l)
            design.x(static_cast<Eigen::Index>(r), at++) = level == l ? 1.0 : 0.0;
        } else if (spec.kind == ColumnKind::continuous) {
          design.x(static_cast<Eigen::Index>(r), at++) = (v - means_[f]) / sds_[f];
        } else {
          design.x(static_cast<Eigen::Index>(r), at++) = v;
        }
      }
      design.x(static_cast<Eigen::Index>(r), at) =
          table.columns[table.schema.treatment_column()][r];
    }

    const auto embedding = table.schema.embedding_columns();
    design.embeddings.resize(static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(embedding.size()));
    for (std::size_t j = 0; j < embedding.size(); ++j)
      for (std::size_t r = 0; r < n; ++r)
        design.embeddings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
            table.columns[embedding[j]][r];
    return design;
  }

  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& sds() const { return sds_; }
  const FeatureSchema& schema() const { return schema_; }

 private:
  FeatureSchema schema_;
  std::vector<double> means_;  // aligned to covariate_columns(); 0/1 for non-continuous
  std::vector<double> sds_;

  friend struct StandardizerCodec;  // serialization
};

}  // namespace ontram
