#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/model.hpp"

namespace ontram {

enum class ColumnKind { continuous, binary, categorical };
enum class ColumnRole { covariate, treatment, outcome, embedding };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  ColumnRole role = ColumnRole::covariate;
  std::vector<std::string> levels;  // categorical covariates only
};

// Column declarations for a cohort CSV. The identifier column is named
// separately; when absent, row numbers are used as patient ids.
struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> id_column;
  OutcomeScale outcome_scale;

  void validate() const {
    outcome_scale.validate();
    std::set<std::string> names;
    if (id_column) names.insert(*id_column);
    int treatments = 0;
    int outcomes = 0;
    Eigen::Index last_embedding = -1;
    bool embedding_block_done = false;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const ColumnSpec& col = columns[i];
      if (!names.insert(col.name).second)
        throw config_error("FeatureSchema: duplicate column name " + col.name);
      switch (col.role) {
        case ColumnRole::treatment:
          ++treatments;
          if (col.kind != ColumnKind::binary)
            throw config_error("FeatureSchema: treatment column must be binary");
          break;
        case ColumnRole::outcome:
          ++outcomes;
          break;
        case ColumnRole::embedding:
          if (col.kind != ColumnKind::continuous)
            throw config_error("FeatureSchema: embedding columns must be continuous");
          if (embedding_block_done)
            throw config_error("FeatureSchema: embedding columns must be contiguous");
          if (last_embedding >= 0 && static_cast<Eigen::Index>(i) != last_embedding + 1)
            throw config_error("FeatureSchema: embedding columns must be contiguous");
          last_embedding = static_cast<Eigen::Index>(i);
          break;
        case ColumnRole::covariate:
          if (col.kind == ColumnKind::categorical && col.levels.size() < 2)
            throw config_error("FeatureSchema: categorical column " + col.name +
                               " needs at least 2 levels");
          break;
      }
      if (col.role != ColumnRole::embedding && last_embedding >= 0) embedding_block_done = true;
    }
    if (treatments != 1) throw config_error("FeatureSchema: exactly one treatment column required");
    if (outcomes != 1) throw config_error("FeatureSchema: exactly one outcome column required");
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    throw config_error("FeatureSchema: unknown column " + name);
  }

  std::size_t treatment_column() const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].role == ColumnRole::treatment) return i;
    throw config_error("FeatureSchema: no treatment column");
  }

  std::size_t outcome_column() const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].role == ColumnRole::outcome) return i;
    throw config_error("FeatureSchema: no outcome column");
  }

  std::vector<std::size_t> covariate_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].role == ColumnRole::covariate) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> embedding_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].role == ColumnRole::embedding) out.push_back(i);
    return out;
  }
};

// Column-oriented typed table. Cells are doubles; categorical cells hold the
// level index; NaN marks a missing covariate cell.
struct CohortTable {
  FeatureSchema schema;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> columns;  // aligned to schema.columns

  std::size_t rows() const { return ids.size(); }

  static bool is_missing(double v) { return std::isnan(v); }
  static constexpr double missing() { return std::numeric_limits<double>::quiet_NaN(); }

  void validate() const {
    schema.validate();
    if (rows() == 0) throw data_error("CohortTable: empty table");
    if (columns.size() != schema.columns.size())
      throw data_error("CohortTable: column count does not match schema");
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].size() != rows()) throw data_error("CohortTable: ragged column");
      const ColumnSpec& spec = schema.columns[c];
      for (std::size_t r = 0; r < rows(); ++r) {
        const double v = columns[c][r];
        if (is_missing(v)) {
          if (spec.role != ColumnRole::covariate)
            throw data_error("CohortTable: missing value outside covariates in column " +
                             spec.name + ", row " + std::to_string(r + 1));
          continue;
        }
        switch (spec.role) {
          case ColumnRole::outcome:
            if (v != std::floor(v) || v < 0 || v >= schema.outcome_scale.class_count)
              throw data_error("CohortTable: outcome out of range in row " + std::to_string(r + 1));
            break;
          case ColumnRole::treatment:
            if (v != 0.0 && v != 1.0)
              throw data_error("CohortTable: treatment must be 0/1 in row " + std::to_string(r + 1));
            break;
          case ColumnRole::covariate:
            if (spec.kind == ColumnKind::binary && v != 0.0 && v != 1.0)
              throw data_error("CohortTable: binary covariate " + spec.name + " must be 0/1");
            if (spec.kind == ColumnKind::categorical &&
                (v != std::floor(v) || v < 0 || v >= static_cast<double>(spec.levels.size())))
              throw data_error("CohortTable: categorical level index out of range in " + spec.name);
            break;
          case ColumnRole::embedding:
            break;
        }
      }
    }
  }

  CohortTable subset(const std::vector<std::size_t>& row_indices) const {
    CohortTable out;
    out.schema = schema;
    out.ids.reserve(row_indices.size());
    for (std::size_t r : row_indices) {
      if (r >= rows()) throw data_error("CohortTable: subset row out of range");
      out.ids.push_back(ids[r]);
    }
    out.columns.resize(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out.columns[c].reserve(row_indices.size());
      for (std::size_t r : row_indices) out.columns[c].push_back(columns[c][r]);
    }
    return out;
  }

  Eigen::VectorXi outcomes() const {
    const std::size_t c = schema.outcome_column();
    Eigen::VectorXi out(static_cast<Eigen::Index>(rows()));
    for (std::size_t r = 0; r < rows(); ++r) out[static_cast<Eigen::Index>(r)] =
        static_cast<int>(columns[c][r]);
    return out;
  }

  // 1 when the outcome class is <= favorable_cut.
  std::vector<int> favorable_labels() const {
    const std::size_t c = schema.outcome_column();
    std::vector<int> out(rows());
    for (std::size_t r = 0; r < rows(); ++r)
      out[r] = columns[c][r] <= schema.outcome_scale.favorable_cut ? 1 : 0;
    return out;
  }

  std::vector<int> treatment_arms() const {
    const std::size_t c = schema.treatment_column();
    std::vector<int> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = static_cast<int>(columns[c][r]);
    return out;
  }
};

}  // namespace ontram
