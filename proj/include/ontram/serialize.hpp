#pragma once

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/impute.hpp"
#include "ontram/model.hpp"
#include "ontram/schema.hpp"
#include "ontram/simulate.hpp"
#include "ontram/standardize.hpp"
#include "ontram/train.hpp"

namespace ontram {

inline constexpr int kFormatVersion = 1;

using json = nlohmann::json;

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return out;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c)
      out(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  return out;
}

inline std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::binary: return "binary";
    case ColumnKind::categorical: return "categorical";
  }
  return "continuous";
}

inline ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "binary") return ColumnKind::binary;
  if (s == "categorical") return ColumnKind::categorical;
  throw config_error("unknown column kind: " + s);
}

inline std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::covariate: return "covariate";
    case ColumnRole::treatment: return "treatment";
    case ColumnRole::outcome: return "outcome";
    case ColumnRole::embedding: return "embedding";
  }
  return "covariate";
}

inline ColumnRole column_role_from_string(const std::string& s) {
  if (s == "covariate") return ColumnRole::covariate;
  if (s == "treatment") return ColumnRole::treatment;
  if (s == "outcome") return ColumnRole::outcome;
  if (s == "embedding") return ColumnRole::embedding;
  throw config_error("unknown column role: " + s);
}

inline json schema_to_json(const FeatureSchema& schema) {
  json out;
  out["outcome_classes"] = schema.outcome_scale.class_count;
  out["favorable_max"] = schema.outcome_scale.favorable_cut;
  if (schema.id_column) out["identifier"] = *schema.id_column;
  json cols = json::array();
  for (const ColumnSpec& c : schema.columns) {
    json col;
    col["name"] = c.name;
    col["kind"] = to_string(c.kind);
    col["role"] = to_string(c.role);
    if (c.kind == ColumnKind::categorical) col["levels"] = c.levels;
    cols.push_back(std::move(col));
  }
  out["columns"] = std::move(cols);
  return out;
}

inline FeatureSchema schema_from_json(const json& j) {
  FeatureSchema schema;
  schema.outcome_scale.class_count = j.at("outcome_classes").get<int>();
  schema.outcome_scale.favorable_cut = j.at("favorable_max").get<int>();
  if (j.contains("identifier")) schema.id_column = j.at("identifier").get<std::string>();
  for (const json& col : j.at("columns")) {
    ColumnSpec spec;
    spec.name = col.at("name").get<std::string>();
    spec.kind = column_kind_from_string(col.at("kind").get<std::string>());
    spec.role = column_role_from_string(col.at("role").get<std::string>());
    if (col.contains("levels")) spec.levels = col.at("levels").get<std::vector<std::string>>();
    schema.columns.push_back(std::move(spec));
  }
  schema.validate();
  return schema;
}

inline json params_to_json(const ModelParams& params) {
  json out;
  out["classes"] = params.scale.class_count;
  out["favorable_max"] = params.scale.favorable_cut;
  out["gamma"] = vector_to_json(params.cutpoints.gamma());
  out["beta"] = vector_to_json(params.linear.beta);
  out["features"] = params.linear.feature_names;
  out["treatment_index"] = params.linear.treatment_index;
  if (params.head) {
    json head;
    head["dropout"] = params.head->dropout_rate;
    json layers = json::array();
    for (std::size_t l = 0; l < params.head->weights.size(); ++l) {
      json layer;
      layer["weights"] = matrix_to_json(params.head->weights[l]);
      layer["biases"] = vector_to_json(params.head->biases[l]);
      layers.push_back(std::move(layer));
    }
    head["layers"] = std::move(layers);
    out["head"] = std::move(head);
  } else {
    out["head"] = nullptr;
  }
  return out;
}

inline ModelParams params_from_json(const json& j) {
  ModelParams params;
  params.scale.class_count = j.at("classes").get<int>();
  params.scale.favorable_cut = j.at("favorable_max").get<int>();
  params.cutpoints = CutpointVector(vector_from_json(j.at("gamma")));
  params.linear.beta = vector_from_json(j.at("beta"));
  params.linear.feature_names = j.at("features").get<std::vector<std::string>>();
  params.linear.treatment_index = j.at("treatment_index").get<Eigen::Index>();
  if (!j.at("head").is_null()) {
    EmbeddingHead head;
    head.dropout_rate = j.at("head").at("dropout").get<double>();
    for (const json& layer : j.at("head").at("layers")) {
      head.weights.push_back(matrix_from_json(layer.at("weights")));
      head.biases.push_back(vector_from_json(layer.at("biases")));
    }
    params.head = std::move(head);
  }
  params.validate();
  return params;
}

struct StandardizerCodec {
  static json to_json(const StandardizerParams& p) {
    json out;
    out["schema"] = schema_to_json(p.schema_);
    out["means"] = p.means_;
    out["sds"] = p.sds_;
    return out;
  }
  static StandardizerParams from_json(const json& j) {
    StandardizerParams p;
    p.schema_ = schema_from_json(j.at("schema"));
    p.means_ = j.at("means").get<std::vector<double>>();
    p.sds_ = j.at("sds").get<std::vector<double>>();
    return p;
  }
};

struct ImputerCodec {
  static json to_json(const KnnImputer& imp) {
    json out;
    out["k"] = imp.k_;
    out["covariates"] = imp.covariates_;
    json kinds = json::array();
    for (ColumnKind kind : imp.kinds_) kinds.push_back(to_string(kind));
    out["kinds"] = std::move(kinds);
    out["levels"] = imp.levels_;
    out["means"] = imp.mean_;
    out["sds"] = imp.sd_;
    out["donors"] = imp.donors_;
    return out;
  }
  static KnnImputer from_json(const json& j) {
    KnnImputer imp;
    imp.k_ = j.at("k").get<int>();
    imp.covariates_ = j.at("covariates").get<std::vector<std::size_t>>();
    for (const json& kind : j.at("kinds"))
      imp.kinds_.push_back(column_kind_from_string(kind.get<std::string>()));
    imp.levels_ = j.at("levels").get<std::vector<std::vector<std::string>>>();
    imp.mean_ = j.at("means").get<std::vector<double>>();
    imp.sd_ = j.at("sds").get<std::vector<double>>();
    imp.donors_ = j.at("donors").get<std::vector<std::vector<double>>>();
    return imp;
  }
};

// Self-contained model artifact: parameters plus the preprocessing state
// needed to score a raw cohort.
struct ModelArtifact {
  ModelParams params;
  StandardizerParams standardizer;
  std::optional<KnnImputer> imputer;

  json to_json() const {
    json out;
    out["format_version"] = kFormatVersion;
    out["params"] = params_to_json(params);
    out["standardizer"] = StandardizerCodec::to_json(standardizer);
    out["imputer"] = imputer ? ImputerCodec::to_json(*imputer) : json(nullptr);
    return out;
  }

  static ModelArtifact from_json(const json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
      throw config_error("params file: unsupported format version");
    ModelArtifact artifact;
    artifact.params = params_from_json(j.at("params"));
    artifact.standardizer = StandardizerCodec::from_json(j.at("standardizer"));
    if (!j.at("imputer").is_null())
      artifact.imputer = ImputerCodec::from_json(j.at("imputer"));
    return artifact;
  }
};

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw data_error("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace ontram
