#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ontram/config.hpp"
#include "ontram/csv.hpp"
#include "ontram/effects.hpp"
#include "ontram/errors.hpp"
#include "ontram/impute.hpp"
#include "ontram/metrics.hpp"
#include "ontram/serialize.hpp"
#include "ontram/simulate.hpp"
#include "ontram/split.hpp"
#include "ontram/standardize.hpp"
#include "ontram/train.hpp"

namespace ontram {

// One pooled test-set prediction row.
struct ScoredRow {
  std::string id;
  int fold = 0;
  int arm = 0;
  int outcome = 0;
  int favorable = 0;
  double p_observed = 0.0;  // favorable probability at the observed arm
  double p_treated = 0.0;
  double p_control = 0.0;
  double ite = 0.0;
};

struct OrEntry {
  std::string feature;
  double point = 1.0;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct FoldSummary {
  int fold = 0;
  std::size_t test_rows = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  std::string error;  // empty when the fold succeeded
};

struct EvaluationReport {
  std::string label;
  json config_echo;
  std::size_t n_rows = 0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::map<std::string, CiResult> metrics;
  std::vector<OrEntry> odds_ratios;
  std::vector<FoldSummary> folds;

  json to_json() const {
    json out;
    out["format_version"] = kFormatVersion;
    out["label"] = label;
    out["config"] = config_echo;
    json cohort;
    cohort["rows"] = n_rows;
    cohort["treated"] = n_treated;
    cohort["control"] = n_control;
    out["cohort"] = std::move(cohort);
    json m;
    for (const auto& [name, ci] : metrics) {
      json entry;
      entry["point"] = ci.point;
      entry["lower"] = ci.lower;
      entry["upper"] = ci.upper;
      m[name] = std::move(entry);
    }
    out["metrics"] = std::move(m);
    json ors = json::array();
    for (const OrEntry& r : odds_ratios) {
      json entry;
      entry["feature"] = r.feature;
      entry["point"] = r.point;
      entry["lower"] = r.lower ? json(*r.lower) : json(nullptr);
      entry["upper"] = r.upper ? json(*r.upper) : json(nullptr);
      ors.push_back(std::move(entry));
    }
    out["odds_ratios"] = std::move(ors);
    json folds_json = json::array();
    for (const FoldSummary& f : folds) {
      json entry;
      entry["fold"] = f.fold;
      entry["test_rows"] = f.test_rows;
      entry["train_nll"] = f.train_nll;
      entry["val_nll"] = f.val_nll;
      entry["error"] = f.error.empty() ? json(nullptr) : json(f.error);
      folds_json.push_back(std::move(entry));
    }
    out["folds"] = std::move(folds_json);
    return out;
  }

  static EvaluationReport from_json(const json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
      throw config_error("report: unsupported format version");
    EvaluationReport report;
    report.label = j.at("label").get<std::string>();
    report.config_echo = j.at("config");
    report.n_rows = j.at("cohort").at("rows").get<std::size_t>();
    report.n_treated = j.at("cohort").at("treated").get<std::size_t>();
    report.n_control = j.at("cohort").at("control").get<std::size_t>();
    for (const auto& [name, entry] : j.at("metrics").items())
      report.metrics[name] = {entry.at("point").get<double>(), entry.at("lower").get<double>(),
                              entry.at("upper").get<double>()};
    for (const json& entry : j.at("odds_ratios")) {
      OrEntry r;
      r.feature = entry.at("feature").get<std::string>();
      r.point = entry.at("point").get<double>();
      if (!entry.at("lower").is_null()) r.lower = entry.at("lower").get<double>();
      if (!entry.at("upper").is_null()) r.upper = entry.at("upper").get<double>();
      report.odds_ratios.push_back(std::move(r));
    }
    for (const json& entry : j.at("folds")) {
      FoldSummary f;
      f.fold = entry.at("fold").get<int>();
      f.test_rows = entry.at("test_rows").get<std::size_t>();
      f.train_nll = entry.at("train_nll").get<double>();
      f.val_nll = entry.at("val_nll").get<double>();
      if (!entry.at("error").is_null()) f.error = entry.at("error").get<std::string>();
      report.folds.push_back(std::move(f));
    }
    return report;
  }
};

namespace detail {

inline std::vector<IteRecord> to_ite_records(const std::vector<ScoredRow>& rows,
                                             const std::vector<std::size_t>& idx) {
  std::vector<IteRecord> records;
  records.reserve(idx.size());
  for (std::size_t i : idx) {
    const ScoredRow& r = rows[i];
    IteRecord rec;
    rec.id = r.id;
    rec.p_treated = r.p_treated;
    rec.p_control = r.p_control;
    rec.ite = r.ite;
    rec.arm = r.arm;
    rec.favorable = r.favorable;
    records.push_back(std::move(rec));
  }
  return records;
}

// The joint metric vector on a row subset; every metric sees the same
// resample so bootstrap draws are consistent across metrics.
inline Eigen::VectorXd metric_vector(const std::vector<ScoredRow>& rows,
                                     const std::vector<std::size_t>& idx,
                                     const std::vector<std::string>& names,
                                     std::uint64_t truncation_seed) {
  std::vector<double> scores;
  std::vector<int> labels, arms;
  std::vector<double> ites;
  scores.reserve(idx.size());
  for (std::size_t i : idx) {
    scores.push_back(rows[i].p_observed);
    labels.push_back(rows[i].favorable);
    arms.push_back(rows[i].arm);
    ites.push_back(rows[i].ite);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(names.size()));
  for (std::size_t m = 0; m < names.size(); ++m) {
    const std::string& name = names[m];
    double value = 0.0;
    if (name == "nll") {
      value = test_binary_nll(scores, labels);
    } else if (name == "auc") {
      value = roc_auc(scores, labels);
    } else if (name == "brier") {
      value = brier(scores, labels);
    } else if (name == "c_for_benefit") {
      value = c_for_benefit(to_ite_records(rows, idx), truncation_seed);
    } else if (name == "ate_mean_ite") {
      double mean_ite = 0.0;
      for (double v : ites) mean_ite += v;
      mean_ite /= static_cast<double>(ites.size());
      value = ate_observed(labels, arms) - mean_ite;
    } else {
      throw config_error("unknown metric " + name);
    }
    out[static_cast<Eigen::Index>(m)] = value;
  }
  return out;
}

inline std::string format_ci_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

// Pooled metrics with basic-bootstrap confidence intervals.
inline std::map<std::string, CiResult> scored_metrics(const std::vector<ScoredRow>& rows,
                                                      const RunConfig& config) {
  if (rows.empty()) throw data_error("scored_metrics: no predictions to score");
  auto statistic = [&](const std::vector<std::size_t>& idx) {
    return detail::metric_vector(rows, idx, config.metrics, config.truncation_seed);
  };
  const std::vector<CiResult> cis =
      bootstrap_ci_multi(statistic, rows.size(), config.bootstrap_replicates,
                         config.bootstrap_alpha, config.bootstrap_seed, config.bootstrap_threads);
  std::map<std::string, CiResult> out;
  for (std::size_t m = 0; m < config.metrics.size(); ++m) out[config.metrics[m]] = cis[m];
  return out;
}

// Odds ratios of the clinical model refitted on the full cohort, with basic
// bootstrap CIs from whole-pipeline refits (impute, standardize, fit) on
// patient resamples at a reduced epoch budget.
inline std::vector<OrEntry> odds_ratio_cis(const CohortTable& cohort, const RunConfig& config) {
  auto estimate = [&](const CohortTable& sample) {
    const CohortTable imputed = KnnImputer::fit(sample, config.impute_k).apply(sample);
    const StandardizerParams standardizer = StandardizerParams::fit(imputed);
    const DesignMatrix design = standardizer.apply(imputed);
    Batch batch = design.batch();
    batch.embeddings.resize(batch.rows(), 0);
    const ModelParams init = parameter_init(
        design.scale, design.feature_names, design.treatment_index, design.outcome, 0, {},
        config.dropout_rate, rng::derive_seed(config.train_seed, 7001));
    TrainConfig tc = config.stage_clinical;
    tc.epochs = config.or_epochs;
    tc.seed = rng::derive_seed(config.train_seed, 7002);
    tc.trainable = {true, true, false};
    tc.dropout = false;
    const TrainTrace trace = train(init, batch, std::nullopt, tc);
    return std::pair(trace.final_params.linear.feature_names,
                     Eigen::VectorXd(trace.final_params.linear.beta.array().exp()));
  };

  const auto [names, point] = estimate(cohort);
  auto statistic = [&](const std::vector<std::size_t>& idx) -> Eigen::VectorXd {
    try {
      return estimate(cohort.subset(idx)).second;
    } catch (const numeric_error& e) {
      throw undefined_statistic(e.what());
    } catch (const data_error& e) {
      throw undefined_statistic(e.what());
    }
  };
  const std::vector<CiResult> cis = bootstrap_ci_multi(
      statistic, cohort.rows(), config.or_replicates, config.bootstrap_alpha,
      rng::derive_seed(config.bootstrap_seed, 8001), config.bootstrap_threads);

  std::vector<OrEntry> out;
  for (std::size_t f = 0; f < names.size(); ++f)
    out.push_back({names[f], point[static_cast<Eigen::Index>(f)], cis[f].lower, cis[f].upper});
  return out;
}

namespace detail {

inline void write_predictions_csv(const std::string& path, const std::vector<ScoredRow>& rows) {
  std::vector<std::vector<std::string>> lines;
  for (const ScoredRow& r : rows)
    lines.push_back({r.id, std::to_string(r.fold), std::to_string(r.arm), std::to_string(r.outcome),
                     std::to_string(r.favorable), format_double(r.p_observed),
                     format_double(r.p_treated), format_double(r.p_control), format_double(r.ite)});
  write_csv(path, {"id", "fold", "arm", "outcome", "favorable", "p_favorable", "p_treated",
                   "p_control", "ite"},
            lines);
}

inline void write_roc_csv(const std::string& path, const std::vector<ScoredRow>& rows) {
  std::vector<std::pair<double, int>> scored;
  long positives = 0;
  for (const ScoredRow& r : rows) {
    scored.emplace_back(r.p_observed, r.favorable);
    positives += r.favorable;
  }
  const long negatives = static_cast<long>(scored.size()) - positives;
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::vector<std::string>> lines;
  long tp = 0, fp = 0;
  lines.push_back({"inf", "0", "0"});
  std::size_t i = 0;
  while (i < scored.size()) {
    const double threshold = scored[i].first;
    while (i < scored.size() && scored[i].first == threshold) {
      (scored[i].second ? tp : fp) += 1;
      ++i;
    }
    lines.push_back({format_double(threshold),
                     format_double(negatives > 0 ? static_cast<double>(fp) / negatives : 0.0),
                     format_double(positives > 0 ? static_cast<double>(tp) / positives : 0.0)});
  }
  write_csv(path, {"threshold", "fpr", "tpr"}, lines);
}

inline void write_or_csv(const std::string& path, const std::vector<OrEntry>& rows) {
  std::vector<std::vector<std::string>> lines;
  for (const OrEntry& r : rows)
    lines.push_back({r.feature, format_double(r.point), r.lower ? format_double(*r.lower) : "",
                     r.upper ? format_double(*r.upper) : ""});
  write_csv(path, {"feature", "point", "lower", "upper"}, lines);
}

inline void write_descriptives_csv(const std::string& path, const DescriptiveSummary& summary) {
  std::vector<std::vector<std::string>> lines;
  for (const auto& row : summary.rows) lines.push_back({row.label, row.unfavorable, row.favorable});
  write_csv(path,
            {"variable", "unfavorable_n" + std::to_string(summary.n_unfavorable),
             "favorable_n" + std::to_string(summary.n_favorable)},
            lines);
}

inline std::vector<ScoredRow> score_design(const ModelParams& params, const DesignMatrix& design,
                                           int fold) {
  const std::vector<IteRecord> records = ite_table(params, design);
  std::vector<ScoredRow> rows;
  rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    ScoredRow row;
    row.id = records[i].id;
    row.fold = fold;
    row.arm = records[i].arm;
    row.outcome = design.outcome[static_cast<Eigen::Index>(i)];
    row.favorable = records[i].favorable;
    row.p_treated = records[i].p_treated;
    row.p_control = records[i].p_control;
    row.p_observed = records[i].arm == 1 ? records[i].p_treated : records[i].p_control;
    row.ite = records[i].ite;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// Five-fold (configurable) cross-validation: per fold impute -> standardize
// -> staged fit -> test predictions; pooled predictions scored with bootstrap
// CIs. Writes the full artifact tree under config.output_dir and returns the
// report. A failing fold is recorded and skipped; the others proceed.
inline EvaluationReport run_cv(const RunConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir / "plots");

  CohortTable table = ingest_csv(config.cohort_csv, config.schema);
  if (config.embeddings_csv) {
    if (!config.schema.id_column)
      throw config_error("embeddings_csv requires an identifier column in the schema");
    table = attach_embeddings(table, *config.embeddings_csv, *config.schema.id_column);
  }
  const bool with_embeddings = !table.schema.embedding_columns().empty();

  const FoldPlan plan = build_fold_plan(table, config.folds, config.validation_fraction,
                                        config.split_seed);
  {
    const auto [labels, kind] = detail::stratum_labels(table, config.folds);
    std::vector<std::vector<std::string>> lines;
    for (std::size_t r = 0; r < table.rows(); ++r)
      lines.push_back({table.ids[r], std::to_string(plan.fold[r]), std::to_string(labels[r])});
    write_csv((out_dir / "folds.csv").string(), {"id", "fold", "stratum"}, lines);
    (void)kind;
  }
  detail::write_descriptives_csv((out_dir / "descriptives.csv").string(),
                                 descriptive_summary(table));

  EvaluationReport report;
  report.label = config.label;
  report.config_echo = config_to_json(config);
  report.n_rows = table.rows();
  {
    const auto arms = table.treatment_arms();
    report.n_treated = static_cast<std::size_t>(std::count(arms.begin(), arms.end(), 1));
    report.n_control = report.n_rows - report.n_treated;
  }

  std::vector<ScoredRow> pooled;
  for (int f = 1; f <= config.folds; ++f) {
    FoldSummary summary;
    summary.fold = f;
    const fs::path fold_dir = out_dir / ("fold_" + std::to_string(f));
    fs::create_directories(fold_dir);
    try {
      const CohortTable train_table = table.subset(plan.train_rows(f));
      const CohortTable val_table = table.subset(plan.validation_rows(f));
      const CohortTable test_table = table.subset(plan.test_rows(f));

      const KnnImputer imputer = KnnImputer::fit(train_table, config.impute_k);
      const CohortTable train_imputed = imputer.apply(train_table);
      const CohortTable val_imputed = imputer.apply(val_table);
      const CohortTable test_imputed = imputer.apply(test_table);

      const StandardizerParams standardizer = StandardizerParams::fit(train_imputed);
      const DesignMatrix train_design = standardizer.apply(train_imputed);
      const DesignMatrix val_design = standardizer.apply(val_imputed);
      const DesignMatrix test_design = standardizer.apply(test_imputed);

      StagedConfig staged;
      staged.clinical = config.stage_clinical;
      staged.head = config.stage_head;
      staged.finetune = config.stage_finetune;
      staged.head_hidden = config.head_hidden;
      staged.dropout_rate = config.dropout_rate;
      staged.init_seed = rng::derive_seed(config.train_seed, 500 + static_cast<std::uint64_t>(f));
      staged.clinical.seed = rng::derive_seed(config.train_seed, 3 * static_cast<std::uint64_t>(f));
      staged.head.seed = rng::derive_seed(config.train_seed, 3 * static_cast<std::uint64_t>(f) + 1);
      staged.finetune.seed =
          rng::derive_seed(config.train_seed, 3 * static_cast<std::uint64_t>(f) + 2);

      const StagedFitResult fit =
          staged_fit(train_design.batch(), val_design.batch(), train_design.feature_names,
                     train_design.treatment_index, train_design.scale, staged);

      ModelArtifact artifact{fit.params, standardizer, imputer};
      write_json_file((fold_dir / "params.json").string(), artifact.to_json());

      const std::vector<ScoredRow> fold_rows = detail::score_design(fit.params, test_design, f);
      detail::write_predictions_csv((fold_dir / "predictions.csv").string(), fold_rows);
      pooled.insert(pooled.end(), fold_rows.begin(), fold_rows.end());

      const TrainTrace& last = fit.finetune ? *fit.finetune
                               : fit.head   ? *fit.head
                                            : fit.clinical;
      summary.test_rows = fold_rows.size();
      summary.train_nll = last.train_nll.empty() ? 0.0 : last.train_nll.back();
      summary.val_nll = last.val_nll.empty() ? 0.0 : last.val_nll.back();
      (void)with_embeddings;
    } catch (const error& e) {
      summary.error = e.what();
    }
    report.folds.push_back(std::move(summary));
  }
  if (pooled.empty()) throw numeric_error("cv: every fold failed");

  report.metrics = scored_metrics(pooled, config);
  report.odds_ratios = odds_ratio_cis(table, config);

  detail::write_predictions_csv((out_dir / "plots" / "ite_distribution.csv").string(), pooled);
  detail::write_roc_csv((out_dir / "plots" / "roc.csv").string(), pooled);
  detail::write_or_csv((out_dir / "plots" / "odds_ratios.csv").string(), report.odds_ratios);
  write_json_file((out_dir / "report.json").string(), report.to_json());
  return report;
}

// Scores an arbitrary cohort with a saved model artifact; same report schema
// as run_cv, with point-only odds ratios (the parameters are fixed).
inline EvaluationReport run_evaluate(const ModelArtifact& artifact, const CohortTable& raw,
                                     const RunConfig& config) {
  CohortTable table = raw;
  bool any_missing = false;
  for (std::size_t c : table.schema.covariate_columns())
    for (double v : table.columns[c])
      if (CohortTable::is_missing(v)) any_missing = true;
  if (any_missing) {
    if (!artifact.imputer)
      throw data_error("evaluate: cohort has missing cells but the params file carries no imputer");
    table = artifact.imputer->apply(table);
  }
  const DesignMatrix design = artifact.standardizer.apply(table);
  if (design.feature_names != artifact.params.linear.feature_names)
    throw data_error("evaluate: design features do not align with the params file feature list");
  if (artifact.params.head &&
      design.embeddings.cols() != artifact.params.head->embedding_dim())
    throw data_error("evaluate: model expects embeddings of dimension " +
                     std::to_string(artifact.params.head->embedding_dim()));

  EvaluationReport report;
  report.label = config.label;
  report.config_echo = config_to_json(config);
  report.n_rows = table.rows();
  const auto arms = table.treatment_arms();
  report.n_treated = static_cast<std::size_t>(std::count(arms.begin(), arms.end(), 1));
  report.n_control = report.n_rows - report.n_treated;

  const std::vector<ScoredRow> rows = detail::score_design(artifact.params, design, 0);
  report.metrics = scored_metrics(rows, config);
  for (const OddsRatioRow& r : odds_ratio_report(artifact.params))
    report.odds_ratios.push_back({r.feature, r.odds_ratio, std::nullopt, std::nullopt});
  return report;
}

// Side-by-side comparison of several reports: rows are metrics, columns are
// model labels, mirroring the published results layout.
inline std::string comparison_table(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw config_error("report: need at least one report");
  std::vector<std::string> metric_names;
  for (const EvaluationReport& r : reports)
    for (const auto& [name, ci] : r.metrics)
      if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end())
        metric_names.push_back(name);
  std::sort(metric_names.begin(), metric_names.end());

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"metric"};
  for (const EvaluationReport& r : reports) header.push_back(r.label);
  for (const std::string& name : metric_names) {
    std::vector<std::string> row = {name};
    for (const EvaluationReport& r : reports) {
      const auto it = r.metrics.find(name);
      row.push_back(it == r.metrics.end()
                        ? "-"
                        : detail::format_ci_number(it->second.point) + " [" +
                              detail::format_ci_number(it->second.lower) + ", " +
                              detail::format_ci_number(it->second.upper) + "]");
    }
    cells.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) out.append(width[c] - row[c].size() + 2, ' ');
    }
    out += "\n";
  };
  emit(header);
  for (const auto& row : cells) emit(row);
  return out;
}

// Forest-plot data: one row per (model, feature) with point and CI bounds.
inline void write_or_forest_csv(const std::string& path,
                                const std::vector<EvaluationReport>& reports) {
  std::vector<std::vector<std::string>> lines;
  for (const EvaluationReport& r : reports)
    for (const OrEntry& e : r.odds_ratios)
      lines.push_back({r.label, e.feature, format_double(e.point),
                       e.lower ? format_double(*e.lower) : "",
                       e.upper ? format_double(*e.upper) : ""});
  write_csv(path, {"model", "feature", "point", "lower", "upper"}, lines);
}

// Synthetic-cohort generation to CSV: the cohort at `cohort_csv` and the
// ground-truth ITEs beside it with a "_truth.csv" suffix.
inline GeneratedRct run_simulate(const RunConfig& config) {
  if (!config.simulate) throw config_error("simulate: config has no 'simulate' section");
  const GeneratedRct rct = generate_rct(*config.simulate);

  std::vector<std::string> header = {"id"};
  for (const ColumnSpec& col : rct.cohort.schema.columns) header.push_back(col.name);
  std::vector<std::vector<std::string>> lines;
  for (std::size_t r = 0; r < rct.cohort.rows(); ++r) {
    std::vector<std::string> line = {rct.cohort.ids[r]};
    for (std::size_t c = 0; c < rct.cohort.columns.size(); ++c)
      line.push_back(format_double(rct.cohort.columns[c][r]));
    lines.push_back(std::move(line));
  }
  write_csv(config.cohort_csv, header, lines);

  std::filesystem::path truth(config.cohort_csv);
  truth.replace_extension();
  truth += "_truth.csv";
  std::vector<std::vector<std::string>> truth_lines;
  for (std::size_t r = 0; r < rct.cohort.rows(); ++r)
    truth_lines.push_back({rct.cohort.ids[r], format_double(rct.true_ite[r])});
  write_csv(truth.string(), {"id", "true_ite"}, truth_lines);
  return rct;
}

}  // namespace ontram
