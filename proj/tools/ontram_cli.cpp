// ontram: ordinal transformation models for trial outcome prediction and
// individualized treatment effects.
//
// Subcommands: simulate (synthetic trial to CSV), cv (cross-validated fit
// and evaluation), evaluate (score a cohort with a saved model), report
// (compare report JSONs). One JSON config document drives everything; a few
// scalar flags override config fields (flag > config > default).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ontram/ontram.hpp"

namespace {

struct Overrides {
  std::optional<std::string> label;
  std::optional<std::string> cohort;
  std::optional<std::string> embeddings;
  std::optional<std::string> output;
  std::optional<int> folds;
  std::optional<int> impute_k;
  std::optional<std::size_t> bootstrap_replicates;
  std::optional<int> bootstrap_threads;
  std::optional<std::uint64_t> seed_split, seed_train, seed_bootstrap, seed_truncation;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--label", o.label, "Model label used in reports");
  cmd->add_option("--cohort", o.cohort, "Cohort CSV path (overrides data.cohort_csv)");
  cmd->add_option("--embeddings", o.embeddings, "Embeddings CSV path");
  cmd->add_option("--output", o.output, "Output directory");
  cmd->add_option("--folds", o.folds, "Cross-validation folds");
  cmd->add_option("--impute-k", o.impute_k, "k for k-NN imputation");
  cmd->add_option("--bootstrap-replicates", o.bootstrap_replicates, "Bootstrap replicates");
  cmd->add_option("--bootstrap-threads", o.bootstrap_threads, "Bootstrap worker threads");
  cmd->add_option("--seed-split", o.seed_split, "Fold-split seed");
  cmd->add_option("--seed-train", o.seed_train, "Training seed");
  cmd->add_option("--seed-bootstrap", o.seed_bootstrap, "Bootstrap seed");
  cmd->add_option("--seed-truncation", o.seed_truncation, "Pair-truncation seed");
}

ontram::RunConfig load_config(const std::string& path, const Overrides& o) {
  ontram::RunConfig config = ontram::config_from_json(ontram::read_json_file(path));
  if (o.label) config.label = *o.label;
  if (o.cohort) config.cohort_csv = *o.cohort;
  if (o.embeddings) config.embeddings_csv = *o.embeddings;
  if (o.output) config.output_dir = *o.output;
  if (o.folds) config.folds = *o.folds;
  if (o.impute_k) config.impute_k = *o.impute_k;
  if (o.bootstrap_replicates) config.bootstrap_replicates = *o.bootstrap_replicates;
  if (o.bootstrap_threads) config.bootstrap_threads = *o.bootstrap_threads;
  if (o.seed_split) config.split_seed = *o.seed_split;
  if (o.seed_train) config.train_seed = *o.seed_train;
  if (o.seed_bootstrap) config.bootstrap_seed = *o.seed_bootstrap;
  if (o.seed_truncation) config.truncation_seed = *o.seed_truncation;
  config.validate();
  return config;
}

int cmd_simulate(const std::string& config_path, const Overrides& o) {
  const ontram::RunConfig config = load_config(config_path, o);
  const ontram::GeneratedRct rct = ontram::run_simulate(config);
  const auto arms = rct.cohort.treatment_arms();
  const auto favorable = rct.cohort.favorable_labels();
  const long treated = std::count(arms.begin(), arms.end(), 1);
  std::cout << "wrote " << rct.cohort.rows() << " patients to " << config.cohort_csv << "\n"
            << "  treated " << treated << ", control "
            << static_cast<long>(rct.cohort.rows()) - treated << "\n"
            << "  favorable outcomes "
            << std::count(favorable.begin(), favorable.end(), 1) << "\n";
  std::map<int, long> class_counts;
  const Eigen::VectorXi outcomes = rct.cohort.outcomes();
  for (Eigen::Index i = 0; i < outcomes.size(); ++i) class_counts[outcomes[i]] += 1;
  std::cout << "  outcome classes:";
  for (const auto& [cls, count] : class_counts) std::cout << " " << cls << ":" << count;
  std::cout << "\n";
  return 0;
}

int cmd_cv(const std::string& config_path, const Overrides& o) {
  const ontram::RunConfig config = load_config(config_path, o);
  const ontram::EvaluationReport report = ontram::run_cv(config);
  std::cout << "cross-validation report (" << report.label << ", n=" << report.n_rows << ")\n";
  for (const auto& [name, ci] : report.metrics)
    std::cout << "  " << name << ": " << ci.point << " [" << ci.lower << ", " << ci.upper << "]\n";
  for (const auto& fold : report.folds)
    if (!fold.error.empty())
      std::cout << "  fold " << fold.fold << " FAILED: " << fold.error << "\n";
  std::cout << "artifacts under " << config.output_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& params_path,
                 const Overrides& o) {
  const ontram::RunConfig config = load_config(config_path, o);
  const ontram::ModelArtifact artifact =
      ontram::ModelArtifact::from_json(ontram::read_json_file(params_path));
  ontram::CohortTable table = ontram::ingest_csv(config.cohort_csv, config.schema);
  if (config.embeddings_csv) {
    if (!config.schema.id_column)
      throw ontram::config_error("embeddings_csv requires an identifier column");
    table = ontram::attach_embeddings(table, *config.embeddings_csv, *config.schema.id_column);
  }
  const ontram::EvaluationReport report = ontram::run_evaluate(artifact, table, config);
  std::filesystem::create_directories(config.output_dir);
  const std::string out = (std::filesystem::path(config.output_dir) / "report.json").string();
  ontram::write_json_file(out, report.to_json());
  std::cout << "evaluation report (" << report.label << ", n=" << report.n_rows << ")\n";
  for (const auto& [name, ci] : report.metrics)
    std::cout << "  " << name << ": " << ci.point << " [" << ci.lower << ", " << ci.upper << "]\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& report_paths, const std::string& output_dir) {
  std::vector<ontram::EvaluationReport> reports;
  for (const std::string& path : report_paths)
    reports.push_back(ontram::EvaluationReport::from_json(ontram::read_json_file(path)));
  const std::string table = ontram::comparison_table(reports);
  std::cout << table;
  std::filesystem::create_directories(output_dir);
  const std::filesystem::path dir(output_dir);
  std::ofstream summary(dir / "comparison.txt", std::ios::binary);
  summary << table;
  ontram::write_or_forest_csv((dir / "or_forest.csv").string(), reports);
  std::cout << "wrote " << (dir / "comparison.txt").string() << " and "
            << (dir / "or_forest.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordinal transformation models for trial outcomes and treatment effects"};
  app.require_subcommand(1);

  std::string config_path, params_path, report_output = "report_out";
  std::vector<std::string> report_paths;
  Overrides overrides;

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic trial cohort CSV");
  simulate->add_option("--config", config_path, "Run config JSON")->required();
  add_override_flags(simulate, overrides);

  CLI::App* cv = app.add_subcommand("cv", "Cross-validated fit and evaluation");
  cv->add_option("--config", config_path, "Run config JSON")->required();
  add_override_flags(cv, overrides);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a cohort with a saved params file");
  evaluate->add_option("--config", config_path, "Run config JSON")->required();
  evaluate->add_option("--params", params_path, "params.json from a previous fit")->required();
  add_override_flags(evaluate, overrides);

  CLI::App* report = app.add_subcommand("report", "Compare one or more report JSONs");
  report->add_option("reports", report_paths, "report.json files")->required();
  report->add_option("--output", report_output, "Directory for comparison outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, overrides);
    if (cv->parsed()) return cmd_cv(config_path, overrides);
    if (evaluate->parsed()) return cmd_evaluate(config_path, params_path, overrides);
    if (report->parsed()) return cmd_report(report_paths, report_output);
  } catch (const ontram::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ontram::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ontram::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
