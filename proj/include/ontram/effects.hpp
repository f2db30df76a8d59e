#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/model.hpp"
#include "ontram/standardize.hpp"

namespace ontram {

// Predictions for one patient under treatment = 1 and treatment = 0.
struct CounterfactualPair {
  Eigen::VectorXd probs_treated;
  Eigen::VectorXd probs_control;
  double favorable_treated = 0.0;
  double favorable_control = 0.0;
};

struct IteRecord {
  std::string id;
  double p_treated = 0.0;    // favorable probability with treatment set to 1
  double p_control = 0.0;    // ... set to 0
  double ite = 0.0;          // p_treated - p_control
  int arm = 0;               // observed treatment arm
  int favorable = 0;         // observed favorable outcome flag
};

// Two evaluations differing only in the treatment entry of x; dropout off.
inline CounterfactualPair counterfactual_predict(const ModelParams& params,
                                                 const Eigen::VectorXd& x,
                                                 const std::optional<Eigen::VectorXd>& e =
                                                     std::nullopt) {
  CounterfactualPair pair;
  Eigen::VectorXd toggled = x;
  toggled[params.linear.treatment_index] = 1.0;
  pair.probs_treated = class_probabilities(params, toggled, e);
  pair.favorable_treated = favorable_probability(params, toggled, e);
  toggled[params.linear.treatment_index] = 0.0;
  pair.probs_control = class_probabilities(params, toggled, e);
  pair.favorable_control = favorable_probability(params, toggled, e);
  return pair;
}

// One IteRecord per patient of a standardized cohort.
inline std::vector<IteRecord> ite_table(const ModelParams& params, const DesignMatrix& design) {
  std::vector<IteRecord> records;
  records.reserve(static_cast<std::size_t>(design.x.rows()));
  const bool with_head = params.head.has_value();
  for (Eigen::Index i = 0; i < design.x.rows(); ++i) {
    const std::optional<Eigen::VectorXd> e =
        with_head ? std::optional<Eigen::VectorXd>(design.embeddings.row(i).transpose())
                  : std::nullopt;
    const CounterfactualPair pair = counterfactual_predict(params, design.x.row(i).transpose(), e);
    IteRecord rec;
    rec.id = design.ids[static_cast<std::size_t>(i)];
    rec.p_treated = pair.favorable_treated;
    rec.p_control = pair.favorable_control;
    rec.ite = pair.favorable_treated - pair.favorable_control;
    rec.arm = static_cast<int>(design.x(i, design.treatment_index));
    rec.favorable = design.outcome[i] <= design.scale.favorable_cut ? 1 : 0;
    records.push_back(std::move(rec));
  }
  return records;
}

// Observed risk difference: favorable rate under treatment minus control.
inline double ate_observed(const std::vector<int>& favorable, const std::vector<int>& arms) {
  if (favorable.size() != arms.size()) throw data_error("ate_observed: length mismatch");
  long fav_t = 0, n_t = 0, fav_c = 0, n_c = 0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i] == 1) {
      ++n_t;
      fav_t += favorable[i];
    } else {
      ++n_c;
      fav_c += favorable[i];
    }
  }
  if (n_t == 0 || n_c == 0) throw data_error("ate_observed: empty treatment arm");
  return static_cast<double>(fav_t) / static_cast<double>(n_t) -
         static_cast<double>(fav_c) / static_cast<double>(n_c);
}

// 2x2 odds ratio (fav_t/unfav_t) / (fav_c/unfav_c) from raw counts.
inline double ate_odds_ratio(const std::vector<int>& favorable, const std::vector<int>& arms) {
  if (favorable.size() != arms.size()) throw data_error("ate_odds_ratio: length mismatch");
  long fav_t = 0, unfav_t = 0, fav_c = 0, unfav_c = 0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i] == 1)
      (favorable[i] ? fav_t : unfav_t) += 1;
    else
      (favorable[i] ? fav_c : unfav_c) += 1;
  }
  if (fav_t == 0 || unfav_t == 0 || fav_c == 0 || unfav_c == 0)
    throw numeric_error(
        "ate_odds_ratio: zero cell in the 2x2 table (continuity correction out of scope)");
  return (static_cast<double>(fav_t) / static_cast<double>(unfav_t)) /
         (static_cast<double>(fav_c) / static_cast<double>(unfav_c));
}

// The ATE-minus-mean-ITE calibration statistic; positive values mean the
// model underestimates the observed ATE.
inline double ate_calibration(const std::vector<IteRecord>& records,
                              const std::vector<int>& favorable, const std::vector<int>& arms) {
  if (records.empty()) throw data_error("ate_calibration: no records");
  double mean_ite = 0.0;
  for (const IteRecord& r : records) mean_ite += r.ite;
  mean_ite /= static_cast<double>(records.size());
  return ate_observed(favorable, arms) - mean_ite;
}

struct OddsRatioRow {
  std::string feature;
  double odds_ratio = 1.0;
};

// exp(beta_p) per feature; OR > 1 means higher odds of a worse (higher)
// class. Continuous features are per standard deviation (they were
// standardized), binary ones per level switch.
inline std::vector<OddsRatioRow> odds_ratio_report(const ModelParams& params) {
  std::vector<OddsRatioRow> rows;
  rows.reserve(params.linear.feature_names.size());
  for (std::size_t j = 0; j < params.linear.feature_names.size(); ++j)
    rows.push_back({params.linear.feature_names[j],
                    std::exp(params.linear.beta[static_cast<Eigen::Index>(j)])});
  return rows;
}

}  // namespace ontram
