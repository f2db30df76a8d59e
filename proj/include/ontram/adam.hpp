#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "ontram/errors.hpp"

namespace ontram {

// Adam defaults (beta1 0.9, beta2 0.999, eps 1e-8).
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  AdamConfig config;

  static AdamState init(Eigen::Index n, const AdamConfig& config) {
    AdamState state;
    state.m = Eigen::VectorXd::Zero(n);
    state.v = Eigen::VectorXd::Zero(n);
    state.config = config;
    return state;
  }
};

// One bias-corrected Adam update in place. Mask entry 0 freezes the
// coordinate: neither its value nor its moments change.
inline void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& gradient,
                      const Eigen::VectorXd& mask) {
  if (params.size() != gradient.size() || params.size() != state.m.size() ||
      params.size() != mask.size())
    throw data_error("adam_step: shape mismatch");
  if (!gradient.allFinite()) throw numeric_error("adam_step: non-finite gradient");

  const AdamConfig& c = state.config;
  state.step += 1;
  const Eigen::ArrayXd g = gradient.array() * mask.array();
  state.m.array() = c.beta1 * state.m.array() + (1.0 - c.beta1) * g;
  state.v.array() = c.beta2 * state.v.array() + (1.0 - c.beta2) * g.square();
  const double m_corr = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double v_corr = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd m_hat = state.m.array() / m_corr;
  const Eigen::ArrayXd v_hat = state.v.array() / v_corr;
  params.array() -= mask.array() * (c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon));
}

}  // namespace ontram
