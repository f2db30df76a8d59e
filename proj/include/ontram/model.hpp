#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/rng.hpp"

namespace ontram {

// Ordinal outcome with classes 0..K-1; "favorable" means class <= favorable_cut.
struct OutcomeScale {
  int class_count = 7;
  int favorable_cut = 2;

  void validate() const {
    if (class_count < 2) throw config_error("OutcomeScale: class_count must be >= 2");
    if (favorable_cut < 0 || favorable_cut >= class_count - 1)
      throw config_error("OutcomeScale: favorable_cut must satisfy 0 <= c < K-1");
  }
  int cut_count() const { return class_count - 1; }
};

// Strictly increasing cut-points theta derived from raw parameters gamma:
// theta_1 = gamma_1, theta_k = theta_{k-1} + exp(gamma_k).
class CutpointVector {
 public:
  CutpointVector() = default;

  explicit CutpointVector(Eigen::VectorXd gamma) : gamma_(std::move(gamma)) {
    recompute();
  }

  static CutpointVector from_theta(const Eigen::VectorXd& theta) {
    Eigen::VectorXd gamma(theta.size());
    if (theta.size() > 0) gamma[0] = theta[0];
    for (Eigen::Index k = 1; k < theta.size(); ++k) {
      const double inc = theta[k] - theta[k - 1];
      if (!(inc > 0.0)) throw numeric_error("CutpointVector: theta not strictly increasing");
      gamma[k] = std::log(inc);
    }
    return CutpointVector(std::move(gamma));
  }

  const Eigen::VectorXd& gamma() const { return gamma_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  Eigen::Index size() const { return gamma_.size(); }

  void set_gamma(Eigen::VectorXd gamma) {
    gamma_ = std::move(gamma);
    recompute();
  }

 private:
  void recompute() {
    theta_.resize(gamma_.size());
    if (gamma_.size() == 0) return;
    theta_[0] = gamma_[0];
    for (Eigen::Index k = 1; k < gamma_.size(); ++k)
      theta_[k] = theta_[k - 1] + std::exp(gamma_[k]);
    if (!theta_.allFinite()) throw numeric_error("CutpointVector: non-finite cut-points");
  }

  Eigen::VectorXd gamma_;
  Eigen::VectorXd theta_;
};

// Linear shift x^T beta over a named feature list.
struct LinearPredictor {
  Eigen::VectorXd beta;
  std::vector<std::string> feature_names;
  Eigen::Index treatment_index = -1;

  void validate() const {
    if (static_cast<std::size_t>(beta.size()) != feature_names.size())
      throw data_error("LinearPredictor: beta length does not match feature list");
    if (treatment_index < 0 || treatment_index >= beta.size())
      throw data_error("LinearPredictor: treatment_index out of range");
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      for (std::size_t j = i + 1; j < feature_names.size(); ++j)
        if (feature_names[i] == feature_names[j])
          throw data_error("LinearPredictor: duplicate feature name " + feature_names[i]);
  }
};

// Inverted-dropout masks, one matrix per hidden layer (n x width), entries
// 0 or 1/keep_prob. Generated explicitly from a seeded engine; inference
// paths simply pass none.
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> layers;
};

// Per-row activations kept for backpropagation.
struct HeadActivations {
  std::vector<Eigen::MatrixXd> pre;  // pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> act;  // post-ReLU (and post-dropout) per hidden layer
  Eigen::VectorXd eta;
};

struct HeadGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Feed-forward shift eta(e): d_emb -> hidden... -> 1, ReLU on hidden layers,
// linear output. Default widths 256/128, dropout 0.3 on hidden layers.
struct EmbeddingHead {
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is (out x in)
  std::vector<Eigen::VectorXd> biases;
  double dropout_rate = 0.3;

  static EmbeddingHead init(Eigen::Index embedding_dim, const std::vector<Eigen::Index>& hidden,
                            double dropout_rate, rng::engine& g) {
    if (embedding_dim < 1) throw config_error("EmbeddingHead: embedding_dim must be >= 1");
    EmbeddingHead head;
    head.dropout_rate = dropout_rate;
    std::vector<Eigen::Index> widths;
    widths.push_back(embedding_dim);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const Eigen::Index fan_in = widths[l];
      const Eigen::Index fan_out = widths[l + 1];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      Eigen::MatrixXd w(fan_out, fan_in);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng::uniform(g, -bound, bound);
      head.weights.push_back(std::move(w));
      head.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return head;
  }

  static EmbeddingHead init(Eigen::Index embedding_dim, rng::engine& g) {
    return init(embedding_dim, {256, 128}, 0.3, g);
  }

  Eigen::Index embedding_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
  std::size_t hidden_layer_count() const { return weights.size() - 1; }

  DropoutMasks make_dropout_masks(Eigen::Index n, rng::engine& g) const {
    const double keep = 1.0 - dropout_rate;
    if (!(keep > 0.0)) throw config_error("EmbeddingHead: dropout rate must be < 1");
    DropoutMasks masks;
    for (std::size_t l = 0; l < hidden_layer_count(); ++l) {
      Eigen::MatrixXd m(n, weights[l].rows());
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          m(i, j) = rng::bernoulli(g, keep) ? 1.0 / keep : 0.0;
      masks.layers.push_back(std::move(m));
    }
    return masks;
  }

  // Forward pass over a batch (n x d_emb). Deterministic when masks == nullptr.
  HeadActivations forward(const Eigen::MatrixXd& embeddings, const DropoutMasks* masks = nullptr) const {
    if (embeddings.cols() != embedding_dim())
      throw data_error("EmbeddingHead: embedding dimension mismatch");
    if (masks && masks->layers.size() != hidden_layer_count())
      throw data_error("EmbeddingHead: dropout mask layer count mismatch");
    HeadActivations out;
    Eigen::MatrixXd a = embeddings;
    for (std::size_t l = 0; l < hidden_layer_count(); ++l) {
      Eigen::MatrixXd pre = (a * weights[l].transpose()).rowwise() + biases[l].transpose();
      Eigen::MatrixXd act = pre.cwiseMax(0.0);
      if (masks) {
        if (masks->layers[l].rows() != act.rows() || masks->layers[l].cols() != act.cols())
          throw data_error("EmbeddingHead: dropout mask shape mismatch");
        act = act.cwiseProduct(masks->layers[l]);
      }
      out.pre.push_back(std::move(pre));
      out.act.push_back(act);
      a = std::move(act);
    }
    out.eta = (a * weights.back().transpose()).col(0).array() + biases.back()[0];
    return out;
  }

  // Backpropagates d(loss)/d(eta) through the network. `embeddings` and
  // `fwd` must come from the matching forward call (same masks).
  HeadGradient backward(const Eigen::MatrixXd& embeddings, const HeadActivations& fwd,
                        const Eigen::VectorXd& d_eta, const DropoutMasks* masks = nullptr) const {
    const std::size_t hidden_n = hidden_layer_count();
    HeadGradient grad;
    grad.weights.resize(weights.size());
    grad.biases.resize(biases.size());

    const Eigen::MatrixXd& last_act = hidden_n > 0 ? fwd.act.back() : embeddings;
    grad.weights.back() = d_eta.transpose() * last_act;
    grad.biases.back() = Eigen::VectorXd::Constant(1, d_eta.sum());

    Eigen::MatrixXd d_act = d_eta * weights.back();  // n x last hidden width
    for (std::size_t l = hidden_n; l-- > 0;) {
      Eigen::MatrixXd d_pre =
          d_act.cwiseProduct((fwd.pre[l].array() > 0.0).cast<double>().matrix());
      if (masks) d_pre = d_pre.cwiseProduct(masks->layers[l]);
      const Eigen::MatrixXd& input = l == 0 ? embeddings : fwd.act[l - 1];
      grad.weights[l] = d_pre.transpose() * input;
      grad.biases[l] = d_pre.colwise().sum().transpose();
      if (l > 0) d_act = d_pre * weights[l];
    }
    return grad;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }
};

// Gradient of the NLL, aligned to (gamma, beta, head weights).
struct Gradient {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  std::optional<HeadGradient> head;
};

// All trainable state of an ONTRAM; immutable once training finishes.
struct ModelParams {
  OutcomeScale scale;
  CutpointVector cutpoints;
  LinearPredictor linear;
  std::optional<EmbeddingHead> head;

  void validate() const {
    scale.validate();
    if (cutpoints.size() != scale.cut_count())
      throw data_error("ModelParams: cut-point count does not match class count");
    linear.validate();
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = cutpoints.size() + linear.beta.size();
    if (head) n += head->parameter_count();
    return n;
  }
};

// Flattening order: gamma, beta, then per head layer W (column-major) and b.
// Shared by the optimizer, the finite-difference oracle and serialization.
inline Eigen::VectorXd flatten(const ModelParams& params) {
  Eigen::VectorXd out(params.parameter_count());
  Eigen::Index at = 0;
  out.segment(at, params.cutpoints.size()) = params.cutpoints.gamma();
  at += params.cutpoints.size();
  out.segment(at, params.linear.beta.size()) = params.linear.beta;
  at += params.linear.beta.size();
  if (params.head) {
    for (std::size_t l = 0; l < params.head->weights.size(); ++l) {
      const auto& w = params.head->weights[l];
      out.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
      at += w.size();
      out.segment(at, params.head->biases[l].size()) = params.head->biases[l];
      at += params.head->biases[l].size();
    }
  }
  return out;
}

inline Eigen::VectorXd flatten(const Gradient& grad) {
  Eigen::Index n = grad.gamma.size() + grad.beta.size();
  if (grad.head)
    for (std::size_t l = 0; l < grad.head->weights.size(); ++l)
      n += grad.head->weights[l].size() + grad.head->biases[l].size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  out.segment(at, grad.gamma.size()) = grad.gamma;
  at += grad.gamma.size();
  out.segment(at, grad.beta.size()) = grad.beta;
  at += grad.beta.size();
  if (grad.head) {
    for (std::size_t l = 0; l < grad.head->weights.size(); ++l) {
      const auto& w = grad.head->weights[l];
      out.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
      at += w.size();
      out.segment(at, grad.head->biases[l].size()) = grad.head->biases[l];
      at += grad.head->biases[l].size();
    }
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& values, ModelParams& params) {
  if (values.size() != params.parameter_count())
    throw data_error("unflatten: parameter count mismatch");
  Eigen::Index at = 0;
  params.cutpoints.set_gamma(values.segment(at, params.cutpoints.size()));
  at += params.cutpoints.size();
  params.linear.beta = values.segment(at, params.linear.beta.size());
  at += params.linear.beta.size();
  if (params.head) {
    for (std::size_t l = 0; l < params.head->weights.size(); ++l) {
      auto& w = params.head->weights[l];
      Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = values.segment(at, w.size());
      at += w.size();
      params.head->biases[l] = values.segment(at, params.head->biases[l].size());
      at += params.head->biases[l].size();
    }
  }
}

// Parameter groups for freezing. Mask entry 1 = trainable, 0 = frozen.
struct TrainableGroups {
  bool cutpoints = true;
  bool linear = true;
  bool head = true;
};

inline Eigen::VectorXd trainable_mask(const ModelParams& params, const TrainableGroups& groups) {
  Eigen::VectorXd mask(params.parameter_count());
  Eigen::Index at = 0;
  mask.segment(at, params.cutpoints.size()).setConstant(groups.cutpoints ? 1.0 : 0.0);
  at += params.cutpoints.size();
  mask.segment(at, params.linear.beta.size()).setConstant(groups.linear ? 1.0 : 0.0);
  at += params.linear.beta.size();
  if (params.head)
    mask.segment(at, params.head->parameter_count()).setConstant(groups.head ? 1.0 : 0.0);
  return mask;
}

// Mask selecting head parameters only; used for decoupled weight decay.
inline Eigen::VectorXd head_mask(const ModelParams& params) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(params.parameter_count());
  if (params.head)
    mask.tail(params.head->parameter_count()).setConstant(1.0);
  return mask;
}

}  // namespace ontram
