#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "risksample/util.hpp"

namespace risksample {

// Flat row-major sample block with binary labels.
struct Samples {
  std::size_t dim = 0;
  std::vector<double> x;  // size() == n * dim
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }

  void push_back(std::span<const double> features, int label) {
    if (dim == 0) dim = features.size();
    if (features.size() != dim) throw std::invalid_argument("Samples: ragged row");
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(label);
  }
};

enum class ClassifierVariant { logistic, mlp, prior };

struct TrainingConfig {
  ClassifierVariant variant = ClassifierVariant::logistic;
  std::size_t hidden_width = 16;   // mlp only
  std::size_t max_epochs = 300;
  double learning_rate = 0.5;
  double momentum = 0.9;
  double lr_decay = 0.01;          // lr_t = lr / (1 + lr_decay * t)
  std::size_t patience = 25;       // epochs without validation improvement
};

struct ClassifierModel {
  ClassifierVariant variant = ClassifierVariant::logistic;
  std::size_t dim = 0;
  std::size_t hidden_width = 0;
  // logistic: w1 = weights (dim), b2 = bias
  // mlp: w1 = W1 (hidden x dim, row-major), b1 (hidden), w2 (hidden), b2
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
  double prior_p = 0.5;  // prior variant only

  // training metadata
  std::uint64_t rng_seed = 0;
  std::size_t epochs_run = 0;
  double best_val_loss = 0.0;
  bool has_validation = false;
  bool degenerate = false;  // single-class training set fallback
  std::vector<double> val_loss_history;
};

struct Prediction {
  std::string pair_id;
  double probability = 0.5;
  int predicted_label = 0;
};

constexpr double kProbEps = 1e-12;

inline double clamp_probability(double p) {
  return std::min(1.0 - kProbEps, std::max(kProbEps, p));
}

namespace detail {

inline double forward_logit(const ClassifierModel& m, std::span<const double> x,
                            std::vector<double>* hidden_out = nullptr) {
  if (m.variant == ClassifierVariant::prior) {
    return std::log(m.prior_p / (1.0 - m.prior_p));
  }
  if (x.size() != m.dim) {
    throw std::invalid_argument("classifier: representation dimension mismatch");
  }
  if (m.variant == ClassifierVariant::logistic) {
    return dot(m.w1, x) + m.b2;
  }
  // one hidden ReLU layer
  const std::size_t h = m.hidden_width;
  std::vector<double> a(h);
  for (std::size_t i = 0; i < h; ++i) {
    double z = m.b1[i];
    const double* wrow = m.w1.data() + i * m.dim;
    for (std::size_t j = 0; j < m.dim; ++j) z += wrow[j] * x[j];
    a[i] = z > 0.0 ? z : 0.0;
  }
  double out = m.b2;
  for (std::size_t i = 0; i < h; ++i) out += m.w2[i] * a[i];
  if (hidden_out) *hidden_out = std::move(a);
  return out;
}

}  // namespace detail

inline double predict_probability(const ClassifierModel& m, std::span<const double> x) {
  return clamp_probability(sigmoid(detail::forward_logit(m, x)));
}

inline Prediction predict(const ClassifierModel& m, std::span<const double> x,
                          std::string pair_id = {}) {
  Prediction p;
  p.pair_id = std::move(pair_id);
  p.probability = predict_probability(m, x);
  p.predicted_label = p.probability >= 0.5 ? 1 : 0;
  return p;
}

// Hidden-layer activations; the representation substitute when clustering in
// the MLP's learned space.
inline std::vector<double> hidden_activations(const ClassifierModel& m,
                                              std::span<const double> x) {
  if (m.variant != ClassifierVariant::mlp) {
    throw std::invalid_argument("hidden_activations: model has no hidden layer");
  }
  std::vector<double> hidden;
  detail::forward_logit(m, x, &hidden);
  return hidden;
}

inline double prediction_entropy(double p) {
  p = clamp_probability(p);
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

namespace detail {

inline double mean_cross_entropy(const ClassifierModel& m, const Samples& s) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = predict_probability(m, s.row(i));
    loss += s.y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return loss / static_cast<double>(s.size());
}

struct GradientBuffers {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
};

// class-weighted cross-entropy gradient, full batch
inline void accumulate_gradient(const ClassifierModel& m, const Samples& s,
                                double c_pos, double c_neg, GradientBuffers& g) {
  const std::size_t n = s.size();
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2 = 0.0;
  double weight_sum = 0.0;
  std::vector<double> hidden;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = s.row(i);
    const double c = s.y[i] == 1 ? c_pos : c_neg;
    weight_sum += c;
    double logit;
    if (m.variant == ClassifierVariant::mlp) {
      logit = forward_logit(m, x, &hidden);
    } else {
      logit = forward_logit(m, x);
    }
    const double err = c * (sigmoid(logit) - static_cast<double>(s.y[i]));
    if (m.variant == ClassifierVariant::logistic) {
      for (std::size_t j = 0; j < m.dim; ++j) g.w1[j] += err * x[j];
      g.b2 += err;
    } else {
      g.b2 += err;
      for (std::size_t k = 0; k < m.hidden_width; ++k) {
        g.w2[k] += err * hidden[k];
        if (hidden[k] > 0.0) {
          const double back = err * m.w2[k];
          g.b1[k] += back;
          double* grow = g.w1.data() + k * m.dim;
          for (std::size_t j = 0; j < m.dim; ++j) grow[j] += back * x[j];
        }
      }
    }
  }
  const double inv = 1.0 / weight_sum;
  for (double& v : g.w1) v *= inv;
  for (double& v : g.b1) v *= inv;
  for (double& v : g.w2) v *= inv;
  g.b2 *= inv;
}

}  // namespace detail

// Full-batch gradient descent with momentum and step decay; early stopping on
// validation loss; returns the snapshot with the best validation loss.
// A single-class training set yields a flagged calibrated-prior model.
inline ClassifierModel train_classifier(const Samples& train, const Samples& val,
                                        const TrainingConfig& config,
                                        std::uint64_t rng_seed) {
  if (train.size() == 0) throw std::invalid_argument("train_classifier: empty training set");
  std::size_t n_pos = 0;
  for (int y : train.y) n_pos += y == 1;
  const std::size_t n_neg = train.size() - n_pos;

  if (n_pos == 0 || n_neg == 0) {
    ClassifierModel m;
    m.variant = ClassifierVariant::prior;
    m.dim = train.dim;
    m.rng_seed = rng_seed;
    m.degenerate = true;
    m.prior_p = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(train.size()) + 2.0);
    return m;
  }

  ClassifierModel m;
  m.variant = config.variant;
  m.dim = train.dim;
  m.rng_seed = rng_seed;
  if (config.variant == ClassifierVariant::logistic) {
    m.w1.assign(train.dim, 0.0);
  } else {
    m.hidden_width = config.hidden_width;
    Rng rng(rng_seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(train.dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(config.hidden_width));
    m.w1.resize(config.hidden_width * train.dim);
    m.b1.assign(config.hidden_width, 0.0);
    m.w2.resize(config.hidden_width);
    for (double& v : m.w1) v = rng.uniform(-s1, s1);
    for (double& v : m.w2) v = rng.uniform(-s2, s2);
  }

  const double c_pos = static_cast<double>(train.size()) / (2.0 * static_cast<double>(n_pos));
  const double c_neg = static_cast<double>(train.size()) / (2.0 * static_cast<double>(n_neg));

  detail::GradientBuffers grad;
  std::vector<double> v_w1(m.w1.size(), 0.0), v_b1(m.b1.size(), 0.0), v_w2(m.w2.size(), 0.0);
  double v_b2 = 0.0;

  const bool use_val = val.size() > 0;
  m.has_validation = use_val;
  ClassifierModel best = m;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    detail::accumulate_gradient(m, train, c_pos, c_neg, grad);
    const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(epoch));
    for (std::size_t j = 0; j < m.w1.size(); ++j) {
      v_w1[j] = config.momentum * v_w1[j] - lr * grad.w1[j];
      m.w1[j] += v_w1[j];
    }
    for (std::size_t j = 0; j < m.b1.size(); ++j) {
      v_b1[j] = config.momentum * v_b1[j] - lr * grad.b1[j];
      m.b1[j] += v_b1[j];
    }
    for (std::size_t j = 0; j < m.w2.size(); ++j) {
      v_w2[j] = config.momentum * v_w2[j] - lr * grad.w2[j];
      m.w2[j] += v_w2[j];
    }
    v_b2 = config.momentum * v_b2 - lr * grad.b2;
    m.b2 += v_b2;
    m.epochs_run = epoch + 1;

    if (use_val) {
      const double vloss = detail::mean_cross_entropy(m, val);
      m.val_loss_history.push_back(vloss);
      if (vloss < best_loss) {
        best_loss = vloss;
        best = m;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }

  if (!use_val) {
    m.best_val_loss = 0.0;
    return m;
  }
  best.best_val_loss = best_loss;
  best.val_loss_history = m.val_loss_history;
  best.epochs_run = m.epochs_run;
  return best;
}

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Metrics evaluate_f1(const ClassifierModel& m, const Samples& split) {
  if (split.size() == 0) throw std::invalid_argument("evaluate_f1: empty split");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const int pred = predict_probability(m, split.row(i)) >= 0.5 ? 1 : 0;
    if (pred == 1 && split.y[i] == 1) ++tp;
    else if (pred == 1 && split.y[i] == 0) ++fp;
    else if (pred == 0 && split.y[i] == 1) ++fn;
  }
  Metrics out;
  out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

inline const char* variant_name(ClassifierVariant v) {
  switch (v) {
    case ClassifierVariant::logistic: return "logistic";
    case ClassifierVariant::mlp: return "mlp";
    case ClassifierVariant::prior: return "prior";
  }
  return "?";
}

inline ClassifierVariant variant_from_name(const std::string& s) {
  if (s == "logistic") return ClassifierVariant::logistic;
  if (s == "mlp") return ClassifierVariant::mlp;
  if (s == "prior") return ClassifierVariant::prior;
  throw std::invalid_argument("unknown classifier variant: " + s);
}

inline nlohmann::json model_to_json(const ClassifierModel& m) {
  return nlohmann::json{{"variant", variant_name(m.variant)},
                        {"dim", m.dim},
                        {"hidden_width", m.hidden_width},
                        {"w1", m.w1},
                        {"b1", m.b1},
                        {"w2", m.w2},
                        {"b2", m.b2},
                        {"prior_p", m.prior_p},
                        {"rng_seed", m.rng_seed},
                        {"epochs_run", m.epochs_run},
                        {"best_val_loss", m.best_val_loss},
                        {"has_validation", m.has_validation},
                        {"degenerate", m.degenerate}};
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  ClassifierModel m;
  m.variant = variant_from_name(j.at("variant").get<std::string>());
  m.dim = j.at("dim").get<std::size_t>();
  m.hidden_width = j.at("hidden_width").get<std::size_t>();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<double>();
  m.prior_p = j.at("prior_p").get<double>();
  m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  m.epochs_run = j.at("epochs_run").get<std::size_t>();
  m.best_val_loss = j.at("best_val_loss").get<double>();
  m.has_validation = j.at("has_validation").get<bool>();
  m.degenerate = j.at("degenerate").get<bool>();
  return m;
}

}  // namespace risksample
