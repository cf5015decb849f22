#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "risksample/util.hpp"

namespace risksample {

constexpr double kBoundTolerance = 1e-6;

// Largest singular value via power iteration on A^T A, deterministic start.
inline double spectral_norm(const Mat& a, std::size_t iterations = 100) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  Rng rng(0x5eed5eedULL);
  std::vector<double> v(a.cols);
  for (double& x : v) x = rng.normal();
  double norm = 0.0;
  std::vector<double> u(a.rows);
  for (std::size_t it = 0; it < iterations; ++it) {
    // u = A v
    for (std::size_t i = 0; i < a.rows; ++i) u[i] = dot(a.row(i), v);
    // v = A^T u
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
      const double ui = u[i];
      for (std::size_t j = 0; j < a.cols; ++j) v[j] += a(i, j) * ui;
    }
    double vn = std::sqrt(dot(v, v));
    if (vn == 0.0) return 0.0;
    for (double& x : v) x /= vn;
  }
  for (std::size_t i = 0; i < a.rows; ++i) u[i] = dot(a.row(i), v);
  norm = std::sqrt(dot(u, u));
  return norm;
}

// Scales the matrix down to operator norm alpha when it exceeds it;
// matrices already inside the ball are returned unchanged.
inline Mat project_operator_norm(Mat m, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("project_operator_norm: alpha must be positive");
  const double norm = spectral_norm(m);
  if (norm > alpha) {
    const double scale = alpha / norm;
    for (double& v : m.data) v *= scale;
  }
  return m;
}

inline std::vector<double> softmax(std::vector<double> z) {
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

// tanh RNN (h_t = tanh(W h_{t-1} + U x_t), h_0 = 0) followed by n_fc
// fully-connected tanh layers and a softmax over C classes. Every trainable
// matrix is projected to operator norm <= alpha.
struct TinyRnn {
  std::size_t time_steps = 4;   // T
  std::size_t input_dim = 8;    // m
  std::size_t hidden_dim = 8;   // m'
  std::size_t classes = 2;      // C
  std::size_t n_fc = 1;
  double alpha = 0.9;
  Mat w;                 // hidden x hidden
  Mat u;                 // hidden x input
  std::vector<Mat> fc;   // n_fc layers, last maps to classes
};

inline TinyRnn make_tiny_rnn(std::size_t time_steps, std::size_t input_dim,
                             std::size_t hidden_dim, std::size_t classes,
                             std::size_t n_fc, double alpha, std::uint64_t seed) {
  if (n_fc < 1) throw std::invalid_argument("make_tiny_rnn: n_fc must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("make_tiny_rnn: alpha must be in (0, 1) for a stable RNN");
  }
  TinyRnn rnn;
  rnn.time_steps = time_steps;
  rnn.input_dim = input_dim;
  rnn.hidden_dim = hidden_dim;
  rnn.classes = classes;
  rnn.n_fc = n_fc;
  rnn.alpha = alpha;
  Rng rng(seed);
  rnn.w = project_operator_norm(random_matrix(hidden_dim, hidden_dim, rng), alpha);
  rnn.u = project_operator_norm(random_matrix(hidden_dim, input_dim, rng), alpha);
  for (std::size_t l = 0; l < n_fc; ++l) {
    const std::size_t out = l + 1 == n_fc ? classes : hidden_dim;
    rnn.fc.push_back(project_operator_norm(random_matrix(out, hidden_dim, rng), alpha));
  }
  return rnn;
}

namespace detail {

inline std::vector<double> rnn_encode(const Mat& w, const Mat& u, const Mat& x) {
  std::vector<double> h(w.rows, 0.0);
  std::vector<double> next(w.rows);
  for (std::size_t t = 0; t < x.rows; ++t) {
    for (std::size_t i = 0; i < w.rows; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) z += w(i, j) * h[j];
      for (std::size_t j = 0; j < u.cols; ++j) z += u(i, j) * x(t, j);
      next[i] = std::tanh(z);
    }
    h = next;
  }
  return h;
}

inline std::vector<double> fc_stack(const std::vector<Mat>& fc, std::vector<double> z) {
  for (const Mat& layer : fc) {
    std::vector<double> out = layer.matvec(z);
    for (double& v : out) v = std::tanh(v);
    z = std::move(out);
  }
  return z;
}

inline double two_norm_loss(const std::vector<double>& probs, std::size_t label) {
  double s = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double d = probs[c] - (c == label ? 1.0 : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace detail

// 2-norm distance between the one-hot label and the softmax output.
inline double rnn_loss(const TinyRnn& rnn, const Mat& x, std::size_t label) {
  if (x.rows != rnn.time_steps || x.cols != rnn.input_dim) {
    throw std::invalid_argument("rnn_loss: input shape mismatch");
  }
  const auto h = detail::rnn_encode(rnn.w, rnn.u, x);
  return detail::two_norm_loss(softmax(detail::fc_stack(rnn.fc, h)), label);
}

enum class NormForm { spectral, frobenius };

inline double lemma1_constant(const TinyRnn& rnn, NormForm form = NormForm::spectral) {
  const double c = static_cast<double>(rnn.classes);
  const double tm = form == NormForm::spectral
                        ? static_cast<double>(rnn.time_steps * rnn.input_dim)
                        : static_cast<double>(rnn.time_steps);
  return std::sqrt((c - 1.0) * tm) / c *
         std::pow(rnn.alpha, static_cast<double>(rnn.n_fc) + 1.0);
}

struct BoundReport {
  std::size_t trials = 0;
  double max_ratio = 0.0;  // max |loss difference| / (constant * distance)
  std::size_t violations = 0;
  double bound_constant = 0.0;
};

namespace detail {

inline Mat perturb(const Mat& x, double delta, Rng& rng) {
  Mat out = x;
  for (double& v : out.data) v += delta * rng.normal();
  return out;
}

inline double matrix_distance(const Mat& a, const Mat& b, NormForm form) {
  Mat d(a.rows, a.cols);
  for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = a.data[i] - b.data[i];
  return form == NormForm::spectral ? spectral_norm(d) : d.frobenius_norm();
}

}  // namespace detail

// Monte Carlo check of the stable-RNN loss Lipschitz bound: random input
// pairs (X, X + delta G), delta log-uniform in [1e-3, 1], random labels.
inline BoundReport check_lemma1(const TinyRnn& rnn, std::size_t trials, std::uint64_t seed,
                                NormForm form = NormForm::spectral,
                                double tolerance = kBoundTolerance) {
  BoundReport report;
  report.trials = trials;
  report.bound_constant = lemma1_constant(rnn, form);
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Mat x = random_matrix(rnn.time_steps, rnn.input_dim, rng);
    const double delta = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
    const Mat x2 = detail::perturb(x, delta, rng);
    const std::size_t label = rng.index(rnn.classes);
    const double lhs = std::abs(rnn_loss(rnn, x, label) - rnn_loss(rnn, x2, label));
    const double dist = detail::matrix_distance(x, x2, form);
    if (dist == 0.0) continue;
    const double ratio = lhs / (report.bound_constant * dist);
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (ratio > 1.0 + tolerance) ++report.violations;
  }
  return report;
}

// Toy analog of the RNN-based ER architecture: per-attribute token sequences
// encoded by a (shared) stable RNN, elementwise |left - right| similarity,
// then a fully-connected stack with softmax over two classes.
struct ErToyModel {
  std::size_t n_attributes = 3;
  std::size_t input_dim = 8;   // m, token vector dimension
  std::size_t hidden_dim = 8;  // attribute representation dimension
  std::size_t n_fc = 1;
  double alpha = 0.9;
  bool shared_encoder = true;
  std::vector<Mat> enc_w, enc_u;  // one entry when shared
  std::vector<Mat> fc;

  const Mat& encoder_w(std::size_t k) const { return enc_w[shared_encoder ? 0 : k]; }
  const Mat& encoder_u(std::size_t k) const { return enc_u[shared_encoder ? 0 : k]; }
};

inline ErToyModel make_er_toy_model(std::size_t n_attributes, std::size_t input_dim,
                                    std::size_t hidden_dim, std::size_t n_fc, double alpha,
                                    bool shared_encoder, std::uint64_t seed) {
  if (n_fc < 1) throw std::invalid_argument("make_er_toy_model: n_fc must be at least 1");
  ErToyModel m;
  m.n_attributes = n_attributes;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.n_fc = n_fc;
  m.alpha = alpha;
  m.shared_encoder = shared_encoder;
  Rng rng(seed);
  const std::size_t encoders = shared_encoder ? 1 : n_attributes;
  for (std::size_t k = 0; k < encoders; ++k) {
    m.enc_w.push_back(project_operator_norm(random_matrix(hidden_dim, hidden_dim, rng), alpha));
    m.enc_u.push_back(project_operator_norm(random_matrix(hidden_dim, input_dim, rng), alpha));
  }
  for (std::size_t l = 0; l < n_fc; ++l) {
    const std::size_t in = l == 0 ? n_attributes * hidden_dim : hidden_dim;
    const std::size_t out = l + 1 == n_fc ? 2 : hidden_dim;
    m.fc.push_back(project_operator_norm(random_matrix(out, in, rng), alpha));
  }
  return m;
}

// One toy ER pair: per attribute, the left and right token sequences.
struct ErToyPair {
  std::vector<Mat> left;   // n_attributes entries, each T_k x m
  std::vector<Mat> right;

  std::size_t total_tokens() const {
    std::size_t t = 0;
    for (const auto& x : left) t += x.rows;
    for (const auto& x : right) t += x.rows;
    return t;
  }

  // all token vectors stacked into one (T_d x m) matrix
  Mat stacked() const {
    const std::size_t m = left.empty() ? 0 : left[0].cols;
    Mat out(total_tokens(), m);
    std::size_t r = 0;
    auto append = [&](const Mat& x) {
      for (std::size_t i = 0; i < x.rows; ++i, ++r) {
        for (std::size_t j = 0; j < m; ++j) out(r, j) = x(i, j);
      }
    };
    for (const auto& x : left) append(x);
    for (const auto& x : right) append(x);
    return out;
  }
};

inline double er_toy_loss(const ErToyModel& model, const ErToyPair& pair, std::size_t label) {
  std::vector<double> similarities;
  similarities.reserve(model.n_attributes * model.hidden_dim);
  for (std::size_t k = 0; k < model.n_attributes; ++k) {
    const auto ls = detail::rnn_encode(model.encoder_w(k), model.encoder_u(k), pair.left[k]);
    const auto rs = detail::rnn_encode(model.encoder_w(k), model.encoder_u(k), pair.right[k]);
    for (std::size_t j = 0; j < ls.size(); ++j) {
      similarities.push_back(std::abs(ls[j] - rs[j]));
    }
  }
  return detail::two_norm_loss(softmax(detail::fc_stack(model.fc, similarities)), label);
}

inline double theorem1_constant(double alpha, std::size_t n_fc, std::size_t t_hat,
                                std::size_t input_dim) {
  return 0.5 * std::pow(alpha, static_cast<double>(n_fc) + 1.0) *
         std::sqrt(static_cast<double>(t_hat * input_dim));
}

// Monte Carlo check of the ER-model Lipschitz bound with token budget t_hat.
inline BoundReport check_theorem1(const ErToyModel& model, std::size_t t_hat,
                                  std::size_t trials, std::uint64_t seed,
                                  double tolerance = kBoundTolerance) {
  const std::size_t per_side = std::max<std::size_t>(1, t_hat / (2 * model.n_attributes));
  BoundReport report;
  report.trials = trials;
  report.bound_constant = theorem1_constant(model.alpha, model.n_fc, t_hat, model.input_dim);
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    ErToyPair pair;
    for (std::size_t k = 0; k < model.n_attributes; ++k) {
      pair.left.push_back(random_matrix(1 + rng.index(per_side), model.input_dim, rng));
      pair.right.push_back(random_matrix(1 + rng.index(per_side), model.input_dim, rng));
    }
    const double delta = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
    ErToyPair pair2;
    for (std::size_t k = 0; k < model.n_attributes; ++k) {
      pair2.left.push_back(detail::perturb(pair.left[k], delta, rng));
      pair2.right.push_back(detail::perturb(pair.right[k], delta, rng));
    }
    const std::size_t label = rng.index(2);
    const double lhs = std::abs(er_toy_loss(model, pair, label) - er_toy_loss(model, pair2, label));
    const double dist = detail::matrix_distance(pair.stacked(), pair2.stacked(), NormForm::spectral);
    if (dist == 0.0) continue;
    const double ratio = lhs / (report.bound_constant * dist);
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (ratio > 1.0 + tolerance) ++report.violations;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Core-set loss bound (the clustering upper bound the sampler minimizes)
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> nearest_center_assignment(
    const std::vector<std::vector<double>>& points, const std::set<std::size_t>& centers) {
  if (centers.empty()) throw std::invalid_argument("nearest_center_assignment: no centers");
  std::vector<std::size_t> assign(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = *centers.begin();
    for (std::size_t c : centers) {
      const double d = std::sqrt(squared_distance(points[i], points[c]));
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    assign[i] = best_c;
  }
  return assign;
}

struct CoresetBoundCheck {
  double lhs = 0.0;  // |mean loss over all points - mean loss over centers|
  double rhs = 0.0;  // (1/n) sum_clusters sum_members weight * distance
  double ratio = 0.0;
  bool violated = false;
};

// Verifies the core-set upper bound for one instance. The loss function must
// vanish on every center (the bound's premise for labeled data).
inline CoresetBoundCheck check_theorem2(const std::vector<std::vector<double>>& points,
                                        const std::vector<double>& weights,
                                        const std::set<std::size_t>& centers,
                                        const std::function<double(std::size_t)>& loss_fn,
                                        double tolerance = kBoundTolerance) {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("check_theorem2: points/weights size mismatch");
  }
  for (std::size_t c : centers) {
    if (c >= points.size()) throw std::invalid_argument("check_theorem2: center out of range");
    if (loss_fn(c) != 0.0) {
      throw std::invalid_argument("check_theorem2: loss must be zero on centers");
    }
  }
  const auto assign = nearest_center_assignment(points, centers);
  const double n = static_cast<double>(points.size());

  double mean_all = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) mean_all += loss_fn(i);
  mean_all /= n;
  double mean_centers = 0.0;  // zero by premise, kept for the bound's shape
  for (std::size_t c : centers) mean_centers += loss_fn(c);
  mean_centers /= static_cast<double>(centers.size());

  CoresetBoundCheck out;
  out.lhs = std::abs(mean_all - mean_centers);
  double rhs = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (centers.contains(i)) continue;
    rhs += weights[i] * std::sqrt(squared_distance(points[i], points[assign[i]]));
  }
  out.rhs = rhs / n;
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : (out.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  out.violated = out.lhs > out.rhs * (1.0 + tolerance) + 1e-12;
  return out;
}

// Randomized suite over the bound: losses u_i * weight_i * distance-to-center
// with u_i uniform in (0, 1) never exceed the bound.
inline BoundReport run_theorem2_suite(std::size_t instances, std::uint64_t seed,
                                      double tolerance = kBoundTolerance) {
  BoundReport report;
  report.trials = instances;
  Rng rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 10 + rng.index(50);
    const std::size_t dim = 2 + rng.index(4);
    const std::size_t k = 1 + rng.index(std::min<std::size_t>(6, n - 1));
    std::vector<std::vector<double>> points(n, std::vector<double>(dim));
    std::vector<double> weights(n);
    for (auto& p : points) {
      for (double& v : p) v = rng.normal();
    }
    for (double& w : weights) w = rng.uniform();
    std::set<std::size_t> centers;
    while (centers.size() < k) centers.insert(rng.index(n));
    const auto assign = nearest_center_assignment(points, centers);
    std::vector<double> u(n);
    for (double& v : u) v = rng.uniform();
    auto loss = [&](std::size_t i) {
      if (centers.contains(i)) return 0.0;
      return u[i] * weights[i] * std::sqrt(squared_distance(points[i], points[assign[i]]));
    };
    const auto check = check_theorem2(points, weights, centers, loss, tolerance);
    report.max_ratio = std::max(report.max_ratio, check.ratio);
    if (check.violated) ++report.violations;
  }
  return report;
}

}  // namespace risksample
