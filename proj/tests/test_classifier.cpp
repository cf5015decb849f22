#include <catch_amalgamated.hpp>

#include "risksample/classifier.hpp"
#include "risksample/util.hpp"

using namespace risksample;

namespace {

Samples blob_samples(std::size_t n_per_class, std::size_t dim, double separation,
                     std::uint64_t seed) {
  Rng rng(seed);
  Samples s;
  s.dim = dim;
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal() + (label == 1 ? separation : -separation);
    s.push_back(x, label);
  }
  return s;
}

double weighted_ce(const ClassifierModel& m, const Samples& s) {
  std::size_t n_pos = 0;
  for (int y : s.y) n_pos += y == 1;
  const double c_pos = static_cast<double>(s.size()) / (2.0 * static_cast<double>(n_pos));
  const double c_neg =
      static_cast<double>(s.size()) / (2.0 * static_cast<double>(s.size() - n_pos));
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = predict_probability(m, s.row(i));
    const double c = s.y[i] == 1 ? c_pos : c_neg;
    loss += c * (s.y[i] == 1 ? -std::log(p) : -std::log(1.0 - p));
    wsum += c;
  }
  return loss / wsum;
}

}  // namespace

TEST_CASE("all-zero logistic model outputs one half") {
  ClassifierModel m;
  m.variant = ClassifierVariant::logistic;
  m.dim = 3;
  m.w1 = {0.0, 0.0, 0.0};
  const auto p = predict(m, std::vector<double>{1.0, -2.0, 0.5});
  CHECK(p.probability == 0.5);
  CHECK(p.predicted_label == 1);
}

TEST_CASE("probabilities stay inside the open unit interval") {
  ClassifierModel m;
  m.variant = ClassifierVariant::logistic;
  m.dim = 1;
  m.w1 = {1e6};
  CHECK(predict_probability(m, std::vector<double>{1.0}) < 1.0);
  CHECK(predict_probability(m, std::vector<double>{1.0}) > 1.0 - 1e-9);
  CHECK(predict_probability(m, std::vector<double>{-1.0}) > 0.0);
}

TEST_CASE("identical representations give identical predictions") {
  const Samples train = blob_samples(20, 4, 1.5, 3);
  const auto m = train_classifier(train, {}, {}, 1);
  const std::vector<double> x = {0.3, -0.7, 0.1, 0.9};
  CHECK(predict_probability(m, x) == predict_probability(m, x));
}

TEST_CASE("separable data is fit to training accuracy one") {
  const Samples train = blob_samples(30, 3, 3.0, 5);
  for (auto variant : {ClassifierVariant::logistic, ClassifierVariant::mlp}) {
    TrainingConfig cfg;
    cfg.variant = variant;
    cfg.max_epochs = 400;
    const auto m = train_classifier(train, {}, cfg, 11);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      correct += (predict_probability(m, train.row(i)) >= 0.5 ? 1 : 0) == train.y[i];
    }
    INFO(variant_name(variant));
    CHECK(correct == train.size());
  }
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const Samples train = blob_samples(25, 5, 1.0, 7);
  const Samples val = blob_samples(10, 5, 1.0, 8);
  for (auto variant : {ClassifierVariant::logistic, ClassifierVariant::mlp}) {
    TrainingConfig cfg;
    cfg.variant = variant;
    cfg.max_epochs = 60;
    const auto a = train_classifier(train, val, cfg, 99);
    const auto b = train_classifier(train, val, cfg, 99);
    CHECK(a.w1 == b.w1);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b2 == b.b2);
    CHECK(a.epochs_run == b.epochs_run);
  }
}

TEST_CASE("diverging validation loss stops training early at the best snapshot") {
  // separable training set; validation carries flipped labels so its loss
  // rises as the model fits the training direction
  Samples train, val;
  train.dim = val.dim = 1;
  for (int i = 0; i < 10; ++i) {
    train.push_back(std::vector<double>{i < 5 ? -1.0 : 1.0}, i < 5 ? 0 : 1);
    val.push_back(std::vector<double>{i < 5 ? -1.0 : 1.0}, i < 5 ? 1 : 0);
  }
  TrainingConfig cfg;
  cfg.max_epochs = 500;
  cfg.patience = 10;
  const auto m = train_classifier(train, val, cfg, 1);
  REQUIRE(m.epochs_run < cfg.max_epochs);
  REQUIRE_FALSE(m.val_loss_history.empty());
  // the returned parameters reproduce the minimum of the recorded loss log
  const double best = *std::min_element(m.val_loss_history.begin(), m.val_loss_history.end());
  CHECK(m.best_val_loss == Catch::Approx(best));
  CHECK(detail::mean_cross_entropy(m, val) == Catch::Approx(best));
  // and the log really diverged after its minimum
  CHECK(m.val_loss_history.back() > best);
}

TEST_CASE("single-class training data yields a flagged prior model") {
  Samples train;
  train.dim = 2;
  for (int i = 0; i < 8; ++i) train.push_back(std::vector<double>{1.0, 0.0}, 1);
  const auto m = train_classifier(train, {}, {}, 4);
  CHECK(m.degenerate);
  CHECK(m.variant == ClassifierVariant::prior);
  CHECK(m.prior_p == Catch::Approx(9.0 / 10.0));
  CHECK(predict_probability(m, std::vector<double>{-5.0, 3.0}) == Catch::Approx(9.0 / 10.0));
}

TEST_CASE("gradients match finite differences") {
  const Samples data = blob_samples(6, 3, 0.8, 21);
  std::size_t n_pos = 0;
  for (int y : data.y) n_pos += y == 1;
  const double c_pos = static_cast<double>(data.size()) / (2.0 * static_cast<double>(n_pos));
  const double c_neg =
      static_cast<double>(data.size()) / (2.0 * static_cast<double>(data.size() - n_pos));

  for (auto variant : {ClassifierVariant::logistic, ClassifierVariant::mlp}) {
    ClassifierModel m;
    m.variant = variant;
    m.dim = 3;
    Rng rng(17);
    if (variant == ClassifierVariant::logistic) {
      m.w1 = {rng.normal(), rng.normal(), rng.normal()};
    } else {
      m.hidden_width = 2;
      m.w1.resize(6);
      m.b1.resize(2);
      m.w2.resize(2);
      for (auto* vec : {&m.w1, &m.b1, &m.w2}) {
        for (double& v : *vec) v = 0.5 * rng.normal();
      }
    }
    m.b2 = 0.1;

    detail::GradientBuffers g;
    detail::accumulate_gradient(m, data, c_pos, c_neg, g);

    const double h = 1e-6;
    auto check_param = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = weighted_ce(m, data);
      param = saved - h;
      const double down = weighted_ce(m, data);
      param = saved;
      const double numeric = (up - down) / (2.0 * h);
      CHECK(analytic == Catch::Approx(numeric).margin(1e-6));
    };
    for (std::size_t j = 0; j < m.w1.size(); ++j) check_param(m.w1[j], g.w1[j]);
    for (std::size_t j = 0; j < m.b1.size(); ++j) check_param(m.b1[j], g.b1[j]);
    for (std::size_t j = 0; j < m.w2.size(); ++j) check_param(m.w2[j], g.w2[j]);
    check_param(m.b2, g.b2);
  }
}

TEST_CASE("f1 evaluation handles the degenerate cases") {
  // threshold model: x >= 0.5 predicted positive
  ClassifierModel m;
  m.variant = ClassifierVariant::logistic;
  m.dim = 1;
  m.w1 = {20.0};
  m.b2 = -10.0;

  SECTION("all predictions correct") {
    Samples s;
    s.dim = 1;
    s.push_back(std::vector<double>{1.0}, 1);
    s.push_back(std::vector<double>{0.0}, 0);
    const auto metrics = evaluate_f1(m, s);
    CHECK(metrics.f1 == 1.0);
  }
  SECTION("no positive predictions but positives exist") {
    Samples s;
    s.dim = 1;
    s.push_back(std::vector<double>{0.0}, 1);
    s.push_back(std::vector<double>{0.0}, 0);
    const auto metrics = evaluate_f1(m, s);
    CHECK(metrics.precision == 0.0);
    CHECK(metrics.recall == 0.0);
    CHECK(metrics.f1 == 0.0);
  }
  SECTION("precision one, recall one half") {
    Samples s;
    s.dim = 1;
    s.push_back(std::vector<double>{1.0}, 1);  // tp
    s.push_back(std::vector<double>{0.0}, 1);  // fn
    s.push_back(std::vector<double>{0.0}, 0);  // tn
    const auto metrics = evaluate_f1(m, s);
    CHECK(metrics.precision == 1.0);
    CHECK(metrics.recall == 0.5);
    CHECK(metrics.f1 == Catch::Approx(2.0 / 3.0));
  }
  SECTION("empty split") {
    CHECK_THROWS_AS(evaluate_f1(m, Samples{}), std::invalid_argument);
  }
}

TEST_CASE("prediction entropy peaks at one half") {
  CHECK(prediction_entropy(0.5) == Catch::Approx(std::log(2.0)));
  CHECK(prediction_entropy(0.5) > prediction_entropy(0.4));
  CHECK(prediction_entropy(0.5) > prediction_entropy(0.9));
  CHECK(prediction_entropy(1e-12) < 1e-9);
  CHECK(prediction_entropy(0.3) == Catch::Approx(prediction_entropy(0.7)));
}

TEST_CASE("model json round trip preserves behavior") {
  const Samples train = blob_samples(15, 4, 1.2, 9);
  TrainingConfig cfg;
  cfg.variant = ClassifierVariant::mlp;
  cfg.max_epochs = 50;
  const auto m = train_classifier(train, {}, cfg, 33);
  const auto restored = model_from_json(model_to_json(m));
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.normal();
    CHECK(predict_probability(m, x) == predict_probability(restored, x));
  }
}

TEST_CASE("hidden activations require the mlp variant") {
  const Samples train = blob_samples(10, 2, 1.0, 13);
  TrainingConfig cfg;
  cfg.variant = ClassifierVariant::mlp;
  cfg.hidden_width = 6;
  cfg.max_epochs = 20;
  const auto mlp = train_classifier(train, {}, cfg, 2);
  CHECK(hidden_activations(mlp, std::vector<double>{0.5, -0.5}).size() == 6);
  const auto logistic = train_classifier(train, {}, {}, 2);
  CHECK_THROWS_AS(hidden_activations(logistic, std::vector<double>{0.5, -0.5}),
                  std::invalid_argument);
}

TEST_CASE("dimension mismatch is rejected") {
  const Samples train = blob_samples(10, 3, 1.0, 19);
  const auto m = train_classifier(train, {}, {}, 6);
  CHECK_THROWS_AS(predict_probability(m, std::vector<double>{1.0}), std::invalid_argument);
}
