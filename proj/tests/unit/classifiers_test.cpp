#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/datasets.hpp"
#include "../support/oracles.hpp"
#include "sidetect/error.hpp"

using namespace sidetect;
using testing_support::dataset;
using testing_support::point;
using testing_support::threshold_data;
using testing_support::training_accuracy;

namespace {

struct RandomCase {
  oracle::Matrix x;
  std::vector<int> y;
};

RandomCase random_case(std::mt19937& gen) {
  std::uniform_int_distribution<int> n_dist(2, 20), d_dist(1, 3), v_dist(-3, 3);
  RandomCase c;
  const int n = n_dist(gen), d = d_dist(gen);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int j = 0; j < d; ++j) row.push_back(v_dist(gen) * 0.5);
    c.x.push_back(row);
    c.y.push_back(static_cast<int>(gen() % 2));
  }
  c.y[0] = 0;
  c.y[1] = 1;
  return c;
}

double rbf(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::exp(-gamma * s);
}

}  // namespace

TEST_CASE("family names") {
  CHECK(parse_family("xgboost") == Family::gbdt);
  CHECK(parse_family("nb") == Family::gnb);
  CHECK(parse_family("svm") == Family::svm_rbf);
  CHECK_FALSE(parse_family("lstm").has_value());
  CHECK(resolve_max_features(MaxFeatures::log2, 1000) == 9);
  CHECK(resolve_max_features(MaxFeatures::sqrt, 1000) == 31);
  CHECK(resolve_max_features(MaxFeatures::automatic, 1000) == 31);
  CHECK(resolve_max_features(MaxFeatures::log2, 1) == 1);
}

TEST_CASE("gnb: hand examples") {
  const auto d = dataset({{0}, {1}, {4}, {5}}, {0, 0, 1, 1});
  const auto m = GaussianNB::fit(d, 1e-9);
  CHECK(m.predict(point({2.0})) == Label::NonSuicidal);
  CHECK(m.predict(point({4.5})) == Label::Suicidal);

  const auto far = dataset({{0}, {1}, {100}, {101}}, {0, 0, 1, 1});
  CHECK(GaussianNB::fit(far, 1e-9).score(point({100.5})) > 0.99);

  const auto sym = dataset({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
  CHECK(GaussianNB::fit(sym, 1e-9).score(point({0.0})) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("gnb: errors and variance floor") {
  CHECK_THROWS_AS(GaussianNB::fit(dataset({{0}, {1}}, {1, 1}), 1e-9), DataError);
  CHECK_THROWS_AS(GaussianNB::fit(dataset({{0}, {1}}, {0, 1}), 0.0), DataError);
  const auto d = dataset({{0, 7}, {0, 7}, {4, 7}, {4, 7}}, {0, 0, 1, 1});
  const auto m = GaussianNB::fit(d, 1e-3);
  const double floor = 1e-3 * 4.0;  // largest whole-data variance is 4
  for (int c = 0; c < 2; ++c) {
    for (double v : m.variances(c)) CHECK(v >= floor);
  }
}

TEST_CASE("gnb and knn agree with brute-force references") {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = random_case(gen);
    const auto d = dataset(c.x, c.y);
    const double eps = std::pow(10.0, -static_cast<double>(7 + trial % 5));
    const auto nb = GaussianNB::fit(d, eps);
    const int k = 1 + static_cast<int>(gen() % c.x.size());
    const auto knn = KNearestNeighbors::fit(d, k);
    for (int q = 0; q < 5; ++q) {
      std::vector<double> probe;
      for (std::size_t j = 0; j < c.x[0].size(); ++j) probe.push_back(static_cast<int>(gen() % 13) * 0.5 - 3.0);
      CHECK(static_cast<int>(nb.predict(point(probe))) == oracle::gnb_predict(c.x, c.y, eps, probe));
      CHECK(static_cast<int>(knn.predict(point(probe))) == oracle::knn_predict(c.x, c.y, k, probe));
    }
  }
}

TEST_CASE("knn: tie rules and errors") {
  const auto d = dataset({{0}, {1}, {2}}, {1, 1, 0});
  CHECK(knn_predict(d, point({0.0}), 1) == Label::Suicidal);
  CHECK(knn_predict(d, point({1.0}), 3) == Label::Suicidal);
  const auto tie = dataset({{0}, {2}}, {1, 0});
  CHECK(knn_predict(tie, point({1.0}), 2) == Label::NonSuicidal);
  // equidistant: lower row index wins
  CHECK(knn_predict(tie, point({1.0}), 1) == Label::Suicidal);
  CHECK_THROWS(KNearestNeighbors::fit(d, 4));
  CHECK_THROWS(KNearestNeighbors::fit(d, 0));
}

TEST_CASE("svm: separable pair") {
  const auto d = dataset({{-1}, {1}}, {0, 1});
  const auto m = RbfSvm::fit(d, 10.0, 1.0);
  CHECK(training_accuracy(m, d) == 1.0);
}

TEST_CASE("svm: xor matches the brute-force dual") {
  const oracle::Matrix x{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> s{-1, -1, 1, 1};
  const double C = 10.0, gamma = 1.0;
  const auto d = dataset(x, y);
  const auto m = RbfSvm::fit(d, C, gamma);
  CHECK(training_accuracy(m, d) == 1.0);

  double q[4][4];
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) q[i][j] = s[i] * s[j] * rbf(x[i], x[j], gamma);
  }
  auto objective = [&](const std::vector<double>& a) {
    double w = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      w += a[i];
      for (std::size_t j = 0; j < 4; ++j) w -= 0.5 * a[i] * a[j] * q[i][j];
    }
    return w;
  };
  // grid over alpha_0..alpha_2 with alpha_3 fixed by the equality constraint
  double best = -1e300;
  std::vector<double> best_a;
  // the optimum lies well inside [0, 4]^4 for this kernel
  const int steps = 100;
  const double span = 4.0;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      for (int k = 0; k <= steps; ++k) {
        const double a0 = span * i / steps, a1 = span * j / steps, a2 = span * k / steps;
        const double a3 = a0 + a1 - a2;
        if (a3 < 0.0 || a3 > C) continue;
        const double w = objective({a0, a1, a2, a3});
        if (w > best) {
          best = w;
          best_a = {a0, a1, a2, a3};
        }
      }
    }
  }
  std::vector<double> fitted(m.alphas().begin(), m.alphas().end());
  CHECK(objective(fitted) >= best - 1e-3);
  // the oracle's decision function also separates XOR
  double bias_sum = 0.0;
  int free = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (best_a[i] <= 0.0 || best_a[i] >= C) continue;
    double f = 0.0;
    for (std::size_t j = 0; j < 4; ++j) f += best_a[j] * s[j] * rbf(x[j], x[i], gamma);
    bias_sum += s[i] - f;
    ++free;
  }
  REQUIRE(free > 0);
  const double b = bias_sum / free;
  for (std::size_t i = 0; i < 4; ++i) {
    double f = b;
    for (std::size_t j = 0; j < 4; ++j) f += best_a[j] * s[j] * rbf(x[j], x[i], gamma);
    CHECK((f > 0.0) == (y[i] == 1));
    CHECK((m.score(point(x[i])) > 0.0) == (y[i] == 1));
  }
}

TEST_CASE("svm: dual feasibility on random data") {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = random_case(gen);
    const auto d = dataset(c.x, c.y);
    const double C = 1.0 + trial % 10;
    const auto m = RbfSvm::fit(d, C, 0.1 * (1 + trial % 10));
    double eq = 0.0;
    for (std::size_t i = 0; i < m.alphas().size(); ++i) {
      CHECK(m.alphas()[i] >= 0.0);
      CHECK(m.alphas()[i] <= C);
      eq += m.alphas()[i] * m.signed_labels()[i];
    }
    CHECK(std::abs(eq) <= 1e-6);
  }
}

TEST_CASE("svm: iteration cap raises with the best iterate") {
  std::mt19937 gen(8);
  const auto c = random_case(gen);
  SvmOptions tight;
  tight.max_passes = 0;
  tight.tolerance = 1e-12;
  try {
    RbfSvm::fit(dataset(c.x, c.y), 10.0, 1.0, tight);
    FAIL("expected non-convergence");
  } catch (const SvmNotConverged& e) {
    REQUIRE(e.best_iterate != nullptr);
    CHECK(e.best_iterate->alphas().size() == c.x.size());
  }
}

TEST_CASE("random forest") {
  const auto ones = dataset({{0}, {1}, {2}}, {1, 1, 1});
  const auto pure = RandomForest::fit(ones, 10, MaxFeatures::log2, 1);
  CHECK(pure.predict(point({5.0})) == Label::Suicidal);
  CHECK(pure.score(point({5.0})) == 1.0);
  CHECK_THROWS_AS(RandomForest::fit(dataset({{0}}, {1}), 10, MaxFeatures::log2, 1), DataError);

  const auto d = threshold_data(200, 5);
  const auto a = RandomForest::fit(d, 100, MaxFeatures::log2, 42);
  const auto b = RandomForest::fit(d, 100, MaxFeatures::log2, 42);
  CHECK(training_accuracy(a, d) == 1.0);
  for (double q = -0.5; q < 1.5; q += 0.01) CHECK(a.score(point({q})) == b.score(point({q})));
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("gbdt") {
  const auto balanced = dataset({{0}, {1}, {2}, {3}}, {0, 1, 0, 1});
  const auto m = GradientBoosting::fit(balanced, 1, 1e-12, 1);
  CHECK(m.initial_score() == doctest::Approx(0.0));
  CHECK(m.score(point({0.0})) == doctest::Approx(0.5).epsilon(1e-9));

  const auto d = threshold_data(200, 9);
  const auto g = GradientBoosting::fit(d, 50, 0.1, 1);
  CHECK(training_accuracy(g, d) == 1.0);

  const auto single = GradientBoosting::fit(dataset({{0}, {1}}, {1, 1}), 10, 0.1, 3);
  CHECK(single.degenerate());
  CHECK(single.score(point({0.0})) == 1.0);
}

TEST_CASE("gbdt: three hand-run boosting stages on a stump problem") {
  // x = 0,1 labeled 0; x = 2,3 labeled 1. Base rate 0.5 so F0 = 0; every stage
  // splits at 1.5 and moves each side by lr * sum(r) / sum(p(1-p)).
  const auto d = dataset({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  const double lr = 0.1;
  double f_hi = 0.0;
  for (int stage = 0; stage < 3; ++stage) {
    const double p = 1.0 / (1.0 + std::exp(-f_hi));
    f_hi += lr * (1.0 - p) / (p * (1.0 - p));
  }
  const auto g = GradientBoosting::fit(d, 3, lr, 1);
  CHECK(g.raw_score(point({3.0})) == doctest::Approx(f_hi).epsilon(1e-12));
  CHECK(g.raw_score(point({0.0})) == doctest::Approx(-f_hi).epsilon(1e-12));
}

TEST_CASE("training accuracy does not drop with more estimators") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 150; ++i) {
    const double a = u(gen), b = u(gen);
    rows.push_back({a, b});
    labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  const auto d = dataset(rows, labels);
  double prev_rf = 0.0, prev_gb = 0.0;
  for (int n : {1, 10, 100}) {
    const double rf = training_accuracy(RandomForest::fit(d, n, MaxFeatures::log2, 7), d);
    const double gb = training_accuracy(GradientBoosting::fit(d, n, 0.1, 3), d);
    CHECK(rf >= prev_rf);
    CHECK(gb >= prev_gb);
    prev_rf = rf;
    prev_gb = gb;
  }
}

TEST_CASE("every family: binary predictions, bounded scores, json round trip") {
  std::mt19937 gen(21);
  const auto c = random_case(gen);
  const auto d = dataset(c.x, c.y);
  for (auto family : {Family::gnb, Family::svm_rbf, Family::knn, Family::random_forest, Family::gbdt}) {
    Hyperparameters p;
    p.k = 1;
    p.n_estimators = 20;
    const auto m = fit_classifier(family, d, p, 5);
    const auto back = classifier_from_json(nlohmann::json::parse(m->to_json().dump()));
    CHECK(back->family() == family);
    for (const auto& row : c.x) {
      const auto x = point(row);
      const auto label = m->predict(x);
      CHECK((label == Label::Suicidal || label == Label::NonSuicidal));
      if (family != Family::svm_rbf) {
        CHECK(m->score(x) >= 0.0);
        CHECK(m->score(x) <= 1.0);
      }
      CHECK(back->predict(x) == label);
      CHECK(back->score(x) == doctest::Approx(m->score(x)).epsilon(1e-12));
    }
    CHECK_THROWS(m->predict(point(std::vector<double>(c.x[0].size() + 1, 0.0))));
  }
}

TEST_CASE("hyperparameters json") {
  Hyperparameters p;
  p.c = 3;
  p.gamma = 0.4;
  const auto j = p.to_json(Family::svm_rbf);
  CHECK(j.at("C") == 3.0);
  const auto back = Hyperparameters::from_json(Family::svm_rbf, j);
  CHECK(back.c == 3.0);
  CHECK(back.gamma == 0.4);
  const auto rf = Hyperparameters::from_json(Family::random_forest, {{"max_features", "sqrt"}, {"n_estimators", 7}});
  CHECK(rf.max_features == MaxFeatures::sqrt);
  CHECK(rf.n_estimators == 7);
}
