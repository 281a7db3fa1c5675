#include <doctest.h>

#include <set>

#include "../support/datasets.hpp"
#include "../support/oracles.hpp"
#include "sidetect/error.hpp"
#include "sidetect/grid_search.hpp"

using namespace sidetect;
using testing_support::dataset;

TEST_CASE("default grid mirrors the published ranges") {
  const auto g = HyperGrid::defaults();
  CHECK(g.candidates(Family::gnb).size() == 5);
  CHECK(g.candidates(Family::gnb).front().var_smoothing == 1e-11);
  CHECK(g.candidates(Family::gnb).back().var_smoothing == 1e-7);
  const auto svm = g.candidates(Family::svm_rbf);
  CHECK(svm.size() == 100);
  CHECK(svm.front().c == 1.0);
  CHECK(svm.front().gamma == doctest::Approx(0.1));
  CHECK(svm.back().c == 10.0);
  CHECK(svm.back().gamma == doctest::Approx(1.0));
  CHECK(g.candidates(Family::knn).size() == 31);
  CHECK(g.candidates(Family::random_forest).size() == 12);
  CHECK(g.candidates(Family::gbdt).size() == 2);
}

TEST_CASE("grid json round trip and empty lists") {
  const auto g = HyperGrid::defaults();
  const auto back = HyperGrid::from_json(nlohmann::json::parse(g.to_json().dump()));
  CHECK(back.to_json() == g.to_json());
  auto j = g.to_json();
  j["knn"]["k"] = nlohmann::json::array();
  CHECK_THROWS_AS(HyperGrid::from_json(j).candidates(Family::knn), DataError);
  j["random_forest"]["max_features"] = {"most"};
  CHECK_THROWS_AS(HyperGrid::from_json(j), DataError);
}

TEST_CASE("stratified folds") {
  std::vector<Label> y;
  for (int i = 0; i < 23; ++i) y.push_back(i % 4 == 0 ? Label::Suicidal : Label::NonSuicidal);
  const auto folds = stratified_folds(y, 5, 1);
  std::set<std::size_t> all;
  for (const auto& f : folds) {
    std::size_t pos = 0;
    for (auto r : f) {
      CHECK(all.insert(r).second);
      pos += y[r] == Label::Suicidal ? 1 : 0;
    }
    CHECK(pos >= 1);
  }
  CHECK(all.size() == y.size());
  CHECK(stratified_folds(y, 5, 1) == folds);
  try {
    stratified_folds(y, 7, 1);
    FAIL("too many folds accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("fewer folds") != std::string::npos);
  }
}

TEST_CASE("grid_search: single candidate and duplicate candidates") {
  const auto d = dataset({{0}, {0.1}, {0.2}, {1}, {1.1}, {1.2}}, {0, 0, 0, 1, 1, 1});
  Hyperparameters a;
  a.k = 1;
  const auto one = grid_search(Family::knn, d, std::vector<Hyperparameters>{a}, 3, Metric::accuracy, 1);
  CHECK(one.best.k == 1);
  CHECK(one.table.size() == 1);
  const auto dup = grid_search(Family::knn, d, std::vector<Hyperparameters>{a, a}, 3, Metric::accuracy, 1);
  CHECK(dup.best_index == 0);
}

TEST_CASE("grid_search: a mislabeled point makes k=3 beat k=1") {
  // 0.15 carries the wrong label and sits between class-0 points.
  const oracle::Matrix x{{0.0}, {0.1}, {0.2}, {0.15}, {1.0}, {1.1}};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const auto d = dataset(x, y);
  Hyperparameters k1, k3;
  k1.k = 1;
  k3.k = 3;
  const std::uint64_t seed = 3;
  const auto result = grid_search(Family::knn, d, std::vector<Hyperparameters>{k1, k3}, 3, Metric::accuracy, seed);

  // brute-force cross-validation over the same folds
  const auto folds = stratified_folds(d.y, 3, seed);
  double mean[2] = {0.0, 0.0};
  const int ks[2] = {1, 3};
  for (int c = 0; c < 2; ++c) {
    for (const auto& fold : folds) {
      oracle::Matrix tx;
      std::vector<int> ty;
      for (std::size_t r = 0; r < x.size(); ++r) {
        if (std::find(fold.begin(), fold.end(), r) == fold.end()) {
          tx.push_back(x[r]);
          ty.push_back(y[r]);
        }
      }
      double hits = 0.0;
      for (auto r : fold) hits += oracle::knn_predict(tx, ty, ks[c], x[r]) == y[r] ? 1.0 : 0.0;
      mean[c] += hits / static_cast<double>(fold.size());
    }
    mean[c] /= static_cast<double>(folds.size());
  }
  CHECK(result.table[0].mean == doctest::Approx(mean[0]).epsilon(1e-12));
  CHECK(result.table[1].mean == doctest::Approx(mean[1]).epsilon(1e-12));
  CHECK(mean[1] > mean[0]);
  CHECK(result.best.k == 3);
}

TEST_CASE("grid_search: failing candidates are recorded, determinism holds") {
  const auto d = dataset({{0}, {0.1}, {0.2}, {1}, {1.1}, {1.2}}, {0, 0, 0, 1, 1, 1});
  Hyperparameters bad, good;
  bad.k = 50;  // larger than any training fold
  good.k = 1;
  const auto r = grid_search(Family::knn, d, std::vector<Hyperparameters>{bad, good}, 3, Metric::macro_f1, 9);
  CHECK(r.table[0].error.has_value());
  CHECK(r.best.k == 1);
  const auto again = grid_search(Family::knn, d, std::vector<Hyperparameters>{bad, good}, 3, Metric::macro_f1, 9);
  CHECK(again.best_score == r.best_score);
  CHECK_THROWS_AS(grid_search(Family::knn, d, std::vector<Hyperparameters>{bad}, 3, Metric::accuracy, 9), DataError);
  CHECK_THROWS_AS(grid_search(Family::knn, d, std::vector<Hyperparameters>{good}, 1, Metric::accuracy, 9), DataError);
}
