#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidetect/classifiers.hpp"

namespace sidetect {

struct HyperGrid {
  std::vector<double> gnb_var_smoothing;
  std::vector<double> svm_c;
  std::vector<double> svm_gamma;
  std::vector<int> knn_k;
  std::vector<MaxFeatures> rf_max_features;
  std::vector<int> rf_n_estimators;
  std::vector<int> gbdt_n_estimators;
  std::vector<double> gbdt_learning_rate;
  std::vector<int> gbdt_max_depth;

  // GNB 1e-11..1e-7 by decade; SVM C 1..10 x gamma 0.1..1.0; KNN k 1..31;
  // RF {auto,sqrt,log2} x {100,200,300,1000}; GBDT {200,300} at lr 0.1, depth 6.
  static HyperGrid defaults();

  // Cartesian product in declaration order, first list outermost. Throws
  // DataError if any list the family needs is empty.
  std::vector<Hyperparameters> candidates(Family family) const;

  nlohmann::json to_json() const;
  // Families missing from j keep the defaults.
  static HyperGrid from_json(const nlohmann::json& j);
};

enum class Metric { accuracy, f1, macro_f1 };

std::string_view to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view name);

// Stratified k-fold assignment: each class is permuted with a derived seed
// and dealt round-robin. Returns validation row indices per fold. Throws
// DataError (suggesting fewer folds) if any class has fewer rows than folds.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, int folds,
                                                       std::uint64_t seed);

struct CvRow {
  Hyperparameters params;
  std::vector<double> fold_scores;
  double mean = 0.0;
  std::optional<std::string> error;  // set when a fold failed to fit
};

struct GridResult {
  Hyperparameters best;
  std::size_t best_index = 0;
  double best_score = 0.0;
  std::vector<CvRow> table;
};

// Best by mean validation metric; ties keep the earlier candidate.
GridResult grid_search(Family family, const Dataset& data, const HyperGrid& grid, int folds, Metric metric,
                       std::uint64_t seed);
GridResult grid_search(Family family, const Dataset& data, const std::vector<Hyperparameters>& candidates, int folds,
                       Metric metric, std::uint64_t seed);

}  // namespace sidetect
