#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sidetect/features.hpp"
#include "sidetect/ingest.hpp"
#include "sidetect/tree.hpp"

namespace sidetect {

enum class Family { gnb, svm_rbf, knn, random_forest, gbdt };

std::string_view to_string(Family family);
std::optional<Family> parse_family(std::string_view name);

struct Dataset {
  FeatureMatrix x;
  std::vector<Label> y;

  std::size_t size() const { return y.size(); }
  std::size_t dimension() const { return x.dimension; }
  std::size_t count(Label label) const;
  Dataset subset(std::span<const std::size_t> rows) const;
  // Throws DataError when rows and labels disagree, the set is empty, or
  // (with require_both) a class is missing.
  void validate(bool require_both_classes) const;
};

enum class MaxFeatures { automatic, sqrt, log2 };

std::string_view to_string(MaxFeatures rule);
std::optional<MaxFeatures> parse_max_features(std::string_view name);
// max(1, floor(rule(d))); automatic behaves as sqrt.
std::size_t resolve_max_features(MaxFeatures rule, std::size_t dimension);

// One record covering every family; each family reads its own fields.
struct Hyperparameters {
  double var_smoothing = 1e-9;                      // gnb
  double c = 10.0;                                  // svm_rbf
  double gamma = 1.0;                               // svm_rbf
  int k = 5;                                        // knn
  MaxFeatures max_features = MaxFeatures::log2;     // random_forest
  int n_estimators = 100;                           // random_forest, gbdt
  double learning_rate = 0.1;                       // gbdt
  int max_depth = 6;                                // gbdt

  nlohmann::json to_json(Family family) const;
  static Hyperparameters from_json(Family family, const nlohmann::json& j);
  static Hyperparameters from_json(Family family, const nlohmann::json& j, Hyperparameters defaults);
};

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Family family() const = 0;
  // gnb, random_forest, gbdt, knn: class-1 probability-like score in [0, 1].
  // svm_rbf: unbounded decision value.
  virtual double score(const SparseVector& x) const = 0;
  virtual Label predict(const SparseVector& x) const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::size_t dimension() const { return dimension_; }

 protected:
  explicit Classifier(std::size_t dimension) : dimension_(dimension) {}
  void check_dimension(const SparseVector& x) const;

 private:
  std::size_t dimension_;
};

class GaussianNB final : public Classifier {
 public:
  // Per-class priors, means and population variances; variances are floored
  // at smoothing * (largest per-feature variance over all rows).
  static GaussianNB fit(const Dataset& data, double smoothing);

  Family family() const override { return Family::gnb; }
  double score(const SparseVector& x) const override;
  Label predict(const SparseVector& x) const override;
  nlohmann::json to_json() const override;
  static GaussianNB from_json(const nlohmann::json& j);

  // Joint log-likelihood log P(c) + sum_j log N(x_j; mu_cj, var_cj).
  double log_joint(const SparseVector& x, int cls) const;

  double smoothing() const { return smoothing_; }
  std::span<const double> variances(int cls) const { return var_[cls]; }

 private:
  explicit GaussianNB(std::size_t d) : Classifier(d) {}

  double smoothing_ = 0.0;
  double log_prior_[2] = {0.0, 0.0};
  std::vector<double> mean_[2];
  std::vector<double> var_[2];
};

// Brute-force k nearest neighbours by Euclidean distance. Distance ties go to
// the lower training row, vote ties to class 0.
class KNearestNeighbors final : public Classifier {
 public:
  static KNearestNeighbors fit(const Dataset& data, int k);

  Family family() const override { return Family::knn; }
  double score(const SparseVector& x) const override;  // fraction of neighbours voting 1
  Label predict(const SparseVector& x) const override;
  nlohmann::json to_json() const override;
  static KNearestNeighbors from_json(const nlohmann::json& j);

  std::vector<std::size_t> neighbors(const SparseVector& x) const;
  int k() const { return k_; }

 private:
  KNearestNeighbors(Dataset data, int k) : Classifier(data.dimension()), train_(std::move(data)), k_(k) {}

  Dataset train_;
  int k_;
};

Label knn_predict(const Dataset& train, const SparseVector& x, int k);

struct SvmOptions {
  double tolerance = 1e-3;         // KKT violation tolerance
  std::size_t max_passes = 10000;  // one pass = one iteration per training row
};

class RbfSvm;

class SvmNotConverged : public std::runtime_error {
 public:
  SvmNotConverged(std::string message, std::shared_ptr<const RbfSvm> best)
      : std::runtime_error(std::move(message)), best_iterate(std::move(best)) {}

  std::shared_ptr<const RbfSvm> best_iterate;
};

// Soft-margin C-SVM with K(u,v) = exp(-gamma ||u - v||^2), trained by SMO
// with second-order working-set selection.
class RbfSvm final : public Classifier {
 public:
  static RbfSvm fit(const Dataset& data, double c, double gamma, const SvmOptions& options = {});

  Family family() const override { return Family::svm_rbf; }
  double score(const SparseVector& x) const override;  // sum alpha_i y_i K(x_i, x) + b
  Label predict(const SparseVector& x) const override;
  nlohmann::json to_json() const override;
  static RbfSvm from_json(const nlohmann::json& j);

  // Full dual vector over the training rows (zeros included) as fitted.
  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> signed_labels() const { return signs_; }
  double bias() const { return bias_; }
  double c() const { return c_; }
  std::size_t iterations() const { return iterations_; }
  std::size_t support_count() const { return support_.size(); }

 private:
  explicit RbfSvm(std::size_t d) : Classifier(d) {}
  void keep_support(const Dataset& data);

  double c_ = 1.0;
  double gamma_ = 1.0;
  double bias_ = 0.0;
  std::size_t iterations_ = 0;
  std::vector<double> alphas_;
  std::vector<double> signs_;
  std::vector<SparseVector> support_;
  std::vector<double> support_norms_;
  std::vector<double> support_coef_;  // alpha_i * y_i
};

// Bagged Gini CART trees. Each tree votes with its leaf majority (ties to 0);
// score is the fraction of trees voting 1.
class RandomForest final : public Classifier {
 public:
  static RandomForest fit(const Dataset& data, int n_estimators, MaxFeatures max_features, std::uint64_t seed);

  Family family() const override { return Family::random_forest; }
  double score(const SparseVector& x) const override;
  Label predict(const SparseVector& x) const override;
  nlohmann::json to_json() const override;
  static RandomForest from_json(const nlohmann::json& j);

  std::size_t tree_count() const { return trees_.size(); }

 private:
  explicit RandomForest(std::size_t d) : Classifier(d) {}

  MaxFeatures max_features_ = MaxFeatures::log2;
  std::uint64_t seed_ = 0;
  std::vector<DecisionTree> trees_;
};

// Logistic-loss gradient boosting with Newton-step leaves.
class GradientBoosting final : public Classifier {
 public:
  static GradientBoosting fit(const Dataset& data, int n_estimators, double learning_rate, int max_depth);

  Family family() const override { return Family::gbdt; }
  double score(const SparseVector& x) const override;  // sigmoid(F_M(x))
  Label predict(const SparseVector& x) const override;  // score >= 0.5
  nlohmann::json to_json() const override;
  static GradientBoosting from_json(const nlohmann::json& j);

  double raw_score(const SparseVector& x) const;
  double initial_score() const { return f0_; }
  // Set when the training data held a single class; the model then emits the
  // base rate everywhere.
  bool degenerate() const { return degenerate_; }
  std::size_t stage_count() const { return trees_.size(); }

 private:
  explicit GradientBoosting(std::size_t d) : Classifier(d) {}

  double learning_rate_ = 0.1;
  int max_depth_ = 6;
  double f0_ = 0.0;
  double base_rate_ = 0.5;
  bool degenerate_ = false;
  std::vector<DecisionTree> trees_;
};

std::unique_ptr<Classifier> fit_classifier(Family family, const Dataset& data, const Hyperparameters& params,
                                           std::uint64_t seed);

// Inverse of Classifier::to_json.
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

double sigmoid(double z);

}  // namespace sidetect
