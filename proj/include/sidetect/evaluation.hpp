#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidetect/agreement.hpp"
#include "sidetect/ingest.hpp"

namespace sidetect {

// Positive class is Suicidal (1).
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  // Same predictions scored with class 0 as the positive class.
  ConfusionMatrix swapped() const { return {tn, fn, tp, fp}; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws DataError listing the symmetric difference when the id sets differ.
ConfusionMatrix confusion(const LabelMap& predictions, const LabelMap& gold);
ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> gold);

// An undefined value (zero denominator) is reported as 0 with its flag cleared.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = false;
  bool recall_defined = false;
  bool f1_defined = false;
};

struct MetricsReport {
  ClassMetrics suicidal;      // class 1 positive; the headline numbers
  ClassMetrics non_suicidal;  // class 0 positive
  ClassMetrics macro;         // mean of the defined per-class values
  double accuracy = 0.0;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);
MetricsReport metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;  // +inf for the (0,0) origin
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Thresholds at every distinct score, descending; tied scores form one
// diagonal step. AUC by the trapezoid rule. Throws DataError unless both
// classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const Label> gold);
RocCurve roc_auc(const std::map<std::string, double>& scores, const LabelMap& gold);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool stratified = true;
};

struct Split {
  std::vector<std::string> train;  // corpus order
  std::vector<std::string> test;
};

// Per class, round(n_c * fraction) with halves rounded up go to train, chosen
// by a seeded permutation within the class. Throws DataError for unlabeled
// tweets, a fraction outside (0,1), or a class with fewer than 2 items.
Split stratified_split(const Corpus& corpus, const SplitSpec& spec);

struct EvalReport {
  std::string model;
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::optional<RocCurve> roc;
  bool roc_absent = true;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

EvalReport evaluate(std::string model, const LabelMap& predictions, const LabelMap& gold,
                    const std::map<std::string, double>* scores = nullptr);

struct PredictionFile {
  std::string model;
  LabelMap predictions;
  std::optional<std::map<std::string, double>> scores;
};

// "# model=<name>" comment line, optional "id,pred[,score]" header, then rows.
PredictionFile parse_prediction_file(std::string_view content);
PredictionFile load_prediction_file(const std::filesystem::path& path);

// Throws DataError on duplicate ids or ids that differ from the gold set.
EvalReport score_external(const PredictionFile& file, const LabelMap& gold);
EvalReport score_external(const std::filesystem::path& path, const LabelMap& gold);

LabelMap gold_labels(const Corpus& corpus);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const RocCurve& roc);

}  // namespace sidetect
