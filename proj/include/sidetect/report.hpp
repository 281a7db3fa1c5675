#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidetect/evaluation.hpp"

namespace sidetect {

struct ResultRow {
  std::string classifier;  // family name, or the model name of an external file
  std::string feature;     // feature name, "external" for prediction files
  bool ok = false;
  std::string error;  // reason when !ok
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::optional<RocCurve> roc;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::optional<double> cv_score;
  bool external = false;

  nlohmann::json to_json() const;
};

struct ResultTable {
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<ResultRow> rows;

  nlohmann::json to_json() const;
};

enum class ReportFormat { json, csv, markdown };

std::optional<ReportFormat> parse_report_format(std::string_view name);

// Indices of the successful rows holding the column maximum, in row order.
struct BestRows {
  std::vector<std::size_t> precision, recall, f1, accuracy;
};
BestRows best_rows(const ResultTable& table);

std::string report_json(const ResultTable& table);
std::string report_csv(const ResultTable& table);
// Columns: Classifier, Feature, Precision, Recall, F1-score, Accuracy. Column
// maxima are set in bold; failed rows show the reason.
std::string report_markdown(const ResultTable& table);

// Writes report.json / report.csv / report.md under dir and returns the paths
// in the order requested. Throws DataError for an empty table.
std::vector<std::filesystem::path> emit_report(const ResultTable& table, const std::vector<ReportFormat>& formats,
                                               const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace sidetect
