#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidetect/classifiers.hpp"
#include "sidetect/evaluation.hpp"
#include "sidetect/features.hpp"
#include "sidetect/grid_search.hpp"
#include "sidetect/report.hpp"
#include "sidetect/synthetic.hpp"

namespace sidetect {

enum class FeatureKind { bow, unigram, ngram23, char_ngram, word2vec, fasttext };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view name);
bool is_embedding(FeatureKind kind);

struct FeatureSpec {
  FeatureKind kind = FeatureKind::bow;
  std::filesystem::path embeddings;  // word2vec / fasttext only

  std::string name() const { return std::string(to_string(kind)); }
};

// Normalized tokens with stop words removed.
std::vector<Document> prepare_documents(const Corpus& corpus, const StopList& stops);

// Turns documents into vectors: a fitted TF-IDF/BOW model, or mean word
// vectors from an embedding table.
class Featurizer {
 public:
  static Featurizer fit(const FeatureSpec& spec, std::span<const Document> train, bool l2_normalize,
                        NgramRange char_range, std::shared_ptr<const EmbeddingTable> table = nullptr);

  SparseVector transform(const Document& doc) const;
  FeatureMatrix transform_all(std::span<const Document> docs) const;
  std::size_t dimension() const;
  const FeatureSpec& spec() const { return spec_; }

  nlohmann::json to_json() const;
  // Embedding featurizers reload the table from the recorded path.
  static Featurizer from_json(const nlohmann::json& j);

 private:
  FeatureSpec spec_;
  bool l2_normalize_ = false;
  std::optional<FeatureModel> model_;
  std::shared_ptr<const EmbeddingTable> table_;
};

struct ModelBundle {
  Featurizer featurizer;
  std::unique_ptr<Classifier> classifier;

  nlohmann::json to_json() const;
  static ModelBundle from_json(const nlohmann::json& j);
};

enum class TuningMode { grid, fixed };

struct ExperimentConfig {
  std::optional<std::filesystem::path> corpus;  // labeled JSONL/CSV
  TweetFormat corpus_format = TweetFormat::jsonl;
  std::optional<SyntheticSpec> synthetic;       // used when corpus is unset
  std::optional<std::filesystem::path> stopwords;
  SplitSpec split;
  std::vector<Family> families;
  std::vector<FeatureSpec> features;
  NgramRange char_range{2, 4};
  // Per family; families not listed use L2 normalization for svm_rbf and knn only.
  std::map<Family, bool> l2_normalize;
  TuningMode tuning = TuningMode::fixed;
  int folds = 5;
  Metric metric = Metric::accuracy;
  HyperGrid grid = HyperGrid::defaults();
  std::map<Family, Hyperparameters> fixed;
  std::vector<std::filesystem::path> external;  // prediction files scored on the test split
  std::filesystem::path output = "out";
  std::vector<ReportFormat> formats{ReportFormat::json, ReportFormat::csv, ReportFormat::markdown};
  bool write_artifacts = true;
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0: hardware concurrency

  bool normalize_for(Family family) const;
  Hyperparameters fixed_for(Family family) const;

  // Relative paths resolve against base_dir. Throws DataError on unknown
  // keys' values or files that do not exist.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
};

// Observes every set of ids handed to a fitting step, tagged
// "vectorizer_fit", "grid_search" or "model_fit".
struct ExperimentHooks {
  std::function<void(const std::string& cell, const std::string& stage, const std::vector<std::string>& ids)> on_fit;
};

struct ExperimentResult {
  ResultTable table;
  std::vector<std::filesystem::path> written;
};

// Loads or generates the corpus, splits it, and for every (family, feature)
// cell fits features and model on the training part only, then scores the
// test part. Failed cells become annotated rows.
ExperimentResult run_grid(const ExperimentConfig& config, const ExperimentHooks& hooks = {});

Corpus load_experiment_corpus(const ExperimentConfig& config);

std::string display_name(Family family);
std::string display_name(FeatureKind kind);

}  // namespace sidetect
