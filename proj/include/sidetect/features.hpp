#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sidetect/textnorm.hpp"

namespace sidetect {

using Document = std::vector<std::string>;  // normalized tokens

struct SparseEntry {
  std::uint32_t index;
  double value;

  bool operator==(const SparseEntry&) const = default;
};

// Indices strictly increasing and below dimension; zeros are never stored.
struct SparseVector {
  std::vector<SparseEntry> entries;
  std::size_t dimension = 0;

  double squared_norm() const;
  double dot(const SparseVector& other) const;
  double at(std::uint32_t index) const;
  std::vector<double> dense() const;

  static SparseVector from_dense(std::span<const double> values);
};

// Exact squared Euclidean distance, accumulated over the union of indices in
// increasing index order.
double squared_distance(const SparseVector& a, const SparseVector& b);

struct FeatureMatrix {
  std::vector<SparseVector> rows;
  std::size_t dimension = 0;

  std::size_t size() const { return rows.size(); }
};

enum class Scheme { bow, tfidf_unigram, tfidf_ngram23, tfidf_char };

std::string_view to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

struct FeatureOptions {
  NgramRange char_range{2, 4};
  bool normalize = false;  // scale each vector to unit L2 length
  std::size_t min_df = 1;
};

// Terms of one document in the scheme's term space, with repetition.
std::vector<std::string> extract_terms(const Document& doc, Scheme scheme, NgramRange char_range);

class Vocabulary {
 public:
  struct Term {
    std::string text;
    std::size_t df;
  };

  Vocabulary() = default;
  // Terms must be unique; column indices follow the given order.
  Vocabulary(std::vector<Term> terms, std::size_t document_count);

  std::optional<std::uint32_t> index_of(std::string_view term) const;
  const Term& term(std::uint32_t index) const { return terms_[index]; }
  std::size_t size() const { return terms_.size(); }
  std::size_t document_count() const { return document_count_; }

 private:
  std::vector<Term> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t document_count_ = 0;
};

// A fitted vectorizer. Immutable after fit; transform is safe to call
// concurrently.
class FeatureModel {
 public:
  // Columns are assigned in lexicographic (byte) order of the terms. Throws
  // DataError on an empty corpus.
  static FeatureModel fit(std::span<const Document> corpus, Scheme scheme, const FeatureOptions& options = {});

  // bow: raw counts. tfidf_*: (count / terms in doc) * ln(N / df). Terms
  // outside the vocabulary are dropped from the numerator but still count
  // towards the document length.
  SparseVector transform(const Document& doc) const;
  FeatureMatrix transform_all(std::span<const Document> docs) const;

  Scheme scheme() const { return scheme_; }
  const FeatureOptions& options() const { return options_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::size_t dimension() const { return vocabulary_.size(); }
  double idf(std::uint32_t index) const;

  nlohmann::json to_json() const;
  static FeatureModel from_json(const nlohmann::json& j);

 private:
  Scheme scheme_ = Scheme::bow;
  FeatureOptions options_;
  Vocabulary vocabulary_;
};

// Word vectors loaded from the common textual format: an optional
// "count dim" header line, then "word v1 ... vd" per line.
class EmbeddingTable {
 public:
  // Duplicate words keep their first vector. Throws DataError on an empty
  // file or a row whose width differs from the first, naming the line.
  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable parse(std::string_view content);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return index_.size(); }
  std::optional<std::span<const double>> find(std::string_view word) const;

  // Mean of the in-table token vectors; zero vector when none are known.
  std::vector<double> embed(const Document& doc) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> values_;
};

}  // namespace sidetect

namespace sidetect {

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) { return EmbeddingTable::load(path); }
inline std::vector<double> embed_doc(const EmbeddingTable& table, const Document& doc) { return table.embed(doc); }

}  // namespace sidetect
