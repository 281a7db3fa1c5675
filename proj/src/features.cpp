#include "sidetect/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value * e.value;
  return s;
}

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      s += a->value * b->value;
      ++a;
      ++b;
    }
  }
  return s;
}

double SparseVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
  return it != entries.end() && it->index == index ? it->value : 0.0;
}

std::vector<double> SparseVector::dense() const {
  std::vector<double> out(dimension, 0.0);
  for (const auto& e : entries) out[e.index] = e.value;
  return out;
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
  SparseVector v;
  v.dimension = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) v.entries.push_back({static_cast<std::uint32_t>(i), values[i]});
  }
  return v;
}

double squared_distance(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto x = a.entries.begin();
  auto y = b.entries.begin();
  while (x != a.entries.end() || y != b.entries.end()) {
    double d = 0.0;
    if (y == b.entries.end() || (x != a.entries.end() && x->index < y->index)) {
      d = x->value;
      ++x;
    } else if (x == a.entries.end() || y->index < x->index) {
      d = -y->value;
      ++y;
    } else {
      d = x->value - y->value;
      ++x;
      ++y;
    }
    s += d * d;
  }
  return s;
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::bow: return "bow";
    case Scheme::tfidf_unigram: return "tfidf_unigram";
    case Scheme::tfidf_ngram23: return "tfidf_ngram23";
    case Scheme::tfidf_char: return "tfidf_char";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "bow") return Scheme::bow;
  if (name == "tfidf_unigram" || name == "unigram") return Scheme::tfidf_unigram;
  if (name == "tfidf_ngram23" || name == "ngram23") return Scheme::tfidf_ngram23;
  if (name == "tfidf_char" || name == "char") return Scheme::tfidf_char;
  return std::nullopt;
}

std::vector<std::string> extract_terms(const Document& doc, Scheme scheme, NgramRange char_range) {
  switch (scheme) {
    case Scheme::bow:
    case Scheme::tfidf_unigram:
      return doc;
    case Scheme::tfidf_ngram23: {
      std::vector<std::string> terms;
      for (std::size_t n = 2; n <= 3; ++n) {
        for (std::size_t i = 0; i + n <= doc.size(); ++i) {
          std::string term = doc[i];
          for (std::size_t k = 1; k < n; ++k) term += " " + doc[i + k];
          terms.push_back(std::move(term));
        }
      }
      return terms;
    }
    case Scheme::tfidf_char: {
      std::vector<std::string> terms;
      for (const auto& token : doc) {
        auto grams = char_ngrams(token, char_range);
        terms.insert(terms.end(), std::make_move_iterator(grams.begin()), std::make_move_iterator(grams.end()));
      }
      return terms;
    }
  }
  return {};
}

Vocabulary::Vocabulary(std::vector<Term> terms, std::size_t document_count)
    : terms_(std::move(terms)), document_count_(document_count) {
  index_.reserve(terms_.size());
  for (std::uint32_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i].text, i).second) throw DataError("duplicate vocabulary term: " + terms_[i].text);
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FeatureModel FeatureModel::fit(std::span<const Document> corpus, Scheme scheme, const FeatureOptions& options) {
  if (corpus.empty()) throw DataError("cannot fit a feature model on an empty corpus");
  if (scheme == Scheme::tfidf_char && (options.char_range.low < 1 || options.char_range.high < options.char_range.low)) {
    throw std::out_of_range("invalid character n-gram range");
  }
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto terms = extract_terms(doc, scheme, options.char_range);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[std::move(t)];
  }
  std::vector<Vocabulary::Term> terms;
  for (auto& [text, count] : df) {
    if (count >= options.min_df) terms.push_back({text, count});
  }
  FeatureModel model;
  model.scheme_ = scheme;
  model.options_ = options;
  model.vocabulary_ = Vocabulary(std::move(terms), corpus.size());
  return model;
}

double FeatureModel::idf(std::uint32_t index) const {
  return std::log(static_cast<double>(vocabulary_.document_count()) /
                  static_cast<double>(vocabulary_.term(index).df));
}

SparseVector FeatureModel::transform(const Document& doc) const {
  SparseVector v;
  v.dimension = dimension();
  const auto terms = extract_terms(doc, scheme_, options_.char_range);
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& t : terms) {
    if (auto idx = vocabulary_.index_of(t)) ++counts[*idx];
  }
  const auto doc_terms = static_cast<double>(terms.size());
  for (const auto& [idx, count] : counts) {
    double w = static_cast<double>(count);
    if (scheme_ != Scheme::bow) w = (w / doc_terms) * idf(idx);
    if (w != 0.0) v.entries.push_back({idx, w});
  }
  if (options_.normalize) {
    const double norm = std::sqrt(v.squared_norm());
    if (norm > 0.0) {
      for (auto& e : v.entries) e.value /= norm;
    }
  }
  return v;
}

FeatureMatrix FeatureModel::transform_all(std::span<const Document> docs) const {
  FeatureMatrix m;
  m.dimension = dimension();
  m.rows.reserve(docs.size());
  for (const auto& d : docs) m.rows.push_back(transform(d));
  return m;
}

json FeatureModel::to_json() const {
  json terms = json::array();
  for (std::uint32_t i = 0; i < vocabulary_.size(); ++i) {
    terms.push_back({{"t", vocabulary_.term(i).text}, {"idx", i}, {"df", vocabulary_.term(i).df}});
  }
  return {{"scheme", to_string(scheme_)},
          {"n_range", {options_.char_range.low, options_.char_range.high}},
          {"N", vocabulary_.document_count()},
          {"normalize", options_.normalize},
          {"min_df", options_.min_df},
          {"terms", terms}};
}

FeatureModel FeatureModel::from_json(const json& j) {
  FeatureModel model;
  const auto scheme = parse_scheme(j.at("scheme").get<std::string>());
  if (!scheme) throw DataError("unknown feature scheme in model: " + j.at("scheme").dump());
  model.scheme_ = *scheme;
  model.options_.char_range = {j.at("n_range").at(0).get<int>(), j.at("n_range").at(1).get<int>()};
  model.options_.normalize = j.at("normalize").get<bool>();
  model.options_.min_df = j.value("min_df", std::size_t{1});
  const auto n = j.at("N").get<std::size_t>();
  const auto& jt = j.at("terms");
  std::vector<Vocabulary::Term> terms(jt.size());
  std::vector<bool> seen(jt.size(), false);
  for (const auto& t : jt) {
    const auto idx = t.at("idx").get<std::size_t>();
    const auto df = t.at("df").get<std::size_t>();
    if (idx >= terms.size() || seen[idx]) throw DataError("feature model term indices must be 0..|V|-1 without gaps");
    if (df < 1 || df > n) throw DataError("feature model df out of range for term " + t.at("t").dump());
    seen[idx] = true;
    terms[idx] = {t.at("t").get<std::string>(), df};
  }
  model.vocabulary_ = Vocabulary(std::move(terms), n);
  return model;
}

namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable EmbeddingTable::parse(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    lines.push_back(content.substr(start, end - start));
    start = end + 1;
  }
  EmbeddingTable table;
  std::size_t first = 0;
  while (first < lines.size() && fields(lines[first]).empty()) ++first;
  if (first == lines.size()) throw DataError("embedding file is empty");

  // "count dim" header: two integers, and the next row is dim + 1 wide.
  const auto head = fields(lines[first]);
  std::size_t count = 0, dim = 0;
  if (head.size() == 2 && parse_size(head[0], count) && parse_size(head[1], dim)) {
    std::size_t next = first + 1;
    while (next < lines.size() && fields(lines[next]).empty()) ++next;
    if (next == lines.size() || fields(lines[next]).size() == dim + 1) {
      table.dimension_ = dim;
      first = next;
    }
  }
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto f = fields(lines[i]);
    if (f.empty()) continue;
    if (table.dimension_ == 0) {
      if (f.size() < 2) throw DataError("embedding line " + std::to_string(i + 1) + ": no vector values");
      table.dimension_ = f.size() - 1;
    }
    if (f.size() != table.dimension_ + 1) {
      throw DataError("embedding line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(table.dimension_) + " values, found " + std::to_string(f.size() - 1));
    }
    std::vector<double> row(table.dimension_);
    for (std::size_t k = 0; k < table.dimension_; ++k) {
      if (!parse_double(f[k + 1], row[k])) {
        throw DataError("embedding line " + std::to_string(i + 1) + ": bad number '" + std::string(f[k + 1]) + "'");
      }
    }
    const std::string word = normalize(f[0]).normalized;
    if (word.empty() || table.index_.contains(word)) continue;
    table.index_.emplace(word, table.values_.size() / table.dimension_);
    table.values_.insert(table.values_.end(), row.begin(), row.end());
  }
  if (table.index_.empty()) throw DataError("embedding file has no vectors");
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(values_).subspan(it->second * dimension_, dimension_);
}

std::vector<double> EmbeddingTable::embed(const Document& doc) const {
  std::vector<double> mean(dimension_, 0.0);
  std::size_t hits = 0;
  for (const auto& token : doc) {
    auto v = find(token);
    if (!v) continue;
    ++hits;
    for (std::size_t k = 0; k < dimension_; ++k) mean[k] += (*v)[k];
  }
  if (hits > 0) {
    for (auto& x : mean) x /= static_cast<double>(hits);
  }
  return mean;
}

}  // namespace sidetect
