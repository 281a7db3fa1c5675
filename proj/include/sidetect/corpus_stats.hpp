#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sidetect/ingest.hpp"
#include "sidetect/textnorm.hpp"

namespace sidetect {

struct ClassWeights {
  std::size_t suicidal = 0;
  std::size_t non_suicidal = 0;
  double suicidal_fraction = 0.0;
  double non_suicidal_fraction = 0.0;

  std::size_t total() const { return suicidal + non_suicidal; }
  nlohmann::json to_json() const;
};

// Throws DataError on an unlabeled tweet or an empty corpus.
ClassWeights class_weights(const Corpus& corpus);

// Bin i covers token counts [edges[i], edges[i+1]). Bins run from the
// smallest to the largest observed length, aligned to multiples of width.
struct Histogram {
  std::optional<Label> label;  // nullopt: whole corpus
  std::vector<std::size_t> edges;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Counts tokens after normalization. Tweets without a label are ignored when
// a class is requested. Throws std::invalid_argument for width 0.
Histogram length_histogram(const Corpus& corpus, std::optional<Label> label, std::size_t width);

using TermCount = std::pair<std::string, std::size_t>;

// Descending count, ties alphabetical (byte order). top_k 0 keeps all.
std::vector<TermCount> term_frequencies(const Corpus& corpus, std::optional<Label> label, const StopList& stops,
                                        std::size_t top_k);

struct HourlyTrend {
  std::array<std::size_t, 24> hours{};
  std::size_t unknown = 0;  // tweets without a timestamp

  std::size_t total() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

HourlyTrend hourly_trend(const Corpus& corpus, std::optional<Label> label, int tz_offset_minutes);

}  // namespace sidetect
