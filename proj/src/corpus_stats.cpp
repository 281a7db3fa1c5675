#include "sidetect/corpus_stats.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

namespace {

bool selected(const Tweet& t, std::optional<Label> label) { return !label || t.label == label; }

json label_json(std::optional<Label> label) {
  if (!label) return nullptr;
  return static_cast<int>(*label);
}

}  // namespace

json ClassWeights::to_json() const {
  return {{"suicidal", {{"count", suicidal}, {"fraction", suicidal_fraction}}},
          {"non_suicidal", {{"count", non_suicidal}, {"fraction", non_suicidal_fraction}}},
          {"total", total()}};
}

ClassWeights class_weights(const Corpus& corpus) {
  ClassWeights w;
  for (const auto& t : corpus.tweets) {
    if (!t.label) throw DataError("tweet " + t.id + " has no label");
    if (*t.label == Label::Suicidal) {
      ++w.suicidal;
    } else {
      ++w.non_suicidal;
    }
  }
  if (w.total() == 0) throw DataError("class weights of an empty corpus");
  const double n = static_cast<double>(w.total());
  w.suicidal_fraction = static_cast<double>(w.suicidal) / n;
  w.non_suicidal_fraction = static_cast<double>(w.non_suicidal) / n;
  return w;
}

std::size_t Histogram::total() const {
  std::size_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

json Histogram::to_json() const { return {{"class", label_json(label)}, {"edges", edges}, {"counts", counts}}; }

std::string Histogram::to_csv() const {
  std::ostringstream out;
  out << "low,high,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out << edges[i] << ',' << edges[i + 1] << ',' << counts[i] << '\n';
  return out.str();
}

Histogram length_histogram(const Corpus& corpus, std::optional<Label> label, std::size_t width) {
  if (width == 0) throw std::invalid_argument("bin width must be positive");
  std::vector<std::size_t> lengths;
  for (const auto& t : corpus.tweets) {
    if (selected(t, label)) lengths.push_back(normalize(t.text).tokens.size());
  }
  Histogram h;
  h.label = label;
  if (lengths.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(lengths.begin(), lengths.end());
  const std::size_t first = *lo_it / width;
  const std::size_t last = *hi_it / width;
  for (std::size_t b = first; b <= last + 1; ++b) h.edges.push_back(b * width);
  h.counts.assign(last - first + 1, 0);
  for (auto len : lengths) ++h.counts[len / width - first];
  return h;
}

std::vector<TermCount> term_frequencies(const Corpus& corpus, std::optional<Label> label, const StopList& stops,
                                        std::size_t top_k) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : corpus.tweets) {
    if (!selected(t, label)) continue;
    for (const auto& tok : normalize(t.text).tokens) {
      if (!stops.contains(tok)) ++counts[tok];
    }
  }
  std::vector<TermCount> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const TermCount& a, const TermCount& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (top_k > 0 && ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

std::size_t HourlyTrend::total() const {
  std::size_t s = unknown;
  for (auto c : hours) s += c;
  return s;
}

json HourlyTrend::to_json() const { return {{"hours", hours}, {"unknown", unknown}}; }

std::string HourlyTrend::to_csv() const {
  std::ostringstream out;
  out << "hour,count\n";
  for (std::size_t h = 0; h < hours.size(); ++h) out << h << ',' << hours[h] << '\n';
  out << "unknown," << unknown << '\n';
  return out.str();
}

HourlyTrend hourly_trend(const Corpus& corpus, std::optional<Label> label, int tz_offset_minutes) {
  HourlyTrend trend;
  for (const auto& t : corpus.tweets) {
    if (!selected(t, label)) continue;
    if (!t.created_at) {
      ++trend.unknown;
      continue;
    }
    const std::int64_t local = *t.created_at + static_cast<std::int64_t>(tz_offset_minutes) * 60;
    std::int64_t seconds_of_day = local % 86400;
    if (seconds_of_day < 0) seconds_of_day += 86400;
    ++trend.hours[static_cast<std::size_t>(seconds_of_day / 3600)];
  }
  return trend;
}

}  // namespace sidetect
