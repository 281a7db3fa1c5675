#include "sidetect/textnorm.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "sidetect/error.hpp"
#include "sidetect/utf8.hpp"

namespace sidetect {

namespace {

bool is_diacritic(char32_t cp) { return (cp >= 0x064B && cp <= 0x0652) || cp == 0x0670; }

constexpr char32_t kTatweel = 0x0640;

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

bool contains_ci(std::string_view s, std::string_view needle) {
  for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
    if (starts_with_ci(s.substr(i), needle)) return true;
  }
  return false;
}

bool is_url(std::string_view token) {
  return contains_ci(token, "http://") || contains_ci(token, "https://") || contains_ci(token, "www.");
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  const std::u32string cps = utf8::decode(text);
  std::string current;
  for (char32_t cp : cps) {
    if (utf8::is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      utf8::append(current, cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

NormalizedText normalize(std::string_view raw, const NormalizeOptions& options) {
  // Character-level rewriting runs before token filtering so that a token
  // which only becomes a URL or mention after stripping is still removed.
  std::u32string cps = utf8::decode(raw);
  std::u32string mapped;
  mapped.reserve(cps.size());
  for (char32_t cp : cps) {
    if (options.strip_hash && cp == U'#') continue;
    if (options.strip_diacritics && is_diacritic(cp)) continue;
    if (options.strip_tatweel && cp == kTatweel) continue;
    if (options.fold_alef && (cp == 0x0622 || cp == 0x0623 || cp == 0x0625)) cp = 0x0627;
    if (options.fold_alef_maqsura && cp == 0x0649) cp = 0x064A;
    if (options.fold_ta_marbuta && cp == 0x0629) cp = 0x0647;
    mapped.push_back(cp);
  }

  NormalizedText out;
  out.original = std::string(raw);
  for (auto& token : split_tokens(utf8::encode(mapped))) {
    if (options.strip_mentions && token.front() == '@') continue;
    if (options.strip_urls && is_url(token)) continue;
    if (!out.normalized.empty()) out.normalized.push_back(' ');
    out.normalized += token;
    out.tokens.push_back(std::move(token));
  }
  return out;
}

StopList::StopList(std::span<const std::string> words) {
  for (const auto& w : words) {
    for (auto& t : normalize(w).tokens) words_.insert(std::move(t));
  }
}

StopList StopList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stop list: " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    words.insert(words.end(), tokens.begin(), tokens.end());
  }
  return StopList(words);
}

bool StopList::contains(std::string_view token) const { return words_.contains(std::string(token)); }

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const StopList& stops) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out),
               [&](const std::string& t) { return !stops.contains(t); });
  return out;
}

std::vector<std::string> char_ngrams(std::string_view token, NgramRange range) {
  if (range.low < 1 || range.high < range.low) {
    throw std::out_of_range("invalid character n-gram range [" + std::to_string(range.low) + ", " +
                            std::to_string(range.high) + "]");
  }
  std::vector<std::string> grams;
  const std::u32string cps = utf8::decode(token);
  if (cps.empty()) return grams;
  const auto len = cps.size();
  for (int n = range.low; n <= range.high; ++n) {
    const auto width = static_cast<std::size_t>(n);
    if (len < width) {
      grams.emplace_back(token);
      continue;
    }
    for (std::size_t i = 0; i + width <= len; ++i) {
      grams.push_back(utf8::encode(std::u32string_view(cps).substr(i, width)));
    }
  }
  return grams;
}

}  // namespace sidetect
