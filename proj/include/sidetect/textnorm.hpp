#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sidetect {

// Every step defaults to on. Turning individual steps off is supported but
// idempotence is only guaranteed for the default recipe.
struct NormalizeOptions {
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_hash = true;
  bool strip_diacritics = true;
  bool strip_tatweel = true;
  bool fold_alef = true;           // U+0622/U+0623/U+0625 -> U+0627
  bool fold_alef_maqsura = true;   // U+0649 -> U+064A
  bool fold_ta_marbuta = true;     // U+0629 -> U+0647 (lossy)
};

struct NormalizedText {
  std::string original;
  std::string normalized;
  std::vector<std::string> tokens;
};

NormalizedText normalize(std::string_view raw, const NormalizeOptions& options = {});

// Whitespace split; never yields empty tokens.
std::vector<std::string> split_tokens(std::string_view text);

class StopList {
 public:
  StopList() = default;
  explicit StopList(std::span<const std::string> words);

  // One token per line, '#' starts a comment line. Entries are normalized.
  static StopList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const StopList& stops);

struct NgramRange {
  int low = 2;
  int high = 4;
};

// Windows are taken per token, grouped by length in ascending order. A token
// shorter than n is emitted whole, once, for that n.
std::vector<std::string> char_ngrams(std::string_view token, NgramRange range);

}  // namespace sidetect
