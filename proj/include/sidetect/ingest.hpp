#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sidetect/textnorm.hpp"

namespace sidetect {

enum class Label : int { NonSuicidal = 0, Suicidal = 1 };

std::optional<Label> label_from_int(long long value);

struct Tweet {
  std::string id;
  std::string text;
  std::optional<std::int64_t> created_at;  // UTC seconds since epoch
  std::vector<std::string> matched_keywords;
  std::optional<Label> label;
};

struct Corpus {
  std::vector<Tweet> tweets;
  std::string provenance;

  std::size_t size() const { return tweets.size(); }
  bool empty() const { return tweets.empty(); }
  const Tweet* find(std::string_view id) const;
};

// RFC 3339 timestamps ("2021-08-23T22:15:00Z", "...+03:00", fractional
// seconds truncated). Returns nullopt on malformed input.
std::optional<std::int64_t> parse_rfc3339(std::string_view text);
std::string format_rfc3339(std::int64_t seconds);

enum class TweetFormat { jsonl, csv };

std::optional<TweetFormat> parse_tweet_format(std::string_view name);

struct LoadResult {
  Corpus corpus;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Throws DataError when the file cannot be read. Malformed records and
// records repeating an earlier id are skipped and counted.
LoadResult load_tweets(const std::filesystem::path& path, TweetFormat format);
LoadResult parse_tweets(std::string_view content, TweetFormat format);

void save_tweets_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::string to_jsonl(const Corpus& corpus);

struct Keyword {
  std::string phrase;               // normalized
  std::vector<std::string> tokens;  // whitespace split of phrase
  std::string source;
};

class KeywordList {
 public:
  KeywordList() = default;

  // Phrases are normalized; a phrase that normalizes to nothing is rejected.
  void add(std::string_view phrase, std::string source = {});

  // Lines of "arabic_phrase<TAB>source_tag"; blank lines and '#' lines skipped.
  static KeywordList load(const std::filesystem::path& path);

  std::span<const Keyword> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Keyword> entries_;
};

// Phrase matches are token-contiguous over the normalized text. Sets
// tweet.matched_keywords and returns it.
std::vector<std::string> match_keywords(Tweet& tweet, const KeywordList& keywords);

// Duplicate key is the normalized text. The earliest created_at survives,
// ties (and missing timestamps, which sort last) fall back to the smaller id.
Corpus dedup(const Corpus& corpus);

struct StageCounts {
  std::size_t loaded = 0;
  std::size_t matched = 0;
  std::size_t kept = 0;
};

struct CollectResult {
  Corpus corpus;
  StageCounts counts;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

CollectResult collect(const Corpus& loaded, const KeywordList& keywords, bool do_dedup);
CollectResult collect(const std::filesystem::path& source, TweetFormat format, const KeywordList& keywords,
                      bool do_dedup);

}  // namespace sidetect
