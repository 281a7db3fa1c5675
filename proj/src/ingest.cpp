#include "sidetect/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

std::optional<Label> label_from_int(long long value) {
  if (value == 0) return Label::NonSuicidal;
  if (value == 1) return Label::Suicidal;
  return std::nullopt;
}

const Tweet* Corpus::find(std::string_view id) const {
  auto it = std::find_if(tweets.begin(), tweets.end(), [&](const Tweet& t) { return t.id == id; });
  return it == tweets.end() ? nullptr : &*it;
}

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

unsigned days_in_month(int y, int m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

std::optional<Tweet> tweet_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  Tweet t;
  auto id = j.find("id");
  if (id == j.end()) return std::nullopt;
  if (id->is_string()) {
    t.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    t.id = std::to_string(id->get<long long>());
  } else {
    return std::nullopt;
  }
  if (t.id.empty()) return std::nullopt;
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) return std::nullopt;
  t.text = text->get<std::string>();
  if (auto ts = j.find("created_at"); ts != j.end() && !ts->is_null()) {
    if (!ts->is_string()) return std::nullopt;
    t.created_at = parse_rfc3339(ts->get<std::string>());
    if (!t.created_at) return std::nullopt;
  }
  if (auto label = j.find("label"); label != j.end() && !label->is_null()) {
    if (!label->is_number_integer()) return std::nullopt;
    t.label = label_from_int(label->get<long long>());
    if (!t.label) return std::nullopt;
  }
  if (auto kws = j.find("matched_keywords"); kws != j.end() && kws->is_array()) {
    for (const auto& k : *kws) {
      if (k.is_string()) t.matched_keywords.push_back(k.get<std::string>());
    }
  }
  return t;
}

// RFC 4180 records; quoted fields may contain separators, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view content, std::vector<bool>& well_formed) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool ok = true;
  bool field_started = false;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) {
      rows.push_back(std::move(row));
      well_formed.push_back(ok);
    }
    row.clear();
    ok = true;
    field_started = false;
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (field_started) ok = false;
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < content.size() && content[i + 1] == '\n') continue;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) ok = false;
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

LoadResult parse_jsonl(std::string_view content) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const std::string line = trim(content.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line == "\r") continue;
    const json j = json::parse(line, nullptr, false);
    auto tweet = j.is_discarded() ? std::nullopt : tweet_from_json(j);
    if (!tweet || !seen.insert(tweet->id).second) {
      ++result.skipped;
      continue;
    }
    result.corpus.tweets.push_back(std::move(*tweet));
  }
  return result;
}

LoadResult parse_csv_tweets(std::string_view content) {
  LoadResult result;
  std::vector<bool> well_formed;
  auto rows = parse_csv(content, well_formed);
  if (rows.empty()) return result;
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto text_col = column("text");
  const auto ts_col = column("created_at");
  const auto label_col = column("label");
  if (!id_col || !text_col) throw DataError("CSV header must contain at least id and text columns");

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!well_formed[r] || row.size() != header.size()) {
      ++result.skipped;
      continue;
    }
    Tweet t;
    t.id = trim(row[*id_col]);
    t.text = row[*text_col];
    bool valid = !t.id.empty();
    if (valid && ts_col && !trim(row[*ts_col]).empty()) {
      t.created_at = parse_rfc3339(trim(row[*ts_col]));
      valid = t.created_at.has_value();
    }
    if (valid && label_col && !trim(row[*label_col]).empty()) {
      const auto cell = trim(row[*label_col]);
      valid = cell == "0" || cell == "1";
      if (valid) t.label = cell == "1" ? Label::Suicidal : Label::NonSuicidal;
    }
    if (!valid || !seen.insert(t.id).second) {
      ++result.skipped;
      continue;
    }
    result.corpus.tweets.push_back(std::move(t));
  }
  return result;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("error while reading: " + path.string());
  return ss.str();
}

}  // namespace

std::optional<std::int64_t> parse_rfc3339(std::string_view s) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_int(s, 0, 4, year) || s.size() < 19 || s[4] != '-' || !read_int(s, 5, 2, month) || s[7] != '-' ||
      !read_int(s, 8, 2, day) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !read_int(s, 11, 2, hour) ||
      s[13] != ':' || !read_int(s, 14, 2, minute) || s[16] != ':' || !read_int(s, 17, 2, second)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || static_cast<unsigned>(day) > days_in_month(year, month) || hour > 23 ||
      minute > 59 || second > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const auto digits_start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  std::int64_t offset = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh = 0, om = 0;
    if (!read_int(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' || !read_int(s, pos + 4, 2, om) ||
        oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset = (oh * 60 + om) * 60;
    if (s[pos] == '-') offset = -offset;
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

std::string format_rfc3339(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::optional<TweetFormat> parse_tweet_format(std::string_view name) {
  if (name == "jsonl") return TweetFormat::jsonl;
  if (name == "csv") return TweetFormat::csv;
  return std::nullopt;
}

LoadResult parse_tweets(std::string_view content, TweetFormat format) {
  LoadResult result = format == TweetFormat::jsonl ? parse_jsonl(content) : parse_csv_tweets(content);
  if (result.corpus.empty()) result.warnings.push_back("no parseable records; corpus is empty");
  return result;
}

LoadResult load_tweets(const std::filesystem::path& path, TweetFormat format) {
  LoadResult result = parse_tweets(read_file(path), format);
  result.corpus.provenance = path.string();
  return result;
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& t : corpus.tweets) {
    json j;
    j["id"] = t.id;
    j["text"] = t.text;
    j["created_at"] = t.created_at ? json(format_rfc3339(*t.created_at)) : json(nullptr);
    if (t.label) j["label"] = static_cast<int>(*t.label);
    if (!t.matched_keywords.empty()) j["matched_keywords"] = t.matched_keywords;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void save_tweets_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << to_jsonl(corpus);
}

void KeywordList::add(std::string_view phrase, std::string source) {
  auto norm = normalize(phrase);
  if (norm.tokens.empty()) throw DataError("keyword phrase is empty after normalization");
  entries_.push_back(Keyword{std::move(norm.normalized), std::move(norm.tokens), std::move(source)});
}

KeywordList KeywordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open keyword file: " + path.string());
  KeywordList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    const std::string phrase = line.substr(0, tab);
    const std::string source = tab == std::string::npos ? std::string() : trim(line.substr(tab + 1));
    try {
      list.add(phrase, source);
    } catch (const DataError&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty keyword phrase");
    }
  }
  return list;
}

std::vector<std::string> match_keywords(Tweet& tweet, const KeywordList& keywords) {
  const auto tokens = normalize(tweet.text).tokens;
  std::vector<std::string> matched;
  for (const auto& kw : keywords.entries()) {
    const auto& phrase = kw.tokens;
    if (phrase.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
      if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        matched.push_back(kw.phrase);
        break;
      }
    }
  }
  tweet.matched_keywords = matched;
  return matched;
}

Corpus dedup(const Corpus& corpus) {
  // survivor index per normalized text
  std::unordered_map<std::string, std::size_t> best;
  auto earlier = [&](const Tweet& a, const Tweet& b) {
    const auto ta = a.created_at.value_or(INT64_MAX);
    const auto tb = b.created_at.value_or(INT64_MAX);
    if (ta != tb) return ta < tb;
    return a.id < b.id;
  };
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    auto key = normalize(corpus.tweets[i].text).normalized;
    auto [it, inserted] = best.try_emplace(std::move(key), i);
    if (!inserted && earlier(corpus.tweets[i], corpus.tweets[it->second])) it->second = i;
  }
  std::vector<bool> keep(corpus.tweets.size(), false);
  for (const auto& [key, idx] : best) keep[idx] = true;
  Corpus out;
  out.provenance = corpus.provenance;
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    if (keep[i]) out.tweets.push_back(corpus.tweets[i]);
  }
  return out;
}

CollectResult collect(const Corpus& loaded, const KeywordList& keywords, bool do_dedup) {
  CollectResult result;
  result.counts.loaded = loaded.size();
  Corpus matched;
  matched.provenance = loaded.provenance;
  for (auto tweet : loaded.tweets) {
    if (!match_keywords(tweet, keywords).empty()) matched.tweets.push_back(std::move(tweet));
  }
  result.counts.matched = matched.size();
  result.corpus = do_dedup ? dedup(matched) : std::move(matched);
  result.counts.kept = result.corpus.size();
  return result;
}

CollectResult collect(const std::filesystem::path& source, TweetFormat format, const KeywordList& keywords,
                      bool do_dedup) {
  auto loaded = load_tweets(source, format);
  auto result = collect(loaded.corpus, keywords, do_dedup);
  result.skipped = loaded.skipped;
  result.warnings = std::move(loaded.warnings);
  return result;
}

}  // namespace sidetect
