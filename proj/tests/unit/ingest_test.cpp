#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "../support/corpus_builders.hpp"
#include "sidetect/error.hpp"
#include "sidetect/ingest.hpp"

using namespace sidetect;
using testing_support::corpus;
using testing_support::tweet;

TEST_CASE("parse_tweets: jsonl") {
  const auto r = parse_tweets(
      "{\"id\":\"1\",\"text\":\"a\"}\n{\"id\":\"2\",\"text\":\"b\",\"label\":1}\n"
      "{\"id\":\"3\",\"text\":\"c\",\"created_at\":\"2021-08-23T22:15:00Z\"}\n",
      TweetFormat::jsonl);
  REQUIRE(r.corpus.size() == 3);
  CHECK(r.skipped == 0);
  CHECK(r.corpus.tweets[1].label == Label::Suicidal);
  CHECK(r.corpus.tweets[2].created_at == 1629756900);
}

TEST_CASE("parse_tweets: malformed and duplicate records are skipped") {
  const auto r = parse_tweets("{\"id\":\"1\",\"text\":\"a\"}\nnot json\n{\"id\":\"2\",\"text\":\"b\"}\n",
                              TweetFormat::jsonl);
  CHECK(r.corpus.size() == 2);
  CHECK(r.skipped == 1);
  const auto dup = parse_tweets("{\"id\":\"1\",\"text\":\"a\"}\n{\"id\":\"1\",\"text\":\"b\"}\n", TweetFormat::jsonl);
  CHECK(dup.corpus.size() == 1);
  CHECK(dup.skipped == 1);
  const auto bad_label = parse_tweets("{\"id\":\"1\",\"text\":\"a\",\"label\":2}\n", TweetFormat::jsonl);
  CHECK(bad_label.corpus.size() == 0);
  CHECK(bad_label.skipped == 1);
}

TEST_CASE("parse_tweets: empty input") {
  const auto r = parse_tweets("", TweetFormat::jsonl);
  CHECK(r.corpus.empty());
  CHECK(r.skipped == 0);
}

TEST_CASE("parse_tweets: csv with quoting") {
  const auto r = parse_tweets("id,text,label\n1,\"hello, \"\"world\"\"\",0\n2,\"multi\nline\",1\n", TweetFormat::csv);
  REQUIRE(r.corpus.size() == 2);
  CHECK(r.corpus.tweets[0].text == "hello, \"world\"");
  CHECK(r.corpus.tweets[1].text == "multi\nline");
  CHECK(r.corpus.tweets[1].label == Label::Suicidal);
}

TEST_CASE("rfc3339 round trip and offsets") {
  CHECK(parse_rfc3339("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_rfc3339("2021-08-23T22:15:00+03:00") == parse_rfc3339("2021-08-23T19:15:00Z"));
  CHECK(parse_rfc3339("2021-08-23T22:15:00.123Z") == parse_rfc3339("2021-08-23T22:15:00Z"));
  CHECK_FALSE(parse_rfc3339("yesterday").has_value());
  CHECK_FALSE(parse_rfc3339("2021-13-01T00:00:00Z").has_value());
  for (std::int64_t t : {0LL, 951782400LL, 1629756900LL, 4102444799LL}) CHECK(parse_rfc3339(format_rfc3339(t)) == t);
}

TEST_CASE("save and load jsonl round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sidetect_ingest_rt";
  std::filesystem::create_directories(dir);
  auto c = corpus({tweet("a", "نص \"مقتبس\"", Label::Suicidal, 1629756900), tweet("b", "x")});
  save_tweets_jsonl(c, dir / "c.jsonl");
  const auto back = load_tweets(dir / "c.jsonl", TweetFormat::jsonl);
  REQUIRE(back.corpus.size() == 2);
  CHECK(back.corpus.tweets[0].text == c.tweets[0].text);
  CHECK(back.corpus.tweets[0].label == Label::Suicidal);
  CHECK(back.corpus.tweets[0].created_at == 1629756900);
  CHECK_FALSE(back.corpus.tweets[1].label.has_value());
  CHECK_THROWS_AS(load_tweets(dir / "missing.jsonl", TweetFormat::jsonl), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("match_keywords: token contiguity") {
  KeywordList kw;
  kw.add("ابى اموت", "I want to die");
  auto t = tweet("1", "ابى اموت اليوم");
  CHECK(match_keywords(t, kw) == std::vector<std::string>{"ابي اموت"});
  CHECK(t.matched_keywords.size() == 1);
  auto fused = tweet("2", "اموتابى");
  CHECK(match_keywords(fused, kw).empty());
  auto any = tweet("3", "ابى اموت");
  CHECK(match_keywords(any, KeywordList{}).empty());
  auto diacritics = tweet("4", "أَبى  اموت");
  CHECK(match_keywords(diacritics, kw).size() == 1);
}

TEST_CASE("keyword list: empty phrase rejected, file loading") {
  KeywordList kw;
  CHECK_THROWS(kw.add("@only_a_mention"));
  const auto path = std::filesystem::temp_directory_path() / "sidetect_kw.tsv";
  {
    std::ofstream out(path);
    out << "# comment\n\nانتحار\tsuicide\nاريد ان اموت\tI want to die\n";
  }
  const auto loaded = KeywordList::load(path);
  REQUIRE(loaded.entries().size() == 2);
  CHECK(loaded.entries()[1].tokens.size() == 3);
  CHECK(loaded.entries()[1].source == "I want to die");
  std::filesystem::remove(path);
}

TEST_CASE("dedup: examples") {
  auto same = corpus({tweet("3", "موت", std::nullopt, 30), tweet("1", "موت", std::nullopt, 10),
                      tweet("2", "موت", std::nullopt, 20)});
  const auto one = dedup(same);
  REQUIRE(one.size() == 1);
  CHECK(one.tweets[0].id == "1");

  auto distinct = corpus({tweet("1", "a"), tweet("2", "b"), tweet("3", "c")});
  CHECK(dedup(distinct).size() == 3);

  auto diacritics = corpus({tweet("1", "أَموت"), tweet("2", "اموت")});
  CHECK(dedup(diacritics).size() == 1);
}

TEST_CASE("dedup: missing timestamps lose, ties go to the smaller id") {
  auto c = corpus({tweet("b", "x"), tweet("a", "x"), tweet("c", "x", std::nullopt, 99)});
  CHECK(dedup(c).tweets.at(0).id == "c");
  auto tie = corpus({tweet("b", "x", std::nullopt, 5), tweet("a", "x", std::nullopt, 5)});
  CHECK(dedup(tie).tweets.at(0).id == "a");
}

TEST_CASE("dedup: properties on random corpora") {
  std::mt19937 gen(99);
  const std::vector<std::string> words{"موت", "أموت", "اموت", "حياة", "حياه", "@x", "#يأس", "يأس", "ـ"};
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> n_dist(0, 15), w_dist(0, static_cast<int>(words.size()) - 1),
        len_dist(1, 3), ts_dist(-1, 5);
    Corpus c;
    const int n = n_dist(gen);
    for (int i = 0; i < n; ++i) {
      std::string text;
      for (int k = len_dist(gen); k > 0; --k) text += words[static_cast<std::size_t>(w_dist(gen))] + " ";
      const int ts = ts_dist(gen);
      c.tweets.push_back(tweet("t" + std::to_string(i), text, std::nullopt,
                               ts < 0 ? std::nullopt : std::optional<std::int64_t>(ts)));
    }
    const auto once = dedup(c);
    CHECK(once.size() <= c.size());
    std::set<std::string> keys;
    for (const auto& t : once.tweets) CHECK(keys.insert(normalize(t.text).normalized).second);
    const auto twice = dedup(once);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice.tweets[i].id == once.tweets[i].id);
  }
}

TEST_CASE("collect: stage counts") {
  KeywordList kw;
  kw.add("اموت");
  Corpus c;
  for (int i = 0; i < 10; ++i) c.tweets.push_back(tweet(std::to_string(i), i < 4 ? "اموت " + std::to_string(i) : "x"));
  auto r = collect(c, kw, true);
  CHECK(r.counts.loaded == 10);
  CHECK(r.counts.matched == 4);
  CHECK(r.counts.kept == 4);

  c.tweets[1].text = c.tweets[0].text;
  r = collect(c, kw, true);
  CHECK(r.counts.matched == 4);
  CHECK(r.counts.kept == 3);

  r = collect(c, KeywordList{}, true);
  CHECK(r.counts.loaded == 10);
  CHECK(r.counts.matched == 0);
  CHECK(r.counts.kept == 0);

  r = collect(c, kw, false);
  std::set<std::string> ids;
  for (const auto& t : c.tweets) ids.insert(t.id);
  for (const auto& t : r.corpus.tweets) CHECK(ids.contains(t.id));
}
