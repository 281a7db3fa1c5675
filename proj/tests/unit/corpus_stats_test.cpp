#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/corpus_builders.hpp"
#include "sidetect/corpus_stats.hpp"
#include "sidetect/error.hpp"

using namespace sidetect;
using testing_support::corpus;
using testing_support::tweet;

namespace {
constexpr auto S = Label::Suicidal;
constexpr auto N = Label::NonSuicidal;
}  // namespace

TEST_CASE("class weights") {
  Corpus c;
  for (int i = 0; i < 5719; ++i) c.tweets.push_back(tweet(std::to_string(i), "x", i < 1426 ? S : N));
  const auto w = class_weights(c);
  CHECK(w.suicidal == 1426);
  CHECK(w.non_suicidal == 4293);
  CHECK(w.suicidal_fraction == doctest::Approx(0.2493).epsilon(1e-4));
  CHECK(std::lround(100 * w.suicidal_fraction) == 25);
  CHECK(std::lround(100 * w.non_suicidal_fraction) == 75);
  CHECK(std::abs(w.suicidal_fraction + w.non_suicidal_fraction - 1.0) <= 1e-12);

  CHECK(class_weights(corpus({tweet("a", "x", S)})).suicidal_fraction == 1.0);
  CHECK(class_weights(corpus({tweet("a", "x", S), tweet("b", "x", N)})).suicidal_fraction == 0.5);
  CHECK_THROWS_AS(class_weights(corpus({tweet("a", "x")})), DataError);
}

TEST_CASE("length histogram") {
  const auto same = corpus({tweet("a", "x y z", S), tweet("b", "p q r", S)});
  const auto h = length_histogram(same, S, 1);
  REQUIRE(h.counts.size() == 1);
  CHECK(h.edges.front() == 3);
  CHECK(h.counts[0] == 2);

  std::string twenty;
  for (int i = 0; i < 20; ++i) twenty += "w ";
  const auto spread = corpus({tweet("a", "x y", N), tweet("b", twenty, N), tweet("c", "x", S)});
  const auto h1 = length_histogram(spread, N, 1);
  CHECK(h1.edges.front() == 2);
  CHECK(h1.edges.back() == 21);
  CHECK(h1.counts.front() == 1);
  CHECK(h1.counts.back() == 1);
  const auto h5 = length_histogram(spread, N, 5);
  CHECK(h5.total() == h1.total());
  CHECK(length_histogram(spread, std::nullopt, 3).total() == 3);
  for (std::size_t i = 1; i < h5.edges.size(); ++i) CHECK(h5.edges[i] > h5.edges[i - 1]);
  CHECK(length_histogram(spread, S, 1).total() == 1);
  CHECK(length_histogram(corpus({}), S, 1).counts.empty());
  CHECK_THROWS(length_histogram(spread, N, 0));
}

TEST_CASE("term frequencies") {
  const auto c = corpus({tweet("1", "a a b", S)});
  CHECK(term_frequencies(c, S, StopList{}, 0) == std::vector<TermCount>{{"a", 2}, {"b", 1}});
  CHECK(term_frequencies(c, S, StopList{}, 1).size() == 1);
  const std::vector<std::string> stop{"a"};
  CHECK(term_frequencies(c, S, StopList(stop), 0) == std::vector<TermCount>{{"b", 1}});
  const auto tie = corpus({tweet("1", "d c b", N)});
  CHECK(term_frequencies(tie, N, StopList{}, 0) == std::vector<TermCount>{{"b", 1}, {"c", 1}, {"d", 1}});

  std::mt19937 gen(4);
  Corpus shuffled = corpus({tweet("1", "x y y", S), tweet("2", "z x", S), tweet("3", "y", S), tweet("4", "q", N)});
  const auto before = term_frequencies(shuffled, S, StopList{}, 0);
  std::shuffle(shuffled.tweets.begin(), shuffled.tweets.end(), gen);
  CHECK(term_frequencies(shuffled, S, StopList{}, 0) == before);
}

TEST_CASE("hourly trend") {
  const auto base = *parse_rfc3339("2021-08-23T22:10:00Z");
  const auto late = corpus({tweet("1", "x", S, base), tweet("2", "x", S, base + 600), tweet("3", "x", N)});
  const auto t = hourly_trend(late, S, 0);
  CHECK(t.hours[22] == 2);
  CHECK(t.total() == 2);

  const auto c = corpus({tweet("1", "x", S, *parse_rfc3339("2021-08-23T21:30:00Z"))});
  CHECK(hourly_trend(c, S, 60).hours[22] == 1);
  CHECK(hourly_trend(c, S, -22 * 60).hours[23] == 1);

  const auto unknown = hourly_trend(late, N, 0);
  CHECK(unknown.unknown == 1);
  CHECK(unknown.total() == 1);
  const auto empty = hourly_trend(late, std::nullopt, 0);
  CHECK(empty.total() == 3);
  const auto none = hourly_trend(corpus({}), S, 0);
  CHECK(none.total() == 0);
  CHECK(none.to_csv().find("unknown,0") != std::string::npos);
}
