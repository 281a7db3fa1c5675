#include <doctest.h>

#include <random>

#include "sidetect/textnorm.hpp"
#include "sidetect/utf8.hpp"

using namespace sidetect;

namespace {

bool has_codepoint_in(const std::string& s, char32_t lo, char32_t hi) {
  for (char32_t cp : utf8::decode(s)) {
    if (cp >= lo && cp <= hi) return true;
  }
  return false;
}

std::string random_text(std::mt19937& gen) {
  static const std::vector<char32_t> pool = {
      U'ا', U'أ', U'إ', U'آ', U'ى', U'ة', U'ي', U'ه', U'م', U'و', U'ت', 0x064B, 0x064E, 0x0650, 0x0651, 0x0652,
      0x0670, 0x0640, U'#', U'@', U' ', U'\t', U'\n', 0x00A0, 0x3000, U'h', U't', U'p', U's', U':', U'/', U'w',
      U'.', U'W', U'a', U'1', 0xFFFD, 0x1F600};
  std::uniform_int_distribution<std::size_t> len(0, 40), pick(0, pool.size() - 1);
  std::u32string cps;
  const auto n = len(gen);
  for (std::size_t i = 0; i < n; ++i) cps.push_back(pool[pick(gen)]);
  return utf8::encode(cps);
}

}  // namespace

TEST_CASE("normalize: empty input") {
  const auto n = normalize("");
  CHECK(n.normalized.empty());
  CHECK(n.tokens.empty());
}

TEST_CASE("normalize: hamza alef with fatha folds to bare alef") {
  const auto n = normalize("أَموت");
  CHECK(n.normalized == "اموت");
  CHECK(n.tokens == std::vector<std::string>{"اموت"});
}

TEST_CASE("normalize: alef maqsura and ta marbuta folds") {
  CHECK(normalize("ابى").normalized == "ابي");
  CHECK(normalize("حياة").normalized == "حياه");
  NormalizeOptions keep;
  keep.fold_alef_maqsura = false;
  keep.fold_ta_marbuta = false;
  CHECK(normalize("ابى حياة", keep).tokens == std::vector<std::string>{"ابى", "حياة"});
}

TEST_CASE("normalize: urls, mentions, hashes and tatweel are removed") {
  const auto n = normalize("@user مـــوت #حزن https://t.co/x WWW.example.com اليوم");
  CHECK(n.tokens == std::vector<std::string>{"موت", "حزن", "اليوم"});
  CHECK(n.normalized == "موت حزن اليوم");
}

TEST_CASE("normalize: a token that becomes a mention after hash stripping is dropped") {
  const auto once = normalize("#@x كلمة");
  CHECK(once.tokens == std::vector<std::string>{"كلمه"});
}

TEST_CASE("normalize: invariants and idempotence on random text") {
  std::mt19937 gen(1234);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto raw = random_text(gen);
    const auto n = normalize(raw);
    CHECK_FALSE(has_codepoint_in(n.normalized, 0x064B, 0x0652));
    CHECK_FALSE(has_codepoint_in(n.normalized, 0x0670, 0x0670));
    CHECK_FALSE(has_codepoint_in(n.normalized, 0x0640, 0x0640));
    CHECK(n.normalized.find('#') == std::string::npos);
    CHECK(n.tokens == split_tokens(n.normalized));
    for (const auto& t : n.tokens) {
      CHECK_FALSE(t.empty());
      CHECK(t.front() != '@');
    }
    const auto twice = normalize(n.normalized);
    CHECK(twice.normalized == n.normalized);
    CHECK(twice.tokens == n.tokens);
  }
}

TEST_CASE("split_tokens: unicode whitespace separates, never yields empty tokens") {
  CHECK(split_tokens("  a b　　c\n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_tokens("   ").empty());
}

TEST_CASE("remove_stopwords") {
  const std::vector<std::string> words{"a"};
  const StopList stops(words);
  CHECK(remove_stopwords(std::vector<std::string>{}, stops).empty());
  CHECK(remove_stopwords(std::vector<std::string>{"a", "b", "a"}, stops) == std::vector<std::string>{"b"});
  CHECK(remove_stopwords(std::vector<std::string>{"b", "c"}, StopList{}) == std::vector<std::string>{"b", "c"});
  const std::vector<std::string> tokens{"a", "b", "c", "a"};
  const auto once = remove_stopwords(tokens, stops);
  CHECK(remove_stopwords(once, stops) == once);
}

TEST_CASE("stop list entries are normalized") {
  const std::vector<std::string> words{"إلى"};
  const StopList stops(words);
  CHECK(stops.contains("الي"));
}

TEST_CASE("char_ngrams") {
  CHECK(char_ngrams("موت", {2, 2}) == std::vector<std::string>{"مو", "وت"});
  CHECK(char_ngrams("اب", {3, 3}) == std::vector<std::string>{"اب"});
  CHECK(char_ngrams("abc", {1, 2}) == std::vector<std::string>{"a", "b", "c", "ab", "bc"});
  CHECK(char_ngrams("", {2, 4}).empty());
  CHECK_THROWS_AS(char_ngrams("abc", {0, 2}), std::out_of_range);
  CHECK_THROWS_AS(char_ngrams("abc", {3, 2}), std::out_of_range);
}

TEST_CASE("char_ngrams: count is max(1, len - n + 1)") {
  for (const std::string token : {"a", "ab", "موت", "انتحار", "abcdefgh"}) {
    const auto len = static_cast<long>(utf8::length(token));
    for (int n = 1; n <= 6; ++n) {
      CHECK(static_cast<long>(char_ngrams(token, {n, n}).size()) == std::max(1L, len - n + 1));
    }
  }
}
