#include "sidetect/synthetic.hpp"

#include <cmath>

#include "sidetect/error.hpp"
#include "sidetect/rng.hpp"
#include "sidetect/textnorm.hpp"
#include "sidetect/utf8.hpp"

namespace sidetect {

namespace {

// Letters that normalization leaves untouched.
constexpr char32_t kLetters[] = {U'ا', U'ب', U'ت', U'ث', U'ج', U'ح', U'خ', U'د', U'ذ', U'ر', U'ز', U'س', U'ش', U'ص',
                                 U'ض', U'ط', U'ظ', U'ع', U'غ', U'ف', U'ق', U'ك', U'ل', U'م', U'ن', U'ه', U'و', U'ي'};
constexpr std::size_t kLetterCount = sizeof(kLetters) / sizeof(kLetters[0]);

char32_t random_letter(Rng& rng) { return kLetters[uniform_index(rng, kLetterCount)]; }

std::string random_word(Rng& rng) {
  const auto len = 3 + uniform_index(rng, 5);
  std::string w;
  for (std::uint64_t i = 0; i < len; ++i) utf8::append(w, random_letter(rng));
  return w;
}

std::string misspell(const std::string& token, double rate, Rng& rng) {
  if (rate <= 0.0) return token;
  const auto cps = utf8::decode(token);
  std::u32string out;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (uniform_real(rng) >= rate) {
      out.push_back(cps[i]);
      continue;
    }
    switch (uniform_index(rng, 3)) {
      case 0:
        out.push_back(random_letter(rng));
        break;
      case 1:
        if (cps.size() - i - 1 + out.size() == 0) out.push_back(random_letter(rng));
        break;
      default:
        out.push_back(cps[i]);
        out.push_back(cps[i]);
        break;
    }
  }
  return utf8::encode(out);
}

std::vector<std::string> normalized_phrases(const std::vector<std::string>& phrases, const char* which) {
  if (phrases.empty()) throw DataError(std::string("synthetic corpus needs ") + which + " keywords");
  std::vector<std::string> out;
  for (const auto& p : phrases) {
    auto n = normalize(p).normalized;
    if (n.empty()) throw DataError("keyword \"" + p + "\" normalizes to nothing");
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace

std::vector<std::string> default_suicidal_keywords() {
  return {"اريد ان اموت",  "ساقتل نفسي",     "تعبت من الحياه", "لا اريد العيش", "افكر في الانتحار",
          "سانهي حياتي",   "الموت ارحم لي", "لم اعد احتمل",  "وداعا للجميع",  "لا فائده من حياتي"};
}

std::vector<std::string> default_non_suicidal_keywords() {
  return {"اموت من الضحك", "اموت فيك",         "الحياه جميله",  "مباراه اليوم",     "الجو حار جدا",
          "تعبت من الدوام", "احب هذه الاغنيه", "صباح الخير",    "عيد سعيد للجميع", "قتلني الشوق"};
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.suicidal_keywords = default_suicidal_keywords();
  spec.non_suicidal_keywords = default_non_suicidal_keywords();
  return spec;
}

Corpus make_synthetic(const SyntheticSpec& spec) {
  if (!(spec.balance > 0.0 && spec.balance < 1.0)) throw DataError("class balance must lie in (0, 1)");
  if (!(spec.misspelling_rate >= 0.0 && spec.misspelling_rate <= 1.0)) {
    throw DataError("misspelling rate must lie in [0, 1]");
  }
  if (spec.min_filler > spec.max_filler) throw DataError("min_filler exceeds max_filler");
  const auto pos_phrases = normalized_phrases(spec.suicidal_keywords, "suicidal");
  const auto neg_phrases = normalized_phrases(spec.non_suicidal_keywords, "non-suicidal");

  Rng vocab_rng(derive_seed(spec.seed, "synthetic-vocabulary"));
  std::vector<std::string> filler;
  for (std::size_t i = 0; i < std::max<std::size_t>(spec.filler_vocabulary, 1); ++i) {
    filler.push_back(random_word(vocab_rng));
  }

  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(spec.size) * spec.balance));
  std::vector<Label> labels(spec.size, Label::NonSuicidal);
  for (std::size_t i = 0; i < positives && i < spec.size; ++i) labels[i] = Label::Suicidal;
  Rng rng(derive_seed(spec.seed, "synthetic-tweets"));
  shuffle(std::span<Label>(labels), rng);

  constexpr std::int64_t kStart = 1627776000;  // 2021-08-01T00:00:00Z
  Corpus corpus;
  corpus.provenance = "synthetic:seed=" + std::to_string(spec.seed);
  const int width = static_cast<int>(std::to_string(spec.size).size());
  for (std::size_t i = 0; i < spec.size; ++i) {
    const auto& phrases = labels[i] == Label::Suicidal ? pos_phrases : neg_phrases;
    const auto& phrase = phrases[uniform_index(rng, phrases.size())];
    const auto n_filler = spec.min_filler + uniform_index(rng, spec.max_filler - spec.min_filler + 1);
    const auto at = uniform_index(rng, n_filler + 1);
    std::vector<std::string> words;
    for (std::uint64_t k = 0; k <= n_filler; ++k) {
      if (k == at) {
        for (const auto& w : split_tokens(phrase)) words.push_back(w);
      }
      if (k < n_filler) words.push_back(filler[uniform_index(rng, filler.size())]);
    }
    Tweet t;
    std::string id = std::to_string(i + 1);
    t.id = "syn" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    for (const auto& w : words) {
      if (!t.text.empty()) t.text += ' ';
      t.text += misspell(w, spec.misspelling_rate, rng);
    }
    t.created_at = kStart + static_cast<std::int64_t>(uniform_index(rng, 30 * 86400));
    t.label = labels[i];
    corpus.tweets.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace sidetect
