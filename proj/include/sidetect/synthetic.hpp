#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sidetect/ingest.hpp"

namespace sidetect {

struct SyntheticSpec {
  std::size_t size = 2000;
  double balance = 0.25;  // fraction of suicidal tweets
  std::vector<std::string> suicidal_keywords;
  std::vector<std::string> non_suicidal_keywords;
  double misspelling_rate = 0.0;  // per-character perturbation probability
  std::uint64_t seed = 42;
  std::size_t filler_vocabulary = 400;
  std::size_t min_filler = 4;
  std::size_t max_filler = 14;
};

// Built-in phrase lists; both classes share some words so that single
// tokens are not decisive.
std::vector<std::string> default_suicidal_keywords();
std::vector<std::string> default_non_suicidal_keywords();
SyntheticSpec default_synthetic_spec();

// Each tweet is filler words around one phrase from its class list, every
// character then perturbed (substituted, dropped or doubled) with
// probability misspelling_rate. round(size * balance) tweets are suicidal,
// positions shuffled. Throws DataError for an empty keyword list, balance
// outside (0,1), or a rate outside [0,1].
Corpus make_synthetic(const SyntheticSpec& spec);

}  // namespace sidetect
