#pragma once

#include <string>
#include <vector>

#include "sidetect/ingest.hpp"

namespace testing_support {

inline sidetect::Tweet tweet(std::string id, std::string text, std::optional<sidetect::Label> label = std::nullopt,
                             std::optional<std::int64_t> created_at = std::nullopt) {
  sidetect::Tweet t;
  t.id = std::move(id);
  t.text = std::move(text);
  t.label = label;
  t.created_at = created_at;
  return t;
}

inline sidetect::Corpus corpus(std::vector<sidetect::Tweet> tweets) {
  sidetect::Corpus c;
  c.tweets = std::move(tweets);
  return c;
}

}  // namespace testing_support
