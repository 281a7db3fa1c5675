#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sidetect/error.hpp"
#include "sidetect/ingest.hpp"

namespace sidetect {

using LabelMap = std::map<std::string, Label>;

// Cell n_xy counts items annotator A labeled x and annotator B labeled y.
struct AgreementTable {
  std::uint64_t n00 = 0;
  std::uint64_t n01 = 0;
  std::uint64_t n10 = 0;
  std::uint64_t n11 = 0;

  std::uint64_t total() const { return n00 + n01 + n10 + n11; }
  AgreementTable transposed() const { return {n00, n10, n01, n11}; }
};

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // P(A)
  double expected = 0.0;  // P(E)
};

// Built over the ids both maps share. Throws DataError if there are none.
AgreementTable contingency(const LabelMap& a, const LabelMap& b);

class DegenerateAgreement : public DataError {
 public:
  using DataError::DataError;
};

// Throws DataError when N < 2, and DegenerateAgreement when P(E) = 1 (both
// annotators used one and the same class throughout).
KappaResult cohen_kappa(const AgreementTable& table);

}  // namespace sidetect
