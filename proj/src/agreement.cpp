#include "sidetect/agreement.hpp"

#include "sidetect/error.hpp"

namespace sidetect {

AgreementTable contingency(const LabelMap& a, const LabelMap& b) {
  AgreementTable table;
  for (const auto& [id, la] : a) {
    auto it = b.find(id);
    if (it == b.end()) continue;
    const bool x = la == Label::Suicidal;
    const bool y = it->second == Label::Suicidal;
    if (!x && !y) ++table.n00;
    if (!x && y) ++table.n01;
    if (x && !y) ++table.n10;
    if (x && y) ++table.n11;
  }
  if (table.total() == 0) throw DataError("label sets share no ids");
  return table;
}

KappaResult cohen_kappa(const AgreementTable& table) {
  const auto n = static_cast<double>(table.total());
  if (table.total() < 2) throw DataError("kappa needs at least 2 items, got " + std::to_string(table.total()));
  const double row0 = static_cast<double>(table.n00 + table.n01);
  const double row1 = static_cast<double>(table.n10 + table.n11);
  const double col0 = static_cast<double>(table.n00 + table.n10);
  const double col1 = static_cast<double>(table.n01 + table.n11);

  KappaResult r;
  r.observed = static_cast<double>(table.n00 + table.n11) / n;
  r.expected = (row0 * col0 + row1 * col1) / (n * n);
  if ((row0 == n && col0 == n) || (row1 == n && col1 == n)) {
    throw DegenerateAgreement("both annotators used a single class throughout; kappa is undefined");
  }
  r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

}  // namespace sidetect
