#pragma once

#include <random>
#include <vector>

#include "sidetect/classifiers.hpp"

namespace testing_support {

inline sidetect::Dataset dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  sidetect::Dataset d;
  d.x.dimension = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) d.x.rows.push_back(sidetect::SparseVector::from_dense(r));
  for (int y : labels) d.y.push_back(y ? sidetect::Label::Suicidal : sidetect::Label::NonSuicidal);
  return d;
}

inline sidetect::SparseVector point(const std::vector<double>& v) { return sidetect::SparseVector::from_dense(v); }

// 1-D data with class 1 exactly at x > threshold.
inline sidetect::Dataset threshold_data(std::size_t n, std::uint64_t seed, double threshold = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(gen);
    rows.push_back({x});
    labels.push_back(x > threshold ? 1 : 0);
  }
  return dataset(rows, labels);
}

inline double training_accuracy(const sidetect::Classifier& model, const sidetect::Dataset& d) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) hits += model.predict(d.x.rows[i]) == d.y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

}  // namespace testing_support
