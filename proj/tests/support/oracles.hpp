#pragma once

// Straightforward reference implementations used to cross-check the
// optimized code paths. Dense, quadratic, and deliberately naive.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Weight of every vocabulary term (sorted) for one query document:
// (count / |doc|) * ln(N / df) with vocabulary and df taken from `fit_docs`.
inline std::vector<double> tfidf(const std::vector<std::vector<std::string>>& fit_docs,
                                 const std::vector<std::string>& query) {
  std::set<std::string> vocab;
  for (const auto& d : fit_docs) vocab.insert(d.begin(), d.end());
  std::vector<double> out;
  for (const auto& term : vocab) {
    double df = 0.0;
    for (const auto& d : fit_docs) df += std::count(d.begin(), d.end(), term) > 0 ? 1.0 : 0.0;
    const double count = static_cast<double>(std::count(query.begin(), query.end(), term));
    const double tf = query.empty() ? 0.0 : count / static_cast<double>(query.size());
    out.push_back(tf * std::log(static_cast<double>(fit_docs.size()) / df));
  }
  return out;
}

using Matrix = std::vector<std::vector<double>>;

// Gaussian naive Bayes with population variances floored at
// eps * (largest whole-data feature variance), eps itself if that is zero.
inline int gnb_predict(const Matrix& x, const std::vector<int>& y, double eps, const std::vector<double>& q) {
  const std::size_t d = q.size();
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (const auto& row : x) m += row[j];
    m /= static_cast<double>(x.size());
    double v = 0.0;
    for (const auto& row : x) v += (row[j] - m) * (row[j] - m);
    max_var = std::max(max_var, v / static_cast<double>(x.size()));
  }
  const double floor = eps * (max_var > 0.0 ? max_var : 1.0);
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    std::vector<const std::vector<double>*> rows;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y[i] == c) rows.push_back(&x[i]);
    }
    double ll = std::log(static_cast<double>(rows.size()) / static_cast<double>(x.size()));
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0;
      for (auto* r : rows) m += (*r)[j];
      m /= static_cast<double>(rows.size());
      double v = 0.0;
      for (auto* r : rows) v += ((*r)[j] - m) * ((*r)[j] - m);
      v = std::max(v / static_cast<double>(rows.size()), floor);
      ll += -0.5 * std::log(2.0 * std::numbers::pi * v) - (q[j] - m) * (q[j] - m) / (2.0 * v);
    }
    joint[c] = ll;
  }
  return joint[1] > joint[0] ? 1 : 0;
}

// k nearest by Euclidean distance, distance ties to the lower row, vote ties to 0.
inline int knn_predict(const Matrix& x, const std::vector<int>& y, int k, const std::vector<double>& q) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (x[i][j] - q[j]) * (x[i][j] - q[j]);
    order.emplace_back(s, i);
  }
  std::sort(order.begin(), order.end());
  int ones = 0;
  for (int i = 0; i < k; ++i) ones += y[order[static_cast<std::size_t>(i)].second];
  return 2 * ones > k ? 1 : 0;
}

// Probability that a random positive outscores a random negative, ties half.
inline double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double pos = 0.0, neg = 0.0, wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
    } else {
      neg += 1.0;
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (pos * neg);
}

// Cohen's kappa straight from the four cells.
inline double kappa(double n00, double n01, double n10, double n11) {
  const double n = n00 + n01 + n10 + n11;
  const double po = (n00 + n11) / n;
  const double pe = ((n00 + n01) / n) * ((n00 + n10) / n) + ((n10 + n11) / n) * ((n01 + n11) / n);
  return (po - pe) / (1.0 - pe);
}

}  // namespace oracle
