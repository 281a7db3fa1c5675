#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "sidetect/features.hpp"
#include "sidetect/rng.hpp"

namespace sidetect {

// Per-feature nonzeros sorted by (value, row). Built once per fit and shared
// by every tree grown on the same matrix.
class ColumnStore {
 public:
  struct Cell {
    double value;
    std::uint32_t row;
  };

  explicit ColumnStore(const FeatureMatrix& matrix);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  std::span<const Cell> column(std::size_t j) const { return columns_[j]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<Cell>> columns_;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(const SparseVector& x) const;
  std::span<const TreeNode> nodes() const { return nodes_; }

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
};

// Additive node statistics. Classification: weight, weighted count of class 1.
// Regression: count, sum of gradients, sum of hessians.
struct NodeStats {
  double w = 0.0;
  double a = 0.0;
  double b = 0.0;

  NodeStats& operator+=(const NodeStats& o) {
    w += o.w;
    a += o.a;
    b += o.b;
    return *this;
  }
  NodeStats operator-(const NodeStats& o) const { return {w - o.w, a - o.a, b - o.b}; }
};

enum class SplitCriterion { gini, variance };

struct TreeParams {
  SplitCriterion criterion = SplitCriterion::gini;
  int max_depth = 0;               // 0 = unlimited
  double min_samples_split = 2.0;  // nodes lighter than this become leaves
  double min_gain = -1.0;          // a split must gain strictly more than this
  bool stop_when_pure = true;      // classification only
  std::size_t max_features = 0;    // 0 = every feature at every node
  std::function<double(const NodeStats&)> leaf_value;
};

// Grows one tree level by level. `row_stats` are per-row targets at unit
// weight; `weights` are per-row multiplicities (0 = row not in the sample).
// Best splits are chosen by strict improvement scanning features in index
// order and thresholds in increasing order, so ties resolve to the first.
DecisionTree grow_tree(const FeatureMatrix& matrix, const ColumnStore& columns, std::span<const NodeStats> row_stats,
                       std::span<const double> weights, const TreeParams& params, Rng* rng);

}  // namespace sidetect
