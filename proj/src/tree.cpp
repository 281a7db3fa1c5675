#include "sidetect/tree.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

ColumnStore::ColumnStore(const FeatureMatrix& matrix) : rows_(matrix.size()), columns_(matrix.dimension) {
  for (std::uint32_t r = 0; r < matrix.rows.size(); ++r) {
    for (const auto& e : matrix.rows[r].entries) columns_[e.index].push_back({e.value, r});
  }
  for (auto& col : columns_) {
    std::sort(col.begin(), col.end(), [](const Cell& x, const Cell& y) {
      return x.value != y.value ? x.value < y.value : x.row < y.row;
    });
  }
}

double DecisionTree::predict(const SparseVector& x) const {
  std::int32_t n = 0;
  while (nodes_[n].feature >= 0) {
    const auto& node = nodes_[n];
    n = x.at(static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left : node.right;
  }
  return nodes_[n].value;
}

json DecisionTree::to_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_) {
    if (n.feature < 0) {
      nodes.push_back({{"v", n.value}});
    } else {
      nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
    }
  }
  return nodes;
}

DecisionTree DecisionTree::from_json(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j) {
    TreeNode n;
    if (jn.contains("v")) {
      n.value = jn.at("v").get<double>();
    } else {
      n.feature = jn.at("f").get<std::int32_t>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<std::int32_t>();
      n.right = jn.at("r").get<std::int32_t>();
    }
    nodes.push_back(n);
  }
  const auto size = static_cast<std::int32_t>(nodes.size());
  for (const auto& n : nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size)) {
      throw DataError("tree node child index out of range");
    }
  }
  if (nodes.empty()) throw DataError("empty tree");
  return DecisionTree(std::move(nodes));
}

namespace {

double node_score(const NodeStats& s, SplitCriterion c) {
  if (s.w <= 0.0) return 0.0;
  if (c == SplitCriterion::gini) return (s.a * s.a + (s.w - s.a) * (s.w - s.a)) / s.w;
  return s.a * s.a / s.w;
}

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  std::int32_t feature = -1;
  double threshold = 0.0;
};

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m < hi ? m : lo;
}

// Floyd's algorithm: m distinct indices from [0, d), returned sorted.
std::vector<std::uint32_t> sample_features(std::size_t d, std::size_t m, Rng& rng) {
  std::set<std::uint32_t> chosen;
  for (std::size_t j = d - m; j < d; ++j) {
    const auto t = static_cast<std::uint32_t>(uniform_index(rng, j + 1));
    if (!chosen.insert(t).second) chosen.insert(static_cast<std::uint32_t>(j));
  }
  return {chosen.begin(), chosen.end()};
}

// Per open slot, the features taking more than one value over the slot's
// rows (absent entries count as zero), in first-seen order.
std::vector<std::vector<std::uint32_t>> varying_features(const FeatureMatrix& matrix,
                                                         std::span<const std::int32_t> row_slot,
                                                         const std::vector<bool>& open) {
  const std::size_t slots = open.size();
  std::vector<std::vector<std::uint32_t>> rows_of(slots);
  for (std::size_t r = 0; r < row_slot.size(); ++r) {
    const auto s = row_slot[r];
    if (s >= 0 && open[s]) rows_of[s].push_back(static_cast<std::uint32_t>(r));
  }
  struct Seen {
    std::int64_t stamp = -1;
    std::uint32_t count = 0;
    double value = 0.0;
    bool varied = false;
  };
  std::vector<Seen> seen(matrix.dimension);
  std::vector<std::vector<std::uint32_t>> out(slots);
  std::vector<std::uint32_t> touched;
  for (std::size_t s = 0; s < slots; ++s) {
    if (rows_of[s].empty()) continue;
    touched.clear();
    for (const auto r : rows_of[s]) {
      for (const auto& e : matrix.rows[r].entries) {
        auto& f = seen[e.index];
        if (f.stamp != static_cast<std::int64_t>(s)) {
          f = {static_cast<std::int64_t>(s), 1, e.value, false};
          touched.push_back(e.index);
        } else {
          ++f.count;
          f.varied = f.varied || e.value != f.value;
        }
      }
    }
    for (const auto j : touched) {
      if (seen[j].varied || seen[j].count < rows_of[s].size()) out[s].push_back(j);
    }
  }
  return out;
}

struct Frontier {
  std::int32_t node;  // index into the output node list
  int depth;
  NodeStats total;
};

}  // namespace

DecisionTree grow_tree(const FeatureMatrix& matrix, const ColumnStore& columns, std::span<const NodeStats> row_stats,
                       std::span<const double> weights, const TreeParams& params, Rng* rng) {
  const std::size_t n_rows = matrix.size();
  const std::size_t d = matrix.dimension;
  std::vector<TreeNode> nodes(1);
  // Frontier-local slot of each row, -1 when the row is out of play.
  std::vector<std::int32_t> row_slot(n_rows, -1);
  NodeStats root;
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (weights[r] <= 0.0) continue;
    row_slot[r] = 0;
    root += {weights[r] * row_stats[r].w, weights[r] * row_stats[r].a, weights[r] * row_stats[r].b};
  }
  std::vector<Frontier> frontier{{0, 0, root}};

  auto is_leaf = [&](const Frontier& f) {
    if (f.total.w < params.min_samples_split) return true;
    if (params.max_depth > 0 && f.depth >= params.max_depth) return true;
    if (params.stop_when_pure && (f.total.a <= 0.0 || f.total.a >= f.total.w)) return true;
    return d == 0;
  };

  while (!frontier.empty()) {
    const std::size_t slots = frontier.size();
    std::vector<bool> open(slots, false);
    // features to evaluate -> slots evaluating them
    std::vector<std::vector<std::int32_t>> by_feature;
    std::vector<std::uint32_t> used_features;
    const bool all_features = params.max_features == 0 || params.max_features >= d;
    for (std::size_t s = 0; s < slots; ++s) {
      if (is_leaf(frontier[s])) {
        nodes[frontier[s].node].value = params.leaf_value(frontier[s].total);
        continue;
      }
      open[s] = true;
    }
    if (!all_features) {
      // Features constant within a node are skipped when sampling, so each
      // node evaluates up to max_features features that can actually split it.
      by_feature.resize(d);
      const auto varying = varying_features(matrix, row_slot, open);
      for (std::size_t s = 0; s < slots; ++s) {
        if (!open[s]) continue;
        const auto& pool = varying[s];
        for (auto k : sample_features(pool.size(), std::min(params.max_features, pool.size()), *rng)) {
          const auto j = pool[k];
          if (by_feature[j].empty()) used_features.push_back(j);
          by_feature[j].push_back(static_cast<std::int32_t>(s));
        }
      }
    }
    if (all_features) {
      std::vector<std::int32_t> open_slots;
      for (std::size_t s = 0; s < slots; ++s) {
        if (open[s]) open_slots.push_back(static_cast<std::int32_t>(s));
      }
      if (!open_slots.empty()) {
        by_feature.assign(d, open_slots);
        used_features.resize(d);
        for (std::uint32_t j = 0; j < d; ++j) used_features[j] = j;
      }
    }
    std::sort(used_features.begin(), used_features.end());

    std::vector<Candidate> best(slots);
    std::vector<std::uint32_t> active_mark(slots, UINT32_MAX);
    std::vector<NodeStats> nonzero(slots), left(slots);
    std::vector<double> last(slots);
    std::vector<char> has_last(slots), zero_done(slots);

    for (const auto j : used_features) {
      const auto& evaluating = by_feature[j];
      for (auto s : evaluating) {
        active_mark[s] = j;
        nonzero[s] = {};
        left[s] = {};
        has_last[s] = 0;
        zero_done[s] = 0;
      }
      const auto col = columns.column(j);
      for (const auto& cell : col) {
        const auto s = row_slot[cell.row];
        if (s < 0 || active_mark[s] != j) continue;
        const double wt = weights[cell.row];
        const auto& rs = row_stats[cell.row];
        nonzero[s] += {wt * rs.w, wt * rs.a, wt * rs.b};
      }
      auto consider = [&](std::int32_t s, double threshold) {
        const NodeStats& total = frontier[s].total;
        const NodeStats right = total - left[s];
        if (left[s].w <= 0.0 || right.w <= 1e-12) return;
        const double gain = node_score(left[s], params.criterion) + node_score(right, params.criterion) -
                            node_score(total, params.criterion);
        if (gain > params.min_gain && gain > best[s].gain) best[s] = {gain, static_cast<std::int32_t>(j), threshold};
      };
      auto add_zero_block = [&](std::int32_t s) {
        zero_done[s] = 1;
        const NodeStats zeros = frontier[s].total - nonzero[s];
        if (zeros.w <= 1e-12) return;
        if (has_last[s]) consider(s, midpoint(last[s], 0.0));
        left[s] += zeros;
        last[s] = 0.0;
        has_last[s] = 1;
      };
      for (const auto& cell : col) {
        const auto s = row_slot[cell.row];
        if (s < 0 || active_mark[s] != j) continue;
        if (!zero_done[s] && cell.value > 0.0) add_zero_block(s);
        if (has_last[s] && cell.value != last[s]) consider(s, midpoint(last[s], cell.value));
        const double wt = weights[cell.row];
        const auto& rs = row_stats[cell.row];
        left[s] += {wt * rs.w, wt * rs.a, wt * rs.b};
        last[s] = cell.value;
        has_last[s] = 1;
      }
      for (auto s : evaluating) {
        if (!zero_done[s]) add_zero_block(s);
      }
    }

    // Materialize splits and route rows to the next frontier.
    std::vector<Frontier> next;
    std::vector<std::int32_t> child_slot(slots * 2, -1);
    for (std::size_t s = 0; s < slots; ++s) {
      if (!open[s]) continue;
      auto& node = nodes[frontier[s].node];
      if (best[s].feature < 0) {
        node.value = params.leaf_value(frontier[s].total);
        continue;
      }
      const auto left_child = static_cast<std::int32_t>(nodes.size());
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left = left_child;
      node.right = left_child + 1;
      nodes.emplace_back();
      nodes.emplace_back();
      child_slot[2 * s] = static_cast<std::int32_t>(next.size());
      next.push_back({left_child, frontier[s].depth + 1, {}});
      child_slot[2 * s + 1] = static_cast<std::int32_t>(next.size());
      next.push_back({left_child + 1, frontier[s].depth + 1, {}});
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto s = row_slot[r];
      if (s < 0) continue;
      if (!open[s] || best[s].feature < 0) {
        row_slot[r] = -1;
        continue;
      }
      const auto& node = nodes[frontier[s].node];
      const bool go_left = matrix.rows[r].at(static_cast<std::uint32_t>(node.feature)) <= node.threshold;
      const auto c = child_slot[2 * s + (go_left ? 0 : 1)];
      row_slot[r] = c;
      next[c].total += {weights[r] * row_stats[r].w, weights[r] * row_stats[r].a, weights[r] * row_stats[r].b};
    }
    frontier = std::move(next);
  }
  return DecisionTree(std::move(nodes));
}

}  // namespace sidetect
