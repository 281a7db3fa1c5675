#include "sidetect/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

int as_int(Label l) { return static_cast<int>(l); }

json sparse_to_json(const SparseVector& v) {
  json idx = json::array();
  json val = json::array();
  for (const auto& e : v.entries) {
    idx.push_back(e.index);
    val.push_back(e.value);
  }
  return {{"i", idx}, {"v", val}};
}

SparseVector sparse_from_json(const json& j, std::size_t dimension) {
  SparseVector v;
  v.dimension = dimension;
  const auto& idx = j.at("i");
  const auto& val = j.at("v");
  if (idx.size() != val.size()) throw DataError("sparse vector index/value length mismatch");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    v.entries.push_back({idx[k].get<std::uint32_t>(), val[k].get<double>()});
  }
  return v;
}

json header(Family family, std::size_t dimension) {
  return {{"version", kModelVersion}, {"family", to_string(family)}, {"dimension", dimension}};
}

void check_header(const json& j, Family family) {
  if (j.at("version").get<int>() != kModelVersion) throw DataError("unsupported model version");
  if (j.at("family").get<std::string>() != to_string(family)) {
    throw DataError("model family mismatch: expected " + std::string(to_string(family)));
  }
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::gnb: return "gnb";
    case Family::svm_rbf: return "svm_rbf";
    case Family::knn: return "knn";
    case Family::random_forest: return "random_forest";
    case Family::gbdt: return "gbdt";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view name) {
  if (name == "gnb" || name == "nb") return Family::gnb;
  if (name == "svm_rbf" || name == "svm") return Family::svm_rbf;
  if (name == "knn") return Family::knn;
  if (name == "random_forest" || name == "rf") return Family::random_forest;
  if (name == "gbdt" || name == "xgboost") return Family::gbdt;
  return std::nullopt;
}

std::size_t Dataset::count(Label label) const { return static_cast<std::size_t>(std::count(y.begin(), y.end(), label)); }

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x.dimension = x.dimension;
  out.x.rows.reserve(rows.size());
  out.y.reserve(rows.size());
  for (auto r : rows) {
    out.x.rows.push_back(x.rows[r]);
    out.y.push_back(y[r]);
  }
  return out;
}

void Dataset::validate(bool require_both_classes) const {
  if (x.rows.size() != y.size()) throw DataError("feature rows and labels differ in count");
  if (y.empty()) throw DataError("empty dataset");
  if (require_both_classes && (count(Label::Suicidal) == 0 || count(Label::NonSuicidal) == 0)) {
    throw DataError("training data must contain both classes");
  }
}

std::string_view to_string(MaxFeatures rule) {
  switch (rule) {
    case MaxFeatures::automatic: return "auto";
    case MaxFeatures::sqrt: return "sqrt";
    case MaxFeatures::log2: return "log2";
  }
  return "?";
}

std::optional<MaxFeatures> parse_max_features(std::string_view name) {
  if (name == "auto") return MaxFeatures::automatic;
  if (name == "sqrt") return MaxFeatures::sqrt;
  if (name == "log2") return MaxFeatures::log2;
  return std::nullopt;
}

std::size_t resolve_max_features(MaxFeatures rule, std::size_t dimension) {
  if (dimension == 0) return 0;
  const double d = static_cast<double>(dimension);
  const double m = rule == MaxFeatures::log2 ? std::log2(d) : std::sqrt(d);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(m)));
}

json Hyperparameters::to_json(Family family) const {
  switch (family) {
    case Family::gnb: return {{"var_smoothing", var_smoothing}};
    case Family::svm_rbf: return {{"C", c}, {"gamma", gamma}};
    case Family::knn: return {{"k", k}};
    case Family::random_forest: return {{"max_features", to_string(max_features)}, {"n_estimators", n_estimators}};
    case Family::gbdt:
      return {{"n_estimators", n_estimators}, {"learning_rate", learning_rate}, {"max_depth", max_depth}};
  }
  return json::object();
}

Hyperparameters Hyperparameters::from_json(Family family, const json& j) { return from_json(family, j, Hyperparameters{}); }

Hyperparameters Hyperparameters::from_json(Family family, const json& j, Hyperparameters p) {
  switch (family) {
    case Family::gnb:
      p.var_smoothing = j.value("var_smoothing", p.var_smoothing);
      break;
    case Family::svm_rbf:
      p.c = j.value("C", p.c);
      p.gamma = j.value("gamma", p.gamma);
      break;
    case Family::knn:
      p.k = j.value("k", p.k);
      break;
    case Family::random_forest: {
      if (j.contains("max_features")) {
        auto rule = parse_max_features(j.at("max_features").get<std::string>());
        if (!rule) throw DataError("unknown max_features rule " + j.at("max_features").dump());
        p.max_features = *rule;
      }
      p.n_estimators = j.value("n_estimators", p.n_estimators);
      break;
    }
    case Family::gbdt:
      p.n_estimators = j.value("n_estimators", p.n_estimators);
      p.learning_rate = j.value("learning_rate", p.learning_rate);
      p.max_depth = j.value("max_depth", p.max_depth);
      break;
  }
  return p;
}

void Classifier::check_dimension(const SparseVector& x) const {
  if (x.dimension != dimension_) {
    throw DataError("input dimension " + std::to_string(x.dimension) + " does not match training dimension " +
                    std::to_string(dimension_));
  }
}

// ---------------------------------------------------------------- GaussianNB

GaussianNB GaussianNB::fit(const Dataset& data, double smoothing) {
  data.validate(true);
  if (!(smoothing > 0.0)) throw DataError("GNB smoothing must be positive");
  const std::size_t d = data.dimension();
  const std::size_t n = data.size();
  GaussianNB model(d);
  model.smoothing_ = smoothing;

  std::vector<double> dense_sum[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::size_t class_n[2] = {0, 0};
  std::vector<double> all_sum(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = as_int(data.y[r]);
    ++class_n[c];
    for (const auto& e : data.x.rows[r].entries) {
      dense_sum[c][e.index] += e.value;
      all_sum[e.index] += e.value;
    }
  }
  for (int c = 0; c < 2; ++c) {
    model.log_prior_[c] = std::log(static_cast<double>(class_n[c]) / static_cast<double>(n));
    model.mean_[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) model.mean_[c][j] = dense_sum[c][j] / static_cast<double>(class_n[c]);
  }
  std::vector<double> all_mean(d);
  for (std::size_t j = 0; j < d; ++j) all_mean[j] = all_sum[j] / static_cast<double>(n);

  // Two-pass variances; rows are dense-expanded one at a time.
  std::vector<double> sq[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::vector<double> all_sq(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = as_int(data.y[r]);
    const auto row = data.x.rows[r].dense();
    for (std::size_t j = 0; j < d; ++j) {
      const double dc = row[j] - model.mean_[c][j];
      const double da = row[j] - all_mean[j];
      sq[c][j] += dc * dc;
      all_sq[j] += da * da;
    }
  }
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) max_var = std::max(max_var, all_sq[j] / static_cast<double>(n));
  const double floor = smoothing * (max_var > 0.0 ? max_var : 1.0);
  for (int c = 0; c < 2; ++c) {
    model.var_[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      model.var_[c][j] = std::max(sq[c][j] / static_cast<double>(class_n[c]), floor);
    }
  }
  return model;
}

double GaussianNB::log_joint(const SparseVector& x, int cls) const {
  check_dimension(x);
  const auto row = x.dense();
  double ll = log_prior_[cls];
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = var_[cls][j];
    const double diff = row[j] - mean_[cls][j];
    ll += -0.5 * std::log(2.0 * std::numbers::pi * v) - diff * diff / (2.0 * v);
  }
  return ll;
}

double GaussianNB::score(const SparseVector& x) const {
  const double l0 = log_joint(x, 0);
  const double l1 = log_joint(x, 1);
  const double m = std::max(l0, l1);
  const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
  return std::exp(l1 - lse);
}

Label GaussianNB::predict(const SparseVector& x) const {
  return log_joint(x, 1) > log_joint(x, 0) ? Label::Suicidal : Label::NonSuicidal;
}

json GaussianNB::to_json() const {
  json j = header(Family::gnb, dimension());
  j["var_smoothing"] = smoothing_;
  j["log_prior"] = {log_prior_[0], log_prior_[1]};
  j["mean"] = {mean_[0], mean_[1]};
  j["var"] = {var_[0], var_[1]};
  return j;
}

GaussianNB GaussianNB::from_json(const json& j) {
  check_header(j, Family::gnb);
  GaussianNB m(j.at("dimension").get<std::size_t>());
  m.smoothing_ = j.at("var_smoothing").get<double>();
  for (int c = 0; c < 2; ++c) {
    m.log_prior_[c] = j.at("log_prior").at(c).get<double>();
    m.mean_[c] = j.at("mean").at(c).get<std::vector<double>>();
    m.var_[c] = j.at("var").at(c).get<std::vector<double>>();
    if (m.mean_[c].size() != m.dimension() || m.var_[c].size() != m.dimension()) {
      throw DataError("GNB parameter length does not match dimension");
    }
  }
  return m;
}

// ------------------------------------------------------------------------ KNN

KNearestNeighbors KNearestNeighbors::fit(const Dataset& data, int k) {
  data.validate(false);
  if (k < 1 || static_cast<std::size_t>(k) > data.size()) {
    throw DataError("k must be in [1, " + std::to_string(data.size()) + "], got " + std::to_string(k));
  }
  return KNearestNeighbors(data, k);
}

std::vector<std::size_t> KNearestNeighbors::neighbors(const SparseVector& x) const {
  check_dimension(x);
  std::vector<std::pair<double, std::size_t>> dist(train_.size());
  for (std::size_t r = 0; r < train_.size(); ++r) dist[r] = {squared_distance(train_.x.rows[r], x), r};
  const auto k = static_cast<std::size_t>(k_);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

double KNearestNeighbors::score(const SparseVector& x) const {
  std::size_t ones = 0;
  for (auto r : neighbors(x)) ones += train_.y[r] == Label::Suicidal ? 1 : 0;
  return static_cast<double>(ones) / static_cast<double>(k_);
}

Label KNearestNeighbors::predict(const SparseVector& x) const {
  std::size_t ones = 0;
  for (auto r : neighbors(x)) ones += train_.y[r] == Label::Suicidal ? 1 : 0;
  return 2 * ones > static_cast<std::size_t>(k_) ? Label::Suicidal : Label::NonSuicidal;
}

json KNearestNeighbors::to_json() const {
  json j = header(Family::knn, dimension());
  j["k"] = k_;
  json rows = json::array();
  for (const auto& r : train_.x.rows) rows.push_back(sparse_to_json(r));
  json labels = json::array();
  for (auto l : train_.y) labels.push_back(as_int(l));
  j["rows"] = rows;
  j["labels"] = labels;
  return j;
}

KNearestNeighbors KNearestNeighbors::from_json(const json& j) {
  check_header(j, Family::knn);
  Dataset data;
  data.x.dimension = j.at("dimension").get<std::size_t>();
  for (const auto& r : j.at("rows")) data.x.rows.push_back(sparse_from_json(r, data.x.dimension));
  for (const auto& l : j.at("labels")) {
    auto label = label_from_int(l.get<long long>());
    if (!label) throw DataError("bad label in KNN model");
    data.y.push_back(*label);
  }
  return fit(data, j.at("k").get<int>());
}

Label knn_predict(const Dataset& train, const SparseVector& x, int k) {
  return KNearestNeighbors::fit(train, k).predict(x);
}

// ------------------------------------------------------------------------ SVM

namespace {

class KernelRows {
 public:
  KernelRows(const FeatureMatrix& x, double gamma) : x_(x), gamma_(gamma), rows_(x.size()), norms_(x.size()) {
    for (std::size_t i = 0; i < x.size(); ++i) norms_[i] = x.rows[i].squared_norm();
  }

  const std::vector<float>& row(std::size_t i) {
    auto& r = rows_[i];
    if (r.empty()) {
      r.resize(x_.size());
      for (std::size_t j = 0; j < x_.size(); ++j) r[j] = static_cast<float>(value(i, j));
    }
    return r;
  }

  double value(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    const double d2 = std::max(0.0, norms_[i] + norms_[j] - 2.0 * x_.rows[i].dot(x_.rows[j]));
    return std::exp(-gamma_ * d2);
  }

 private:
  const FeatureMatrix& x_;
  double gamma_;
  std::vector<std::vector<float>> rows_;
  std::vector<double> norms_;
};

}  // namespace

RbfSvm RbfSvm::fit(const Dataset& data, double c, double gamma, const SvmOptions& options) {
  data.validate(true);
  if (!(c > 0.0) || !(gamma > 0.0)) throw DataError("SVM requires C > 0 and gamma > 0");
  const std::size_t n = data.size();
  RbfSvm model(data.dimension());
  model.c_ = c;
  model.gamma_ = gamma;
  model.signs_.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.signs_[i] = data.y[i] == Label::Suicidal ? 1.0 : -1.0;
  const auto& y = model.signs_;
  auto& alpha = model.alphas_;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  KernelRows kernel(data.x, gamma);
  constexpr double kTau = 1e-12;

  auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

  const std::size_t max_iter = options.max_passes * std::max<std::size_t>(n, 1);
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -HUGE_VAL;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) {
      converged = true;
      break;
    }
    const auto& ki = kernel.row(i);
    double gmax2 = -HUGE_VAL;
    double best_obj = HUGE_VAL;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      const double grad_diff = gmax + yg;
      if (grad_diff > 0) {
        double quad = 2.0 - 2.0 * static_cast<double>(ki[t]);
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < options.tolerance || j == n) {
      converged = true;
      break;
    }
    const auto& kj = kernel.row(j);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double quad = 2.0 - 2.0 * static_cast<double>(ki[j]);
    if (quad <= 0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * static_cast<double>(ki[t]) * dai + y[j] * static_cast<double>(kj[t]) * daj);
    }
  }
  model.iterations_ = iter;

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = HUGE_VAL, lb = -HUGE_VAL, free_sum = 0.0;
  std::size_t free_n = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_n;
      free_sum += yg;
    }
  }
  const double rho = free_n > 0 ? free_sum / static_cast<double>(free_n) : (ub + lb) / 2.0;
  model.bias_ = -rho;
  model.keep_support(data);
  if (!converged) {
    throw SvmNotConverged("SMO did not converge within " + std::to_string(options.max_passes) + " passes",
                          std::make_shared<const RbfSvm>(model));
  }
  return model;
}

void RbfSvm::keep_support(const Dataset& data) {
  support_.clear();
  support_coef_.clear();
  support_norms_.clear();
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (alphas_[i] <= 0.0) continue;
    support_.push_back(data.x.rows[i]);
    support_coef_.push_back(alphas_[i] * signs_[i]);
    support_norms_.push_back(data.x.rows[i].squared_norm());
  }
}

double RbfSvm::score(const SparseVector& x) const {
  check_dimension(x);
  const double xn = x.squared_norm();
  double s = bias_;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const double d2 = std::max(0.0, support_norms_[i] + xn - 2.0 * support_[i].dot(x));
    s += support_coef_[i] * std::exp(-gamma_ * d2);
  }
  return s;
}

Label RbfSvm::predict(const SparseVector& x) const { return score(x) > 0.0 ? Label::Suicidal : Label::NonSuicidal; }

json RbfSvm::to_json() const {
  json j = header(Family::svm_rbf, dimension());
  j["C"] = c_;
  j["gamma"] = gamma_;
  j["bias"] = bias_;
  json sv = json::array();
  for (const auto& s : support_) sv.push_back(sparse_to_json(s));
  j["support_vectors"] = sv;
  j["dual_coef"] = support_coef_;
  return j;
}

RbfSvm RbfSvm::from_json(const json& j) {
  check_header(j, Family::svm_rbf);
  RbfSvm m(j.at("dimension").get<std::size_t>());
  m.c_ = j.at("C").get<double>();
  m.gamma_ = j.at("gamma").get<double>();
  m.bias_ = j.at("bias").get<double>();
  m.support_coef_ = j.at("dual_coef").get<std::vector<double>>();
  for (const auto& s : j.at("support_vectors")) {
    m.support_.push_back(sparse_from_json(s, m.dimension()));
    m.support_norms_.push_back(m.support_.back().squared_norm());
  }
  if (m.support_.size() != m.support_coef_.size()) throw DataError("SVM support/coefficient count mismatch");
  return m;
}

// -------------------------------------------------------------- RandomForest

RandomForest RandomForest::fit(const Dataset& data, int n_estimators, MaxFeatures max_features, std::uint64_t seed) {
  data.validate(false);
  if (data.size() < 2) throw DataError("random forest needs at least 2 training rows");
  if (n_estimators < 1) throw DataError("n_estimators must be >= 1");
  const std::size_t n = data.size();
  RandomForest forest(data.dimension());
  forest.max_features_ = max_features;
  forest.seed_ = seed;

  const ColumnStore columns(data.x);
  std::vector<NodeStats> stats(n);
  for (std::size_t r = 0; r < n; ++r) stats[r] = {1.0, data.y[r] == Label::Suicidal ? 1.0 : 0.0, 0.0};

  TreeParams params;
  params.criterion = SplitCriterion::gini;
  params.max_features = resolve_max_features(max_features, data.dimension());
  params.leaf_value = [](const NodeStats& s) { return s.a > s.w - s.a ? 1.0 : 0.0; };

  for (int t = 0; t < n_estimators; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> weights(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) weights[uniform_index(rng, n)] += 1.0;
    forest.trees_.push_back(grow_tree(data.x, columns, stats, weights, params, &rng));
  }
  return forest;
}

double RandomForest::score(const SparseVector& x) const {
  check_dimension(x);
  double votes = 0.0;
  for (const auto& tree : trees_) votes += tree.predict(x);
  return votes / static_cast<double>(trees_.size());
}

Label RandomForest::predict(const SparseVector& x) const {
  check_dimension(x);
  std::size_t ones = 0;
  for (const auto& tree : trees_) ones += tree.predict(x) > 0.5 ? 1 : 0;
  return 2 * ones > trees_.size() ? Label::Suicidal : Label::NonSuicidal;
}

json RandomForest::to_json() const {
  json j = header(Family::random_forest, dimension());
  j["max_features"] = to_string(max_features_);
  j["seed"] = seed_;
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  j["trees"] = trees;
  return j;
}

RandomForest RandomForest::from_json(const json& j) {
  check_header(j, Family::random_forest);
  RandomForest f(j.at("dimension").get<std::size_t>());
  f.max_features_ = parse_max_features(j.at("max_features").get<std::string>()).value_or(MaxFeatures::log2);
  f.seed_ = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
  if (f.trees_.empty()) throw DataError("random forest has no trees");
  return f;
}

// ---------------------------------------------------------- GradientBoosting

GradientBoosting GradientBoosting::fit(const Dataset& data, int n_estimators, double learning_rate, int max_depth) {
  data.validate(false);
  if (n_estimators < 1) throw DataError("n_estimators must be >= 1");
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (max_depth < 1) throw DataError("max_depth must be >= 1");
  const std::size_t n = data.size();
  GradientBoosting model(data.dimension());
  model.learning_rate_ = learning_rate;
  model.max_depth_ = max_depth;
  const double p = static_cast<double>(data.count(Label::Suicidal)) / static_cast<double>(n);
  model.base_rate_ = p;
  if (p <= 0.0 || p >= 1.0) {
    model.degenerate_ = true;
    model.f0_ = p >= 1.0 ? HUGE_VAL : -HUGE_VAL;
    return model;
  }
  model.f0_ = std::log(p / (1.0 - p));

  const ColumnStore columns(data.x);
  std::vector<double> f(n, model.f0_);
  std::vector<NodeStats> stats(n);
  const std::vector<double> weights(n, 1.0);
  TreeParams params;
  params.criterion = SplitCriterion::variance;
  params.max_depth = max_depth;
  params.min_gain = 0.0;
  params.stop_when_pure = false;
  params.leaf_value = [learning_rate](const NodeStats& s) {
    return std::abs(s.b) < 1e-150 ? 0.0 : learning_rate * s.a / s.b;
  };
  for (int m = 0; m < n_estimators; ++m) {
    for (std::size_t r = 0; r < n; ++r) {
      const double prob = sigmoid(f[r]);
      const double target = data.y[r] == Label::Suicidal ? 1.0 : 0.0;
      stats[r] = {1.0, target - prob, prob * (1.0 - prob)};
    }
    auto tree = grow_tree(data.x, columns, stats, weights, params, nullptr);
    for (std::size_t r = 0; r < n; ++r) f[r] += tree.predict(data.x.rows[r]);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

double GradientBoosting::raw_score(const SparseVector& x) const {
  check_dimension(x);
  double f = f0_;
  for (const auto& tree : trees_) f += tree.predict(x);
  return f;
}

double GradientBoosting::score(const SparseVector& x) const {
  if (degenerate_) {
    check_dimension(x);
    return base_rate_;
  }
  return sigmoid(raw_score(x));
}

Label GradientBoosting::predict(const SparseVector& x) const {
  return score(x) >= 0.5 ? Label::Suicidal : Label::NonSuicidal;
}

json GradientBoosting::to_json() const {
  json j = header(Family::gbdt, dimension());
  j["learning_rate"] = learning_rate_;
  j["max_depth"] = max_depth_;
  j["base_rate"] = base_rate_;
  j["degenerate"] = degenerate_;
  j["f0"] = degenerate_ ? 0.0 : f0_;
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  j["trees"] = trees;
  return j;
}

GradientBoosting GradientBoosting::from_json(const json& j) {
  check_header(j, Family::gbdt);
  GradientBoosting g(j.at("dimension").get<std::size_t>());
  g.learning_rate_ = j.at("learning_rate").get<double>();
  g.max_depth_ = j.at("max_depth").get<int>();
  g.base_rate_ = j.at("base_rate").get<double>();
  g.degenerate_ = j.at("degenerate").get<bool>();
  g.f0_ = j.at("f0").get<double>();
  for (const auto& t : j.at("trees")) g.trees_.push_back(DecisionTree::from_json(t));
  return g;
}

// ------------------------------------------------------------------- factory

std::unique_ptr<Classifier> fit_classifier(Family family, const Dataset& data, const Hyperparameters& p,
                                           std::uint64_t seed) {
  switch (family) {
    case Family::gnb: return std::make_unique<GaussianNB>(GaussianNB::fit(data, p.var_smoothing));
    case Family::svm_rbf: return std::make_unique<RbfSvm>(RbfSvm::fit(data, p.c, p.gamma));
    case Family::knn: return std::make_unique<KNearestNeighbors>(KNearestNeighbors::fit(data, p.k));
    case Family::random_forest:
      return std::make_unique<RandomForest>(RandomForest::fit(data, p.n_estimators, p.max_features, seed));
    case Family::gbdt:
      return std::make_unique<GradientBoosting>(
          GradientBoosting::fit(data, p.n_estimators, p.learning_rate, p.max_depth));
  }
  throw DataError("unknown classifier family");
}

std::unique_ptr<Classifier> classifier_from_json(const json& j) {
  const auto family = parse_family(j.at("family").get<std::string>());
  if (!family) throw DataError("unknown classifier family " + j.at("family").dump());
  switch (*family) {
    case Family::gnb: return std::make_unique<GaussianNB>(GaussianNB::from_json(j));
    case Family::svm_rbf: return std::make_unique<RbfSvm>(RbfSvm::from_json(j));
    case Family::knn: return std::make_unique<KNearestNeighbors>(KNearestNeighbors::from_json(j));
    case Family::random_forest: return std::make_unique<RandomForest>(RandomForest::from_json(j));
    case Family::gbdt: return std::make_unique<GradientBoosting>(GradientBoosting::from_json(j));
  }
  throw DataError("unknown classifier family");
}

}  // namespace sidetect
