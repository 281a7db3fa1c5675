#include "sidetect/grid_search.hpp"

#include <algorithm>
#include <cmath>

#include "sidetect/error.hpp"
#include "sidetect/evaluation.hpp"
#include "sidetect/rng.hpp"

namespace sidetect {

using nlohmann::json;

HyperGrid HyperGrid::defaults() {
  HyperGrid g;
  g.gnb_var_smoothing = {1e-11, 1e-10, 1e-9, 1e-8, 1e-7};
  for (int c = 1; c <= 10; ++c) g.svm_c.push_back(c);
  for (int k = 1; k <= 10; ++k) g.svm_gamma.push_back(k / 10.0);
  for (int k = 1; k <= 31; ++k) g.knn_k.push_back(k);
  g.rf_max_features = {MaxFeatures::automatic, MaxFeatures::sqrt, MaxFeatures::log2};
  g.rf_n_estimators = {100, 200, 300, 1000};
  g.gbdt_n_estimators = {200, 300};
  g.gbdt_learning_rate = {0.1};
  g.gbdt_max_depth = {6};
  return g;
}

std::vector<Hyperparameters> HyperGrid::candidates(Family family) const {
  auto need = [&](bool empty, const char* what) {
    if (empty) throw DataError(std::string("hyperparameter grid has no candidates for ") + what);
  };
  std::vector<Hyperparameters> out;
  Hyperparameters p;
  switch (family) {
    case Family::gnb:
      need(gnb_var_smoothing.empty(), "gnb var_smoothing");
      for (double e : gnb_var_smoothing) {
        p.var_smoothing = e;
        out.push_back(p);
      }
      break;
    case Family::svm_rbf:
      need(svm_c.empty() || svm_gamma.empty(), "svm C/gamma");
      for (double c : svm_c) {
        for (double g : svm_gamma) {
          p.c = c;
          p.gamma = g;
          out.push_back(p);
        }
      }
      break;
    case Family::knn:
      need(knn_k.empty(), "knn k");
      for (int k : knn_k) {
        p.k = k;
        out.push_back(p);
      }
      break;
    case Family::random_forest:
      need(rf_max_features.empty() || rf_n_estimators.empty(), "random forest");
      for (auto mf : rf_max_features) {
        for (int n : rf_n_estimators) {
          p.max_features = mf;
          p.n_estimators = n;
          out.push_back(p);
        }
      }
      break;
    case Family::gbdt:
      need(gbdt_n_estimators.empty() || gbdt_learning_rate.empty() || gbdt_max_depth.empty(), "gbdt");
      for (int n : gbdt_n_estimators) {
        for (double lr : gbdt_learning_rate) {
          for (int depth : gbdt_max_depth) {
            p.n_estimators = n;
            p.learning_rate = lr;
            p.max_depth = depth;
            out.push_back(p);
          }
        }
      }
      break;
  }
  return out;
}

json HyperGrid::to_json() const {
  json rf_mf = json::array();
  for (auto mf : rf_max_features) rf_mf.push_back(to_string(mf));
  return {{"gnb", {{"var_smoothing", gnb_var_smoothing}}},
          {"svm_rbf", {{"C", svm_c}, {"gamma", svm_gamma}}},
          {"knn", {{"k", knn_k}}},
          {"random_forest", {{"max_features", rf_mf}, {"n_estimators", rf_n_estimators}}},
          {"gbdt",
           {{"n_estimators", gbdt_n_estimators}, {"learning_rate", gbdt_learning_rate}, {"max_depth", gbdt_max_depth}}}};
}

HyperGrid HyperGrid::from_json(const json& j) {
  HyperGrid g = defaults();
  auto take = [&](const char* family, const char* key, auto& field) {
    if (j.contains(family) && j.at(family).contains(key)) {
      field = j.at(family).at(key).get<std::remove_reference_t<decltype(field)>>();
    }
  };
  take("gnb", "var_smoothing", g.gnb_var_smoothing);
  take("svm_rbf", "C", g.svm_c);
  take("svm_rbf", "gamma", g.svm_gamma);
  take("knn", "k", g.knn_k);
  take("random_forest", "n_estimators", g.rf_n_estimators);
  take("gbdt", "n_estimators", g.gbdt_n_estimators);
  take("gbdt", "learning_rate", g.gbdt_learning_rate);
  take("gbdt", "max_depth", g.gbdt_max_depth);
  if (j.contains("random_forest") && j.at("random_forest").contains("max_features")) {
    g.rf_max_features.clear();
    for (const auto& name : j.at("random_forest").at("max_features")) {
      auto rule = parse_max_features(name.get<std::string>());
      if (!rule) throw DataError("unknown max_features rule " + name.dump());
      g.rf_max_features.push_back(*rule);
    }
  }
  return g;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::f1: return "f1";
    case Metric::macro_f1: return "macro_f1";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "accuracy") return Metric::accuracy;
  if (name == "f1") return Metric::f1;
  if (name == "macro_f1") return Metric::macro_f1;
  return std::nullopt;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, int folds,
                                                       std::uint64_t seed) {
  if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (static_cast<int>(labels[i]) == c) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw DataError("class " + std::to_string(c) + " has only " + std::to_string(members.size()) +
                      " rows, so some of the " + std::to_string(folds) +
                      " folds would miss it; use fewer folds");
    }
    Rng rng(derive_seed(seed, "fold-class-" + std::to_string(c)));
    shuffle(std::span<std::size_t>(members), rng);
    for (std::size_t k = 0; k < members.size(); ++k) out[k % out.size()].push_back(members[k]);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

namespace {

double metric_value(Metric metric, const ConfusionMatrix& cm) {
  const auto m = metrics(cm);
  switch (metric) {
    case Metric::accuracy: return m.accuracy;
    case Metric::f1: return m.suicidal.f1;
    case Metric::macro_f1: return m.macro.f1;
  }
  return 0.0;
}

}  // namespace

GridResult grid_search(Family family, const Dataset& data, const std::vector<Hyperparameters>& candidates, int folds,
                       Metric metric, std::uint64_t seed) {
  data.validate(true);
  if (candidates.empty()) throw DataError("empty hyperparameter grid");
  const auto fold_rows = stratified_folds(data.y, folds, seed);
  std::vector<Dataset> train_sets, valid_sets;
  for (std::size_t f = 0; f < fold_rows.size(); ++f) {
    std::vector<bool> held(data.size(), false);
    for (auto r : fold_rows[f]) held[r] = true;
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < data.size(); ++r) {
      if (!held[r]) train_rows.push_back(r);
    }
    train_sets.push_back(data.subset(train_rows));
    valid_sets.push_back(data.subset(fold_rows[f]));
  }

  GridResult result;
  bool any = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CvRow row;
    row.params = candidates[c];
    try {
      for (std::size_t f = 0; f < fold_rows.size(); ++f) {
        const auto model = fit_classifier(family, train_sets[f], row.params, derive_seed(seed, f));
        std::vector<Label> predicted;
        predicted.reserve(valid_sets[f].size());
        for (const auto& x : valid_sets[f].x.rows) predicted.push_back(model->predict(x));
        row.fold_scores.push_back(metric_value(metric, confusion(predicted, valid_sets[f].y)));
      }
      double sum = 0.0;
      for (double s : row.fold_scores) sum += s;
      row.mean = sum / static_cast<double>(row.fold_scores.size());
      if (!any || row.mean > result.best_score) {
        result.best_score = row.mean;
        result.best_index = c;
        result.best = row.params;
        any = true;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      row.mean = 0.0;
    }
    result.table.push_back(std::move(row));
  }
  if (!any) throw DataError("every grid candidate failed: " + result.table.front().error.value_or(""));
  return result;
}

GridResult grid_search(Family family, const Dataset& data, const HyperGrid& grid, int folds, Metric metric,
                       std::uint64_t seed) {
  return grid_search(family, data, grid.candidates(family), folds, metric, seed);
}

}  // namespace sidetect
