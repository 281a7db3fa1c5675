#include "sidetect/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sidetect/error.hpp"
#include "sidetect/rng.hpp"

namespace sidetect {

using nlohmann::json;

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> gold) {
  if (predictions.size() != gold.size()) throw DataError("prediction and gold vectors differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predictions[i] == Label::Suicidal;
    const bool g = gold[i] == Label::Suicidal;
    if (p && g) ++cm.tp;
    if (p && !g) ++cm.fp;
    if (!p && !g) ++cm.tn;
    if (!p && g) ++cm.fn;
  }
  return cm;
}

namespace {

void require_same_ids(const std::vector<std::string>& a_ids, const std::vector<std::string>& b_ids,
                      const char* a_name, const char* b_name) {
  std::vector<std::string> only_a, only_b;
  std::set_difference(a_ids.begin(), a_ids.end(), b_ids.begin(), b_ids.end(), std::back_inserter(only_a));
  std::set_difference(b_ids.begin(), b_ids.end(), a_ids.begin(), a_ids.end(), std::back_inserter(only_b));
  if (only_a.empty() && only_b.empty()) return;
  std::string msg = "id sets differ;";
  auto list = [&](const std::vector<std::string>& ids, const char* name) {
    if (ids.empty()) return;
    msg += std::string(" only in ") + name + ":";
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + ids[i];
    if (ids.size() > shown) msg += " ... (" + std::to_string(ids.size()) + " total)";
    msg += ";";
  };
  list(only_a, a_name);
  list(only_b, b_name);
  throw DataError(msg);
}

template <typename Map>
std::vector<std::string> keys(const Map& m) {
  std::vector<std::string> out;
  out.reserve(m.size());
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

}  // namespace

ConfusionMatrix confusion(const LabelMap& predictions, const LabelMap& gold) {
  require_same_ids(keys(predictions), keys(gold), "predictions", "gold");
  std::vector<Label> p, g;
  for (const auto& [id, label] : gold) {
    g.push_back(label);
    p.push_back(predictions.at(id));
  }
  return confusion(p, g);
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  ClassMetrics m;
  if (cm.tp + cm.fp > 0) {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    m.precision_defined = true;
  }
  if (cm.tp + cm.fn > 0) {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    m.recall_defined = true;
  }
  if (m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.f1_defined = true;
  }
  return m;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.suicidal = class_metrics(cm);
  r.non_suicidal = class_metrics(cm.swapped());
  if (cm.total() > 0) r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  auto mean = [](double a, bool da, double b, bool db, double& out, bool& defined) {
    const int n = (da ? 1 : 0) + (db ? 1 : 0);
    defined = n > 0;
    out = n == 0 ? 0.0 : ((da ? a : 0.0) + (db ? b : 0.0)) / n;
  };
  const auto& s = r.suicidal;
  const auto& ns = r.non_suicidal;
  mean(s.precision, s.precision_defined, ns.precision, ns.precision_defined, r.macro.precision,
       r.macro.precision_defined);
  mean(s.recall, s.recall_defined, ns.recall, ns.recall_defined, r.macro.recall, r.macro.recall_defined);
  mean(s.f1, s.f1_defined, ns.f1, ns.f1_defined, r.macro.f1, r.macro.f1_defined);
  return r;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const Label> gold) {
  if (scores.size() != gold.size()) throw DataError("score and gold vectors differ in length");
  const auto pos = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), Label::Suicidal));
  const std::size_t neg = gold.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("ROC needs both classes in the gold labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double auc2 = 0.0;  // twice the area, in units of (1/pos)(1/neg)
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    while (i < order.size() && scores[order[i]] == threshold) {
      (gold[order[i]] == Label::Suicidal ? tp : fp) += 1;
      ++i;
    }
    auc2 += static_cast<double>((fp - fp0) * (tp + tp0));
    roc.points.push_back(
        {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos),
         threshold});
  }
  roc.auc = auc2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

RocCurve roc_auc(const std::map<std::string, double>& scores, const LabelMap& gold) {
  require_same_ids(keys(scores), keys(gold), "scores", "gold");
  std::vector<double> s;
  std::vector<Label> g;
  for (const auto& [id, label] : gold) {
    s.push_back(scores.at(id));
    g.push_back(label);
  }
  return roc_auc(s, g);
}

Split stratified_split(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw DataError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    const auto& t = corpus.tweets[i];
    if (!t.label) throw DataError("tweet '" + t.id + "' has no label");
    by_class[spec.stratified ? static_cast<int>(*t.label) : 0].push_back(i);
  }
  std::vector<bool> in_train(corpus.tweets.size(), false);
  for (int c = 0; c < 2; ++c) {
    auto& members = by_class[c];
    if (spec.stratified && members.size() < 2) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " items; stratified split needs at least 2");
    }
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(c)));
    shuffle(std::span<std::size_t>(members), rng);
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * spec.train_fraction + 0.5));
    for (std::size_t k = 0; k < n_train && k < members.size(); ++k) in_train[members[k]] = true;
  }
  Split split;
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    (in_train[i] ? split.train : split.test).push_back(corpus.tweets[i].id);
  }
  return split;
}

json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}, {"total", cm.total()}};
}

namespace {

json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"precision_defined", m.precision_defined},
          {"recall_defined", m.recall_defined},
          {"f1_defined", m.f1_defined}};
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

json to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy},
          {"suicidal", class_json(m.suicidal)},
          {"non_suicidal", class_json(m.non_suicidal)},
          {"macro", class_json(m.macro)}};
}

json to_json(const RocCurve& roc) {
  json pts = json::array();
  for (const auto& p : roc.points) {
    pts.push_back({{"fpr", p.fpr}, {"tpr", p.tpr},
                   {"threshold", std::isinf(p.threshold) ? json("inf") : json(p.threshold)}});
  }
  return {{"auc", roc.auc}, {"points", pts}};
}

json EvalReport::to_json() const {
  json j{{"model", model},
         {"confusion", sidetect::to_json(confusion)},
         {"metrics", sidetect::to_json(metrics)},
         {"roc_absent", roc_absent}};
  j["roc"] = roc ? sidetect::to_json(*roc) : json(nullptr);
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "model,scope,precision,recall,f1,accuracy,auc\n";
  const std::string auc = roc ? fmt(roc->auc) : "";
  auto row = [&](const char* scope, const ClassMetrics& m) {
    out << model << ',' << scope << ',' << fmt(m.precision) << ',' << fmt(m.recall) << ',' << fmt(m.f1) << ','
        << fmt(metrics.accuracy) << ',' << auc << '\n';
  };
  row("suicidal", metrics.suicidal);
  row("non_suicidal", metrics.non_suicidal);
  row("macro", metrics.macro);
  return out.str();
}

EvalReport evaluate(std::string model, const LabelMap& predictions, const LabelMap& gold,
                    const std::map<std::string, double>* scores) {
  EvalReport report;
  report.model = std::move(model);
  report.confusion = confusion(predictions, gold);
  report.metrics = metrics(report.confusion);
  if (scores) {
    report.roc = roc_auc(*scores, gold);
    report.roc_absent = false;
  }
  return report;
}

PredictionFile parse_prediction_file(std::string_view content) {
  PredictionFile file;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::optional<bool> with_scores;
  std::map<std::string, double> scores;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#' || (!header_seen && line.rfind("model=", 0) == 0)) {
      auto pos = line.find("model=");
      if (pos != std::string::npos) {
        file.model = line.substr(pos + 6);
        while (!file.model.empty() && file.model.back() == ' ') file.model.pop_back();
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!header_seen && !cells.empty() && cells[0] == "id") {
      header_seen = true;
      with_scores = cells.size() >= 3;
      continue;
    }
    header_seen = true;
    const auto where = "prediction line " + std::to_string(line_no);
    if (cells.size() < 2 || cells.size() > 3) throw DataError(where + ": expected id,pred[,score]");
    if (!with_scores) with_scores = cells.size() == 3;
    if (*with_scores != (cells.size() == 3)) throw DataError(where + ": score column present on some rows only");
    const auto& id = cells[0];
    if (id.empty()) throw DataError(where + ": empty id");
    if (cells[1] != "0" && cells[1] != "1") throw DataError(where + ": pred must be 0 or 1");
    if (!file.predictions.emplace(id, cells[1] == "1" ? Label::Suicidal : Label::NonSuicidal).second) {
      throw DataError(where + ": duplicate id '" + id + "'");
    }
    if (*with_scores) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[2], &used);
        if (used != cells[2].size()) throw std::invalid_argument("trailing");
        scores[id] = v;
      } catch (const std::exception&) {
        throw DataError(where + ": bad score '" + cells[2] + "'");
      }
    }
  }
  if (with_scores.value_or(false)) file.scores = std::move(scores);
  if (file.model.empty()) file.model = "external";
  return file;
}

PredictionFile load_prediction_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read prediction file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_prediction_file(ss.str());
}

EvalReport score_external(const PredictionFile& file, const LabelMap& gold) {
  return evaluate(file.model, file.predictions, gold, file.scores ? &*file.scores : nullptr);
}

EvalReport score_external(const std::filesystem::path& path, const LabelMap& gold) {
  return score_external(load_prediction_file(path), gold);
}

LabelMap gold_labels(const Corpus& corpus) {
  LabelMap gold;
  for (const auto& t : corpus.tweets) {
    if (t.label) gold[t.id] = *t.label;
  }
  return gold;
}

}  // namespace sidetect
