#include "sidetect/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "sidetect/error.hpp"
#include "sidetect/rng.hpp"

namespace sidetect {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::bow: return "bow";
    case FeatureKind::unigram: return "unigram";
    case FeatureKind::ngram23: return "ngram23";
    case FeatureKind::char_ngram: return "char";
    case FeatureKind::word2vec: return "word2vec";
    case FeatureKind::fasttext: return "fasttext";
  }
  return "?";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
  if (name == "bow") return FeatureKind::bow;
  if (name == "unigram" || name == "tfidf_unigram") return FeatureKind::unigram;
  if (name == "ngram23" || name == "ngram" || name == "tfidf_ngram23") return FeatureKind::ngram23;
  if (name == "char" || name == "tfidf_char") return FeatureKind::char_ngram;
  if (name == "word2vec" || name == "w2v") return FeatureKind::word2vec;
  if (name == "fasttext") return FeatureKind::fasttext;
  return std::nullopt;
}

bool is_embedding(FeatureKind kind) { return kind == FeatureKind::word2vec || kind == FeatureKind::fasttext; }

std::string display_name(Family family) {
  switch (family) {
    case Family::gnb: return "NB";
    case Family::svm_rbf: return "SVM";
    case Family::knn: return "KNN";
    case Family::random_forest: return "RF";
    case Family::gbdt: return "GBDT";
  }
  return "?";
}

std::string display_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::bow: return "BOW";
    case FeatureKind::unigram: return "Unigram";
    case FeatureKind::ngram23: return "Ngram";
    case FeatureKind::char_ngram: return "Char";
    case FeatureKind::word2vec: return "Word2Vec";
    case FeatureKind::fasttext: return "FastText";
  }
  return "?";
}

namespace {

Scheme scheme_of(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::bow: return Scheme::bow;
    case FeatureKind::unigram: return Scheme::tfidf_unigram;
    case FeatureKind::ngram23: return Scheme::tfidf_ngram23;
    case FeatureKind::char_ngram: return Scheme::tfidf_char;
    default: break;
  }
  throw std::logic_error("embedding features have no term scheme");
}

SparseVector unit_dense(std::vector<double> v, bool l2) {
  if (l2) {
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s > 0.0) {
      const double inv = 1.0 / std::sqrt(s);
      for (double& x : v) x *= inv;
    }
  }
  return SparseVector::from_dense(v);
}

}  // namespace

std::vector<Document> prepare_documents(const Corpus& corpus, const StopList& stops) {
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& t : corpus.tweets) docs.push_back(remove_stopwords(normalize(t.text).tokens, stops));
  return docs;
}

Featurizer Featurizer::fit(const FeatureSpec& spec, std::span<const Document> train, bool l2_normalize,
                           NgramRange char_range, std::shared_ptr<const EmbeddingTable> table) {
  Featurizer f;
  f.spec_ = spec;
  f.l2_normalize_ = l2_normalize;
  if (is_embedding(spec.kind)) {
    f.table_ = table ? std::move(table) : std::make_shared<const EmbeddingTable>(EmbeddingTable::load(spec.embeddings));
  } else {
    FeatureOptions options;
    options.char_range = char_range;
    options.normalize = l2_normalize;
    f.model_ = FeatureModel::fit(train, scheme_of(spec.kind), options);
  }
  return f;
}

SparseVector Featurizer::transform(const Document& doc) const {
  if (model_) return model_->transform(doc);
  return unit_dense(table_->embed(doc), l2_normalize_);
}

FeatureMatrix Featurizer::transform_all(std::span<const Document> docs) const {
  FeatureMatrix m;
  m.dimension = dimension();
  m.rows.reserve(docs.size());
  for (const auto& d : docs) m.rows.push_back(transform(d));
  return m;
}

std::size_t Featurizer::dimension() const { return model_ ? model_->dimension() : table_->dimension(); }

json Featurizer::to_json() const {
  json j = {{"feature", to_string(spec_.kind)}, {"normalize", l2_normalize_}};
  if (model_) {
    j["model"] = model_->to_json();
  } else {
    j["embeddings"] = spec_.embeddings.string();
  }
  return j;
}

Featurizer Featurizer::from_json(const json& j) {
  Featurizer f;
  const auto kind = parse_feature_kind(j.at("feature").get<std::string>());
  if (!kind) throw DataError("unknown feature in model bundle: " + j.at("feature").dump());
  f.spec_.kind = *kind;
  f.l2_normalize_ = j.at("normalize").get<bool>();
  if (is_embedding(*kind)) {
    f.spec_.embeddings = j.at("embeddings").get<std::string>();
    f.table_ = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(f.spec_.embeddings));
  } else {
    f.model_ = FeatureModel::from_json(j.at("model"));
  }
  return f;
}

json ModelBundle::to_json() const { return {{"featurizer", featurizer.to_json()}, {"classifier", classifier->to_json()}}; }

ModelBundle ModelBundle::from_json(const json& j) {
  ModelBundle b{Featurizer::from_json(j.at("featurizer")), classifier_from_json(j.at("classifier"))};
  if (b.classifier->dimension() != b.featurizer.dimension()) {
    throw DataError("model bundle dimensions disagree");
  }
  return b;
}

bool ExperimentConfig::normalize_for(Family family) const {
  if (auto it = l2_normalize.find(family); it != l2_normalize.end()) return it->second;
  return family == Family::svm_rbf || family == Family::knn;
}

Hyperparameters ExperimentConfig::fixed_for(Family family) const {
  if (auto it = fixed.find(family); it != fixed.end()) return it->second;
  return {};
}

namespace {

Family require_family(const std::string& name) {
  auto f = parse_family(name);
  if (!f) throw DataError("unknown classifier family \"" + name + "\"");
  return *f;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::vector<std::string> strings(const json& j) { return j.get<std::vector<std::string>>(); }

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base) {
  static const std::set<std::string> known = {"corpus",    "synthetic", "stopwords", "split",    "families",
                                              "features",  "char_range", "l2_normalize", "tuning", "fixed",
                                              "external",  "output",    "formats",   "artifacts", "seed",
                                              "threads"};
  if (!j.is_object()) throw DataError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw DataError("unknown config key \"" + key + "\"");
  }
  ExperimentConfig c;
  try {
    if (j.contains("corpus")) {
      const auto& jc = j.at("corpus");
      if (jc.is_string()) {
        c.corpus = resolve(base, jc.get<std::string>());
      } else {
        c.corpus = resolve(base, jc.at("path").get<std::string>());
        const auto fmt = parse_tweet_format(jc.value("format", std::string("jsonl")));
        if (!fmt) throw DataError("unknown corpus format " + jc.at("format").dump());
        c.corpus_format = *fmt;
      }
      if (c.corpus->extension() == ".csv" && !(jc.is_object() && jc.contains("format"))) {
        c.corpus_format = TweetFormat::csv;
      }
    }
    if (j.contains("synthetic")) {
      const auto& js = j.at("synthetic");
      SyntheticSpec s = default_synthetic_spec();
      s.size = js.value("size", s.size);
      s.balance = js.value("balance", s.balance);
      s.misspelling_rate = js.value("misspelling_rate", s.misspelling_rate);
      s.seed = js.value("seed", s.seed);
      if (js.contains("suicidal_keywords")) s.suicidal_keywords = strings(js.at("suicidal_keywords"));
      if (js.contains("non_suicidal_keywords")) s.non_suicidal_keywords = strings(js.at("non_suicidal_keywords"));
      c.synthetic = s;
    }
    if (j.contains("stopwords")) c.stopwords = resolve(base, j.at("stopwords").get<std::string>());
    if (j.contains("split")) {
      const auto& js = j.at("split");
      c.split.train_fraction = js.value("train_fraction", c.split.train_fraction);
      c.split.seed = js.value("seed", c.split.seed);
      c.split.stratified = js.value("stratified", c.split.stratified);
    }
    c.seed = j.value("seed", c.seed);
    if (!j.contains("split") || !j.at("split").contains("seed")) c.split.seed = c.seed;
    if (j.contains("families")) {
      for (const auto& name : strings(j.at("families"))) c.families.push_back(require_family(name));
    } else {
      c.families = {Family::gnb, Family::svm_rbf, Family::knn, Family::random_forest, Family::gbdt};
    }
    if (j.contains("features")) {
      for (const auto& jf : j.at("features")) {
        FeatureSpec spec;
        const std::string name = jf.is_string() ? jf.get<std::string>() : jf.at("name").get<std::string>();
        const auto kind = parse_feature_kind(name);
        if (!kind) throw DataError("unknown feature \"" + name + "\"");
        spec.kind = *kind;
        if (is_embedding(*kind)) {
          if (!jf.is_object() || !jf.contains("embeddings")) {
            throw DataError("feature \"" + name + "\" needs an \"embeddings\" file");
          }
          spec.embeddings = resolve(base, jf.at("embeddings").get<std::string>());
        }
        c.features.push_back(spec);
      }
    } else {
      for (auto k : {FeatureKind::bow, FeatureKind::unigram, FeatureKind::ngram23, FeatureKind::char_ngram}) {
        c.features.push_back({k, {}});
      }
    }
    if (j.contains("char_range")) {
      c.char_range = {j.at("char_range").at(0).get<int>(), j.at("char_range").at(1).get<int>()};
    }
    if (j.contains("l2_normalize")) {
      for (const auto& [name, flag] : j.at("l2_normalize").items()) c.l2_normalize[require_family(name)] = flag.get<bool>();
    }
    if (j.contains("tuning")) {
      const auto& jt = j.at("tuning");
      const auto mode = jt.value("mode", std::string("fixed"));
      if (mode == "grid") {
        c.tuning = TuningMode::grid;
      } else if (mode == "fixed") {
        c.tuning = TuningMode::fixed;
      } else {
        throw DataError("tuning mode must be \"grid\" or \"fixed\"");
      }
      c.folds = jt.value("folds", c.folds);
      if (jt.contains("metric")) {
        const auto m = parse_metric(jt.at("metric").get<std::string>());
        if (!m) throw DataError("unknown metric " + jt.at("metric").dump());
        c.metric = *m;
      }
      if (jt.contains("grid")) c.grid = HyperGrid::from_json(jt.at("grid"));
      if (jt.contains("grid_file")) {
        const auto path = resolve(base, jt.at("grid_file").get<std::string>());
        std::ifstream in(path);
        if (!in) throw DataError("cannot read grid file " + path.string());
        c.grid = HyperGrid::from_json(json::parse(in));
      }
    }
    if (j.contains("fixed")) {
      for (const auto& [name, params] : j.at("fixed").items()) {
        const auto family = require_family(name);
        c.fixed[family] = Hyperparameters::from_json(family, params);
      }
    }
    if (j.contains("external")) {
      for (const auto& p : strings(j.at("external"))) c.external.push_back(resolve(base, p));
    }
    if (j.contains("output")) c.output = resolve(base, j.at("output").get<std::string>());
    if (j.contains("formats")) {
      c.formats.clear();
      for (const auto& name : strings(j.at("formats"))) {
        const auto f = parse_report_format(name);
        if (!f) throw DataError("unknown report format \"" + name + "\"");
        c.formats.push_back(*f);
      }
    }
    c.write_artifacts = j.value("artifacts", c.write_artifacts);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("config is not valid JSON: " + path.string());
  auto c = from_json(j, path.parent_path());
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (!corpus && !synthetic) throw DataError("config names neither a corpus nor a synthetic spec");
  if (corpus && !fs::exists(*corpus)) throw DataError("corpus file not found: " + corpus->string());
  if (stopwords && !fs::exists(*stopwords)) throw DataError("stop-word file not found: " + stopwords->string());
  for (const auto& f : features) {
    if (is_embedding(f.kind) && !fs::exists(f.embeddings)) {
      throw DataError("embedding file not found: " + f.embeddings.string());
    }
  }
  for (const auto& p : external) {
    if (!fs::exists(p)) throw DataError("prediction file not found: " + p.string());
  }
  if (families.empty() || features.empty()) throw DataError("config selects no classifier/feature cells");
  if (tuning == TuningMode::grid && folds < 2) throw DataError("grid tuning needs at least 2 folds");
  if (char_range.low < 1 || char_range.high < char_range.low) throw DataError("invalid char_range");
}

Corpus load_experiment_corpus(const ExperimentConfig& config) {
  if (config.corpus) {
    auto loaded = load_tweets(*config.corpus, config.corpus_format);
    if (loaded.corpus.empty()) throw DataError("corpus " + config.corpus->string() + " holds no tweets");
    return std::move(loaded.corpus);
  }
  if (config.synthetic) return make_synthetic(*config.synthetic);
  throw DataError("config names neither a corpus nor a synthetic spec");
}

namespace {

struct Context {
  const ExperimentConfig& config;
  const ExperimentHooks& hooks;
  std::vector<std::string> train_ids;
  std::vector<Document> train_docs;
  std::vector<Label> train_y;
  std::vector<std::string> test_ids;
  std::vector<Document> test_docs;
  std::vector<Label> test_y;
  std::map<fs::path, std::shared_ptr<const EmbeddingTable>> tables;
  std::map<fs::path, std::string> table_errors;
};

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream out;
  out.precision(17);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc.points) {
    out << p.fpr << ',' << p.tpr << ',';
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << '\n';
  }
  return out.str();
}

ResultRow run_cell(const Context& ctx, Family family, const FeatureSpec& spec) {
  const auto& config = ctx.config;
  ResultRow row;
  row.classifier = display_name(family);
  row.feature = display_name(spec.kind);
  const std::string cell = std::string(to_string(family)) + "__" + spec.name();
  const auto seed = derive_seed(config.seed, cell);
  auto observe = [&](const char* stage) {
    if (ctx.hooks.on_fit) ctx.hooks.on_fit(cell, stage, ctx.train_ids);
  };
  try {
    std::shared_ptr<const EmbeddingTable> table;
    if (is_embedding(spec.kind)) {
      if (auto it = ctx.table_errors.find(spec.embeddings); it != ctx.table_errors.end()) throw DataError(it->second);
      table = ctx.tables.at(spec.embeddings);
    }
    const bool l2 = config.normalize_for(family);
    observe("vectorizer_fit");
    const auto featurizer = Featurizer::fit(spec, ctx.train_docs, l2, config.char_range, table);
    Dataset train{featurizer.transform_all(ctx.train_docs), ctx.train_y};
    const auto test_x = featurizer.transform_all(ctx.test_docs);

    Hyperparameters params = config.fixed_for(family);
    if (config.tuning == TuningMode::grid) {
      observe("grid_search");
      const auto result = grid_search(family, train, config.grid, config.folds, config.metric, seed);
      params = result.best;
      row.cv_score = result.best_score;
    }
    row.hyperparameters = params.to_json(family);
    observe("model_fit");
    auto model = fit_classifier(family, train, params, seed);

    std::vector<Label> predicted;
    std::vector<double> scores;
    for (const auto& x : test_x.rows) {
      predicted.push_back(model->predict(x));
      scores.push_back(model->score(x));
    }
    row.confusion = confusion(predicted, ctx.test_y);
    row.metrics = metrics(row.confusion);
    try {
      row.roc = roc_auc(scores, ctx.test_y);
    } catch (const DataError&) {
      row.roc.reset();
    }
    row.ok = true;

    if (config.write_artifacts) {
      ModelBundle bundle{featurizer, std::move(model)};
      write_text_file(config.output / "models" / (cell + ".json"), bundle.to_json().dump() + "\n");
      write_text_file(config.output / "confusion" / (cell + ".json"), to_json(row.confusion).dump(2) + "\n");
      if (row.roc) write_text_file(config.output / "roc" / (cell + ".csv"), roc_csv(*row.roc));
    }
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.roc.reset();
  }
  return row;
}

}  // namespace

ExperimentResult run_grid(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  const Corpus corpus = load_experiment_corpus(config);
  const StopList stops = config.stopwords ? StopList::load(*config.stopwords) : StopList{};
  const Split split = stratified_split(corpus, config.split);

  Context ctx{config, hooks, {}, {}, {}, {}, {}, {}, {}, {}};
  const auto docs = prepare_documents(corpus, stops);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < corpus.size(); ++i) position[corpus.tweets[i].id] = i;
  for (const auto& id : split.train) {
    const auto i = position.at(id);
    ctx.train_ids.push_back(id);
    ctx.train_docs.push_back(docs[i]);
    ctx.train_y.push_back(*corpus.tweets[i].label);
  }
  for (const auto& id : split.test) {
    const auto i = position.at(id);
    ctx.test_ids.push_back(id);
    ctx.test_docs.push_back(docs[i]);
    ctx.test_y.push_back(*corpus.tweets[i].label);
  }
  for (const auto& f : config.features) {
    if (!is_embedding(f.kind) || ctx.tables.contains(f.embeddings) || ctx.table_errors.contains(f.embeddings)) continue;
    try {
      ctx.tables[f.embeddings] = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(f.embeddings));
    } catch (const std::exception& e) {
      ctx.table_errors[f.embeddings] = e.what();
    }
  }

  std::vector<std::pair<Family, FeatureSpec>> cells;
  for (auto family : config.families) {
    for (const auto& f : config.features) cells.emplace_back(family, f);
  }
  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = run_cell(ctx, cells[i].first, cells[i].second);
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ExperimentResult result;
  result.table.seed = config.seed;
  result.table.train_size = split.train.size();
  result.table.test_size = split.test.size();
  result.table.rows = std::move(rows);

  LabelMap test_gold;
  for (std::size_t i = 0; i < ctx.test_ids.size(); ++i) test_gold[ctx.test_ids[i]] = ctx.test_y[i];
  for (const auto& path : config.external) {
    ResultRow row;
    row.external = true;
    row.feature = "external";
    row.classifier = path.stem().string();
    try {
      const auto file = load_prediction_file(path);
      row.classifier = file.model;
      const auto report = score_external(file, test_gold);
      row.confusion = report.confusion;
      row.metrics = report.metrics;
      row.roc = report.roc;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    result.table.rows.push_back(std::move(row));
  }

  result.written = emit_report(result.table, config.formats, config.output);
  return result;
}

}  // namespace sidetect
