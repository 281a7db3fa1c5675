#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sidetect/agreement.hpp"
#include "sidetect/annotation_http.hpp"
#include "sidetect/corpus_stats.hpp"
#include "sidetect/error.hpp"
#include "sidetect/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sidetect;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kRunFailure = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TweetFormat format_for(const fs::path& path, const std::string& name) {
  if (!name.empty()) {
    const auto f = parse_tweet_format(name);
    if (!f) throw UsageError("unknown format \"" + name + "\" (jsonl or csv)");
    return *f;
  }
  return path.extension() == ".csv" ? TweetFormat::csv : TweetFormat::jsonl;
}

Corpus read_corpus(const fs::path& path, const std::string& format) {
  auto loaded = load_tweets(path, format_for(path, format));
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  if (loaded.skipped > 0) std::cerr << "warning: skipped " << loaded.skipped << " malformed or duplicate records\n";
  return std::move(loaded.corpus);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const json j = json::parse(slurp(path), nullptr, false);
  if (j.is_discarded()) throw DataError(path.string() + " is not valid JSON");
  return j;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_text_file(out, j.dump(2) + "\n");
  }
}

std::optional<Label> parse_class(const std::string& name) {
  if (name == "all") return std::nullopt;
  if (name == "suicidal" || name == "1") return Label::Suicidal;
  if (name == "non_suicidal" || name == "non-suicidal" || name == "0") return Label::NonSuicidal;
  throw UsageError("--class must be suicidal, non_suicidal or all");
}

std::vector<std::string> read_phrases(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line.substr(0, line.find('\t')));
  }
  return out;
}

LabelMap read_label_csv(const fs::path& path) {
  LabelMap labels;
  std::istringstream in(slurp(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected id,label");
    const auto id = line.substr(0, comma);
    const auto value = line.substr(comma + 1);
    if (line_no == 1 && id == "id") continue;
    std::optional<Label> label;
    if (value == "0" || value == "1") label = label_from_int(value[0] - '0');
    if (!label) throw DataError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    if (!labels.emplace(id, *label).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate id " + id);
    }
  }
  return labels;
}

std::set<std::string> split_ids(const fs::path& path, const char* part) {
  const auto j = read_json(path);
  if (!j.contains(part)) throw DataError(path.string() + " has no \"" + part + "\" list");
  const auto ids = j.at(part).get<std::vector<std::string>>();
  return {ids.begin(), ids.end()};
}

Corpus restrict(const Corpus& corpus, const std::set<std::string>& ids) {
  Corpus out;
  out.provenance = corpus.provenance;
  for (const auto& t : corpus.tweets) {
    if (ids.contains(t.id)) out.tweets.push_back(t);
  }
  if (out.size() != ids.size()) throw DataError("split names ids that are not in the corpus");
  return out;
}

std::vector<Label> require_labels(const Corpus& corpus) {
  std::vector<Label> y;
  for (const auto& t : corpus.tweets) {
    if (!t.label) throw DataError("tweet " + t.id + " has no label");
    y.push_back(*t.label);
  }
  return y;
}

AnnotationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arabic suicidal-ideation detection pipeline"};
  app.require_subcommand(1);

  std::string input, format, keywords, out, corpus_path, config_path, stopwords_path, split_path;
  bool no_dedup = false;
  std::uint64_t seed = 42;
  bool seed_given = false;

  auto* ingest = app.add_subcommand("ingest", "Filter raw tweets by keyword phrase and deduplicate");
  ingest->add_option("--input", input, "Raw tweets (JSONL or CSV)")->required();
  ingest->add_option("--format", format, "jsonl or csv (default: by extension)");
  ingest->add_option("--keywords", keywords, "Keyword TSV; without it every tweet passes");
  ingest->add_flag("--no-dedup", no_dedup, "Keep duplicate texts");
  ingest->add_option("--out", out, "Output JSONL")->required();

  std::string klass = "all";
  int tz_offset = 0;
  std::size_t top_k = 20, bin_width = 1;
  auto* stats = app.add_subcommand("stats", "Class weights, length histogram, frequent terms, hourly trend");
  stats->add_option("--corpus", corpus_path, "Labeled corpus")->required();
  stats->add_option("--format", format, "jsonl or csv");
  stats->add_option("--class", klass, "suicidal, non_suicidal or all");
  stats->add_option("--tz-offset", tz_offset, "Minutes added to UTC timestamps");
  stats->add_option("--top-k", top_k, "Terms to list (0: all)");
  stats->add_option("--bin-width", bin_width, "Histogram bin width in words")->check(CLI::PositiveNumber);
  stats->add_option("--stopwords", stopwords_path, "Stop-word list");
  stats->add_option("--out", out, "Output directory (default: print JSON)");

  double fraction = 0.8;
  bool unstratified = false;
  auto* split = app.add_subcommand("split", "Seeded stratified train/test split");
  split->add_option("--corpus", corpus_path, "Labeled corpus")->required();
  split->add_option("--format", format, "jsonl or csv");
  split->add_option("--fraction", fraction, "Train fraction");
  split->add_flag("--unstratified", unstratified, "Split without regard to class");
  split->add_option("--seed", seed, "Permutation seed");
  split->add_option("--out", out, "Output JSON {train, test}");

  std::string family_name, feature_name, embeddings, params_json, grid_path, metric_name = "accuracy";
  int folds = 5;
  std::optional<bool> l2;
  auto* train = app.add_subcommand("train", "Fit one feature scheme and classifier");
  train->add_option("--corpus", corpus_path, "Labeled corpus")->required();
  train->add_option("--format", format, "jsonl or csv");
  train->add_option("--split", split_path, "Split JSON; trains on its train ids");
  train->add_option("--family", family_name, "gnb, svm_rbf, knn, random_forest, gbdt")->required();
  train->add_option("--feature", feature_name, "bow, unigram, ngram23, char, word2vec, fasttext")->required();
  train->add_option("--embeddings", embeddings, "Word vectors for word2vec/fasttext");
  train->add_option("--params", params_json, "Hyperparameters as a JSON object");
  train->add_option("--grid", grid_path, "Tune with this grid JSON via cross-validation");
  train->add_option("--folds", folds, "Cross-validation folds");
  train->add_option("--metric", metric_name, "accuracy, f1 or macro_f1");
  train->add_option("--l2", l2, "Scale vectors to unit length (default: on for svm_rbf/knn)");
  train->add_option("--stopwords", stopwords_path, "Stop-word list");
  train->add_option("--seed", seed, "Seed");
  train->add_option("--out", out, "Model bundle JSON")->required();

  std::string model_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model bundle on labeled tweets");
  evaluate->add_option("--model", model_path, "Model bundle JSON")->required();
  evaluate->add_option("--corpus", corpus_path, "Labeled corpus")->required();
  evaluate->add_option("--format", format, "jsonl or csv");
  evaluate->add_option("--split", split_path, "Split JSON; evaluates on its test ids");
  evaluate->add_option("--stopwords", stopwords_path, "Stop-word list");
  evaluate->add_option("--out", out, "Report JSON (default: stdout)");

  unsigned threads = 0;
  auto* grid = app.add_subcommand("grid", "Run the classifier x feature experiment grid");
  grid->add_option("--config", config_path, "Experiment config JSON")->required();
  auto* grid_seed = grid->add_option("--seed", seed, "Override the master seed");
  grid->add_option("--out", out, "Override the output directory");
  grid->add_option("--threads", threads, "Worker threads (0: all cores)");

  std::string a_path, b_path;
  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label files (id,label CSV)");
  kappa->add_option("--a", a_path, "First annotator")->required();
  kappa->add_option("--b", b_path, "Second annotator")->required();
  kappa->add_option("--out", out, "Output JSON (default: stdout)");

  std::string predictions_path;
  auto* external = app.add_subcommand("score-external", "Score a prediction file against gold labels");
  external->add_option("--predictions", predictions_path, "CSV id,pred[,score]")->required();
  external->add_option("--gold", corpus_path, "Labeled corpus")->required();
  external->add_option("--format", format, "jsonl or csv");
  external->add_option("--split", split_path, "Split JSON; scores against its test ids");
  external->add_option("--out", out, "Report JSON (default: stdout)");
  std::string csv_out;
  external->add_option("--csv", csv_out, "Also write a flat CSV report");

  SyntheticSpec synth_spec = default_synthetic_spec();
  std::string pos_keywords, neg_keywords;
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  synth->add_option("--size", synth_spec.size, "Number of tweets");
  synth->add_option("--balance", synth_spec.balance, "Fraction of suicidal tweets");
  synth->add_option("--misspell", synth_spec.misspelling_rate, "Per-character perturbation rate");
  synth->add_option("--seed", synth_spec.seed, "Seed");
  synth->add_option("--suicidal-keywords", pos_keywords, "One phrase per line");
  synth->add_option("--non-suicidal-keywords", neg_keywords, "One phrase per line");
  synth->add_option("--out", out, "Output JSONL")->required();

  std::string store_dir, guidelines_path, host = "127.0.0.1";
  int port = 8080;
  std::size_t snapshot_every = 100;
  auto* serve = app.add_subcommand("serve-annotation", "Serve the annotation API over HTTP");
  serve->add_option("--corpus", corpus_path, "Tweets to annotate")->required();
  serve->add_option("--format", format, "jsonl or csv");
  serve->add_option("--store", store_dir, "State directory")->required();
  serve->add_option("--guidelines", guidelines_path, "Guideline markdown")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0: ephemeral)");
  serve->add_option("--snapshot-every", snapshot_every, "Decisions between snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  seed_given = grid_seed->count() > 0;

  try {
    if (*ingest) {
      KeywordList list;
      if (!keywords.empty()) list = KeywordList::load(keywords);
      auto loaded = load_tweets(input, format_for(input, format));
      for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
      CollectResult result;
      if (list.empty()) {
        result.counts.loaded = result.counts.matched = loaded.corpus.size();
        result.corpus = no_dedup ? loaded.corpus : dedup(loaded.corpus);
        result.counts.kept = result.corpus.size();
      } else {
        result = collect(loaded.corpus, list, !no_dedup);
      }
      save_tweets_jsonl(result.corpus, out);
      emit({{"loaded", result.counts.loaded},
            {"matched", result.counts.matched},
            {"kept", result.counts.kept},
            {"skipped", loaded.skipped}},
           "");
    } else if (*stats) {
      const auto corpus = read_corpus(corpus_path, format);
      const auto label = parse_class(klass);
      const StopList stops = stopwords_path.empty() ? StopList{} : StopList::load(stopwords_path);
      const auto hist = length_histogram(corpus, label, bin_width);
      const auto terms = term_frequencies(corpus, label, stops, top_k);
      const auto hours = hourly_trend(corpus, label, tz_offset);
      json jterms = json::array();
      for (const auto& [term, count] : terms) jterms.push_back({{"term", term}, {"count", count}});
      json summary = {{"lengths", hist.to_json()}, {"terms", jterms}, {"hours", hours.to_json()}};
      bool labeled = true;
      for (const auto& t : corpus.tweets) labeled = labeled && t.label.has_value();
      if (labeled && !corpus.empty()) summary["class_weights"] = class_weights(corpus).to_json();
      if (out.empty()) {
        emit(summary, "");
      } else {
        const fs::path dir(out);
        write_text_file(dir / "stats.json", summary.dump(2) + "\n");
        write_text_file(dir / "lengths.csv", hist.to_csv());
        write_text_file(dir / "hours.csv", hours.to_csv());
        std::string csv = "term,count\n";
        for (const auto& [term, count] : terms) csv += term + "," + std::to_string(count) + "\n";
        write_text_file(dir / "terms.csv", csv);
      }
    } else if (*split) {
      const auto corpus = read_corpus(corpus_path, format);
      const auto s = stratified_split(corpus, {fraction, seed, !unstratified});
      emit({{"seed", seed}, {"train_fraction", fraction}, {"train", s.train}, {"test", s.test}}, out);
    } else if (*train) {
      const auto family = parse_family(family_name);
      if (!family) throw UsageError("unknown --family " + family_name);
      const auto kind = parse_feature_kind(feature_name);
      if (!kind) throw UsageError("unknown --feature " + feature_name);
      if (is_embedding(*kind) && embeddings.empty()) throw UsageError("--feature " + feature_name + " needs --embeddings");
      Corpus corpus = read_corpus(corpus_path, format);
      if (!split_path.empty()) corpus = restrict(corpus, split_ids(split_path, "train"));
      const StopList stops = stopwords_path.empty() ? StopList{} : StopList::load(stopwords_path);
      const auto docs = prepare_documents(corpus, stops);
      ExperimentConfig defaults;
      const bool normalize = l2.value_or(defaults.normalize_for(*family));
      auto featurizer = Featurizer::fit({*kind, embeddings}, docs, normalize, NgramRange{2, 4});
      Dataset data{featurizer.transform_all(docs), require_labels(corpus)};
      Hyperparameters params;
      if (!params_json.empty()) {
        const json j = json::parse(params_json, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw UsageError("--params must be a JSON object");
        params = Hyperparameters::from_json(*family, j);
      }
      json summary = {{"family", to_string(*family)}, {"feature", to_string(*kind)}, {"rows", data.size()}};
      if (!grid_path.empty()) {
        const auto metric = parse_metric(metric_name);
        if (!metric) throw UsageError("unknown --metric " + metric_name);
        const auto result =
            grid_search(*family, data, HyperGrid::from_json(read_json(grid_path)), folds, *metric, seed);
        params = result.best;
        summary["cv_score"] = result.best_score;
      }
      ModelBundle bundle{std::move(featurizer), fit_classifier(*family, data, params, seed)};
      write_text_file(out, bundle.to_json().dump() + "\n");
      summary["hyperparameters"] = params.to_json(*family);
      emit(summary, "");
    } else if (*evaluate) {
      const auto bundle = ModelBundle::from_json(read_json(model_path));
      Corpus corpus = read_corpus(corpus_path, format);
      if (!split_path.empty()) corpus = restrict(corpus, split_ids(split_path, "test"));
      const StopList stops = stopwords_path.empty() ? StopList{} : StopList::load(stopwords_path);
      const auto docs = prepare_documents(corpus, stops);
      LabelMap predictions;
      std::map<std::string, double> scores;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto x = bundle.featurizer.transform(docs[i]);
        predictions[corpus.tweets[i].id] = bundle.classifier->predict(x);
        scores[corpus.tweets[i].id] = bundle.classifier->score(x);
      }
      const auto report = sidetect::evaluate(std::string(to_string(bundle.classifier->family())) + "/" +
                                                 bundle.featurizer.spec().name(),
                                             predictions, gold_labels(corpus), &scores);
      emit(report.to_json(), out);
    } else if (*grid) {
      auto config = ExperimentConfig::load(config_path);
      if (seed_given) {
        config.seed = seed;
        config.split.seed = seed;
      }
      if (!out.empty()) config.output = out;
      if (threads > 0) config.threads = threads;
      const auto result = run_grid(config);
      std::size_t failed = 0;
      for (const auto& r : result.table.rows) failed += r.ok ? 0 : 1;
      std::cout << report_markdown(result.table);
      for (const auto& p : result.written) std::cerr << "wrote " << p.string() << '\n';
      if (failed == result.table.rows.size()) {
        std::cerr << "error: every cell failed\n";
        return kRunFailure;
      }
    } else if (*kappa) {
      const auto table = contingency(read_label_csv(a_path), read_label_csv(b_path));
      const auto k = cohen_kappa(table);
      emit({{"kappa", k.kappa},
            {"pa", k.observed},
            {"pe", k.expected},
            {"table", {{table.n00, table.n01}, {table.n10, table.n11}}},
            {"overlap", table.total()}},
           out);
    } else if (*external) {
      Corpus corpus = read_corpus(corpus_path, format);
      if (!split_path.empty()) corpus = restrict(corpus, split_ids(split_path, "test"));
      const auto report = score_external(fs::path(predictions_path), gold_labels(corpus));
      emit(report.to_json(), out);
      if (!csv_out.empty()) write_text_file(csv_out, report.to_csv());
    } else if (*synth) {
      if (!pos_keywords.empty()) synth_spec.suicidal_keywords = read_phrases(pos_keywords);
      if (!neg_keywords.empty()) synth_spec.non_suicidal_keywords = read_phrases(neg_keywords);
      const auto corpus = make_synthetic(synth_spec);
      save_tweets_jsonl(corpus, out);
      const auto w = class_weights(corpus);
      emit({{"size", corpus.size()}, {"suicidal", w.suicidal}, {"non_suicidal", w.non_suicidal}}, "");
    } else if (*serve) {
      StoreOptions options;
      options.snapshot_every = snapshot_every;
      AnnotationStore store(read_corpus(corpus_path, format), store_dir, Guidelines::load(guidelines_path), options);
      AnnotationServer server(store);
      const int bound = server.bind(host, port);
      std::cerr << "serving " << store.corpus().size() << " tweets on http://" << host << ":" << bound << '\n';
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
      store.write_snapshot();
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const SvmNotConverged& e) {
    std::cerr << "run failure: " << e.what() << '\n';
    return kRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
