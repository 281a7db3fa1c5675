#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "sidetect/error.hpp"
#include "sidetect/experiment.hpp"

using namespace sidetect;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config(const fs::path& out) {
  return json{{"synthetic", {{"size", 200}, {"balance", 0.25}, {"misspelling_rate", 0.05}, {"seed", 7}}},
              {"families", {"gnb"}},
              {"features", {"unigram"}},
              {"output", out.string()},
              {"seed", 7}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a 1x1 grid yields one scored row") {
  const auto out = fs::temp_directory_path() / "sidetect_exp_1x1";
  fs::remove_all(out);
  const auto config = ExperimentConfig::from_json(small_config(out));
  const auto result = run_grid(config);
  REQUIRE(result.table.rows.size() == 1);
  const auto& r = result.table.rows[0];
  CHECK(r.ok);
  CHECK(r.confusion.total() == 40);
  CHECK(result.table.train_size == 160);
  CHECK(fs::exists(out / "report.md"));
  CHECK(fs::exists(out / "models"));
  fs::remove_all(out);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = fs::temp_directory_path() / "sidetect_exp_a";
  const auto b = fs::temp_directory_path() / "sidetect_exp_b";
  fs::remove_all(a);
  fs::remove_all(b);
  auto ja = small_config(a);
  ja["families"] = {"gnb", "knn", "random_forest"};
  ja["features"] = {"bow", "char"};
  ja["fixed"] = {{"knn", {{"k", 5}}}, {"random_forest", {{"n_estimators", 20}}}};
  ja["threads"] = 3;
  auto jb = ja;
  jb["output"] = b.string();
  jb["threads"] = 1;
  run_grid(ExperimentConfig::from_json(ja));
  run_grid(ExperimentConfig::from_json(jb));
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "report.md") == slurp(b / "report.md"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("no test ids reach any fitting step") {
  const auto out = fs::temp_directory_path() / "sidetect_exp_hygiene";
  fs::remove_all(out);
  auto j = small_config(out);
  j["families"] = {"gnb", "knn"};
  j["features"] = {"unigram", "char"};
  j["tuning"] = {{"mode", "grid"}, {"folds", 3}, {"grid", {{"gnb", {{"var_smoothing", {1e-9, 1e-3}}}}, {"knn", {{"k", {1, 3}}}}}}};
  const auto config = ExperimentConfig::from_json(j);
  const auto corpus = load_experiment_corpus(config);
  const auto split = stratified_split(corpus, config.split);
  const std::set<std::string> test(split.test.begin(), split.test.end());

  std::mutex m;
  std::set<std::string> stages;
  std::size_t leaks = 0;
  ExperimentHooks hooks;
  hooks.on_fit = [&](const std::string&, const std::string& stage, const std::vector<std::string>& ids) {
    std::lock_guard lock(m);
    stages.insert(stage);
    for (const auto& id : ids) leaks += test.contains(id) ? 1 : 0;
  };
  const auto result = run_grid(config, hooks);
  CHECK(leaks == 0);
  CHECK(stages == std::set<std::string>{"grid_search", "model_fit", "vectorizer_fit"});
  for (const auto& r : result.table.rows) {
    CHECK(r.ok);
    CHECK(r.cv_score.has_value());
  }
  fs::remove_all(out);
}

TEST_CASE("a failing cell becomes an annotated row") {
  const auto out = fs::temp_directory_path() / "sidetect_exp_fail";
  fs::remove_all(out);
  auto j = small_config(out);
  j["families"] = {"gnb", "knn"};
  j["fixed"] = {{"knn", {{"k", 100000}}}};
  const auto result = run_grid(ExperimentConfig::from_json(j));
  REQUIRE(result.table.rows.size() == 2);
  CHECK(result.table.rows[0].ok);
  CHECK_FALSE(result.table.rows[1].ok);
  CHECK(result.table.rows[1].error.find("k must be") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"bogus", 1}}), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"families", {"perceptron"}}}), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"features", {"word2vec"}}}), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"tuning", {{"mode", "random"}}}}), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"formats", {"xml"}}}), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"corpus", "/nonexistent/x.jsonl"}}).validate(), DataError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::object()).validate(), DataError);
  auto bad_range = ExperimentConfig::from_json(json{{"synthetic", json::object()}, {"char_range", {3, 2}}});
  CHECK_THROWS_AS(bad_range.validate(), DataError);
  auto one_fold = ExperimentConfig::from_json(json{{"synthetic", json::object()}, {"tuning", {{"mode", "grid"}, {"folds", 1}}}});
  CHECK_THROWS_AS(one_fold.validate(), DataError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), DataError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto c = ExperimentConfig::from_json(json{{"corpus", "data/x.jsonl"}, {"output", "out"}}, "/base/dir");
  CHECK(*c.corpus == fs::path("/base/dir/data/x.jsonl"));
  CHECK(c.output == fs::path("/base/dir/out"));
  CHECK(c.normalize_for(Family::svm_rbf));
  CHECK(c.normalize_for(Family::knn));
  CHECK_FALSE(c.normalize_for(Family::gnb));
}

TEST_CASE("model bundle round trip") {
  auto spec = default_synthetic_spec();
  spec.size = 120;
  const auto corpus = make_synthetic(spec);
  const auto docs = prepare_documents(corpus, StopList{});
  const auto featurizer = Featurizer::fit({FeatureKind::unigram, {}}, docs, true, {2, 4});
  Dataset data;
  data.x = featurizer.transform_all(docs);
  for (const auto& t : corpus.tweets) data.y.push_back(*t.label);
  Hyperparameters hp;
  hp.k = 3;
  ModelBundle bundle{featurizer, fit_classifier(Family::knn, data, hp, 1)};
  const auto reloaded = ModelBundle::from_json(json::parse(bundle.to_json().dump()));
  CHECK(reloaded.featurizer.dimension() == featurizer.dimension());
  for (const auto& d : docs) {
    const auto x = featurizer.transform(d);
    CHECK(reloaded.classifier->score(x) == bundle.classifier->score(x));
    CHECK(reloaded.featurizer.transform(d).entries == x.entries);
  }
}
