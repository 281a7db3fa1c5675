#include "sidetect/annotation.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "sidetect/error.hpp"
#include "sidetect/rng.hpp"

namespace sidetect {

using nlohmann::json;

namespace {

int to_int(Label l) { return static_cast<int>(l); }

Label require_label(long long value) {
  auto label = label_from_int(value);
  if (!label) throw ValidationError("label must be 0 or 1, got " + std::to_string(value));
  return *label;
}

void append_line(std::FILE* f, const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), f) != line.size() || std::fputc('\n', f) == EOF ||
      std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    throw std::runtime_error("failed to persist annotation log record");
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// Cuts a partially written last line so later appends start on a fresh line.
void drop_torn_tail(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.empty() || content.back() == '\n') return;
  const auto keep = content.rfind('\n');
  in.close();
  std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
}

json session_to_json(const AnnotationSession& s) {
  json decisions = json::object();
  for (const auto& [id, label] : s.decisions) decisions[id] = to_int(label);
  return {{"session", s.session_id}, {"annotator", s.annotator_id}, {"guideline_version", s.guideline_version},
          {"seed", s.seed}, {"corpus", s.corpus_fingerprint}, {"decisions", decisions}};
}

}  // namespace

std::string corpus_fingerprint(const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& t : corpus.tweets) ids.push_back(t.id);
  std::sort(ids.begin(), ids.end());
  std::uint64_t h = fnv1a("");
  for (const auto& id : ids) {
    h = fnv1a(id, h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AnnotationSession create_session(std::string session_id, std::string annotator_id, const Corpus& corpus,
                                 std::uint64_t order_seed, std::string guideline_version) {
  if (corpus.empty()) throw DataError("cannot create an annotation session over an empty corpus");
  AnnotationSession s;
  s.session_id = std::move(session_id);
  s.annotator_id = std::move(annotator_id);
  s.guideline_version = std::move(guideline_version);
  s.seed = order_seed;
  s.corpus_fingerprint = corpus_fingerprint(corpus);
  s.queue.reserve(corpus.size());
  for (const auto& t : corpus.tweets) s.queue.push_back(t.id);
  Rng rng(order_seed);
  shuffle(std::span<std::string>(s.queue), rng);
  return s;
}

std::optional<std::string> next_item(const AnnotationSession& session) {
  for (const auto& id : session.queue) {
    if (!session.decisions.contains(id)) return id;
  }
  return std::nullopt;
}

Progress progress(const AnnotationSession& session) { return {session.decisions.size(), session.queue.size()}; }

Progress submit_label(AnnotationSession& session, const std::string& tweet_id, long long label, bool revise) {
  const Label value = require_label(label);
  if (std::find(session.queue.begin(), session.queue.end(), tweet_id) == session.queue.end()) {
    throw NotFoundError("tweet '" + tweet_id + "' is not in session '" + session.session_id + "'");
  }
  const bool decided = session.decisions.contains(tweet_id);
  if (decided && !revise) throw ConflictError("tweet '" + tweet_id + "' already labeled; use revise");
  if (!decided && revise) throw ConflictError("tweet '" + tweet_id + "' has no label to revise");
  session.decisions[tweet_id] = value;
  return progress(session);
}

LiveKappa live_kappa(const AnnotationSession& a, const AnnotationSession& b) {
  if (a.corpus_fingerprint != b.corpus_fingerprint) {
    throw DataError("sessions '" + a.session_id + "' and '" + b.session_id + "' cover different corpora");
  }
  LiveKappa out;
  for (const auto& [id, label] : a.decisions) out.overlap += b.decisions.contains(id) ? 1 : 0;
  if (out.overlap < 2) return out;
  out.table = contingency(a.decisions, b.decisions);
  try {
    out.result = cohen_kappa(out.table);
  } catch (const DegenerateAgreement&) {
    out.status = LiveKappa::Status::insufficient_variation;
    return out;
  }
  out.status = LiveKappa::Status::ok;
  return out;
}

std::optional<MergePolicy> parse_merge_policy(std::string_view name) {
  if (name == "require_agreement") return MergePolicy::require_agreement;
  if (name == "adjudicate_list") return MergePolicy::adjudicate_list;
  return std::nullopt;
}

GoldLabels merge_annotations(const AnnotationSession& a, const AnnotationSession& b, MergePolicy policy) {
  if (a.corpus_fingerprint != b.corpus_fingerprint) {
    throw DataError("sessions '" + a.session_id + "' and '" + b.session_id + "' cover different corpora");
  }
  std::vector<std::string> missing;
  for (const auto* s : {&a, &b}) {
    for (const auto& id : s->queue) {
      if (!s->decisions.contains(id)) missing.push_back(s->session_id + ":" + id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "incomplete sessions, missing decisions for:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }
  GoldLabels gold;
  // Queue order of session a keeps the log deterministic.
  for (const auto& id : a.queue) {
    const Label la = a.decisions.at(id);
    const Label lb = b.decisions.at(id);
    if (la == lb) {
      gold.labels[id] = la;
      gold.resolution_log.push_back({id, la, lb, "agreed"});
    } else if (policy == MergePolicy::require_agreement) {
      gold.resolution_log.push_back({id, la, lb, "excluded"});
    } else {
      gold.resolution_log.push_back({id, la, lb, "adjudicate"});
      gold.adjudication.push_back(id);
    }
  }
  return gold;
}

Guidelines Guidelines::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open guidelines: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return {path.stem().string(), ss.str()};
}

std::string to_json_line(const DecisionRecord& r) {
  return json{{"ts", r.ts}, {"session", r.session}, {"tweet", r.tweet}, {"label", to_int(r.label)},
              {"revised", r.revised}}
      .dump();
}

std::optional<DecisionRecord> parse_decision_record(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    DecisionRecord r;
    r.ts = j.at("ts").get<std::string>();
    r.session = j.at("session").get<std::string>();
    r.tweet = j.at("tweet").get<std::string>();
    auto label = label_from_int(j.at("label").get<long long>());
    if (!label) return std::nullopt;
    r.label = *label;
    r.revised = j.at("revised").get<bool>();
    return r;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

AnnotationStore::AnnotationStore(Corpus corpus, std::filesystem::path dir, Guidelines guidelines,
                                 StoreOptions options)
    : corpus_(std::move(corpus)),
      dir_(std::move(dir)),
      guidelines_(std::move(guidelines)),
      options_(std::move(options)),
      fingerprint_(corpus_fingerprint(corpus_)) {
  if (corpus_.empty()) throw DataError("annotation store needs a non-empty corpus");
  std::filesystem::create_directories(dir_);
  recover();
  session_log_.reset(std::fopen((dir_ / "sessions.jsonl").c_str(), "ab"));
  decision_log_.reset(std::fopen((dir_ / "decisions.jsonl").c_str(), "ab"));
  if (!session_log_ || !decision_log_) throw DataError("cannot open annotation logs in " + dir_.string());
}

AnnotationStore::~AnnotationStore() = default;

std::string AnnotationStore::now() const {
  if (options_.clock) return options_.clock();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
  return format_rfc3339(secs);
}

void AnnotationStore::recover() {
  drop_torn_tail(dir_ / "sessions.jsonl");
  drop_torn_tail(dir_ / "decisions.jsonl");
  std::size_t covered = 0;
  if (const auto snap_path = dir_ / "snapshot.json"; std::filesystem::exists(snap_path)) {
    std::ifstream in(snap_path);
    const json snap = json::parse(in, nullptr, false);
    if (snap.is_discarded()) throw DataError("corrupt snapshot: " + snap_path.string());
    if (snap.at("corpus").get<std::string>() != fingerprint_) {
      throw DataError("snapshot in " + dir_.string() + " belongs to a different corpus");
    }
    covered = snap.at("log_records").get<std::size_t>();
    for (const auto& js : snap.at("sessions")) {
      auto s = sidetect::create_session(js.at("session").get<std::string>(), js.at("annotator").get<std::string>(), corpus_,
                              js.at("seed").get<std::uint64_t>(), js.at("guideline_version").get<std::string>());
      for (const auto& [id, label] : js.at("decisions").items()) {
        s.decisions[id] = require_label(label.get<long long>());
      }
      sessions_.emplace(s.session_id, std::move(s));
    }
  }
  for (const auto& line : read_lines(dir_ / "sessions.jsonl")) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // torn trailing write
    const auto id = j.at("session").get<std::string>();
    if (sessions_.contains(id)) continue;
    if (j.at("corpus").get<std::string>() != fingerprint_) {
      throw DataError("session log in " + dir_.string() + " belongs to a different corpus");
    }
    sessions_.emplace(id, sidetect::create_session(id, j.at("annotator").get<std::string>(), corpus_,
                                         j.at("seed").get<std::uint64_t>(),
                                         j.at("guideline_version").get<std::string>()));
  }
  const auto lines = read_lines(dir_ / "decisions.jsonl");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto record = parse_decision_record(lines[i]);
    if (!record) continue;
    ++log_records_;
    if (log_records_ <= covered) continue;
    auto it = sessions_.find(record->session);
    if (it == sessions_.end()) throw DataError("decision log references unknown session " + record->session);
    it->second.decisions[record->tweet] = record->label;
  }
}

AnnotationSession AnnotationStore::create_session(const std::string& annotator_id, std::uint64_t order_seed) {
  if (annotator_id.empty()) throw ValidationError("annotator_id must be non-empty");
  std::unique_lock lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04zu", sessions_.size() + 1);
  auto s = sidetect::create_session(buf, annotator_id, corpus_, order_seed, guidelines_.version);
  append_line(session_log_.get(), json{{"ts", now()},
                                       {"session", s.session_id},
                                       {"annotator", s.annotator_id},
                                       {"seed", s.seed},
                                       {"guideline_version", s.guideline_version},
                                       {"corpus", s.corpus_fingerprint}}
                                      .dump());
  sessions_.emplace(s.session_id, s);
  return s;
}

const AnnotationSession& AnnotationStore::find(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  return it->second;
}

AnnotationStore::NextItem AnnotationStore::next(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  const auto& s = find(session_id);
  NextItem item;
  item.progress = progress(s);
  if (auto id = next_item(s)) item.tweet = *corpus_.find(*id);
  return item;
}

Progress AnnotationStore::record(const std::string& session_id, const std::string& tweet_id, long long label,
                                 bool revise) {
  std::unique_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  // Validate on a copy so a failed write leaves state untouched.
  AnnotationSession updated = it->second;
  const Progress p = submit_label(updated, tweet_id, label, revise);
  append_line(decision_log_.get(),
              to_json_line({now(), session_id, tweet_id, updated.decisions.at(tweet_id), revise}));
  it->second.decisions = std::move(updated.decisions);
  ++log_records_;
  if (options_.snapshot_every > 0 && ++since_snapshot_ >= options_.snapshot_every) write_snapshot_locked();
  return p;
}

Progress AnnotationStore::submit(const std::string& session_id, const std::string& tweet_id, long long label) {
  return record(session_id, tweet_id, label, false);
}

Progress AnnotationStore::revise(const std::string& session_id, const std::string& tweet_id, long long label) {
  return record(session_id, tweet_id, label, true);
}

LiveKappa AnnotationStore::agreement(const std::string& a, const std::string& b) const {
  std::shared_lock lock(mutex_);
  return live_kappa(find(a), find(b));
}

GoldLabels AnnotationStore::merge(const std::string& a, const std::string& b, MergePolicy policy) const {
  std::shared_lock lock(mutex_);
  return merge_annotations(find(a), find(b), policy);
}

AnnotationSession AnnotationStore::session(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  return find(session_id);
}

std::vector<std::string> AnnotationStore::session_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t AnnotationStore::log_size() const {
  std::shared_lock lock(mutex_);
  return log_records_;
}

void AnnotationStore::write_snapshot() {
  std::unique_lock lock(mutex_);
  write_snapshot_locked();
}

void AnnotationStore::write_snapshot_locked() {
  json sessions = json::array();
  for (const auto& [id, s] : sessions_) sessions.push_back(session_to_json(s));
  const json snap{{"corpus", fingerprint_}, {"log_records", log_records_}, {"sessions", sessions}};
  const auto tmp = dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snap.dump();
    if (!out) throw std::runtime_error("failed to write snapshot");
  }
  std::filesystem::rename(tmp, dir_ / "snapshot.json");
  since_snapshot_ = 0;
}

}  // namespace sidetect
