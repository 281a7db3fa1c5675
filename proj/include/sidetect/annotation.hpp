#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sidetect/agreement.hpp"
#include "sidetect/ingest.hpp"

namespace sidetect {

struct AnnotationSession {
  std::string session_id;
  std::string annotator_id;
  std::string guideline_version;
  std::uint64_t seed = 0;
  std::string corpus_fingerprint;
  std::vector<std::string> queue;
  std::map<std::string, Label> decisions;

  bool operator==(const AnnotationSession&) const = default;
};

struct Progress {
  std::size_t decided = 0;
  std::size_t total = 0;

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(decided) / static_cast<double>(total); }
};

std::string corpus_fingerprint(const Corpus& corpus);

// Queue is a seed-deterministic permutation of the corpus ids. Throws
// DataError on an empty corpus.
AnnotationSession create_session(std::string session_id, std::string annotator_id, const Corpus& corpus,
                                 std::uint64_t order_seed, std::string guideline_version = "v1");

// First queued id without a decision; nullopt once everything is decided.
std::optional<std::string> next_item(const AnnotationSession& session);

Progress progress(const AnnotationSession& session);

// Throws ValidationError for a label outside {0,1}, NotFoundError for an id
// not in the queue, ConflictError for a second submission without revise
// (and for a revise of an undecided item).
Progress submit_label(AnnotationSession& session, const std::string& tweet_id, long long label, bool revise = false);

struct LiveKappa {
  enum class Status { ok, insufficient_overlap, insufficient_variation };
  Status status = Status::insufficient_overlap;
  std::size_t overlap = 0;
  AgreementTable table;
  KappaResult result;
};

// Kappa over the ids both annotators have decided. Throws DataError when the
// sessions were built over different corpora.
LiveKappa live_kappa(const AnnotationSession& a, const AnnotationSession& b);

enum class MergePolicy { require_agreement, adjudicate_list };

std::optional<MergePolicy> parse_merge_policy(std::string_view name);

struct Resolution {
  std::string tweet_id;
  Label label_a;
  Label label_b;
  std::string resolution;  // "agreed", "excluded" or "adjudicate"
};

struct GoldLabels {
  LabelMap labels;
  std::vector<Resolution> resolution_log;
  std::vector<std::string> adjudication;
};

// Both sessions must be complete; otherwise throws DataError listing the
// missing ids.
GoldLabels merge_annotations(const AnnotationSession& a, const AnnotationSession& b, MergePolicy policy);

struct Guidelines {
  std::string version;
  std::string text;

  // Version defaults to the file stem ("v1.md" -> "v1").
  static Guidelines load(const std::filesystem::path& path);
};

// Record appended for every accepted decision.
struct DecisionRecord {
  std::string ts;
  std::string session;
  std::string tweet;
  Label label;
  bool revised = false;
};

std::string to_json_line(const DecisionRecord& record);
std::optional<DecisionRecord> parse_decision_record(std::string_view line);

struct StoreOptions {
  std::size_t snapshot_every = 100;
  std::function<std::string()> clock;  // RFC 3339 now; system clock when empty
};

// Sessions over one corpus, persisted under `dir` as
//   sessions.jsonl   one record per created session
//   decisions.jsonl  append-only decision log, fsync'd before acknowledging
//   snapshot.json    periodic full state plus the number of log records it covers
// Reopening a directory replays snapshot + log tail. Mutations are
// serialized; reads take a shared lock and see a consistent state.
class AnnotationStore {
 public:
  AnnotationStore(Corpus corpus, std::filesystem::path dir, Guidelines guidelines, StoreOptions options = {});
  ~AnnotationStore();

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  AnnotationSession create_session(const std::string& annotator_id, std::uint64_t order_seed);

  struct NextItem {
    std::optional<Tweet> tweet;  // empty when done
    Progress progress;
  };
  NextItem next(const std::string& session_id) const;

  Progress submit(const std::string& session_id, const std::string& tweet_id, long long label);
  Progress revise(const std::string& session_id, const std::string& tweet_id, long long label);

  LiveKappa agreement(const std::string& a, const std::string& b) const;
  GoldLabels merge(const std::string& a, const std::string& b, MergePolicy policy) const;

  AnnotationSession session(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  const Guidelines& guidelines() const { return guidelines_; }
  const Corpus& corpus() const { return corpus_; }
  std::size_t log_size() const;

  void write_snapshot();

 private:
  const AnnotationSession& find(const std::string& session_id) const;
  Progress record(const std::string& session_id, const std::string& tweet_id, long long label, bool revise);
  void recover();
  void write_snapshot_locked();
  std::string now() const;

  Corpus corpus_;
  std::filesystem::path dir_;
  Guidelines guidelines_;
  StoreOptions options_;
  std::string fingerprint_;
  std::map<std::string, AnnotationSession> sessions_;
  std::size_t log_records_ = 0;
  std::size_t since_snapshot_ = 0;
  mutable std::shared_mutex mutex_;
  struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };
  std::unique_ptr<std::FILE, FileCloser> session_log_;
  std::unique_ptr<std::FILE, FileCloser> decision_log_;
};

}  // namespace sidetect
