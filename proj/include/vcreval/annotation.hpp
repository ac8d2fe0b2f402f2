#pragma once

// Human tagging service: seeded presentation order per (tagger, phase),
// exactly-once 5-point scores persisted to an append-only log before they
// are acknowledged, export to the corpus format, and live agreement.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vcreval/agreement.hpp"
#include "vcreval/corpus.hpp"
#include "vcreval/error.hpp"

namespace vcreval::annotation {

// 1 "no error or lack of information" ... 0 "does not correspond"
bool on_scale(double score);

struct ScoreEvent {
  std::string sample_id;
  std::string tagger;
  int phase = 1;
  double score = 0.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const ScoreEvent&, const ScoreEvent&) = default;
};

enum class RecordKind { kScore, kOpenPhase };

struct LogRecord {
  std::uint64_t seq = 0;
  RecordKind kind = RecordKind::kScore;
  ScoreEvent event;  // kScore
  int phase = 0;     // kOpenPhase

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

std::string encode_record(const LogRecord& record);
LogRecord decode_record(const std::string& line, std::size_t lineno);

// events.jsonl (append stream) and snapshot.jsonl (compacted prefix) in one
// directory. append() returns only after the bytes reach stable storage.
class EventLog {
 public:
  explicit EventLog(std::string dir);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  // Snapshot records followed by log records not already in the snapshot.
  // A torn final log line (no trailing newline) is discarded.
  std::vector<LogRecord> replay() const;
  void append(const LogRecord& record);
  // Writes every record to a fresh snapshot, then empties the log.
  void compact(const std::vector<LogRecord>& records);

  const std::string& dir() const noexcept { return dir_; }
  std::string log_path() const;
  std::string snapshot_path() const;

 private:
  void open_log();

  std::string dir_;
  int fd_ = -1;
};

struct StoreConfig {
  std::uint64_t seed = 0;
  std::vector<std::string> taggers;  // registered tagger ids
  std::string data_dir;              // empty: in memory only
  std::string image_prefix = "images/";
  std::string image_suffix = ".jpg";
  int max_phase = 2;
  std::size_t compact_every = 0;  // records between automatic compactions, 0 = never
  agreement::Level level = agreement::Level::kInterval;
};

struct Item {
  std::string sample_id;
  std::string image;  // locator the UI resolves
  std::string candidate;
};

struct NextResult {
  bool done = false;
  Item item;
  std::size_t scored = 0;
  std::size_t total = 0;
};

enum class PostStatus {
  kAccepted,
  kInvalidScore,
  kDuplicate,
  kUnknownSample,
  kUnknownTagger,
  kPhaseClosed
};

std::string to_string(PostStatus status);

struct PostResult {
  PostStatus status = PostStatus::kAccepted;
  std::string reason;
  std::uint64_t seq = 0;
};

// Unknown tagger or a phase that has not been opened.
class AccessError : public Error {
 public:
  using Error::Error;
};

struct SessionProgress {
  std::string tagger;
  int phase = 1;
  std::size_t scored = 0;
  std::size_t total = 0;
};

struct Progress {
  std::vector<int> open_phases;
  std::vector<SessionProgress> sessions;  // every tagger x open phase
  std::size_t events = 0;
};

// A statistic, or the reason it cannot be computed yet.
struct Stat {
  std::optional<double> value;
  std::string note;
};

struct TaggerAgreement {
  std::string tagger;
  std::size_t paired = 0;  // samples scored in both phases
  Stat tau;                // Kendall tau-b, phase 1 vs phase 2
  Stat alpha;              // Krippendorff alpha over the two phases
};

struct LiveAgreement {
  std::vector<TaggerAgreement> taggers;
  Stat all_alpha;  // units = samples, raters = every (tagger, phase)
};

// The statistics live_agreement reports, computed from corpus raw scores.
LiveAgreement agreement_from_corpus(const corpus::Corpus& corpus,
                                    const std::vector<std::string>& taggers, int phase_a,
                                    int phase_b, agreement::Level level);

class AnnotationStore {
 public:
  // Existing raw scores in `samples` are ignored; the log is the record.
  AnnotationStore(corpus::Corpus samples, StoreConfig config);

  NextResult next_item(const std::string& tagger, int phase);
  PostResult post_score(const std::string& sample_id, const std::string& tagger, int phase,
                        double score);
  void open_phase(int phase);
  bool phase_open(int phase) const;

  Progress progress() const;
  LiveAgreement live_agreement() const;
  corpus::Corpus export_corpus() const;
  std::string export_jsonl() const;
  std::vector<ScoreEvent> events() const;

  // Sample ids in presentation order; depends only on (seed, tagger, phase).
  std::vector<std::string> session_order(const std::string& tagger, int phase) const;

  void compact();

 private:
  struct Session {
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };

  void check_access(const std::string& tagger, int phase) const;
  void apply(const LogRecord& record);
  void persist(LogRecord& record);
  Session& session(const std::string& tagger, int phase);
  std::vector<std::size_t> permutation(const std::string& tagger, int phase) const;
  corpus::Corpus export_locked() const;

  mutable std::mutex mu_;
  corpus::Corpus samples_;
  StoreConfig config_;
  std::map<std::string, std::size_t> index_;
  std::vector<LogRecord> records_;
  std::map<std::string, std::map<std::pair<std::string, int>, std::size_t>> scored_;  // sample -> (tagger, phase) -> record
  std::vector<int> open_phases_{1};
  std::map<std::pair<std::string, int>, Session> sessions_;
  std::unique_ptr<EventLog> log_;
  std::uint64_t next_seq_ = 1;
  std::size_t since_compact_ = 0;
};

// HTTP front end: GET /api/next, POST /api/score, GET /api/progress,
// GET /api/agreement, GET /api/export, and POST /api/phase for operators.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationStore& store);
  ~AnnotationServer();

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vcreval::annotation
