#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "vcreval/annotation.hpp"
#include "vcreval/error.hpp"
#include "vcreval/random.hpp"

namespace vcreval::annotation {

bool on_scale(double score) {
  return score == 0.0 || score == 0.25 || score == 0.5 || score == 0.75 || score == 1.0;
}

std::string to_string(PostStatus status) {
  switch (status) {
    case PostStatus::kAccepted:
      return "accepted";
    case PostStatus::kInvalidScore:
      return "invalid_score";
    case PostStatus::kDuplicate:
      return "duplicate";
    case PostStatus::kUnknownSample:
      return "unknown_sample";
    case PostStatus::kUnknownTagger:
      return "unknown_tagger";
    case PostStatus::kPhaseClosed:
      return "phase_closed";
  }
  return "accepted";
}

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

template <typename F>
Stat guarded(F&& compute) {
  Stat s;
  try {
    s.value = compute();
  } catch (const DegenerateError& e) {
    s.note = std::string("undefined: ") + e.what();
  } catch (const Error& e) {
    s.note = std::string("insufficient data: ") + e.what();
  }
  return s;
}

}  // namespace

LiveAgreement agreement_from_corpus(const corpus::Corpus& corpus,
                                    const std::vector<std::string>& taggers, int phase_a,
                                    int phase_b, agreement::Level level) {
  auto score_of = [](const corpus::CaptionSample& s, const std::string& tagger,
                     int phase) -> std::optional<double> {
    for (const auto& r : s.raw_scores)
      if (r.tagger == tagger && r.phase == phase) return r.score;
    return std::nullopt;
  };

  LiveAgreement out;
  for (const auto& tagger : taggers) {
    TaggerAgreement t;
    t.tagger = tagger;
    std::vector<double> x, y;
    agreement::RatingMatrix m;
    m.level = level;
    for (const auto& s : corpus.samples) {
      auto a = score_of(s, tagger, phase_a);
      auto b = score_of(s, tagger, phase_b);
      if (!a || !b) continue;
      x.push_back(*a);
      y.push_back(*b);
      m.cells.push_back({a, b});
    }
    t.paired = x.size();
    if (x.size() < 2) {
      const std::string note =
          "insufficient data: " + std::to_string(x.size()) + " sample(s) scored in both phases";
      t.tau.note = note;
      t.alpha.note = note;
    } else {
      t.tau = guarded([&] { return agreement::kendall_tau(x, y, agreement::TauVariant::kB); });
      t.alpha = guarded([&] { return agreement::krippendorff_alpha(m); });
    }
    out.taggers.push_back(std::move(t));
  }

  agreement::RatingMatrix all;
  all.level = level;
  for (const auto& s : corpus.samples) {
    std::vector<std::optional<double>> row;
    for (const auto& tagger : taggers)
      for (int phase : {phase_a, phase_b}) row.push_back(score_of(s, tagger, phase));
    all.cells.push_back(std::move(row));
  }
  out.all_alpha = guarded([&] { return agreement::krippendorff_alpha(all); });
  return out;
}

AnnotationStore::AnnotationStore(corpus::Corpus samples, StoreConfig config)
    : samples_(std::move(samples)), config_(std::move(config)) {
  if (config_.taggers.empty()) throw Error("no taggers registered");
  if (config_.max_phase < 1) throw Error("max_phase must be at least 1");
  for (std::size_t i = 0; i < samples_.samples.size(); ++i) {
    samples_.samples[i].raw_scores.clear();
    if (!index_.emplace(samples_.samples[i].sample_id, i).second)
      throw DuplicateIdError(samples_.samples[i].sample_id);
  }
  if (!config_.data_dir.empty()) {
    log_ = std::make_unique<EventLog>(config_.data_dir);
    for (const auto& r : log_->replay()) {
      if (r.kind == RecordKind::kScore) {
        const auto& e = r.event;
        if (!index_.count(e.sample_id))
          throw ParseError("log names unknown sample '" + e.sample_id + "'", 0);
        if (scored_[e.sample_id].count({e.tagger, e.phase}))
          throw ParseError("log holds two scores for '" + e.sample_id + "' by '" + e.tagger + "'",
                           0);
      }
      apply(r);
      next_seq_ = r.seq + 1;
    }
  }
}

void AnnotationStore::apply(const LogRecord& r) {
  if (r.kind == RecordKind::kOpenPhase) {
    if (std::find(open_phases_.begin(), open_phases_.end(), r.phase) == open_phases_.end()) {
      open_phases_.push_back(r.phase);
      std::sort(open_phases_.begin(), open_phases_.end());
    }
  } else {
    scored_[r.event.sample_id][{r.event.tagger, r.event.phase}] = records_.size();
  }
  records_.push_back(r);
}

void AnnotationStore::persist(LogRecord& r) {
  r.seq = next_seq_;
  if (log_) log_->append(r);  // durable before the caller sees success
  ++next_seq_;
  apply(r);
  if (log_ && config_.compact_every > 0 && ++since_compact_ >= config_.compact_every) {
    log_->compact(records_);
    since_compact_ = 0;
  }
}

void AnnotationStore::check_access(const std::string& tagger, int phase) const {
  if (std::find(config_.taggers.begin(), config_.taggers.end(), tagger) == config_.taggers.end())
    throw AccessError("unknown tagger '" + tagger + "'");
  if (std::find(open_phases_.begin(), open_phases_.end(), phase) == open_phases_.end())
    throw AccessError("phase " + std::to_string(phase) + " is not open");
}

std::vector<std::size_t> AnnotationStore::permutation(const std::string& tagger, int phase) const {
  std::vector<std::size_t> order(samples_.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(mix_seed(config_.seed, fnv1a64(tagger)), static_cast<std::uint64_t>(phase)));
  shuffle(std::span<std::size_t>(order), rng);
  return order;
}

AnnotationStore::Session& AnnotationStore::session(const std::string& tagger, int phase) {
  auto [it, fresh] = sessions_.try_emplace({tagger, phase});
  if (fresh) it->second.order = permutation(tagger, phase);
  return it->second;
}

std::vector<std::string> AnnotationStore::session_order(const std::string& tagger,
                                                        int phase) const {
  std::vector<std::string> ids;
  for (std::size_t i : permutation(tagger, phase)) ids.push_back(samples_.samples[i].sample_id);
  return ids;
}

NextResult AnnotationStore::next_item(const std::string& tagger, int phase) {
  std::lock_guard lock(mu_);
  check_access(tagger, phase);
  Session& s = session(tagger, phase);
  auto is_scored = [&](std::size_t idx) {
    auto it = scored_.find(samples_.samples[idx].sample_id);
    return it != scored_.end() && it->second.count({tagger, phase}) > 0;
  };
  while (s.cursor < s.order.size() && is_scored(s.order[s.cursor])) ++s.cursor;

  NextResult r;
  r.total = s.order.size();
  for (std::size_t idx : s.order) r.scored += is_scored(idx) ? 1 : 0;
  if (s.cursor == s.order.size()) {
    r.done = true;
    return r;
  }
  const auto& sample = samples_.samples[s.order[s.cursor]];
  r.item = {sample.sample_id, config_.image_prefix + sample.image_id + config_.image_suffix,
            sample.candidate};
  return r;
}

PostResult AnnotationStore::post_score(const std::string& sample_id, const std::string& tagger,
                                       int phase, double score) {
  std::lock_guard lock(mu_);
  PostResult r;
  try {
    check_access(tagger, phase);
  } catch (const AccessError& e) {
    const bool tagger_known = std::find(config_.taggers.begin(), config_.taggers.end(), tagger) !=
                              config_.taggers.end();
    r.status = tagger_known ? PostStatus::kPhaseClosed : PostStatus::kUnknownTagger;
    r.reason = e.what();
    return r;
  }
  if (!index_.count(sample_id)) {
    r.status = PostStatus::kUnknownSample;
    r.reason = "unknown sample '" + sample_id + "'";
    return r;
  }
  if (!on_scale(score)) {
    std::ostringstream msg;
    msg << "score " << score << " is not one of 0, 0.25, 0.5, 0.75, 1";
    r.status = PostStatus::kInvalidScore;
    r.reason = msg.str();
    return r;
  }
  auto it = scored_.find(sample_id);
  if (it != scored_.end()) {
    auto prev = it->second.find({tagger, phase});
    if (prev != it->second.end()) {
      r.status = PostStatus::kDuplicate;
      r.reason = "already scored by '" + tagger + "' in phase " + std::to_string(phase);
      r.seq = records_[prev->second].seq;
      return r;
    }
  }
  LogRecord rec;
  rec.kind = RecordKind::kScore;
  rec.event = {sample_id, tagger, phase, score, now_ms()};
  persist(rec);
  r.seq = rec.seq;
  return r;
}

void AnnotationStore::open_phase(int phase) {
  std::lock_guard lock(mu_);
  if (phase < 1 || phase > config_.max_phase)
    throw Error("phase " + std::to_string(phase) + " outside 1.." +
                std::to_string(config_.max_phase));
  if (std::find(open_phases_.begin(), open_phases_.end(), phase) != open_phases_.end()) return;
  LogRecord rec;
  rec.kind = RecordKind::kOpenPhase;
  rec.phase = phase;
  persist(rec);
}

bool AnnotationStore::phase_open(int phase) const {
  std::lock_guard lock(mu_);
  return std::find(open_phases_.begin(), open_phases_.end(), phase) != open_phases_.end();
}

Progress AnnotationStore::progress() const {
  std::lock_guard lock(mu_);
  Progress p;
  p.open_phases = open_phases_;
  for (const auto& tagger : config_.taggers)
    for (int phase : open_phases_) {
      SessionProgress s{tagger, phase, 0, samples_.samples.size()};
      for (const auto& [sample, by] : scored_) s.scored += by.count({tagger, phase});
      p.sessions.push_back(s);
    }
  for (const auto& r : records_) p.events += r.kind == RecordKind::kScore ? 1 : 0;
  return p;
}

corpus::Corpus AnnotationStore::export_locked() const {
  corpus::Corpus out = samples_;
  for (auto& s : out.samples) {
    auto it = scored_.find(s.sample_id);
    if (it == scored_.end()) continue;
    // map order: tagger, then phase
    for (const auto& [key, idx] : it->second) {
      const auto& e = records_[idx].event;
      s.raw_scores.push_back({e.tagger, e.phase, e.score});
    }
  }
  return out;
}

corpus::Corpus AnnotationStore::export_corpus() const {
  std::lock_guard lock(mu_);
  return export_locked();
}

std::string AnnotationStore::export_jsonl() const {
  std::ostringstream out;
  corpus::write_corpus(out, export_corpus());
  return out.str();
}

std::vector<ScoreEvent> AnnotationStore::events() const {
  std::lock_guard lock(mu_);
  std::vector<ScoreEvent> out;
  for (const auto& r : records_)
    if (r.kind == RecordKind::kScore) out.push_back(r.event);
  return out;
}

LiveAgreement AnnotationStore::live_agreement() const {
  const corpus::Corpus snapshot = export_corpus();
  return agreement_from_corpus(snapshot, config_.taggers, 1, 2, config_.level);
}

void AnnotationStore::compact() {
  std::lock_guard lock(mu_);
  if (log_) log_->compact(records_);
  since_compact_ = 0;
}

}  // namespace vcreval::annotation
