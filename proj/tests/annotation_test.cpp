#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "vcreval/annotation.hpp"
#include "vcreval/synthetic.hpp"

namespace an = vcreval::annotation;
namespace c = vcreval::corpus;
namespace fs = std::filesystem;

namespace {

c::Corpus small_corpus(std::size_t n) {
  c::Corpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    c::CaptionSample s;
    s.sample_id = "s" + std::to_string(i);
    s.image_id = "img" + std::to_string(i);
    s.model_id = "ofa";
    s.candidate = "caption " + std::to_string(i);
    s.source = c::kSourceOwn;
    corpus.samples.push_back(s);
  }
  return corpus;
}

an::StoreConfig config(const std::string& dir = "") {
  an::StoreConfig cfg;
  cfg.seed = 5;
  cfg.taggers = {"tagger1", "tagger2"};
  cfg.data_dir = dir;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Scale, FivePoints) {
  for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) EXPECT_TRUE(an::on_scale(v));
  for (double v : {0.6, -0.25, 1.25, 0.1}) EXPECT_FALSE(an::on_scale(v));
}

TEST(Records, EncodeDecode) {
  an::LogRecord r;
  r.seq = 42;
  r.event = {"s1", "tagger1", 2, 0.75, 1700000000000};
  EXPECT_EQ(an::decode_record(an::encode_record(r), 1), r);
  an::LogRecord open;
  open.seq = 43;
  open.kind = an::RecordKind::kOpenPhase;
  open.phase = 2;
  EXPECT_EQ(an::decode_record(an::encode_record(open), 1), open);
  EXPECT_THROW(an::decode_record("{\"seq\":1}", 3), vcreval::ParseError);
}

TEST(Store, NextIsIdempotentAndCoversEverySample) {
  an::AnnotationStore store(small_corpus(30), config());
  const auto first = store.next_item("tagger1", 1);
  EXPECT_EQ(store.next_item("tagger1", 1).item.sample_id, first.item.sample_id);
  std::set<std::string> seen;
  for (int i = 0; i < 30; ++i) {
    const auto n = store.next_item("tagger1", 1);
    ASSERT_FALSE(n.done);
    EXPECT_EQ(n.scored, static_cast<std::size_t>(i));
    EXPECT_TRUE(seen.insert(n.item.sample_id).second);
    EXPECT_EQ(n.item.image, "images/img" + n.item.sample_id.substr(1) + ".jpg");
    EXPECT_EQ(store.post_score(n.item.sample_id, "tagger1", 1, 0.5).status, an::PostStatus::kAccepted);
  }
  const auto done = store.next_item("tagger1", 1);
  EXPECT_TRUE(done.done);
  EXPECT_EQ(done.scored, 30u);
}

TEST(Store, PermutationsDifferByTaggerAndPhase) {
  an::AnnotationStore store(small_corpus(50), config());
  store.open_phase(2);
  const auto a = store.session_order("tagger1", 1);
  EXPECT_NE(a, store.session_order("tagger2", 1));
  EXPECT_NE(a, store.session_order("tagger1", 2));
  an::AnnotationStore again(small_corpus(50), config());
  EXPECT_EQ(a, again.session_order("tagger1", 1));
}

TEST(Store, PostValidation) {
  an::AnnotationStore store(small_corpus(3), config());
  EXPECT_EQ(store.post_score("s0", "tagger1", 1, 0.6).status, an::PostStatus::kInvalidScore);
  const auto ok = store.post_score("s0", "tagger1", 1, 0.75);
  EXPECT_EQ(ok.status, an::PostStatus::kAccepted);
  const auto dup = store.post_score("s0", "tagger1", 1, 0.25);
  EXPECT_EQ(dup.status, an::PostStatus::kDuplicate);
  EXPECT_EQ(dup.seq, ok.seq);
  EXPECT_EQ(store.post_score("nope", "tagger1", 1, 0.5).status, an::PostStatus::kUnknownSample);
  EXPECT_EQ(store.post_score("s0", "mallory", 1, 0.5).status, an::PostStatus::kUnknownTagger);
  EXPECT_EQ(store.post_score("s0", "tagger1", 2, 0.5).status, an::PostStatus::kPhaseClosed);
  EXPECT_THROW(store.next_item("tagger1", 2), an::AccessError);
  EXPECT_THROW(store.open_phase(3), vcreval::Error);

  const auto exported = store.export_corpus();
  ASSERT_EQ(exported.samples[0].raw_scores.size(), 1u);
  EXPECT_EQ(exported.samples[0].raw_scores[0], (c::RawScore{"tagger1", 1, 0.75}));
  EXPECT_EQ(store.events().size(), 1u);
}

TEST(Store, ExportWithoutEventsAndDeterminism) {
  auto corpus = small_corpus(4);
  corpus.samples[0].raw_scores.push_back({"old", 1, 1.0});
  an::AnnotationStore store(corpus, config());
  const auto text = store.export_jsonl();
  EXPECT_EQ(text, store.export_jsonl());
  std::istringstream in(text);
  for (const auto& s : c::read_corpus(in).samples) EXPECT_TRUE(s.raw_scores.empty());
}

TEST(Store, ReplayAfterRestart) {
  const auto dir = fresh_dir("store_replay");
  {
    an::AnnotationStore store(small_corpus(10), config(dir.string()));
    store.post_score("s1", "tagger1", 1, 0.25);
    store.open_phase(2);
    store.post_score("s1", "tagger1", 2, 0.5);
  }
  an::AnnotationStore store(small_corpus(10), config(dir.string()));
  EXPECT_TRUE(store.phase_open(2));
  EXPECT_EQ(store.events().size(), 2u);
  EXPECT_EQ(store.post_score("s1", "tagger1", 2, 0.5).status, an::PostStatus::kDuplicate);
  const auto next = store.post_score("s2", "tagger1", 1, 1.0);
  EXPECT_EQ(next.seq, 4u);
}

TEST(EventLog, TornLastLineIsDropped) {
  const auto dir = fresh_dir("log_torn");
  {
    an::EventLog log(dir.string());
    an::LogRecord r;
    r.seq = 1;
    r.event = {"s0", "tagger1", 1, 0.5, 1};
    log.append(r);
  }
  {
    std::ofstream out(dir / "events.jsonl", std::ios::app);
    out << R"({"seq":2,"kind":"score","sample_id":"s1")";
  }
  an::EventLog log(dir.string());
  const auto records = log.replay();
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].event.sample_id, "s0");
}

TEST(EventLog, CompactionKeepsEveryRecord) {
  const auto dir = fresh_dir("store_compact");
  auto cfg = config(dir.string());
  cfg.compact_every = 4;
  {
    an::AnnotationStore store(small_corpus(10), cfg);
    for (int i = 0; i < 10; ++i) store.post_score("s" + std::to_string(i), "tagger2", 1, 0.75);
  }
  EXPECT_TRUE(fs::exists(dir / "snapshot.jsonl"));
  an::AnnotationStore store(small_corpus(10), cfg);
  EXPECT_EQ(store.events().size(), 10u);
  store.compact();
  EXPECT_EQ(fs::file_size(dir / "events.jsonl"), 0u);
  an::AnnotationStore again(small_corpus(10), cfg);
  EXPECT_EQ(again.export_jsonl(), store.export_jsonl());
}

TEST(LiveAgreement, InsufficientAndPerfect) {
  an::AnnotationStore store(small_corpus(6), config());
  store.post_score("s0", "tagger1", 1, 0.5);
  auto live = store.live_agreement();
  ASSERT_EQ(live.taggers.size(), 2u);
  EXPECT_FALSE(live.taggers[0].tau.value.has_value());
  EXPECT_NE(live.taggers[0].tau.note.find("insufficient data"), std::string::npos);
  EXPECT_FALSE(live.all_alpha.value.has_value());

  store.open_phase(2);
  const std::vector<double> answers{0, 0.25, 0.5, 0.5, 1, 0.75};
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (i > 0) store.post_score("s" + std::to_string(i), "tagger1", 1, answers[i]);
    store.post_score("s" + std::to_string(i), "tagger1", 2, i == 0 ? 0.5 : answers[i]);
  }
  live = store.live_agreement();
  EXPECT_DOUBLE_EQ(*live.taggers[0].tau.value, 1.0);
  EXPECT_DOUBLE_EQ(*live.taggers[0].alpha.value, 1.0);
  EXPECT_EQ(live.taggers[0].paired, 6u);
}

TEST(Server, EndpointsOverHttp) {
  an::AnnotationStore store(small_corpus(5), config());
  an::AnnotationServer server(store);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);
  cli.set_tcp_nodelay(true);

  auto next = cli.Get("/api/next?tagger=tagger1&phase=1");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->status, 200);
  const auto item = nlohmann::json::parse(next->body);
  EXPECT_FALSE(item["done"].get<bool>());
  const std::string id = item["sample_id"];

  auto post = [&](const std::string& sid, double score, int phase = 1) {
    nlohmann::json body{{"sample_id", sid}, {"tagger", "tagger1"}, {"phase", phase}, {"score", score}};
    return cli.Post("/api/score", body.dump(), "application/json");
  };
  EXPECT_EQ(post(id, 0.75)->status, 200);
  EXPECT_EQ(post(id, 0.75)->status, 409);
  EXPECT_EQ(post(id, 0.6)->status, 400);
  EXPECT_EQ(post("missing", 0.5)->status, 404);
  EXPECT_EQ(post(id, 0.5, 2)->status, 403);
  EXPECT_EQ(cli.Post("/api/score", "not json", "application/json")->status, 400);
  EXPECT_EQ(cli.Get("/api/next?tagger=tagger1")->status, 400);
  EXPECT_EQ(cli.Get("/api/next?tagger=eve&phase=1")->status, 403);

  EXPECT_EQ(cli.Post("/api/phase", R"({"phase":2})", "application/json")->status, 200);
  EXPECT_EQ(post(id, 0.5, 2)->status, 200);

  const auto progress = nlohmann::json::parse(cli.Get("/api/progress")->body);
  EXPECT_EQ(progress["events"].get<int>(), 2);
  const auto agreement = cli.Get("/api/agreement");
  EXPECT_EQ(agreement->status, 200);
  const auto exported = cli.Get("/api/export");
  EXPECT_EQ(exported->body, store.export_jsonl());
  EXPECT_EQ(exported->get_header_value("Access-Control-Allow-Origin"), "*");
  server.stop();
}
