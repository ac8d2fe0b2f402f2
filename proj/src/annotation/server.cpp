#include <httplib.h>
#include <json.hpp>

#include "vcreval/annotation.hpp"
#include "vcreval/error.hpp"

namespace vcreval::annotation {

using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send(res, status, ordered_json{{"error", message}});
}

int status_code(PostStatus s) {
  switch (s) {
    case PostStatus::kAccepted:
      return 200;
    case PostStatus::kInvalidScore:
      return 400;
    case PostStatus::kDuplicate:
      return 409;
    case PostStatus::kUnknownSample:
      return 404;
    case PostStatus::kUnknownTagger:
    case PostStatus::kPhaseClosed:
      return 403;
  }
  return 500;
}

ordered_json stat_json(const Stat& s) {
  ordered_json o;
  o["value"] = s.value ? ordered_json(*s.value) : ordered_json(nullptr);
  if (!s.note.empty()) o["note"] = s.note;
  return o;
}

std::optional<int> parse_phase(const std::string& text) {
  try {
    std::size_t used = 0;
    const int p = std::stoi(text, &used);
    if (used != text.size()) return std::nullopt;
    return p;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  httplib::Server server;
  std::thread thread;

  explicit Impl(AnnotationStore& s) : store(s) { routes(); }

  void routes() {
    server.set_tcp_nodelay(true);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/api/next", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string tagger = req.get_param_value("tagger");
      const auto phase = parse_phase(req.get_param_value("phase"));
      if (tagger.empty() || !phase) return send_error(res, 400, "tagger and phase are required");
      try {
        const NextResult r = store.next_item(tagger, *phase);
        ordered_json o;
        o["done"] = r.done;
        if (!r.done) {
          o["sample_id"] = r.item.sample_id;
          o["image"] = r.item.image;
          o["candidate"] = r.item.candidate;
        }
        o["scored"] = r.scored;
        o["total"] = r.total;
        send(res, 200, o);
      } catch (const AccessError& e) {
        send_error(res, 403, e.what());
      }
    });

    server.Post("/api/score", [this](const httplib::Request& req, httplib::Response& res) {
      ordered_json body;
      std::string sample_id, tagger;
      int phase = 0;
      double score = 0.0;
      try {
        body = ordered_json::parse(req.body);
        sample_id = body.at("sample_id").get<std::string>();
        tagger = body.at("tagger").get<std::string>();
        phase = body.at("phase").get<int>();
        score = body.at("score").get<double>();
      } catch (const ordered_json::exception& e) {
        return send_error(res, 400, std::string("malformed score event: ") + e.what());
      }
      try {
        const PostResult r = store.post_score(sample_id, tagger, phase, score);
        ordered_json o;
        o["status"] = to_string(r.status);
        if (!r.reason.empty()) o["reason"] = r.reason;
        if (r.seq) o["seq"] = r.seq;
        send(res, status_code(r.status), o);
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Post("/api/phase", [this](const httplib::Request& req, httplib::Response& res) {
      int phase = 0;
      try {
        phase = ordered_json::parse(req.body).at("phase").get<int>();
      } catch (const ordered_json::exception& e) {
        return send_error(res, 400, std::string("malformed request: ") + e.what());
      }
      try {
        store.open_phase(phase);
        send(res, 200, ordered_json{{"open_phases", store.progress().open_phases}});
      } catch (const Error& e) {
        send_error(res, 400, e.what());
      }
    });

    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      const Progress p = store.progress();
      ordered_json o;
      o["open_phases"] = p.open_phases;
      o["events"] = p.events;
      o["sessions"] = ordered_json::array();
      for (const auto& s : p.sessions)
        o["sessions"].push_back(ordered_json{
            {"tagger", s.tagger}, {"phase", s.phase}, {"scored", s.scored}, {"total", s.total}});
      send(res, 200, o);
    });

    server.Get("/api/agreement", [this](const httplib::Request&, httplib::Response& res) {
      const LiveAgreement a = store.live_agreement();
      ordered_json o;
      o["taggers"] = ordered_json::array();
      for (const auto& t : a.taggers)
        o["taggers"].push_back(ordered_json{{"tagger", t.tagger},
                                            {"paired", t.paired},
                                            {"tau", stat_json(t.tau)},
                                            {"alpha", stat_json(t.alpha)}});
      o["all_alpha"] = stat_json(a.all_alpha);
      send(res, 200, o);
    });

    server.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 200;
      res.set_content(store.export_jsonl(), "application/x-ndjson");
    });
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store)
    : impl_(std::make_unique<Impl>(store)) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void AnnotationServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vcreval::annotation
