#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "vcreval/annotation.hpp"
#include "vcreval/error.hpp"

namespace vcreval::annotation {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void sys_fail(const std::string& what, const std::string& path) {
  throw Error(what + " '" + path + "': " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const std::string& path) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("write to", path);
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

void sync_dir(const std::string& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) sys_fail("open directory", dir);
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) sys_fail("fsync directory", dir);
}

// Lines of a file; `torn` reports a final line without a newline.
std::vector<std::string> read_lines(const std::string& path, bool& torn) {
  torn = false;
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t start = 0;
  while (start < content.size()) {
    const std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) {
      torn = true;
      lines.push_back(content.substr(start));
      break;
    }
    lines.push_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string encode_record(const LogRecord& r) {
  ordered_json o;
  o["seq"] = r.seq;
  if (r.kind == RecordKind::kScore) {
    o["type"] = "score";
    o["sample_id"] = r.event.sample_id;
    o["tagger"] = r.event.tagger;
    o["phase"] = r.event.phase;
    o["score"] = r.event.score;
    o["ts"] = r.event.timestamp_ms;
  } else {
    o["type"] = "open_phase";
    o["phase"] = r.phase;
  }
  return o.dump();
}

LogRecord decode_record(const std::string& line, std::size_t lineno) {
  try {
    const json o = json::parse(line);
    LogRecord r;
    r.seq = o.at("seq").get<std::uint64_t>();
    const std::string type = o.at("type").get<std::string>();
    if (type == "score") {
      r.kind = RecordKind::kScore;
      r.event.sample_id = o.at("sample_id").get<std::string>();
      r.event.tagger = o.at("tagger").get<std::string>();
      r.event.phase = o.at("phase").get<int>();
      r.event.score = o.at("score").get<double>();
      r.event.timestamp_ms = o.at("ts").get<std::int64_t>();
    } else if (type == "open_phase") {
      r.kind = RecordKind::kOpenPhase;
      r.phase = o.at("phase").get<int>();
    } else {
      throw ParseError("unknown record type '" + type + "'", lineno);
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad log record: ") + e.what(), lineno);
  }
}

EventLog::EventLog(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("cannot create '" + dir_ + "': " + ec.message());
  open_log();
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::string EventLog::log_path() const { return (fs::path(dir_) / "events.jsonl").string(); }
std::string EventLog::snapshot_path() const { return (fs::path(dir_) / "snapshot.jsonl").string(); }

void EventLog::open_log() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) sys_fail("open", log_path());
}

std::vector<LogRecord> EventLog::replay() const {
  std::vector<LogRecord> out;
  std::uint64_t last = 0;
  bool torn = false;
  const auto snap = read_lines(snapshot_path(), torn);
  if (torn) throw ParseError("snapshot '" + snapshot_path() + "' is truncated", snap.size());
  for (std::size_t i = 0; i < snap.size(); ++i) {
    LogRecord r = decode_record(snap[i], i + 1);
    if (r.seq <= last) throw ParseError("snapshot sequence numbers not increasing", i + 1);
    last = r.seq;
    out.push_back(std::move(r));
  }
  const auto lines = read_lines(log_path(), torn);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (torn && i + 1 == lines.size()) break;  // write cut short, never acknowledged
    LogRecord r = decode_record(lines[i], i + 1);
    if (r.seq <= last) continue;  // already folded into the snapshot
    last = r.seq;
    out.push_back(std::move(r));
  }
  return out;
}

void EventLog::append(const LogRecord& record) {
  write_all(fd_, encode_record(record) + "\n", log_path());
  if (::fsync(fd_) != 0) sys_fail("fsync", log_path());
}

void EventLog::compact(const std::vector<LogRecord>& records) {
  const std::string tmp = snapshot_path() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) sys_fail("open", tmp);
  std::string data;
  for (const auto& r : records) data += encode_record(r) + "\n";
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    sys_fail("fsync", tmp);
  }
  ::close(fd);
  if (::rename(tmp.c_str(), snapshot_path().c_str()) != 0) sys_fail("rename", tmp);
  sync_dir(dir_);
  // a crash before this point leaves records in both files; replay skips them by seq
  if (::ftruncate(fd_, 0) != 0) sys_fail("truncate", log_path());
  if (::fsync(fd_) != 0) sys_fail("fsync", log_path());
}

}  // namespace vcreval::annotation
