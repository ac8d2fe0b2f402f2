#include "vcreval/pool_metric.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "vcreval/error.hpp"

namespace vcreval::pool {

using nlohmann::json;

bool is_stopword(const std::string& token) {
  static const std::set<std::string> kStop = {
      "a",    "an",   "the",  "and", "or",   "of",   "in",  "on",   "at",  "to",
      "is",   "are",  "was",  "were", "be",  "with", "by",  "for",  "from", "its",
      "it",   "this", "that", "there", "their", "his", "her", "some", "into", "as"};
  return kStop.count(token) > 0;
}

std::vector<std::string> DetectionLabels::all_labels() const {
  std::vector<std::string> out;
  for (const auto& [det, labels] : by_detector) out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

DetectionIndex read_detections(std::istream& in) {
  DetectionIndex index;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    if (!obj.is_object()) throw ParseError("record is not an object", line);
    if (obj.contains("header")) continue;
    if (!obj.contains("image_id") || !obj["image_id"].is_string())
      throw ParseError("missing 'image_id'", line);
    if (!obj.contains("labels") || !obj["labels"].is_array())
      throw ParseError("missing 'labels' array", line);
    const std::string image = obj["image_id"].get<std::string>();
    const std::string detector =
        obj.contains("detector") && obj["detector"].is_string() ? obj["detector"].get<std::string>()
                                                                 : std::string("unknown");
    auto& entry = index[image];
    entry.image_id = image;
    auto& labels = entry.by_detector[detector];
    for (const auto& l : obj["labels"]) {
      if (!l.is_string()) throw ParseError("label must be a string", line);
      labels.push_back(l.get<std::string>());
    }
  }
  return index;
}

DetectionIndex load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open detections file '" + path + "'");
  return read_detections(in);
}

void write_detections(std::ostream& out, const DetectionIndex& index) {
  for (const auto& [image, d] : index) {
    for (const auto& [det, labels] : d.by_detector) {
      nlohmann::ordered_json o;
      o["image_id"] = image;
      o["detector"] = det;
      o["labels"] = labels;
      out << o.dump() << '\n';
    }
  }
}

WordPool build_pool(const std::string& image_id, const std::vector<lexical::TokenSeq>& references,
                    const DetectionLabels* detections, const PoolOptions& options) {
  WordPool pool;
  pool.image_id = image_id;
  auto add = [&](const std::string& tok) {
    if (options.remove_stopwords && is_stopword(tok)) return;
    pool.words.insert(tok);
  };
  for (const auto& ref : references)
    for (const auto& tok : ref) add(tok);
  if (detections)
    for (const auto& label : detections->all_labels())
      for (const auto& tok : lexical::tokenize(label)) add(tok);
  return pool;
}

PrecisionRecall precision_recall(const lexical::TokenSeq& candidate, const WordPool& pool,
                                 const PoolOptions& options) {
  std::set<std::string> unique;
  for (const auto& t : candidate)
    if (!(options.remove_stopwords && is_stopword(t))) unique.insert(t);
  if (unique.empty()) throw DegenerateError("precision_recall: empty candidate");
  if (pool.empty()) throw DegenerateError("precision_recall: empty pool for '" + pool.image_id + "'");
  PrecisionRecall pr;
  pr.candidate_unique = unique.size();
  pr.pool_size = pool.size();
  for (const auto& t : unique) pr.overlap += pool.words.count(t);
  pr.precision = static_cast<double>(pr.overlap) / static_cast<double>(pr.candidate_unique);
  pr.recall = static_cast<double>(pr.overlap) / static_cast<double>(pr.pool_size);
  return pr;
}

}  // namespace vcreval::pool
