#include <cmath>

#include <json.hpp>

#include "vcreval/gbr.hpp"

namespace vcreval::gbr {

using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "vcreval-gbr";

[[noreturn]] void corrupt(const std::string& why) {
  throw ParseError("corrupted model payload: " + why, 0);
}

const ordered_json& field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) corrupt(std::string("missing '") + key + "'");
  return *it;
}

double real(const ordered_json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number()) corrupt(std::string("'") + key + "' is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) corrupt(std::string("'") + key + "' is not finite");
  return d;
}

std::uint64_t count(const ordered_json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    corrupt(std::string("'") + key + "' is not a count");
  return v.get<std::uint64_t>();
}

}  // namespace

std::string serialize(const BoostedEnsemble& e) {
  ordered_json o;
  o["format"] = kFormat;
  o["version"] = kModelVersion;
  o["loss"] = e.loss;
  ordered_json cfg;
  cfg["n_estimators"] = e.config.n_estimators;
  cfg["learning_rate"] = e.config.learning_rate;
  cfg["max_depth"] = e.config.max_depth;
  cfg["min_samples_leaf"] = e.config.min_samples_leaf;
  cfg["subsample"] = e.config.subsample;
  cfg["seed"] = e.config.seed;
  cfg["validation_fraction"] = e.config.validation_fraction;
  cfg["n_iter_no_change"] = e.config.n_iter_no_change;
  o["config"] = cfg;
  o["n_features"] = e.n_features;
  o["init"] = e.init;
  o["learning_rate"] = e.learning_rate;
  o["train_mse"] = e.train_mse;
  o["trees"] = ordered_json::array();
  for (const auto& t : e.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {
      ordered_json node;
      node["kind"] = n.is_leaf() ? "leaf" : "split";
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["value"] = n.value;
      node["left"] = n.left;
      node["right"] = n.right;
      nodes.push_back(std::move(node));
    }
    o["trees"].push_back(ordered_json{{"nodes", std::move(nodes)}});
  }
  return o.dump(1) + "\n";
}

namespace {

BoostedEnsemble load_object(const ordered_json& o) {
  if (!o.is_object()) corrupt("top level is not an object");
  const auto& fmt = field(o, "format");
  if (!fmt.is_string() || fmt.get<std::string>() != kFormat) corrupt("unexpected format tag");
  const auto& ver = field(o, "version");
  if (!ver.is_number_integer()) corrupt("version is not an integer");
  if (ver.get<int>() != kModelVersion)
    throw VersionError("unsupported model version " + std::to_string(ver.get<int>()) +
                       " (expected " + std::to_string(kModelVersion) + ")");

  BoostedEnsemble e;
  const auto& loss = field(o, "loss");
  if (!loss.is_string() || loss.get<std::string>() != "squared_error") corrupt("unknown loss");
  e.loss = loss.get<std::string>();
  const auto& cfg = field(o, "config");
  if (!cfg.is_object()) corrupt("config is not an object");
  e.config.n_estimators = count(cfg, "n_estimators");
  e.config.learning_rate = real(cfg, "learning_rate");
  e.config.max_depth = count(cfg, "max_depth");
  e.config.min_samples_leaf = count(cfg, "min_samples_leaf");
  e.config.subsample = real(cfg, "subsample");
  e.config.seed = count(cfg, "seed");
  e.config.validation_fraction = real(cfg, "validation_fraction");
  e.config.n_iter_no_change = count(cfg, "n_iter_no_change");
  e.n_features = count(o, "n_features");
  e.init = real(o, "init");
  e.learning_rate = real(o, "learning_rate");
  const auto& mse = field(o, "train_mse");
  if (!mse.is_array()) corrupt("train_mse is not an array");
  for (const auto& v : mse) {
    if (!v.is_number()) corrupt("train_mse entry is not a number");
    e.train_mse.push_back(v.get<double>());
  }

  const auto& trees = field(o, "trees");
  if (!trees.is_array()) corrupt("trees is not an array");
  for (const auto& t : trees) {
    if (!t.is_object()) corrupt("tree is not an object");
    const auto& nodes = field(t, "nodes");
    if (!nodes.is_array() || nodes.empty()) corrupt("tree without nodes");
    RegressionTree tree;
    const auto n_nodes = static_cast<int>(nodes.size());
    for (const auto& jn : nodes) {
      if (!jn.is_object()) corrupt("node is not an object");
      TreeNode n;
      const auto& kind = field(jn, "kind");
      if (!kind.is_string()) corrupt("node kind is not a string");
      n.feature = field(jn, "feature").get<int>();
      n.threshold = real(jn, "threshold");
      n.value = real(jn, "value");
      n.left = field(jn, "left").get<int>();
      n.right = field(jn, "right").get<int>();
      const int self = static_cast<int>(tree.nodes.size());
      if (kind.get<std::string>() == "leaf") {
        if (n.feature != -1) corrupt("leaf with a feature index");
      } else if (kind.get<std::string>() == "split") {
        if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= e.n_features)
          corrupt("split feature out of range");
        // children come after their parent, so the walk always terminates
        if (n.left <= self || n.right <= self || n.left >= n_nodes || n.right >= n_nodes)
          corrupt("child index out of range");
      } else {
        corrupt("unknown node kind");
      }
      tree.nodes.push_back(n);
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

}  // namespace

BoostedEnsemble load(const std::string& payload) {
  ordered_json o;
  try {
    o = ordered_json::parse(payload);
  } catch (const ordered_json::parse_error& e) {
    corrupt(e.what());
  }
  try {
    return load_object(o);
  } catch (const ordered_json::exception& e) {
    corrupt(e.what());
  }
}

}  // namespace vcreval::gbr
