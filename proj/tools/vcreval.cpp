// vcreval: command-line front end for corpus handling, scoring, training,
// evaluation, agreement, rankings and the tagging service.

#include <cctype>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "vcreval/agreement.hpp"
#include "vcreval/annotation.hpp"
#include "vcreval/corpus.hpp"
#include "vcreval/embed_metrics.hpp"
#include "vcreval/error.hpp"
#include "vcreval/gbr.hpp"
#include "vcreval/harness.hpp"
#include "vcreval/pool_metric.hpp"
#include "vcreval/synthetic.hpp"
#include "vcreval/vcrscore.hpp"

namespace {

using namespace vcreval;
namespace fs = std::filesystem;

constexpr const char* kEnvPrefix = "VCREVAL_";

std::string env_name(const std::string& flag) {
  std::string out = kEnvPrefix;
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option("--" + name, target, help)->envname(env_name(name));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
  return app->add_flag("--" + name, target, help)->envname(env_name(name));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Scoring inputs shared by score, train and evaluate.
struct InputPaths {
  std::string clip_images, clip_captions, mcip_images, mcip_captions, tokens, detections;
  std::vector<std::string> channels;  // name=path

  void add_to(CLI::App* app) {
    opt(app, "clip-images", clip_images, "CLIP image embeddings (jsonl or EMB1)");
    opt(app, "clip-captions", clip_captions, "CLIP caption embeddings");
    opt(app, "mcip-images", mcip_images, "MCIP image embeddings");
    opt(app, "mcip-captions", mcip_captions, "MCIP caption embeddings");
    opt(app, "tokens", tokens, "contextual token embeddings for BERTScore");
    opt(app, "detections", detections, "object-detector labels (jsonl)");
    opt(app, "channels", channels, "score channel as name=path, repeatable")->delimiter(',');
  }
};

struct LoadedInputs {
  std::unique_ptr<embed::EmbeddingTable> clip_images, clip_captions, mcip_images, mcip_captions,
      tokens;
  pool::DetectionIndex detections;
  bool have_detections = false;
  std::map<std::string, embed::ScoreChannel> channels;

  static std::unique_ptr<embed::EmbeddingTable> table(const std::string& path,
                                                      embed::EmbeddingKind kind) {
    if (path.empty()) return nullptr;
    return std::make_unique<embed::EmbeddingTable>(embed::load_embeddings(path, kind));
  }

  LoadedInputs(const InputPaths& p, const std::vector<std::string>& declared) {
    clip_images = table(p.clip_images, embed::EmbeddingKind::kImage);
    clip_captions = table(p.clip_captions, embed::EmbeddingKind::kCaption);
    mcip_images = table(p.mcip_images, embed::EmbeddingKind::kImage);
    mcip_captions = table(p.mcip_captions, embed::EmbeddingKind::kCaption);
    tokens = table(p.tokens, embed::EmbeddingKind::kTokens);
    if (!p.detections.empty()) {
      detections = pool::load_detections(p.detections);
      have_detections = true;
    }
    for (const auto& spec : p.channels) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Error("channel '" + spec + "' is not of the form name=path");
      const std::string name = spec.substr(0, eq);
      auto load = embed::load_score_channel(spec.substr(eq + 1), name, declared);
      if (!load.missing.empty())
        std::cerr << "warning: channel " << name << " lacks " << load.missing.size()
                  << " sample(s), first '" << load.missing.front() << "'\n";
      channels.emplace(name, std::move(load.channel));
    }
  }

  harness::EvaluationInputs evaluation() const {
    harness::EvaluationInputs in;
    if (have_detections) in.detections = &detections;
    in.clip = {clip_images.get(), clip_captions.get(), embed::kClipWeight};
    in.mcip = {mcip_images.get(), mcip_captions.get(), embed::kClipWeight};
    in.tokens = tokens.get();
    for (const auto& [name, ch] : channels) in.channels[name] = &ch;
    return in;
  }

  vcr::FeatureContext features(vcr::ClipSource source,
                               const std::vector<std::string>& extra) const {
    vcr::FeatureContext ctx;
    const auto in = evaluation();
    ctx.clip = in.clip;
    ctx.mcip = in.mcip;
    ctx.channels = in.channels;
    ctx.clip_source = source;
    ctx.extra_channels = extra;
    return ctx;
  }
};

std::vector<std::string> ids_of(const corpus::Corpus& c) {
  std::vector<std::string> ids;
  for (const auto& s : c.samples) ids.push_back(s.sample_id);
  return ids;
}

corpus::Corpus load_normalized(const std::string& path) {
  return corpus::normalize_scores(corpus::read_corpus_file(path), corpus::default_rules());
}

corpus::SplitSpec split_for(const std::string& kind, std::uint64_t seed) {
  if (kind == "own") return corpus::own_data_split(seed);
  if (kind == "external") return corpus::external_data_split(seed);
  throw Error("unknown split '" + kind + "' (own, external)");
}

corpus::AggregationMethod parse_aggregation(const std::string& s) {
  if (s == "mean") return corpus::AggregationMethod::kMean;
  if (s == "vote") return corpus::AggregationMethod::kVote;
  throw Error("unknown aggregation '" + s + "' (mean, vote)");
}

agreement::Level parse_level(const std::string& s) {
  if (s == "nominal") return agreement::Level::kNominal;
  if (s == "ordinal") return agreement::Level::kOrdinal;
  if (s == "interval") return agreement::Level::kInterval;
  throw Error("unknown level '" + s + "' (nominal, ordinal, interval)");
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string fmt_stat(const annotation::Stat& s) { return s.value ? fmt(*s.value) : "NA"; }

annotation::AnnotationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caption evaluation: metrics, learned metric training, agreement, rankings"};
  app.set_config("--config", "", "configuration file (TOML or INI)")->envname("VCREVAL_CONFIG");
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  opt(&app, "seed", seed, "seed for splits, tie-breaks and training");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a corpus and report counts");
  std::string ingest_in, ingest_out;
  bool ingest_filter = false;
  opt(ingest, "corpus", ingest_in, "corpus file (jsonl)")->required();
  opt(ingest, "out", ingest_out, "write the normalized corpus here");
  flag(ingest, "filter-zero", ingest_filter, "drop samples whose normalized mean score is 0");

  // score
  auto* score = app.add_subcommand("score", "compute metrics for every sample");
  std::string score_corpus, score_metrics = "bleu,rouge,meteor,cider,precision,recall",
                            score_model, score_report;
  InputPaths score_inputs;
  opt(score, "corpus", score_corpus, "corpus file")->required();
  opt(score, "metrics", score_metrics, "comma-separated metric names")->capture_default_str();
  opt(score, "model-file", score_model, "trained model, needed for vcrscore");
  opt(score, "report-dir", score_report, "write report tables here")->required();
  score_inputs.add_to(score);

  // train
  auto* train = app.add_subcommand("train", "fit the learned metric to human scores");
  std::string own_path, external_path, out_model, clip_source = "mcipscore_ref",
                                                  aggregation = "mean";
  std::vector<std::string> extra_features;
  gbr::TrainConfig tc;
  InputPaths train_inputs;
  opt(train, "own", own_path, "in-house corpus (240/360 split)");
  opt(train, "external", external_path, "external corpus (70/30 split, zero-filtered)");
  opt(train, "out-model", out_model, "model file to write")->required();
  opt(train, "clip-feature", clip_source, "clipscore, clipscore_ref, mcipscore, mcipscore_ref")
      ->capture_default_str();
  opt(train, "aggregation", aggregation, "mean or vote")->capture_default_str();
  opt(train, "extra-features", extra_features, "additional channel features")->delimiter(',');
  opt(train, "n-estimators", tc.n_estimators, "boosting stages")->capture_default_str();
  opt(train, "learning-rate", tc.learning_rate, "shrinkage")->capture_default_str();
  opt(train, "max-depth", tc.max_depth, "tree depth")->capture_default_str();
  opt(train, "min-samples-leaf", tc.min_samples_leaf, "rows per leaf")->capture_default_str();
  opt(train, "subsample", tc.subsample, "row fraction per stage")->capture_default_str();
  train_inputs.add_to(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score the test partition and correlate");
  std::string eval_corpus, eval_model, eval_report, eval_split = "own", eval_metrics;
  bool eval_all = false;
  InputPaths eval_inputs;
  opt(evaluate, "corpus", eval_corpus, "corpus file")->required();
  opt(evaluate, "model-file", eval_model, "trained model");
  opt(evaluate, "report-dir", eval_report, "write report tables here")->required();
  opt(evaluate, "split", eval_split, "own or external")->capture_default_str();
  opt(evaluate, "metrics", eval_metrics, "comma-separated; default every metric");
  flag(evaluate, "all-samples", eval_all, "use the whole corpus instead of the test partition");
  eval_inputs.add_to(evaluate);

  // agree
  auto* agree = app.add_subcommand("agree", "phase-1 vs phase-2 agreement per tagger");
  std::string agree_corpus, agree_level = "interval";
  opt(agree, "corpus", agree_corpus, "corpus file")->required();
  opt(agree, "level", agree_level, "nominal, ordinal or interval")->capture_default_str();

  // rank
  auto* rank = app.add_subcommand("rank", "model rankings from human scores");
  std::string rank_corpus, rank_view = "all";
  opt(rank, "corpus", rank_corpus, "corpus file")->required();
  opt(rank, "view", rank_view, "voting, mean, trimmed or all")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "run the tagging service");
  std::string serve_corpus, serve_taggers, serve_dir, serve_host = "127.0.0.1";
  int serve_port = 8080;
  opt(serve, "corpus", serve_corpus, "samples to tag")->required();
  opt(serve, "taggers", serve_taggers, "comma-separated tagger ids")->required();
  opt(serve, "data-dir", serve_dir, "event log directory")->required();
  opt(serve, "host", serve_host, "bind address")->capture_default_str();
  opt(serve, "port", serve_port, "port")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "write the synthetic 600-sample fixture");
  std::string synth_dir;
  opt(synth, "out-dir", synth_dir, "directory for corpus, embeddings, channels, detections")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      corpus::Corpus c = load_normalized(ingest_in);
      std::cout << "samples\t" << c.size() << "\nimages\t" << c.distinct_images() << "\n";
      for (const auto& [source, n] : c.counts_by_source()) std::cout << source << "\t" << n << "\n";
      if (ingest_filter) {
        auto r = corpus::filter_zero_scores(std::move(c));
        std::cout << "removed_zero\t" << r.removed << "\nkept\t" << r.kept.size() << "\n";
        c = std::move(r.kept);
      }
      if (!ingest_out.empty()) corpus::write_corpus_file(ingest_out, c);
    } else if (*score) {
      const corpus::Corpus c = corpus::read_corpus_file(score_corpus);
      LoadedInputs loaded(score_inputs, ids_of(c));
      auto in = loaded.evaluation();
      std::optional<vcr::VcrModel> model;
      if (!score_model.empty()) {
        model = vcr::load_model_file(score_model);
        in.model = &*model;
      }
      const auto report = harness::evaluate_corpus(c, split_list(score_metrics), in);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      harness::emit_report(report, score_report);
      std::cout << "scored " << report.sample_ids.size() << " samples, "
                << report.metrics.size() << " metrics -> " << score_report << "\n";
    } else if (*train) {
      if (own_path.empty() && external_path.empty())
        throw Error("train needs --own and/or --external");
      const auto method = parse_aggregation(aggregation);
      corpus::Corpus train_set;
      auto add_partition = [&](const std::string& path, const std::string& kind, bool filter) {
        corpus::Corpus c = load_normalized(path);
        if (filter) c = corpus::filter_zero_scores(std::move(c)).kept;
        auto parts = corpus::split(c, split_for(kind, seed));
        std::cerr << kind << ": " << parts.train.size() << " train / " << parts.test.size()
                  << " test\n";
        for (auto& s : parts.train.samples) train_set.samples.push_back(std::move(s));
      };
      if (!own_path.empty()) add_partition(own_path, "own", false);
      if (!external_path.empty()) add_partition(external_path, "external", true);

      LoadedInputs loaded(train_inputs, ids_of(train_set));
      const auto ctx = loaded.features(vcr::parse_clip_source(clip_source), extra_features);
      static const pool::DetectionIndex kNone;
      const auto table = vcr::featurize_corpus(
          train_set, loaded.have_detections ? loaded.detections : kNone, ctx);
      const auto targets = corpus::aggregate_map(train_set, method, seed);
      std::vector<double> y;
      for (const auto& id : table.sample_ids) y.push_back(targets.at(id));
      tc.seed = seed;
      const auto model = vcr::train_vcr(table.matrix, table.names, y, tc);
      vcr::save_model_file(out_model, model);
      std::cout << "trained on " << y.size() << " rows, " << model.ensemble.trees.size()
                << " trees, final train mse " << model.ensemble.train_mse.back() << " -> "
                << out_model << "\n";
    } else if (*evaluate) {
      corpus::Corpus c = load_normalized(eval_corpus);
      if (eval_split == "external") c = corpus::filter_zero_scores(std::move(c)).kept;
      if (!eval_all) c = corpus::split(c, split_for(eval_split, seed)).test;
      LoadedInputs loaded(eval_inputs, ids_of(c));
      auto in = loaded.evaluation();
      std::optional<vcr::VcrModel> model;
      if (!eval_model.empty()) {
        model = vcr::load_model_file(eval_model);
        in.model = &*model;
      }
      const auto metrics = eval_metrics.empty() ? harness::all_metrics() : split_list(eval_metrics);
      auto report = harness::evaluate_corpus(c, metrics, in);
      const auto human = corpus::aggregate_map(c, corpus::AggregationMethod::kMean, seed);
      harness::correlate_with_humans(report, human);
      harness::attach_rankings(report, harness::human_ranking_by_mean(report, human));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      harness::emit_report(report, eval_report);
      std::cout << "metric\tspearman\n";
      for (const auto& m : harness::metrics_by_correlation(report))
        std::cout << m << "\t" << harness::format_cell(report.human_rho[report.metric_index(m)])
                  << "\n";
    } else if (*agree) {
      const corpus::Corpus c = corpus::read_corpus_file(agree_corpus);
      std::set<std::string> taggers;
      for (const auto& s : c.samples)
        for (const auto& r : s.raw_scores) taggers.insert(r.tagger);
      const auto a = annotation::agreement_from_corpus(
          c, {taggers.begin(), taggers.end()}, 1, 2, parse_level(agree_level));
      std::cout << "tagger\tpaired\tkendall_tau\tkrippendorff_alpha\n";
      for (const auto& t : a.taggers)
        std::cout << t.tagger << "\t" << t.paired << "\t" << fmt_stat(t.tau) << "\t"
                  << fmt_stat(t.alpha) << "\n";
      std::cout << "all\t-\t-\t" << fmt_stat(a.all_alpha) << "\n";
      for (const auto& t : a.taggers)
        if (!t.alpha.note.empty()) std::cerr << t.tagger << ": " << t.alpha.note << "\n";
    } else if (*rank) {
      const corpus::Corpus c = load_normalized(rank_corpus);
      std::vector<harness::ViewKind> views;
      if (rank_view == "all")
        views = {harness::ViewKind::kVotingSum, harness::ViewKind::kMeanSum,
                 harness::ViewKind::kTrimmedSum};
      else
        views = {harness::parse_view_kind(rank_view)};
      for (auto kind : views) {
        const auto v = harness::rank_models(c, kind, seed);
        std::cout << "# " << harness::to_string(kind) << " over " << v.n_images << " images"
                  << (v.tied ? " (tied)" : "") << "\nmodel\tsum\tper_100_images\n";
        for (const auto& m : v.ranking)
          std::cout << m << "\t" << fmt(v.sums.at(m)) << "\t" << fmt(v.display(m), 2) << "\n";
      }
    } else if (*serve) {
      annotation::StoreConfig cfg;
      cfg.seed = seed;
      cfg.taggers = split_list(serve_taggers);
      cfg.data_dir = serve_dir;
      annotation::AnnotationStore store(corpus::read_corpus_file(serve_corpus), cfg);
      annotation::AnnotationServer server(store);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on " << serve_host << ":" << serve_port << "\n";
      server.listen(serve_host, serve_port);
      g_server = nullptr;
    } else if (*synth) {
      const auto f = synthetic::make_fixture({.seed = seed == 0 ? 7 : seed});
      fs::create_directories(synth_dir);
      const fs::path d(synth_dir);
      corpus::write_corpus_file((d / "corpus.jsonl").string(), f.corpus);
      auto write_table = [&](const char* name, const embed::EmbeddingTable& t) {
        std::ofstream out(d / name, std::ios::binary);
        embed::write_embeddings(out, t);
      };
      write_table("clip_images.jsonl", f.clip_images);
      write_table("clip_captions.jsonl", f.clip_captions);
      write_table("mcip_images.jsonl", f.mcip_images);
      write_table("mcip_captions.jsonl", f.mcip_captions);
      write_table("tokens.jsonl", f.tokens);
      {
        std::ofstream out(d / "vilt.jsonl", std::ios::binary);
        embed::write_score_channel(out, f.vilt);
      }
      {
        std::ofstream out(d / "bertgrammar.jsonl", std::ios::binary);
        embed::write_score_channel(out, f.bertgrammar);
      }
      {
        std::ofstream out(d / "detections.jsonl", std::ios::binary);
        pool::write_detections(out, f.detections);
      }
      std::cout << "wrote " << f.corpus.size() << " samples to " << synth_dir << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
