#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vcreval/error.hpp"
#include "vcreval/harness.hpp"

namespace vcreval::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kScores = "scores.tsv";
constexpr const char* kMeans = "model_means.tsv";
constexpr const char* kHuman = "human_correlation.tsv";
constexpr const char* kHeatmap = "model_heatmap.tsv";
constexpr const char* kRankings = "rankings.tsv";
constexpr const char* kHistograms = "histograms.tsv";
constexpr const char* kWarnings = "warnings.txt";
constexpr const char* kHumanRow = "human";

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

void check_field(const std::string& s) {
  if (s.find_first_of("\t\n\r") != std::string::npos)
    throw Error("field '" + s + "' contains a tab or newline");
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write '" + path_.string() + "'");
  }
  void row(const std::vector<std::string>& fields) { out_ << join(fields, '\t') << '\n'; }
  void line(const std::string& text) { out_ << text << '\n'; }
  ~Writer() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0)
      throw Error("write failed for '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split(line, '\t');
    if (lineno == 1) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(path.filename().string() + ": expected " +
                           std::to_string(t.header.size()) + " fields",
                       lineno);
    t.rows.push_back(std::move(fields));
  }
  if (lineno == 0) throw ParseError(path.filename().string() + ": missing header", 0);
  return t;
}

std::vector<std::string> cell_row(const std::string& key, const std::vector<Cell>& cells) {
  std::vector<std::string> row{key};
  for (const auto& c : cells) row.push_back(format_cell(c));
  return row;
}

std::vector<Cell> parse_cells(const std::vector<std::string>& fields, std::size_t from) {
  std::vector<Cell> out;
  for (std::size_t i = from; i < fields.size(); ++i) out.push_back(parse_cell(fields[i]));
  return out;
}

}  // namespace

std::string format_cell(const Cell& cell) { return cell ? format_real(*cell) : "NA"; }

Cell parse_cell(const std::string& text) {
  if (text == "NA") return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ParseError("bad numeric cell '" + text + "'", 0);
  return v;
}

void emit_report(const MetricReport& report, const std::string& dir,
                 const HistogramOptions& histograms) {
  for (const auto& s : report.sample_ids) check_field(s);
  for (const auto& s : report.models) check_field(s);
  for (const auto& s : report.warnings) check_field(s);
  for (const auto& m : report.models)
    if (m.find(',') != std::string::npos) throw Error("model id '" + m + "' contains a comma");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir + "': " + ec.message());
  const fs::path base(dir);

  std::vector<std::string> header = {"sample_id", "model_id"};
  header.insert(header.end(), report.metrics.begin(), report.metrics.end());
  {
    Writer w(base / kScores);
    w.row(header);
    for (std::size_t i = 0; i < report.sample_ids.size(); ++i) {
      auto row = cell_row(report.sample_ids[i], report.scores[i]);
      row.insert(row.begin() + 1, report.sample_models[i]);
      w.row(row);
    }
  }

  std::vector<std::string> model_header = {"model_id"};
  model_header.insert(model_header.end(), report.metrics.begin(), report.metrics.end());
  {
    Writer w(base / kMeans);
    w.row(model_header);
    for (std::size_t k = 0; k < report.models.size(); ++k)
      w.row(cell_row(report.models[k], report.model_means[k]));
  }
  {
    Writer w(base / kHeatmap);
    w.row(model_header);
    for (std::size_t k = 0; k < report.heatmap.size(); ++k)
      w.row(cell_row(report.models[k], report.heatmap[k]));
  }
  {
    Writer w(base / kHuman);
    w.row({"metric", "spearman"});
    for (std::size_t mi = 0; mi < report.human_rho.size(); ++mi)
      w.row({report.metrics[mi], format_cell(report.human_rho[mi])});
  }
  {
    Writer w(base / kRankings);
    w.row({"metric", "spearman_vs_human", "ranking"});
    if (!report.human_ranking.empty())
      w.row({kHumanRow, "NA", join(report.human_ranking, ',')});
    for (std::size_t mi = 0; mi < report.rankings.size(); ++mi)
      w.row({report.metrics[mi], format_cell(report.ranking_rho[mi]),
             join(report.rankings[mi], ',')});
  }
  {
    Writer w(base / kHistograms);
    w.row({"metric", "model_id", "bin_lo", "bin_hi", "count"});
    const double width = (histograms.hi - histograms.lo) / static_cast<double>(histograms.bins);
    for (std::size_t mi = 0; mi < report.metrics.size(); ++mi) {
      for (const auto& model : report.models) {
        std::vector<double> values;
        for (std::size_t i = 0; i < report.sample_ids.size(); ++i)
          if (report.sample_models[i] == model && report.scores[i][mi])
            values.push_back(*report.scores[i][mi]);
        if (values.empty()) continue;
        const auto counts = histogram(values, histograms);
        for (std::size_t b = 0; b < counts.size(); ++b)
          w.row({report.metrics[mi], model,
                 format_real(histograms.lo + width * static_cast<double>(b)),
                 format_real(histograms.lo + width * static_cast<double>(b + 1)),
                 std::to_string(counts[b])});
      }
    }
  }
  {
    Writer w(base / kWarnings);
    for (const auto& warning : report.warnings) w.line(warning);
  }
}

MetricReport read_report(const std::string& dir) {
  const fs::path base(dir);
  MetricReport r;

  const Table scores = read_table(base / kScores);
  if (scores.header.size() < 2 || scores.header[0] != "sample_id" || scores.header[1] != "model_id")
    throw ParseError(std::string(kScores) + ": unexpected header", 1);
  r.metrics.assign(scores.header.begin() + 2, scores.header.end());
  for (const auto& row : scores.rows) {
    r.sample_ids.push_back(row[0]);
    r.sample_models.push_back(row[1]);
    r.scores.push_back(parse_cells(row, 2));
  }

  const Table means = read_table(base / kMeans);
  if (means.header.size() != r.metrics.size() + 1)
    throw ParseError(std::string(kMeans) + ": metric columns differ from scores", 1);
  for (const auto& row : means.rows) {
    r.models.push_back(row[0]);
    r.model_means.push_back(parse_cells(row, 1));
  }

  const Table heat = read_table(base / kHeatmap);
  if (heat.header.size() != r.metrics.size() + 1)
    throw ParseError(std::string(kHeatmap) + ": metric columns differ from scores", 1);
  for (const auto& row : heat.rows) r.heatmap.push_back(parse_cells(row, 1));

  const Table human = read_table(base / kHuman);
  for (const auto& row : human.rows) r.human_rho.push_back(parse_cell(row[1]));

  const Table ranks = read_table(base / kRankings);
  for (const auto& row : ranks.rows) {
    std::vector<std::string> order;
    if (!row[2].empty()) order = split(row[2], ',');
    if (row[0] == kHumanRow) {
      r.human_ranking = std::move(order);
    } else {
      r.rankings.push_back(std::move(order));
      r.ranking_rho.push_back(parse_cell(row[1]));
    }
  }

  std::ifstream warnings(base / kWarnings, std::ios::binary);
  if (!warnings) throw Error("cannot open '" + (base / kWarnings).string() + "'");
  for (std::string line; std::getline(warnings, line);) r.warnings.push_back(line);
  return r;
}

}  // namespace vcreval::harness
