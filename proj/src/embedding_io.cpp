#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <set>

#include <json.hpp>

#include "vcreval/embed_metrics.hpp"
#include "vcreval/error.hpp"

namespace vcreval::embed {

using nlohmann::json;

namespace {

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line);
  }
}

std::vector<double> to_vector(const json& arr, const std::string& id, std::size_t line) {
  if (!arr.is_array()) throw ParseError("vector for '" + id + "' is not an array", line);
  std::vector<double> v;
  v.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw ParseError("non-numeric entry in vector for '" + id + "'", line);
    v.push_back(x.get<double>());
  }
  return v;
}

std::uint32_t read_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ParseError("truncated record", 0);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

EmbeddingTable read_embeddings(std::istream& in) {
  EmbeddingTable table;
  bool kind_known = false;
  std::string header;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    const json obj = parse_line(text, line);
    if (!obj.is_object()) throw ParseError("record is not an object", line);
    if (obj.contains("header")) {
      header = obj["header"].dump();
      continue;
    }
    if (!obj.contains("id") || !obj["id"].is_string()) throw ParseError("missing 'id'", line);
    if (!obj.contains("kind") || !obj["kind"].is_string()) throw ParseError("missing 'kind'", line);
    if (!obj.contains("vectors")) throw ParseError("missing 'vectors'", line);
    const std::string id = obj["id"].get<std::string>();
    const EmbeddingKind kind = parse_embedding_kind(obj["kind"].get<std::string>());
    if (!kind_known) {
      table = EmbeddingTable(kind, 0);
      kind_known = true;
    } else if (kind != table.kind()) {
      throw ParseError("mixed embedding kinds in one file", line);
    }
    try {
      const json& vecs = obj["vectors"];
      if (kind == EmbeddingKind::kTokens) {
        if (!vecs.is_array() || vecs.empty())
          throw ParseError("token embeddings for '" + id + "' must be a non-empty array", line);
        for (const auto& row : vecs) table.add(id, to_vector(row, id, line));
      } else {
        table.add(id, to_vector(vecs, id, line));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line);
    }
  }
  table.header = header;
  return table;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  if (!table.header.empty()) out << json{{"header", json::parse(table.header)}}.dump() << '\n';
  for (const auto& [id, m] : table.entries()) {
    nlohmann::ordered_json o;
    o["id"] = id;
    o["kind"] = to_string(table.kind());
    if (table.kind() == EmbeddingKind::kTokens) {
      o["vectors"] = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        o["vectors"].push_back(std::vector<double>(row.begin(), row.end()));
      }
    } else {
      auto row = m.row(0);
      o["vectors"] = std::vector<double>(row.begin(), row.end());
    }
    out << o.dump() << '\n';
  }
}

EmbeddingTable read_embeddings_binary(std::istream& in, EmbeddingKind kind) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0)
    throw ParseError("bad magic, expected EMB1", 0);
  const std::uint32_t dim = read_u32(in);
  if (dim == 0) throw ParseError("zero dimension", 0);
  EmbeddingTable table(kind, dim);
  std::vector<double> v(dim);
  std::vector<unsigned char> raw(4 * static_cast<std::size_t>(dim));
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t len = read_u32(in);
    std::string id(len, '\0');
    if (len && !in.read(id.data(), len)) throw ParseError("truncated id", 0);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw ParseError("truncated vector for '" + id + "'", 0);
    for (std::uint32_t i = 0; i < dim; ++i) {
      const std::uint32_t bits =
          static_cast<std::uint32_t>(raw[4 * i]) | static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
          static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
          static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
      v[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    table.add(id, v);
  }
  return table;
}

void write_embeddings_binary(std::ostream& out, const EmbeddingTable& table) {
  out.write("EMB1", 4);
  write_u32(out, static_cast<std::uint32_t>(table.dim()));
  for (const auto& [id, m] : table.entries()) {
    for (std::size_t r = 0; r < m.rows; ++r) {
      write_u32(out, static_cast<std::uint32_t>(id.size()));
      out.write(id.data(), static_cast<std::streamsize>(id.size()));
      for (double x : m.row(r)) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
}

EmbeddingTable load_embeddings(const std::string& path, EmbeddingKind binary_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, "EMB1", 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_embeddings_binary(in, binary_kind) : read_embeddings(in);
}

ScoreChannel read_score_channel(std::istream& in, const std::string& name) {
  // bare NaN / Infinity are not JSON; quote them so the record still parses
  // and the error can name its sample
  static const std::regex bare_nonfinite(R"((:\s*)(-?(?:NaN|nan|Infinity|inf)))");
  ScoreChannel ch;
  ch.name = name;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error&) {
      obj = parse_line(std::regex_replace(text, bare_nonfinite, "$1\"$2\""), line);
    }
    if (!obj.is_object()) throw ParseError("record is not an object", line);
    if (obj.contains("header")) {
      ch.header = obj["header"].dump();
      continue;
    }
    if (!obj.contains("sample_id") || !obj["sample_id"].is_string())
      throw ParseError("missing 'sample_id'", line);
    const std::string id = obj["sample_id"].get<std::string>();
    if (!obj.contains("value")) throw ParseError("missing 'value' for '" + id + "'", line);
    const json& val = obj["value"];
    double v;
    if (val.is_number()) {
      v = val.get<double>();
    } else if (val.is_string()) {
      v = std::strtod(val.get<std::string>().c_str(), nullptr);
      if (std::isfinite(v)) throw ParseError("value for '" + id + "' is not a number", line);
    } else {
      throw ParseError("value for '" + id + "' is not a number", line);
    }
    if (!std::isfinite(v))
      throw ParseError("non-finite value for sample '" + id + "' in channel '" + name + "'", line);
    if (!ch.values.emplace(id, v).second) throw DuplicateIdError(id);
  }
  return ch;
}

ChannelLoad load_score_channel(const std::string& path, const std::string& name,
                               const std::vector<std::string>& declared_ids) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open channel file '" + path + "'");
  ChannelLoad load;
  load.channel = read_score_channel(in, name);
  for (const auto& id : declared_ids)
    if (!load.channel.values.count(id)) load.missing.push_back(id);
  return load;
}

void write_score_channel(std::ostream& out, const ScoreChannel& channel) {
  if (!channel.header.empty())
    out << json{{"header", json::parse(channel.header)}}.dump() << '\n';
  for (const auto& [id, v] : channel.values) {
    nlohmann::ordered_json o;
    o["sample_id"] = id;
    o["value"] = v;
    out << o.dump() << '\n';
  }
}

}  // namespace vcreval::embed
