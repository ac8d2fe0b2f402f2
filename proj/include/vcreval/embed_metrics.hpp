#pragma once

// Scores computed from precomputed embeddings (CLIP-family image/caption
// vectors, contextual token vectors) and scalar score channels.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcreval::embed {

using Vector = std::vector<double>;

// Row-major matrix, one row per token.
struct TokenMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  void append_row(std::span<const double> v);
};

double cosine(std::span<const double> u, std::span<const double> v);

inline constexpr double kClipWeight = 2.5;

// w * max(cos(image, caption), 0)
double clip_score(std::span<const double> image, std::span<const double> caption,
                  double w = kClipWeight);

// Harmonic mean of min(clip_score, 1) and max(0, max_r cos(caption, r)).
double clip_score_ref(std::span<const double> image, std::span<const double> caption,
                      const std::vector<std::span<const double>>& references,
                      double w = kClipWeight);

struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy matching over a candidate x reference similarity matrix.
BertScore bert_score_from_similarity(const std::vector<std::vector<double>>& similarity);
BertScore bert_score(const TokenMatrix& candidate, const TokenMatrix& reference);
// Best F1 over references (the P/R of that reference are reported).
BertScore bert_score(const TokenMatrix& candidate, const std::vector<const TokenMatrix*>& references);

enum class EmbeddingKind { kImage, kCaption, kTokens };

std::string to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(const std::string& s);

// id -> vector (image / caption kinds) or id -> token matrix.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(EmbeddingKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  EmbeddingKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool contains(const std::string& id) const { return rows_.count(id) > 0; }

  // Adds or extends an entry. Vector kinds reject a second vector for an id.
  void add(const std::string& id, std::span<const double> v);

  std::span<const double> vector(const std::string& id) const;
  const TokenMatrix& tokens(const std::string& id) const;
  const std::map<std::string, TokenMatrix>& entries() const noexcept { return rows_; }

  // header object carried by the file, if any (serialized JSON)
  std::string header;

 private:
  EmbeddingKind kind_ = EmbeddingKind::kCaption;
  std::size_t dim_ = 0;
  std::map<std::string, TokenMatrix> rows_;
};

// Line-delimited JSON: {"id", "kind", "vectors"} per line, where vectors is
// an array of reals or, for the token kind, an array of arrays. A line of the
// form {"header": {...}} is kept as metadata.
EmbeddingTable read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

// Packed form: "EMB1", u32 dim (LE), then per record u32 id length, id bytes,
// dim float32 values (LE). For the token kind repeated ids append rows.
EmbeddingTable read_embeddings_binary(std::istream& in, EmbeddingKind kind);
void write_embeddings_binary(std::ostream& out, const EmbeddingTable& table);

// Picks the reader from the first four bytes.
EmbeddingTable load_embeddings(const std::string& path,
                               EmbeddingKind binary_kind = EmbeddingKind::kCaption);

struct ScoreChannel {
  std::string name;
  std::map<std::string, double> values;
  std::string header;

  std::optional<double> get(const std::string& sample_id) const;
};

struct ChannelLoad {
  ScoreChannel channel;
  std::vector<std::string> missing;  // declared ids without a value
};

// Lines of {"sample_id", "value"}. Non-finite values (including the NaN and
// Infinity tokens some writers emit) are rejected naming the sample.
ScoreChannel read_score_channel(std::istream& in, const std::string& name);
ChannelLoad load_score_channel(const std::string& path, const std::string& name,
                               const std::vector<std::string>& declared_ids = {});
void write_score_channel(std::ostream& out, const ScoreChannel& channel);

}  // namespace vcreval::embed
