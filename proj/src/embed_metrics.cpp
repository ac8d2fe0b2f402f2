#include "vcreval/embed_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vcreval/error.hpp"

namespace vcreval::embed {

void TokenMatrix::append_row(std::span<const double> v) {
  if (rows == 0 && dim == 0) dim = v.size();
  if (v.size() != dim) throw Error("token row dimension mismatch");
  data.insert(data.end(), v.begin(), v.end());
  ++rows;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                std::to_string(v.size()) + ")");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DegenerateError("cosine: zero vector");
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

double clip_score(std::span<const double> image, std::span<const double> caption, double w) {
  return w * std::max(cosine(image, caption), 0.0);
}

double clip_score_ref(std::span<const double> image, std::span<const double> caption,
                      const std::vector<std::span<const double>>& references, double w) {
  if (references.empty()) throw Error("clip_score_ref needs at least one reference embedding");
  const double clip_term = std::min(clip_score(image, caption, w), 1.0);
  double ref_term = 0.0;
  for (const auto& r : references) ref_term = std::max(ref_term, cosine(caption, r));
  if (clip_term <= 0.0 || ref_term <= 0.0) return 0.0;
  return 2.0 * clip_term * ref_term / (clip_term + ref_term);
}

BertScore bert_score_from_similarity(const std::vector<std::vector<double>>& sim) {
  if (sim.empty() || sim.front().empty()) throw Error("bert_score: empty token matrix");
  const std::size_t n = sim.size();
  const std::size_t m = sim.front().size();
  std::vector<double> col_max(m, -std::numeric_limits<double>::infinity());
  double p_sum = 0.0;
  for (const auto& row : sim) {
    if (row.size() != m) throw Error("bert_score: ragged similarity matrix");
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      row_max = std::max(row_max, row[j]);
      col_max[j] = std::max(col_max[j], row[j]);
    }
    p_sum += row_max;
  }
  double r_sum = 0.0;
  for (double c : col_max) r_sum += c;
  BertScore s;
  s.precision = p_sum / static_cast<double>(n);
  s.recall = r_sum / static_cast<double>(m);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

BertScore bert_score(const TokenMatrix& candidate, const TokenMatrix& reference) {
  if (candidate.rows == 0 || reference.rows == 0) throw Error("bert_score: empty token matrix");
  if (candidate.dim != reference.dim) throw Error("bert_score: dimension mismatch");
  std::vector<std::vector<double>> sim(candidate.rows, std::vector<double>(reference.rows));
  for (std::size_t i = 0; i < candidate.rows; ++i)
    for (std::size_t j = 0; j < reference.rows; ++j)
      sim[i][j] = cosine(candidate.row(i), reference.row(j));
  return bert_score_from_similarity(sim);
}

BertScore bert_score(const TokenMatrix& candidate,
                     const std::vector<const TokenMatrix*>& references) {
  if (references.empty()) throw Error("bert_score needs at least one reference");
  BertScore best;
  bool first = true;
  for (const TokenMatrix* r : references) {
    BertScore s = bert_score(candidate, *r);
    if (first || s.f1 > best.f1) best = s;
    first = false;
  }
  return best;
}

std::string to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kImage:
      return "image";
    case EmbeddingKind::kCaption:
      return "caption";
    case EmbeddingKind::kTokens:
      return "tokens";
  }
  return "caption";
}

EmbeddingKind parse_embedding_kind(const std::string& s) {
  if (s == "image") return EmbeddingKind::kImage;
  if (s == "caption") return EmbeddingKind::kCaption;
  if (s == "tokens" || s == "token-sequence") return EmbeddingKind::kTokens;
  throw Error("unknown embedding kind '" + s + "'");
}

void EmbeddingTable::add(const std::string& id, std::span<const double> v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_)
    throw Error("embedding '" + id + "' has dimension " + std::to_string(v.size()) +
                ", table has " + std::to_string(dim_));
  for (double x : v)
    if (!std::isfinite(x)) throw Error("embedding '" + id + "' has a non-finite entry");
  auto& m = rows_[id];
  if (kind_ != EmbeddingKind::kTokens && m.rows > 0)
    throw DuplicateIdError(id);
  m.append_row(v);
}

std::span<const double> EmbeddingTable::vector(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw MissingInputError(to_string(kind_) + " embedding", id);
  return it->second.row(0);
}

const TokenMatrix& EmbeddingTable::tokens(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw MissingInputError("token embeddings", id);
  return it->second;
}

std::optional<double> ScoreChannel::get(const std::string& sample_id) const {
  auto it = values.find(sample_id);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

}  // namespace vcreval::embed
