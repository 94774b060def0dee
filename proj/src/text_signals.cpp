#include "crm/text_signals.hpp"

#include "crm/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace crm {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t token_length(std::string_view text) { return tokenize(text).size(); }

double repetition_penalty(std::string_view text, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidValue, "n-gram size must be >= 1", "text.ngram");
  const auto tokens = tokenize(text);
  const auto size = static_cast<std::size_t>(n);
  if (tokens.size() < size) return 0.0;
  const std::size_t total = tokens.size() - size + 1;
  std::set<std::vector<std::string_view>> distinct;
  for (std::size_t i = 0; i < total; ++i) {
    distinct.emplace(tokens.begin() + i, tokens.begin() + i + size);
  }
  return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double cosine_length_scale(bool is_correct, std::size_t length, std::size_t l_max,
                           const CosineBounds& bounds) {
  for (double b : {bounds.min_correct, bounds.max_correct, bounds.min_wrong, bounds.max_wrong}) {
    if (!std::isfinite(b)) throw Error(ErrorKind::InvalidBounds, "cosine bounds must be finite");
  }
  if (l_max < 1) throw Error(ErrorKind::InvalidValue, "l_max must be >= 1", "text.max_length");
  const double t = static_cast<double>(std::min(length, l_max)) / static_cast<double>(l_max);
  const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  if (is_correct) return bounds.min_correct + (bounds.max_correct - bounds.min_correct) * c;
  return bounds.min_wrong + (bounds.max_wrong - bounds.min_wrong) * c;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  norm_ = std::sqrt(sq);
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EmbeddingVector embed_hashed_bow(std::string_view text, std::size_t dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidValue, "embedding dimension must be >= 1", "text.embedding_dim");
  std::vector<double> counts(dim, 0.0);
  for (const auto& token : tokenize(text)) counts[fnv1a64(token) % dim] += 1.0;
  double sq = 0.0;
  for (double v : counts) sq += v * v;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (double& v : counts) v /= norm;
  }
  return EmbeddingVector(std::move(counts));
}

HashedBowEmbedder::HashedBowEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 1) throw Error(ErrorKind::InvalidValue, "embedding dimension must be >= 1", "text.embedding_dim");
}

EmbeddingVector HashedBowEmbedder::embed(std::string_view text) const {
  return embed_hashed_bow(text, dim_);
}

double embedding_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "embedding dimensions differ (" + std::to_string(a.dimension()) + " vs " +
                    std::to_string(b.dimension()) + ")");
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  const double dot =
      std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
  return std::clamp(dot / (a.norm() * b.norm()), 0.0, 1.0);
}

EmbeddingVector checked_embed(const Embedder& embedder, std::string_view text) {
  auto v = embedder.embed(text);
  if (v.dimension() != embedder.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "embedder '" + embedder.name() + "' returned dimension " +
                    std::to_string(v.dimension()) + ", expected " +
                    std::to_string(embedder.dimension()));
  }
  for (double x : v.values()) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::EmbedderFailure, "embedder '" + embedder.name() + "' returned a non-finite value");
    }
  }
  return v;
}

std::vector<EmbeddingVector> checked_embed_batch(const Embedder& embedder,
                                                 std::span<const std::string> texts) {
  auto vs = embedder.embed_batch(texts);
  if (vs.size() != texts.size()) {
    throw Error(ErrorKind::EmbedderFailure, "embedder '" + embedder.name() + "' returned " +
                                                std::to_string(vs.size()) + " vectors for " +
                                                std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : vs) {
    if (v.dimension() != embedder.dimension()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "embedder '" + embedder.name() + "' returned dimension " +
                      std::to_string(v.dimension()) + ", expected " +
                      std::to_string(embedder.dimension()));
    }
  }
  return vs;
}

double text_similarity(std::string_view a, std::string_view b, const Embedder& embedder) {
  return embedding_similarity(checked_embed(embedder, a), checked_embed(embedder, b));
}

std::optional<double> similarity_reward(std::string_view pred,
                                        const std::optional<std::string>& ref_text,
                                        const Embedder& embedder) {
  if (!ref_text) return std::nullopt;
  return text_similarity(pred, *ref_text, embedder);
}

std::vector<double> ranker_reward(std::span<const Rollout> group, std::span<const double> base_scores) {
  if (group.size() != base_scores.size()) {
    throw Error(ErrorKind::LengthMismatch, "ranker got " + std::to_string(group.size()) +
                                               " rollouts and " + std::to_string(base_scores.size()) +
                                               " base scores");
  }
  const std::size_t g = base_scores.size();
  if (g == 0) throw Error(ErrorKind::EmptyGroup, "ranker needs at least one rollout");
  for (double s : base_scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::NonFiniteInput, "ranker base score is not finite");
  }
  if (g == 1) return {1.0};

  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return base_scores[a] > base_scores[b]; });
  std::vector<double> out(g);
  std::size_t i = 0;
  while (i < g) {
    std::size_t j = i;
    while (j + 1 < g && base_scores[order[j + 1]] == base_scores[order[i]]) ++j;
    // positions i+1 .. j+1 (1-based) share their mean
    const double rank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    const double value = (static_cast<double>(g) - rank) / static_cast<double>(g - 1);
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = value;
    i = j + 1;
  }
  return out;
}

std::optional<std::vector<double>> SimilarityRanker::base_scores(std::span<const Rollout> group,
                                                                 const Embedder& embedder) const {
  std::vector<double> scores;
  for (const auto& r : group) {
    auto s = similarity_reward(r.response, r.reference.reference_text, embedder);
    if (!s) return std::nullopt;
    scores.push_back(*s);
  }
  return scores;
}

}  // namespace crm
