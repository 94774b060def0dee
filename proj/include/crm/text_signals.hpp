#pragma once

#include "crm/model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crm {

inline constexpr int kDefaultNgram = 3;
inline constexpr std::size_t kDefaultEmbeddingDim = 256;

// Lowercased (ASCII) whitespace-separated tokens.
std::vector<std::string> tokenize(std::string_view text);
std::size_t token_length(std::string_view text);

// 1 - distinct/total over word n-grams; 0 when the text has fewer than n tokens.
double repetition_penalty(std::string_view text, int n = kDefaultNgram);

struct CosineBounds {
  double min_correct = 0.1;
  double max_correct = 1.0;
  double min_wrong = -0.1;
  double max_wrong = -1.0;

  bool operator==(const CosineBounds&) const = default;
};

// Length-modulated accuracy: interpolates from the max bound at length 0 to
// the min bound at l_max along 0.5 * (1 + cos(pi * t)). Length is clamped to
// [0, l_max]. Throws Error(InvalidBounds) on non-finite bounds.
double cosine_length_scale(bool is_correct, std::size_t length, std::size_t l_max,
                           const CosineBounds& bounds = {});

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t dimension() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }
  bool is_zero() const noexcept { return norm_ == 0.0; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

// Sentence-embedding seam. Implementations must be deterministic and safe to
// call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  // One vector per text, order preserving. Remote embedders override this to
  // make a single round trip.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

// 64-bit FNV-1a, offset basis 0xcbf29ce484222325, prime 0x100000001b3.
std::uint64_t fnv1a64(std::string_view bytes);

// Token counts hashed into `dim` buckets (fnv1a64(token) mod dim), then
// L2-normalized. Empty text embeds to the zero vector.
EmbeddingVector embed_hashed_bow(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

class HashedBowEmbedder final : public Embedder {
 public:
  explicit HashedBowEmbedder(std::size_t dim = kDefaultEmbeddingDim);
  std::string name() const override { return "hashed-bow"; }
  std::size_t dimension() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

// Cosine of two embeddings clamped to [0, 1]; 0 if either is the zero vector.
// Throws Error(DimensionMismatch) when the dimensions differ.
double embedding_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Embeds through `embedder` and checks the returned dimension.
EmbeddingVector checked_embed(const Embedder& embedder, std::string_view text);
std::vector<EmbeddingVector> checked_embed_batch(const Embedder& embedder,
                                                 std::span<const std::string> texts);

double text_similarity(std::string_view a, std::string_view b, const Embedder& embedder);

// Cosine similarity of the prediction to the reference text; nullopt when
// there is no reference text.
std::optional<double> similarity_reward(std::string_view pred,
                                        const std::optional<std::string>& ref_text,
                                        const Embedder& embedder);

// Rank-normalized preference: ranks by base score descending, tied scores
// share the mean of their positions, rank k of G maps to (G-k)/(G-1).
// A singleton group scores 1. Throws Error(LengthMismatch).
std::vector<double> ranker_reward(std::span<const Rollout> group, std::span<const double> base_scores);

// Source of base scores for ranker_reward; swap in a learned preference model
// by implementing this.
class PreferenceRanker {
 public:
  virtual ~PreferenceRanker() = default;
  virtual std::string name() const = 0;
  // nullopt when the group cannot be scored (the ranker is then inapplicable).
  virtual std::optional<std::vector<double>> base_scores(std::span<const Rollout> group,
                                                         const Embedder& embedder) const = 0;
};

// Default ranker: similarity of each response to its reference text.
class SimilarityRanker final : public PreferenceRanker {
 public:
  std::string name() const override { return "similarity"; }
  std::optional<std::vector<double>> base_scores(std::span<const Rollout> group,
                                                 const Embedder& embedder) const override;
};

}  // namespace crm
