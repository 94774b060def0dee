#pragma once

#include "crm/text_signals.hpp"

#include <chrono>
#include <string>

namespace crm {

// Remote sentence encoder reached over a single HTTP POST endpoint.
//
// Request:  {"texts": ["...", ...]}
// Response: {"embeddings": [[...], ...], "dim": D}, one vector per text,
//           in request order.
//
// A non-200 status, a malformed body, a vector count or dimension that does
// not match throws Error(EmbedderFailure | DimensionMismatch). Nothing is
// ever silently zero-filled.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string url, std::size_t dim,
               std::chrono::milliseconds timeout = std::chrono::seconds(30));

  std::string name() const override { return "http:" + url_; }
  std::size_t dimension() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::string url_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
};

}  // namespace crm
