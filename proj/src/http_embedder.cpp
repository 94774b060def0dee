#include "crm/http_embedder.hpp"

#include "crm/error.hpp"

#include "httplib.h"
#include "json.hpp"

namespace crm {

HttpEmbedder::HttpEmbedder(std::string url, std::size_t dim, std::chrono::milliseconds timeout)
    : url_(std::move(url)), dim_(dim), timeout_(timeout) {
  const auto scheme = url_.find("://");
  if (scheme == std::string::npos || url_.compare(0, scheme, "http") != 0) {
    throw Error(ErrorKind::InvalidValue, "embedder url must start with http://", "embedder.url");
  }
  const auto slash = url_.find('/', scheme + 3);
  origin_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
  if (dim_ < 1) throw Error(ErrorKind::InvalidValue, "embedding dimension must be >= 1", "text.embedding_dim");
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  const std::string one(text);
  return embed_batch(std::span<const std::string>(&one, 1)).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(std::span<const std::string> texts) const {
  nlohmann::json request;
  request["texts"] = std::vector<std::string>(texts.begin(), texts.end());

  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::EmbedderFailure,
                "embedder request to " + url_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::EmbedderFailure,
                "embedder at " + url_ + " answered HTTP " + std::to_string(res->status));
  }
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("embeddings") ||
      !body["embeddings"].is_array() || !body.contains("dim") || !body["dim"].is_number_integer()) {
    throw Error(ErrorKind::EmbedderFailure, "embedder at " + url_ + " returned a malformed body");
  }
  const auto reported_dim = body["dim"].get<long long>();
  if (reported_dim != static_cast<long long>(dim_)) {
    throw Error(ErrorKind::DimensionMismatch, "embedder at " + url_ + " reports dim " +
                                                  std::to_string(reported_dim) + ", configured " +
                                                  std::to_string(dim_));
  }
  const auto& rows = body["embeddings"];
  if (rows.size() != texts.size()) {
    throw Error(ErrorKind::EmbedderFailure, "embedder at " + url_ + " returned " +
                                                std::to_string(rows.size()) + " vectors for " +
                                                std::to_string(texts.size()) + " texts");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != dim_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "embedder at " + url_ + " returned a vector of the wrong dimension");
    }
    std::vector<double> values;
    values.reserve(dim_);
    for (const auto& v : row) {
      if (!v.is_number()) {
        throw Error(ErrorKind::EmbedderFailure, "embedder at " + url_ + " returned a non-numeric entry");
      }
      values.push_back(v.get<double>());
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

}  // namespace crm
