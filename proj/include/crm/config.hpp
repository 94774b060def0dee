#pragma once

#include "crm/aggregator.hpp"
#include "crm/rl.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace crm {

struct EmbedderConfig {
  std::string url;  // empty selects the built-in hashed bag-of-words
  std::size_t dim = kDefaultEmbeddingDim;
  int timeout_ms = 30000;

  bool operator==(const EmbedderConfig&) const = default;
};

struct Config {
  EngineConfig engine;
  EmbedderConfig embedder;
  rl::TrainConfig train;

  bool operator==(const Config&) const = default;
};

inline constexpr const char* kConfigEnvVar = "CRM_CONFIG";

// Parses the flat dotted-key format:
//
//   # comment
//   weights.alpha = 1.0
//   agents.roster = analyzer,optimizer
//
// Missing keys keep their defaults. Throws Error(ParseError) with the line
// number, Error(UnknownKey), or Error(InvalidValue) naming the constraint.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

// Every key with its effective value, one per line in a fixed order.
// parse_config(serialize_config(c)) == c.
std::string serialize_config(const Config& config);

}  // namespace crm
