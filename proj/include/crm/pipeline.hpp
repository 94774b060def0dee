#pragma once

#include "crm/config.hpp"
#include "crm/codec.hpp"
#include "crm/model.hpp"
#include "crm/text_signals.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crm {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitWithErrors = 1;
inline constexpr int kExitFatal = 2;

// Built-in hashed bag-of-words unless `embedder.url` is set.
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string id;        // empty when the line did not decode
  std::string message;
};

struct ScoredRecord {
  std::size_t line = 0;
  RewardBreakdown breakdown;
};

struct ScoringRun {
  std::string input;
  Config config;
  std::vector<ScoredRecord> records;  // input order
  std::vector<LineError> errors;      // input order
  std::size_t input_lines = 0;

  int exit_code() const { return errors.empty() ? kExitOk : kExitWithErrors; }
};

// Splits on '\n' (a trailing newline does not open a new line; "\r\n" is
// accepted). Every returned line must end up as a record or an error.
std::vector<std::string> read_lines(std::istream& in);

// Groups decoded rollouts by group_id (rollouts without one are singletons),
// scores groups in order of first appearance, and keeps records in input
// order. Undecodable lines and failed groups become errors.
ScoringRun score_lines(std::span<const std::string> lines, const Config& config,
                       const Embedder& embedder, const PreferenceRanker& ranker);

// Output JSONL: a run header carrying the effective configuration, then one
// object per input line, either a scored record or an error.
void write_run(std::ostream& out, const ScoringRun& run);

// Reads the input, scores it with the configured embedder and the similarity
// ranker, writes the output. Throws Error(Io) if either file is unusable.
ScoringRun score_file(const std::filesystem::path& input, const std::filesystem::path& output,
                      const Config& config);

// Header line of a scored file: {"kind":"run_header","input":...,"config":...}.
Json run_header_json(const std::string& input, const Config& config);

// Records and errors read back from a scored JSONL file.
struct LoadedRun {
  std::optional<Config> config;
  std::vector<RewardBreakdown> records;
  std::size_t errors = 0;
};
LoadedRun load_scored(std::istream& in);

// ------------------------------------------------------------------- report

struct ColumnSummary {
  std::string name;
  std::size_t total = 0;
  std::size_t applicable = 0;
  // Absent when the column never applied.
  std::optional<double> mean, stddev, min, max;

  double applicability() const {
    return total == 0 ? 0.0 : static_cast<double>(applicable) / static_cast<double>(total);
  }
};

// How well the ranker score agrees with the fused reward.
struct RankerConsistency {
  std::size_t pairs = 0;       // record pairs with distinct ranker scores
  std::size_t concordant = 0;  // ... ordered the same way by fused
  double rate() const {
    return pairs == 0 ? 0.0 : static_cast<double>(concordant) / static_cast<double>(pairs);
  }
};

struct Report {
  std::size_t records = 0;
  // Components in canonical order, then collab, pre_squash and fused, then
  // one "agent.<name>" column per agent seen, in canonical agent order.
  std::vector<ColumnSummary> columns;
  std::optional<RankerConsistency> ranker;
};

// Population statistics per column. Throws Error(NoRecords).
Report build_report(std::span<const RewardBreakdown> records);

std::string report_text(const Report& report);
// Header: column,total,applicable,applicability,mean,stddev,min,max.
// Absent statistics are written as NA.
std::string report_csv(const Report& report);

// --------------------------------------------------------------- synthesize

struct SynthesisRun {
  std::vector<Json> outputs;  // one per input line
  std::size_t errors = 0;
};

SynthesisRun synthesize_lines(std::span<const std::string> lines, int count, std::uint64_t seed);

}  // namespace crm
