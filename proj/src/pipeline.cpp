#include "crm/pipeline.hpp"

#include "crm/aggregator.hpp"
#include "crm/agents.hpp"
#include "crm/error.hpp"
#include "crm/structure.hpp"
#include "crm/http_embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace crm {

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.url.empty()) return std::make_unique<HashedBowEmbedder>(config.dim);
  return std::make_unique<HttpEmbedder>(config.url, config.dim,
                                        std::chrono::milliseconds(config.timeout_ms));
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

ScoringRun score_lines(std::span<const std::string> lines, const Config& config,
                       const Embedder& embedder, const PreferenceRanker& ranker) {
  ScoringRun run;
  run.config = config;
  run.input_lines = lines.size();

  struct Pending {
    std::size_t line;
    Rollout rollout;
  };
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<Pending>> groups;
  std::vector<LineError> errors;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) {
      errors.push_back({line_no, "", "MalformedRecord: blank line"});
      continue;
    }
    try {
      Rollout r = decode_rollout(lines[i]);
      // Ungrouped rollouts get a key no group_id can collide with.
      std::string key = r.prompt.group_id ? "g:" + *r.prompt.group_id : "line:" + std::to_string(line_no);
      if (!groups.contains(key)) group_order.push_back(key);
      groups[key].push_back({line_no, std::move(r)});
    } catch (const Error& e) {
      std::string id;
      try {
        auto j = Json::parse(lines[i]);
        if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
      } catch (const std::exception&) {
      }
      errors.push_back({line_no, id, e.what()});
    }
  }

  ScoringState state(config.engine);
  std::vector<ScoredRecord> records;
  for (const auto& key : group_order) {
    const auto& members = groups[key];
    std::vector<Rollout> group;
    group.reserve(members.size());
    for (const auto& m : members) group.push_back(m.rollout);
    try {
      auto scored = score_rollout_group(group, config.engine, embedder, ranker, state);
      for (std::size_t k = 0; k < members.size(); ++k) {
        records.push_back({members[k].line, std::move(scored[k])});
      }
    } catch (const GroupScoringError& e) {
      std::map<std::string, std::string> reasons(e.failures().begin(), e.failures().end());
      for (const auto& m : members) {
        auto it = reasons.find(m.rollout.id());
        errors.push_back({m.line, m.rollout.id(), it != reasons.end() ? it->second : e.what()});
      }
    } catch (const Error& e) {
      for (const auto& m : members) errors.push_back({m.line, m.rollout.id(), e.what()});
    }
  }

  auto by_line = [](const auto& a, const auto& b) { return a.line < b.line; };
  std::sort(records.begin(), records.end(), by_line);
  std::sort(errors.begin(), errors.end(), by_line);
  run.records = std::move(records);
  run.errors = std::move(errors);
  return run;
}

Json run_header_json(const std::string& input, const Config& config) {
  Json header;
  header["kind"] = "run_header";
  header["input"] = input;
  header["config"] = serialize_config(config);
  return header;
}

void write_run(std::ostream& out, const ScoringRun& run) {
  out << run_header_json(run.input, run.config).dump() << '\n';
  auto rec = run.records.begin();
  auto err = run.errors.begin();
  while (rec != run.records.end() || err != run.errors.end()) {
    bool take_record = err == run.errors.end() || (rec != run.records.end() && rec->line < err->line);
    if (take_record) {
      Json j;
      j["kind"] = "record";
      j["line"] = rec->line;
      const Json body = breakdown_to_json(rec->breakdown);
      for (const auto& [k, v] : body.items()) j[k] = v;
      out << j.dump() << '\n';
      ++rec;
    } else {
      Json j;
      j["kind"] = "error";
      j["line"] = err->line;
      j["id"] = err->id;
      j["error"] = err->message;
      out << j.dump() << '\n';
      ++err;
    }
  }
}

ScoringRun score_file(const std::filesystem::path& input, const std::filesystem::path& output,
                      const Config& config) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read input " + input.string(), "input");
  auto lines = read_lines(in);

  auto embedder = make_embedder(config.embedder);
  SimilarityRanker ranker;
  ScoringRun run = score_lines(lines, config, *embedder, ranker);
  run.input = input.string();

  std::ostringstream buf;
  write_run(buf, run);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write output " + output.string(), "output");
  out << buf.str();
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "failed writing output " + output.string(), "output");
  return run;
}

LoadedRun load_scored(std::istream& in) {
  LoadedRun loaded;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(in)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what(),
                  "line " + std::to_string(line_no));
    }
    const std::string kind = j.is_object() ? j.value("kind", std::string("record")) : "";
    if (kind == "run_header") {
      if (j.contains("config") && j["config"].is_string()) loaded.config = parse_config(j["config"].get<std::string>());
    } else if (kind == "error") {
      ++loaded.errors;
    } else if (kind == "record") {
      loaded.records.push_back(breakdown_from_json(j));
    } else {
      throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": unrecognized object",
                  "line " + std::to_string(line_no));
    }
  }
  return loaded;
}

// ------------------------------------------------------------------- report

namespace {

ColumnSummary summarize(std::string name, const std::vector<std::optional<double>>& values) {
  ColumnSummary col;
  col.name = std::move(name);
  col.total = values.size();
  std::vector<double> present;
  for (const auto& v : values) {
    if (v) present.push_back(*v);
  }
  col.applicable = present.size();
  if (present.empty()) return col;
  const double n = static_cast<double>(present.size());
  double sum = 0.0;
  for (double v : present) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : present) sq += (v - mean) * (v - mean);
  col.mean = mean;
  col.stddev = std::sqrt(sq / n);
  col.min = *std::min_element(present.begin(), present.end());
  col.max = *std::max_element(present.begin(), present.end());
  return col;
}

std::string fmt(const std::optional<double>& v, const char* format) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, format, *v);
  return buf;
}

}  // namespace

Report build_report(std::span<const RewardBreakdown> records) {
  if (records.empty()) throw Error(ErrorKind::NoRecords, "report needs at least one record", "records");
  Report report;
  report.records = records.size();

  for (Component c : kAllComponents) {
    std::vector<std::optional<double>> values;
    for (const auto& r : records) values.push_back(r.components[c]);
    report.columns.push_back(summarize(std::string(to_string(c)), values));
  }
  std::vector<std::optional<double>> collab, pre, fused;
  for (const auto& r : records) {
    collab.emplace_back(r.collab);
    pre.emplace_back(r.pre_squash);
    fused.emplace_back(r.fused);
  }
  report.columns.push_back(summarize("collab", collab));
  report.columns.push_back(summarize("pre_squash", pre));
  report.columns.push_back(summarize("fused", fused));

  for (Agent a : kAllAgents) {
    bool seen = false;
    std::vector<std::optional<double>> values;
    for (const auto& r : records) {
      std::optional<double> v;
      for (const auto& rep : r.reports) {
        if (rep.agent != a) continue;
        seen = true;
        if (rep.applicable) v = rep.score;
      }
      values.push_back(v);
    }
    if (seen) report.columns.push_back(summarize("agent." + std::string(to_string(a)), values));
  }

  RankerConsistency consistency;
  bool any_ranker = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& ri = records[i].components[Component::Ranker];
    if (!ri) continue;
    any_ranker = true;
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      const auto& rj = records[j].components[Component::Ranker];
      if (!rj || *ri == *rj) continue;
      ++consistency.pairs;
      if ((*ri > *rj) == (records[i].fused > records[j].fused)) ++consistency.concordant;
    }
  }
  if (any_ranker) report.ranker = consistency;
  return report;
}

std::string report_text(const Report& report) {
  std::ostringstream out;
  char line[256];
  out << "records: " << report.records << "\n";
  std::snprintf(line, sizeof line, "%-20s %8s %10s %10s %10s %10s\n", "column", "applic.", "mean", "stddev",
                "min", "max");
  out << line;
  for (const auto& c : report.columns) {
    std::snprintf(line, sizeof line, "%-20s %7.1f%% %10s %10s %10s %10s\n", c.name.c_str(),
                  100.0 * c.applicability(), fmt(c.mean, "%.6f").c_str(), fmt(c.stddev, "%.6f").c_str(),
                  fmt(c.min, "%.6f").c_str(), fmt(c.max, "%.6f").c_str());
    out << line;
  }
  if (report.ranker) {
    std::snprintf(line, sizeof line, "ranker/fused concordance: %zu of %zu pairs (%.1f%%)\n",
                  report.ranker->concordant, report.ranker->pairs, 100.0 * report.ranker->rate());
    out << line;
  }
  return out.str();
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << "column,total,applicable,applicability,mean,stddev,min,max\n";
  for (const auto& c : report.columns) {
    out << c.name << ',' << c.total << ',' << c.applicable << ',' << fmt(c.applicability(), "%.17g") << ','
        << fmt(c.mean, "%.17g") << ',' << fmt(c.stddev, "%.17g") << ',' << fmt(c.min, "%.17g") << ','
        << fmt(c.max, "%.17g") << '\n';
  }
  return out.str();
}

// --------------------------------------------------------------- synthesize

SynthesisRun synthesize_lines(std::span<const std::string> lines, int count, std::uint64_t seed) {
  SynthesisRun run;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j;
    j["line"] = i + 1;
    try {
      if (trim(lines[i]).empty()) throw Error(ErrorKind::MalformedRecord, "blank line", "line");
      Rollout r = decode_rollout(lines[i]);
      j["id"] = r.id();
      Json negatives = Json::array();
      for (const auto& p : synthesize_perturbations(r.reference, count, seed)) {
        Json n;
        n["kind"] = std::string(to_string(p.kind));
        n["text"] = p.text;
        negatives.push_back(std::move(n));
      }
      j["negatives"] = std::move(negatives);
    } catch (const Error& e) {
      j["error"] = e.what();
      ++run.errors;
    }
    run.outputs.push_back(std::move(j));
  }
  return run;
}

}  // namespace crm
