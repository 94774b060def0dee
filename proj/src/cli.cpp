#include "crm/cli.hpp"

#include "crm/error.hpp"
#include "crm/pipeline.hpp"
#include "crm/rl.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace crm {

Config resolve_config(const std::optional<std::string>& flag_path) {
  if (flag_path) return load_config(*flag_path);
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return load_config(env);
  return parse_config("");
}

namespace {

double window_mean(const std::vector<rl::LogRow>& rows, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += rows[i].fused_reward;
  return end > begin ? sum / static_cast<double>(end - begin) : 0.0;
}

int run_score(const std::string& input, const std::optional<std::string>& config_path,
              const std::string& output, std::ostream& out) {
  Config config = resolve_config(config_path);
  ScoringRun run = score_file(input, output, config);
  out << "scored " << run.records.size() << " of " << run.input_lines << " lines";
  if (!run.errors.empty()) out << ", " << run.errors.size() << " errors";
  out << " -> " << output << "\n";
  return run.exit_code();
}

int run_report(const std::string& input, const std::optional<std::string>& csv_path, std::ostream& out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read input " + input, "input");
  LoadedRun loaded = load_scored(in);
  Report report = build_report(loaded.records);
  out << report_text(report);
  if (csv_path) {
    std::ofstream csv(*csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(ErrorKind::Io, "cannot write " + *csv_path, "csv");
    csv << report_csv(report);
    if (!csv.flush()) throw Error(ErrorKind::Io, "failed writing " + *csv_path, "csv");
  }
  return kExitOk;
}

int run_train(const std::optional<std::string>& config_path, const std::string& log_path,
              const std::optional<std::uint64_t>& seed, const std::optional<int>& episodes, std::ostream& out) {
  Config config = resolve_config(config_path);
  if (seed) config.train.seed = *seed;
  if (episodes) config.train.episodes = *episodes;
  rl::validate(config.train);

  rl::TrainingLog log = rl::train(rl::ToyEnv::standard(), config.train, config.engine);
  std::ofstream csv(log_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw Error(ErrorKind::Io, "cannot write " + log_path, "log");
  rl::write_log_csv(csv, log);
  if (!csv.flush()) throw Error(ErrorKind::Io, "failed writing " + log_path, "log");

  const auto& rows = log.rows;
  const std::size_t w = std::min<std::size_t>(500, rows.size());
  const auto& last = rows.back();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "episodes %zu  first-%zu mean %.4f  last-%zu mean %.4f  p_wellformed %.4f  p_correct %.4f\n",
                rows.size(), w, window_mean(rows, 0, w), w, window_mean(rows, rows.size() - w, rows.size()),
                last.p_wellformed, last.p_correct);
  out << buf;
  return kExitOk;
}

int run_synthesize(const std::string& input, int count, std::uint64_t seed, const std::string& output,
                   std::ostream& out) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read input " + input, "input");
  auto lines = read_lines(in);
  SynthesisRun run = synthesize_lines(lines, count, seed);
  std::ofstream file(output, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write " + output, "output");
  for (const auto& j : run.outputs) file << j.dump() << '\n';
  if (!file.flush()) throw Error(ErrorKind::Io, "failed writing " + output, "output");
  out << "synthesized negatives for " << (run.outputs.size() - run.errors) << " of " << run.outputs.size()
      << " lines -> " << output << "\n";
  return run.errors == 0 ? kExitOk : kExitWithErrors;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collaborative reward modeling: score rollouts, summarize runs, run the shaping demo."};
  app.name("crm");
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::string input, output;

  auto* score = app.add_subcommand("score", "Score a rollout JSONL file");
  score->add_option("--input", input, "Rollout JSONL")->required();
  score->add_option("--config", config_path, "Config file (default: $CRM_CONFIG, then built-in defaults)");
  score->add_option("--output", output, "Scored JSONL to write")->required();

  std::optional<std::string> csv_path;
  auto* report = app.add_subcommand("report", "Summarize a scored JSONL file");
  report->add_option("--input", input, "Scored JSONL")->required();
  report->add_option("--csv", csv_path, "Also write the summary as CSV");

  std::string log_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  auto* train = app.add_subcommand("train-demo", "Train the toy policy on the fused reward");
  train->add_option("--config", config_path, "Config file (default: $CRM_CONFIG, then built-in defaults)");
  train->add_option("--log", log_path, "Training log CSV to write")->required();
  train->add_option("--seed", seed, "Override train.seed");
  train->add_option("--episodes", episodes, "Override train.episodes");

  int count = 3;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synthesize", "Write counterfactual negatives for each rollout");
  synth->add_option("--input", input, "Rollout JSONL")->required();
  synth->add_option("--count", count, "Negatives per rollout")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Perturbation seed");
  synth->add_option("--output", output, "JSONL to write")->required();

  if (argc <= 1) {
    err << app.help();
    return kExitFatal;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitFatal;
  }

  try {
    if (*score) return run_score(input, config_path, output, out);
    if (*report) return run_report(input, csv_path, out);
    if (*train) return run_train(config_path, log_path, seed, episodes, out);
    if (*synth) return run_synthesize(input, count, synth_seed, output, out);
  } catch (const Error& e) {
    err << "crm: " << e.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& e) {
    err << "crm: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace crm
