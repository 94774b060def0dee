#include "crm/config.hpp"

#include "crm/error.hpp"
#include "crm/structure.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <type_traits>
#include <sstream>
#include <vector>

namespace crm {

namespace {

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void invalid(const std::string& key, const Entry& e, const std::string& constraint) {
  throw Error(ErrorKind::InvalidValue,
              "line " + std::to_string(e.line) + ": " + key + " = '" + e.value + "' " + constraint, key);
}

double as_double(const std::string& key, const Entry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) invalid(key, e, "is not a number");
  return v;
}

// Parsed directly at the target type so that out-of-range values are caught
// instead of truncated, and the full uint64 seed range round-trips.
template <typename T>
T as_integer(const std::string& key, const Entry& e, T minimum) {
  T v{};
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  const std::string bound = "must be >= " + std::to_string(minimum);
  if (ec == std::errc::result_out_of_range) invalid(key, e, "is out of range");
  if (ec != std::errc() || ptr != last) {
    if (std::is_unsigned_v<T> && !e.value.empty() && e.value.front() == '-') invalid(key, e, bound);
    invalid(key, e, "is not an integer");
  }
  if (v < minimum) invalid(key, e, bound);
  return v;
}

bool as_bool(const std::string& key, const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  invalid(key, e, "must be true or false");
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::vector<std::string> as_list(const Entry& e) {
  std::string_view s = trim(e.value);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto item = unquote(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

using Setter = std::function<void(Config&, const std::string&, const Entry&)>;

Setter real(double Config::*) = delete;

template <typename Get>
Setter nonneg(Get get) {
  return [get](Config& c, const std::string& k, const Entry& e) {
    double v = as_double(k, e);
    if (!(v >= 0.0) || !std::isfinite(v)) invalid(k, e, "must be finite and nonnegative");
    get(c) = v;
  };
}

template <typename Get>
Setter positive(Get get) {
  return [get](Config& c, const std::string& k, const Entry& e) {
    double v = as_double(k, e);
    if (!(v > 0.0) || !std::isfinite(v)) invalid(k, e, "must be finite and positive");
    get(c) = v;
  };
}

template <typename Get>
Setter finite(Get get) {
  return [get](Config& c, const std::string& k, const Entry& e) {
    double v = as_double(k, e);
    if (!std::isfinite(v)) invalid(k, e, "must be finite");
    get(c) = v;
  };
}

template <typename Get>
Setter unit_interval(Get get) {
  return [get](Config& c, const std::string& k, const Entry& e) {
    double v = as_double(k, e);
    if (!(v >= 0.0 && v <= 1.0)) invalid(k, e, "must lie in [0, 1]");
    get(c) = v;
  };
}

template <typename T, typename Get>
Setter at_least(Get get, T minimum) {
  return [get, minimum](Config& c, const std::string& k, const Entry& e) { get(c) = as_integer<T>(k, e, minimum); };
}

template <typename Get>
Setter boolean(Get get) {
  return [get](Config& c, const std::string& k, const Entry& e) { get(c) = as_bool(k, e); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["weights.alpha"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.alpha; });
    t["weights.beta"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.beta; });
    t["weights.gamma"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.gamma; });
    t["weights.delta"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.delta; });
    t["weights.eta"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.eta; });
    t["weights.enhanced"] = nonneg([](Config& c) -> double& { return c.engine.fusion.weights.w_enhanced; });
    for (const char* name : {"analyzer", "optimizer", "assessor", "synthesizer", "ranker"}) {
      std::string n = name;
      t["weights.lambda." + n] =
          nonneg([n](Config& c) -> double& { return c.engine.fusion.weights.lambda[n]; });
    }
    t["agents.roster"] = [](Config& c, const std::string& k, const Entry& e) {
      std::vector<Agent> roster;
      for (const auto& item : as_list(e)) {
        auto agent = parse_agent(item);
        if (!agent) invalid(k, e, "names unknown agent '" + item + "'");
        roster.push_back(*agent);
      }
      try {
        validate_roster(roster);
      } catch (const Error& err) {
        invalid(k, e, std::string(err.what()).substr(std::string(to_string(err.kind())).size() + 2));
      }
      c.engine.fusion.weights.roster = std::move(roster);
    };
    t["fusion.adaptive_normalization"] =
        boolean([](Config& c) -> bool& { return c.engine.fusion.weights.adaptive_normalization; });
    t["fusion.use_cosine_scaling"] = boolean([](Config& c) -> bool& { return c.engine.fusion.use_cosine_scaling; });
    t["fusion.normalization_window"] = at_least<std::size_t>(
        [](Config& c) -> std::size_t& { return c.engine.fusion.normalization_window; }, 2);

    t["text.ngram"] = at_least<int>([](Config& c) -> int& { return c.engine.agents.signals.ngram; }, 1);
    t["text.max_length"] =
        at_least<std::size_t>([](Config& c) -> std::size_t& { return c.engine.agents.signals.max_length; }, 1);
    t["text.target_steps"] =
        at_least<int>([](Config& c) -> int& { return c.engine.agents.signals.target_steps; }, 1);
    t["text.cosine.min_correct"] = finite([](Config& c) -> double& { return c.engine.agents.signals.cosine.min_correct; });
    t["text.cosine.max_correct"] = finite([](Config& c) -> double& { return c.engine.agents.signals.cosine.max_correct; });
    t["text.cosine.min_wrong"] = finite([](Config& c) -> double& { return c.engine.agents.signals.cosine.min_wrong; });
    t["text.cosine.max_wrong"] = finite([](Config& c) -> double& { return c.engine.agents.signals.cosine.max_wrong; });

    t["agents.optimizer.w_diversity"] = nonneg([](Config& c) -> double& { return c.engine.agents.optimizer.w_diversity; });
    t["agents.optimizer.w_efficiency"] = nonneg([](Config& c) -> double& { return c.engine.agents.optimizer.w_efficiency; });
    t["agents.optimizer.w_repetition"] = nonneg([](Config& c) -> double& { return c.engine.agents.optimizer.w_repetition; });
    t["agents.synthesizer.count"] =
        at_least<int>([](Config& c) -> int& { return c.engine.agents.synthesizer.count; }, 1);
    t["agents.synthesizer.seed"] =
        at_least<std::uint64_t>([](Config& c) -> std::uint64_t& { return c.engine.agents.synthesizer.seed; }, 0);
    t["agents.analyzer.v_min"] = nonneg([](Config& c) -> double& { return c.engine.agents.analyzer.v_min; });
    t["agents.analyzer.z_max"] = positive([](Config& c) -> double& { return c.engine.agents.analyzer.z_max; });
    t["agents.analyzer.epsilon"] = positive([](Config& c) -> double& { return c.engine.agents.analyzer.epsilon; });
    t["agents.analyzer.window"] =
        at_least<std::size_t>([](Config& c) -> std::size_t& { return c.engine.agents.analyzer.window; }, 1);

    t["embedder.url"] = [](Config& c, const std::string&, const Entry& e) { c.embedder.url = unquote(e.value); };
    t["embedder.dim"] = at_least<std::size_t>([](Config& c) -> std::size_t& { return c.embedder.dim; }, 1);
    t["embedder.timeout_ms"] = at_least<int>([](Config& c) -> int& { return c.embedder.timeout_ms; }, 1);

    t["train.lr_policy"] = nonneg([](Config& c) -> double& { return c.train.lr_policy; });
    t["train.lr_value"] = nonneg([](Config& c) -> double& { return c.train.lr_value; });
    t["train.gamma"] = unit_interval([](Config& c) -> double& { return c.train.gamma; });
    t["train.lambda"] = unit_interval([](Config& c) -> double& { return c.train.lambda; });
    t["train.episodes"] = at_least<int>([](Config& c) -> int& { return c.train.episodes; }, 1);
    t["train.seed"] = at_least<std::uint64_t>([](Config& c) -> std::uint64_t& { return c.train.seed; }, 0);
    t["train.temperature"] = positive([](Config& c) -> double& { return c.train.temperature; });
    return t;
  }();
  return table;
}

}  // namespace

Config parse_config(std::string_view text) {
  Config config;
  config.engine.fusion.weights = default_weights();
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (auto hash = line.find(" #"); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 'key = value'",
                  "line " + std::to_string(line_no));
    }
    std::string key(trim(line.substr(0, eq)));
    Entry entry{std::string(trim(line.substr(eq + 1))), line_no};
    if (key.empty()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty key",
                  "line " + std::to_string(line_no));
    }
    auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorKind::UnknownKey, "line " + std::to_string(line_no) + ": unknown key '" + key + "'", key);
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": key '" + key + "' set twice", key);
    }
    it->second(config, key, entry);
  }
  validate(config.engine);
  rl::validate(config.train);
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path.string(), path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  auto put = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
  auto num = [&](const std::string& k, double v) { put(k, format_double(v)); };
  auto flag = [&](const std::string& k, bool v) { put(k, v ? "true" : "false"); };
  const auto& w = c.engine.fusion.weights;
  num("weights.alpha", w.alpha);
  num("weights.beta", w.beta);
  num("weights.gamma", w.gamma);
  num("weights.delta", w.delta);
  num("weights.eta", w.eta);
  num("weights.enhanced", w.w_enhanced);
  for (const auto& [name, value] : w.lambda) num("weights.lambda." + name, value);
  std::string roster;
  for (Agent a : w.roster) roster += (roster.empty() ? "" : ",") + std::string(to_string(a));
  put("agents.roster", roster);
  flag("fusion.adaptive_normalization", w.adaptive_normalization);
  flag("fusion.use_cosine_scaling", c.engine.fusion.use_cosine_scaling);
  put("fusion.normalization_window", std::to_string(c.engine.fusion.normalization_window));
  const auto& s = c.engine.agents.signals;
  put("text.ngram", std::to_string(s.ngram));
  put("text.max_length", std::to_string(s.max_length));
  put("text.target_steps", std::to_string(s.target_steps));
  num("text.cosine.min_correct", s.cosine.min_correct);
  num("text.cosine.max_correct", s.cosine.max_correct);
  num("text.cosine.min_wrong", s.cosine.min_wrong);
  num("text.cosine.max_wrong", s.cosine.max_wrong);
  const auto& a = c.engine.agents;
  num("agents.optimizer.w_diversity", a.optimizer.w_diversity);
  num("agents.optimizer.w_efficiency", a.optimizer.w_efficiency);
  num("agents.optimizer.w_repetition", a.optimizer.w_repetition);
  put("agents.synthesizer.count", std::to_string(a.synthesizer.count));
  put("agents.synthesizer.seed", std::to_string(a.synthesizer.seed));
  num("agents.analyzer.v_min", a.analyzer.v_min);
  num("agents.analyzer.z_max", a.analyzer.z_max);
  num("agents.analyzer.epsilon", a.analyzer.epsilon);
  put("agents.analyzer.window", std::to_string(a.analyzer.window));
  put("embedder.url", c.embedder.url.empty() ? "\"\"" : c.embedder.url);
  put("embedder.dim", std::to_string(c.embedder.dim));
  put("embedder.timeout_ms", std::to_string(c.embedder.timeout_ms));
  num("train.lr_policy", c.train.lr_policy);
  num("train.lr_value", c.train.lr_value);
  num("train.gamma", c.train.gamma);
  num("train.lambda", c.train.lambda);
  put("train.episodes", std::to_string(c.train.episodes));
  put("train.seed", std::to_string(c.train.seed));
  num("train.temperature", c.train.temperature);
  return out.str();
}

}  // namespace crm
