#include "crm/codec.hpp"

#include "crm/error.hpp"

namespace crm {

namespace {

const Json& require(const Json& obj, const char* key, Json::value_t type,
                    const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorKind::MalformedRecord, "missing key '" + path + "'", path);
  }
  if (it->type() != type) {
    throw Error(ErrorKind::MalformedRecord, "key '" + path + "' has the wrong type", path);
  }
  return *it;
}

std::optional<std::string> optional_string(const Json& obj, const char* key,
                                           const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorKind::MalformedRecord, "key '" + path + "' must be a string", path);
  }
  return it->get<std::string>();
}

Rational intermediate_from_json(const Json& value, const std::string& path) {
  if (value.is_number_integer()) return Rational(value.get<long long>());
  if (!value.is_string()) {
    throw Error(ErrorKind::MalformedRecord, path + " must be a string", path);
  }
  const auto text = value.get<std::string>();
  if (auto r = parse_rational(text)) return *r;
  std::string lowered;
  for (char c : text) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered.find("inf") != std::string::npos || lowered.find("nan") != std::string::npos) {
    throw Error(ErrorKind::NonFiniteIntermediate, path + " is not finite", path);
  }
  throw Error(ErrorKind::MalformedRecord, path + " is not a rational number", path);
}

}  // namespace

Rollout rollout_from_json(const Json& record) {
  if (!record.is_object()) {
    throw Error(ErrorKind::MalformedRecord, "record is not a JSON object");
  }
  Rollout r;
  r.prompt.id = require(record, "id", Json::value_t::string, "id").get<std::string>();
  r.prompt.text = require(record, "prompt", Json::value_t::string, "prompt").get<std::string>();
  r.prompt.group_id = optional_string(record, "group_id", "group_id");
  r.response = require(record, "response", Json::value_t::string, "response").get<std::string>();

  const Json& ref = require(record, "reference", Json::value_t::object, "reference");
  r.reference.final_answer =
      require(ref, "final_answer", Json::value_t::string, "reference.final_answer")
          .get<std::string>();
  if (auto it = ref.find("intermediate_values"); it != ref.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(ErrorKind::MalformedRecord, "intermediate_values must be an array",
                  "reference.intermediate_values");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      r.reference.intermediate_values.push_back(intermediate_from_json(
          (*it)[i], "reference.intermediate_values[" + std::to_string(i) + "]"));
    }
  }
  r.reference.reference_text =
      optional_string(ref, "reference_text", "reference.reference_text");
  validate_rollout(r);
  return r;
}

Json rollout_to_json(const Rollout& rollout) {
  Json out;
  out["id"] = rollout.prompt.id;
  if (rollout.prompt.group_id) out["group_id"] = *rollout.prompt.group_id;
  out["prompt"] = rollout.prompt.text;
  out["response"] = rollout.response;
  Json ref;
  ref["final_answer"] = rollout.reference.final_answer;
  Json values = Json::array();
  for (const auto& v : rollout.reference.intermediate_values) values.push_back(v.to_string());
  ref["intermediate_values"] = std::move(values);
  if (rollout.reference.reference_text) ref["reference_text"] = *rollout.reference.reference_text;
  out["reference"] = std::move(ref);
  return out;
}

Rollout decode_rollout(std::string_view line) {
  Json record = Json::parse(line.begin(), line.end(), nullptr, false);
  if (record.is_discarded()) {
    throw Error(ErrorKind::MalformedRecord, "line is not valid JSON");
  }
  return rollout_from_json(record);
}

std::string encode_rollout(const Rollout& rollout) { return rollout_to_json(rollout).dump(); }

Json breakdown_to_json(const RewardBreakdown& b) {
  Json out;
  out["id"] = b.rollout_id;
  Json components = Json::object();
  for (Component c : kAllComponents) {
    const auto& v = b.components[c];
    components[std::string(to_string(c))] = v ? Json(*v) : Json(nullptr);
  }
  out["components"] = std::move(components);
  Json excluded = Json::array();
  for (Component c : b.excluded) excluded.push_back(std::string(to_string(c)));
  out["excluded"] = std::move(excluded);
  Json agents = Json::object();
  for (const auto& report : b.reports) {
    Json a;
    a["score"] = report.score;
    a["applicable"] = report.applicable;
    a["diagnostics"] = Json::object();
    for (const auto& [k, v] : report.diagnostics) a["diagnostics"][k] = v;
    a["notes"] = report.notes;
    agents[std::string(to_string(report.agent))] = std::move(a);
  }
  out["agents"] = std::move(agents);
  out["agent_scores"] = Json::object();
  for (const auto& [k, v] : b.agent_scores) out["agent_scores"][k] = v;
  out["collab"] = b.collab;
  out["pre_squash"] = b.pre_squash;
  out["fused"] = b.fused;
  return out;
}

RewardBreakdown breakdown_from_json(const Json& record) {
  RewardBreakdown b;
  b.rollout_id = require(record, "id", Json::value_t::string, "id").get<std::string>();
  const Json& components = require(record, "components", Json::value_t::object, "components");
  for (Component c : kAllComponents) {
    auto it = components.find(std::string(to_string(c)));
    if (it != components.end() && it->is_number()) b.components[c] = it->get<double>();
  }
  if (auto it = record.find("excluded"); it != record.end()) {
    for (const auto& name : *it) {
      for (Component c : kAllComponents) {
        if (to_string(c) == name.get<std::string>()) b.excluded.push_back(c);
      }
    }
  }
  if (auto it = record.find("agents"); it != record.end()) {
    for (const auto& [name, a] : it->items()) {
      auto agent = parse_agent(name);
      if (!agent) {
        throw Error(ErrorKind::MalformedRecord, "unknown agent '" + name + "'", "agents");
      }
      AgentReport report;
      report.agent = *agent;
      report.score = a.at("score").get<double>();
      report.applicable = a.value("applicable", true);
      for (const auto& [k, v] : a.at("diagnostics").items()) report.diagnostics[k] = v.get<double>();
      report.notes = a.value("notes", std::vector<std::string>{});
      b.reports.push_back(std::move(report));
    }
  }
  if (auto it = record.find("agent_scores"); it != record.end()) {
    for (const auto& [k, v] : it->items()) b.agent_scores[k] = v.get<double>();
  }
  b.collab = record.value("collab", 0.0);
  b.pre_squash = record.value("pre_squash", 0.0);
  auto fused = record.find("fused");
  if (fused == record.end() || !fused->is_number()) {
    throw Error(ErrorKind::MalformedRecord, "missing or non-numeric 'fused'", "fused");
  }
  b.fused = fused->get<double>();
  return b;
}

}  // namespace crm
