#pragma once

#include "crm/model.hpp"

#include "json.hpp"

#include <string>
#include <string_view>

namespace crm {

using Json = nlohmann::ordered_json;

// Canonical JSONL rollout record:
//   {"id", "group_id"?, "prompt", "response",
//    "reference": {"final_answer", "intermediate_values": ["p/q"|"p", ...],
//                  "reference_text"?}}
// Decoding accepts keys in any order and integer intermediates given as JSON
// numbers; encoding always emits the canonical key order above.
Rollout rollout_from_json(const Json& record);
Json rollout_to_json(const Rollout& rollout);

// Single-line helpers. decode_rollout throws Error(MalformedRecord) on
// invalid JSON or missing/mistyped keys, and the validate_rollout errors on
// invariant violations.
Rollout decode_rollout(std::string_view line);
std::string encode_rollout(const Rollout& rollout);

Json breakdown_to_json(const RewardBreakdown& breakdown);
RewardBreakdown breakdown_from_json(const Json& record);

}  // namespace crm
