#pragma once

#include "crm/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crm::testing {

inline Rollout make_rollout(std::string id, std::string response, std::string final_answer = "4",
                            std::vector<Rational> intermediates = {},
                            std::optional<std::string> reference_text = std::nullopt,
                            std::optional<std::string> group_id = std::nullopt) {
  Rollout r;
  r.prompt = {std::move(id), "What is 2 + 2?", std::move(group_id)};
  r.response = std::move(response);
  r.reference = {std::move(final_answer), std::move(intermediates), std::move(reference_text)};
  return r;
}

inline std::string tagged(const std::string& think, const std::string& answer) {
  return "<think>" + think + "</think><answer>" + answer + "</answer>";
}

}  // namespace crm::testing
