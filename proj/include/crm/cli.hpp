#pragma once

#include "crm/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace crm {

// Config path precedence: explicit flag, then $CRM_CONFIG, then defaults.
Config resolve_config(const std::optional<std::string>& flag_path);

// Subcommands score, report, train-demo and synthesize. Returns 0 on
// success, 1 when the run completed with per-record errors, 2 on usage or
// fatal errors (reported on `err`).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crm
