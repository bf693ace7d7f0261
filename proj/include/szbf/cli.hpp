// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

namespace szbf {

/// Entry point behind the szbf binary; args excludes the program name.
/// Exit codes: 0 = requested checks passed / run completed, 1 = a check
/// refuted (witness in the report), 2 = usage, model, or format error —
/// inconclusive checks also map to 2 with a diagnostic on stderr.
int run_cli(std::vector<std::string> args);

}  // namespace szbf
