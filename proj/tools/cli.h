// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace tsmixer::cli {

// Entry point of the `tsmixer` tool. Returns the process exit code:
// 0 ok, 1 internal error, 2 configuration error, 3 data error,
// 4 numeric divergence. Errors are also written to `err` as one JSON line.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsmixer::cli
