// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

namespace tsmixer {

using WarningSink = std::function<void(const std::string&)>;

// Routes non-fatal diagnostics. The default sink writes to stderr.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace tsmixer
