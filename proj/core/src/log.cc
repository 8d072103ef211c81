// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/log.h"

#include <iostream>
#include <mutex>

namespace tsmixer {
namespace {

std::mutex g_sink_mutex;

WarningSink& sink() {
  static WarningSink s = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink new_sink) {
  std::lock_guard lock(g_sink_mutex);
  sink() = std::move(new_sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (sink()) sink()(message);
}

}  // namespace tsmixer
