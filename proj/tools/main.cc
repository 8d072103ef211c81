// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.h"

int main(int argc, char** argv) { return tsmixer::cli::run_command(argc, argv, std::cout, std::cerr); }
