// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tsmixer {

// Exception taxonomy. The CLI maps each kind onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "internal"; }
  virtual int exit_code() const noexcept { return 1; }
};

// Invalid configuration, variant name, or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
  int exit_code() const noexcept override { return 2; }
};

// Unreadable, malformed, or too-short input data.
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
  int exit_code() const noexcept override { return 3; }
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  const char* kind() const noexcept override { return "divergence"; }
  int exit_code() const noexcept override { return 4; }
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Tensor shape or axis misuse inside the numeric core.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
  int exit_code() const noexcept override { return 2; }
};

}  // namespace tsmixer
