// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <stdexcept>
#include <string>

namespace mambagaze {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode : int {
  ok = 0,
  dimension = 1,
  numeric_domain = 2,
  contract = 3,
  config = 4,
  schema = 5,
  empty_recording = 6,
  corruption = 7,
  degenerate_fold = 8,
  protocol = 9,
  io = 10,
  usage = 11,
  internal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mambagaze
