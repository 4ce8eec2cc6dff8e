// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "mambagaze/error.hpp"

namespace mambagaze::detail {

/// `j[key]` as T, or `fallback` when absent. Unsigned fields reject negative
/// and fractional numbers instead of wrapping.
template <typename T>
T option(const nlohmann::json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    require(it->is_number_integer() && (it->is_number_unsigned() || it->template get<long long>() >= 0),
            ErrorCode::config,
            std::string("option '") + key + "' must be a non-negative integer");
  }
  return it->template get<T>();
}

}  // namespace mambagaze::detail
