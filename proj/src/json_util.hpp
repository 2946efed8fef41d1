/*
 * Copyright 2026 The bopt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Field access on nlohmann::json that reports failures as bopt::Error with a
// field path instead of nlohmann's type_error.

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "bopt/error.hpp"
#include "bopt/gp.hpp"

namespace bopt::detail {

inline nlohmann::json parse(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
  }
}

inline void require_object(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object())
    throw Error(ErrorCode::InvalidArgument, (path.empty() ? "document" : path) + " must be an object",
                path);
}

template <class T>
T get(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw Error(ErrorCode::InvalidArgument, path + " is required", path);
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, path + " has the wrong type", path);
  }
}

template <class T>
T get_or(const nlohmann::json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return get<T>(obj, key, path);
}

nlohmann::json kernel_to_json(const KernelSpec& k);
/// Missing theta defaults to a quarter of the mean bound width.
KernelSpec kernel_from_json(const nlohmann::json& j, const Bounds& bounds);

}  // namespace bopt::detail
