/* Copyright 2026 The Flowpath Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FLOWPATH_BASE_JSON_UTIL_H_
#define FLOWPATH_BASE_JSON_UTIL_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "flowpath/base/status_macros.h"
#include "json.hpp"

namespace flowpath::json_util {

using nlohmann::json;

inline absl::Status ParseError(const std::string& path, const std::string& what) {
  return absl::InvalidArgumentError(absl::StrCat("parse error at ", path, ": ", what));
}

inline std::string Child(const std::string& path, const std::string& key) {
  return absl::StrCat(path, "/", key);
}
inline std::string Child(const std::string& path, size_t index) {
  return absl::StrCat(path, "/", index);
}

inline absl::StatusOr<const json*> Field(const json& j, const std::string& key,
                                         const std::string& path) {
  if (!j.is_object()) return ParseError(path, "expected object");
  auto it = j.find(std::string(key));
  if (it == j.end()) return ParseError(Child(path, key), "missing field");
  return &*it;
}

inline absl::StatusOr<int64_t> Int(const json& j, const std::string& key, const std::string& path) {
  auto f = Field(j, key, path);
  if (!f.ok()) return f.status();
  if (!(*f)->is_number_integer()) return ParseError(Child(path, key), "expected integer");
  return (*f)->get<int64_t>();
}

inline absl::StatusOr<double> Number(const json& j, const std::string& key,
                                     const std::string& path) {
  auto f = Field(j, key, path);
  if (!f.ok()) return f.status();
  if (!(*f)->is_number()) return ParseError(Child(path, key), "expected number");
  return (*f)->get<double>();
}

inline absl::StatusOr<bool> Bool(const json& j, const std::string& key, const std::string& path) {
  auto f = Field(j, key, path);
  if (!f.ok()) return f.status();
  if (!(*f)->is_boolean()) return ParseError(Child(path, key), "expected boolean");
  return (*f)->get<bool>();
}

inline absl::StatusOr<std::string> String(const json& j, const std::string& key,
                                          const std::string& path) {
  auto f = Field(j, key, path);
  if (!f.ok()) return f.status();
  if (!(*f)->is_string()) return ParseError(Child(path, key), "expected string");
  return (*f)->get<std::string>();
}

inline absl::StatusOr<const json*> Array(const json& j, const std::string& key,
                                         const std::string& path) {
  auto f = Field(j, key, path);
  if (!f.ok()) return f.status();
  if (!(*f)->is_array()) return ParseError(Child(path, key), "expected array");
  return *f;
}

}  // namespace flowpath::json_util

#endif  // FLOWPATH_BASE_JSON_UTIL_H_
