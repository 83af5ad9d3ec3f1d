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

#ifndef FLOWPATH_BASE_OWNER_H_
#define FLOWPATH_BASE_OWNER_H_

#include <compare>
#include <cstdint>
#include <string>

#include "absl/strings/str_cat.h"
#include "flowpath/base/ids.h"

namespace flowpath {

// Ownership label used for garbage collection of buffers after failures.
struct OwnerLabel {
  enum class Kind { kClient, kInstance };
  Kind kind = Kind::kClient;
  int64_t id = -1;

  static OwnerLabel Client(ClientId c) { return {Kind::kClient, c.value()}; }
  static OwnerLabel Instance(InstanceId i) { return {Kind::kInstance, i.value()}; }

  friend auto operator<=>(const OwnerLabel&, const OwnerLabel&) = default;

  std::string ToString() const {
    return absl::StrCat(kind == Kind::kClient ? "client:" : "instance:", id);
  }
};

}  // namespace flowpath

#endif  // FLOWPATH_BASE_OWNER_H_
