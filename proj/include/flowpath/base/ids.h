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

#ifndef FLOWPATH_BASE_IDS_H_
#define FLOWPATH_BASE_IDS_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace flowpath {

// Integer identifier that does not implicitly convert between domains.
template <typename Tag>
class StrongId {
 public:
  constexpr StrongId() = default;
  constexpr explicit StrongId(int64_t value) : value_(value) {}

  constexpr int64_t value() const { return value_; }
  constexpr bool valid() const { return value_ >= 0; }

  friend constexpr auto operator<=>(StrongId, StrongId) = default;

  template <typename H>
  friend H AbslHashValue(H h, StrongId id) {
    return H::combine(std::move(h), id.value_);
  }

  friend std::ostream& operator<<(std::ostream& os, StrongId id) {
    return os << id.value_;
  }

 private:
  int64_t value_ = -1;
};

using DeviceId = StrongId<struct DeviceTag>;
using HostId = StrongId<struct HostTag>;
using IslandId = StrongId<struct IslandTag>;
using ProcessId = StrongId<struct ProcessTag>;
using ClientId = StrongId<struct ClientTag>;
using InstanceId = StrongId<struct InstanceTag>;
using NodeId = StrongId<struct NodeTag>;
using SliceId = StrongId<struct SliceTag>;
using KernelId = StrongId<struct KernelTag>;
using AllocationId = StrongId<struct AllocationTag>;
using CollectiveId = StrongId<struct CollectiveTag>;

}  // namespace flowpath

template <typename Tag>
struct std::hash<flowpath::StrongId<Tag>> {
  size_t operator()(flowpath::StrongId<Tag> id) const noexcept {
    return std::hash<int64_t>()(id.value());
  }
};

#endif  // FLOWPATH_BASE_IDS_H_
