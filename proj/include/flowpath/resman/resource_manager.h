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

#ifndef FLOWPATH_RESMAN_RESOURCE_MANAGER_H_
#define FLOWPATH_RESMAN_RESOURCE_MANAGER_H_

#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "flowpath/base/ids.h"
#include "flowpath/hardware/cluster.h"
#include "flowpath/ir/lowering.h"
#include "flowpath/ir/program.h"
#include "json.hpp"

namespace flowpath {

struct SliceGrant {
  SliceId id;
  SliceRequirement requirement;
  IslandId island;
  std::vector<DeviceId> devices;  // virtual device i -> devices[i]
};

// Maps virtual slices onto physical devices. Devices may be shared between
// slices unless a request is exclusive. Placement picks the least-loaded
// island, then the least-loaded devices in it, lowest ids first.
class ResourceManager {
 public:
  // All devices currently in `topology` start out available. The topology
  // must outlive the manager.
  explicit ResourceManager(const Topology* topology);

  absl::StatusOr<SliceGrant> AllocateSlice(const SliceRequirement& req);

  // As AllocateSlice, but waits for releases or added devices when the
  // request could fit on the available devices once they are unassigned.
  // `done` may run synchronously.
  void AllocateSliceWhenAvailable(const SliceRequirement& req,
                                  std::function<void(absl::StatusOr<SliceGrant>)> done);

  // All slices of a traced program, all-or-nothing.
  struct ProgramSlices {
    std::vector<SliceId> ids;
    SlicePlacement placement;
  };
  absl::StatusOr<ProgramSlices> AllocateProgram(const std::vector<SliceRequirement>& slices);
  absl::Status ReleaseProgram(const ProgramSlices& slices);

  absl::Status ReleaseSlice(SliceId id);
  // Fresh placement under current load, ignoring the slice's own assignment.
  absl::StatusOr<SliceGrant> Remap(SliceId id);

  // Running programs pin their slices; release and remap fail while pinned.
  absl::Status Pin(SliceId id);
  absl::Status Unpin(SliceId id);

  // Picks up devices appended to the topology since the last call.
  void SyncNewDevices();
  absl::Status RemoveDevices(const std::vector<DeviceId>& devices);

  void AddRemapListener(std::function<void(const SliceGrant&)> fn) {
    remap_listeners_.push_back(std::move(fn));
  }

  const SliceGrant* slice(SliceId id) const;
  int assignment_count(DeviceId device) const { return devices_.at(device.value()).slices; }
  bool available(DeviceId device) const { return devices_.at(device.value()).available; }
  std::vector<DeviceId> AvailableDevices() const;
  int pending_requests() const { return static_cast<int>(pending_.size()); }
  nlohmann::json DumpState() const;

 private:
  struct DeviceState {
    bool available = true;
    int slices = 0;
    bool exclusive = false;
  };
  struct SliceState {
    SliceGrant grant;
    int pins = 0;
  };
  struct Pending {
    SliceRequirement req;
    std::function<void(absl::StatusOr<SliceGrant>)> done;
  };

  bool Eligible(const DeviceState& d, bool exclusive) const;
  absl::StatusOr<SliceGrant> Place(const SliceRequirement& req) const;
  bool CouldEverFit(const SliceRequirement& req) const;
  void Assign(const SliceGrant& grant);
  void Unassign(const SliceGrant& grant);
  void RetryPending();

  const Topology* topology_;
  std::vector<DeviceState> devices_;
  std::map<SliceId, SliceState> slices_;
  int64_t next_slice_ = 0;
  std::deque<Pending> pending_;
  std::vector<std::function<void(const SliceGrant&)>> remap_listeners_;
};

}  // namespace flowpath

#endif  // FLOWPATH_RESMAN_RESOURCE_MANAGER_H_
