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

#ifndef FLOWPATH_HARDWARE_FABRIC_H_
#define FLOWPATH_HARDWARE_FABRIC_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/base/future.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/owner.h"
#include "flowpath/base/time.h"
#include "flowpath/hardware/cluster.h"
#include "flowpath/simcore/simulator.h"
#include "flowpath/simcore/wait_for_graph.h"

namespace flowpath {

struct CollectiveSpec {
  CollectiveId group;
  int size = 1;  // number of member kernels across devices
};

// One shard of one node, as executed on one device. Kernels run to
// completion once started.
struct KernelExec {
  InstanceId program;
  ClientId client;
  NodeId node;
  int shard = 0;
  Duration duration{0};
  std::optional<CollectiveSpec> collective;
  // Number of SatisfyInput() calls required before the kernel may start.
  int pending_inputs = 0;
  std::string label;
};

struct KernelRecord {
  KernelId id;
  DeviceId device;
  HostId host;
  InstanceId program;
  ClientId client;
  NodeId node;
  int shard = 0;
  std::string label;
  VirtualTime enqueued;
  VirtualTime start;
  VirtualTime end;
};

struct TransferRecord {
  DeviceId src;
  DeviceId dst;
  int64_t bytes = 0;
  LinkKind link = LinkKind::kIci;
  VirtualTime start;
  VirtualTime end;
};

struct HbmGrant {
  bool would_block = false;
  Future<AllocationId> allocation;
};

// Devices, kernel queues, interconnect transfers and HBM accounting, driven
// by the simulator.
class Fabric {
 public:
  Fabric(Simulator& sim, Topology topology);
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  const Topology& topology() const { return topology_; }
  Simulator& sim() { return sim_; }

  // Appends devices of a new island.
  IslandId AddIsland(const IslandConfig& island);

  // Appends to the device FIFO. The future resolves at kernel completion.
  Future<KernelRecord> EnqueueKernel(DeviceId device, KernelExec kernel);
  void SatisfyInput(KernelId kernel);
  // Id the next EnqueueKernel call will assign.
  KernelId next_kernel_id() const { return KernelId(next_kernel_); }

  // ICI inside an island, DCN across islands. Transfers do not occupy the
  // kernel queue.
  Future<TransferRecord> Transfer(DeviceId src, DeviceId dst, int64_t bytes);

  // Requests larger than the device capacity fail permanently. Otherwise the
  // grant is immediate or queued FIFO until space frees.
  absl::StatusOr<HbmGrant> AllocHbm(DeviceId device, int64_t bytes, OwnerLabel owner);
  // True iff AllocHbm would grant immediately.
  bool CanAllocNow(DeviceId device, int64_t bytes) const;
  void FreeHbm(AllocationId allocation);
  bool allocation_live(AllocationId allocation) const;
  DeviceId allocation_device(AllocationId allocation) const;
  int64_t allocation_bytes(AllocationId allocation) const;

  int64_t hbm_capacity(DeviceId device) const { return devices_.at(device.value()).capacity; }
  int64_t hbm_used(DeviceId device) const { return devices_.at(device.value()).used; }
  int64_t hbm_free(DeviceId device) const { return hbm_capacity(device) - hbm_used(device); }
  int64_t free_count() const { return free_count_; }

  bool device_idle(DeviceId device) const;
  int queued_kernels(DeviceId device) const {
    return static_cast<int>(devices_.at(device.value()).queue.size());
  }
  // Some device has queued work that cannot make progress.
  bool HasBlockedDevice() const;
  // Edge a->b: device a waits inside a collective for a member queued on b.
  WaitForGraph BuildWaitForGraph() const;

  void AddKernelObserver(std::function<void(const KernelRecord&)> fn) {
    kernel_observers_.push_back(std::move(fn));
  }
  void AddTransferObserver(std::function<void(const TransferRecord&)> fn) {
    transfer_observers_.push_back(std::move(fn));
  }
  // Runs after every FreeHbm, once waiters on that device have been served.
  void AddFreeObserver(std::function<void(DeviceId)> fn) { free_observers_.push_back(std::move(fn)); }

 private:
  struct KernelState {
    DeviceId device;
    KernelExec exec;
    Promise<KernelRecord> done;
    VirtualTime enqueued;
    VirtualTime start;
    bool arrived = false;
    bool running = false;
  };
  struct DeviceState {
    ProcessId process;
    int64_t capacity = 0;
    int64_t used = 0;
    std::deque<KernelId> queue;  // head may be running or waiting
    struct Waiter {
      int64_t bytes;
      OwnerLabel owner;
      Promise<AllocationId> grant;
    };
    std::deque<Waiter> hbm_waiters;
  };
  struct CollectiveState {
    int size = 0;
    std::vector<KernelId> members;
    std::vector<KernelId> arrived;
  };
  struct Allocation {
    DeviceId device;
    int64_t bytes = 0;
    OwnerLabel owner;
    bool live = false;
  };

  void TryStart(DeviceId device);
  void StartKernel(KernelId id);
  void FinishKernel(KernelId id);
  AllocationId Grant(DeviceId device, int64_t bytes, OwnerLabel owner);
  void DrainWaiters(DeviceId device);

  Simulator& sim_;
  Topology topology_;
  std::vector<DeviceState> devices_;
  std::unordered_map<int64_t, KernelState> kernels_;  // live kernels only
  int64_t next_kernel_ = 0;
  std::map<CollectiveId, CollectiveState> collectives_;
  std::vector<Allocation> allocations_;
  int64_t free_count_ = 0;
  std::vector<std::function<void(const KernelRecord&)>> kernel_observers_;
  std::vector<std::function<void(const TransferRecord&)>> transfer_observers_;
  std::vector<std::function<void(DeviceId)>> free_observers_;
};

}  // namespace flowpath

#endif  // FLOWPATH_HARDWARE_FABRIC_H_
