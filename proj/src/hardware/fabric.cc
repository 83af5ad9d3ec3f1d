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

#include "flowpath/hardware/fabric.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "flowpath/base/check.h"
#include "flowpath/base/digest.h"

namespace flowpath {

Fabric::Fabric(Simulator& sim, Topology topology) : sim_(sim), topology_(std::move(topology)) {
  for (const auto& d : topology_.devices()) {
    DeviceState state;
    state.process = sim_.AddProcess(ProcessKind::kDevice, absl::StrCat("device", d.id.value()));
    state.capacity = topology_.hbm_bytes();
    devices_.push_back(std::move(state));
  }
  sim_.AddBlockedProbe([this] { return HasBlockedDevice(); });
}

IslandId Fabric::AddIsland(const IslandConfig& island) {
  IslandId id = topology_.AddIsland(island);
  for (DeviceId d : topology_.island(id).devices) {
    DeviceState state;
    state.process = sim_.AddProcess(ProcessKind::kDevice, absl::StrCat("device", d.value()));
    state.capacity = topology_.hbm_bytes();
    devices_.push_back(std::move(state));
  }
  return id;
}

Future<KernelRecord> Fabric::EnqueueKernel(DeviceId device, KernelExec kernel) {
  FP_CHECK(topology_.has_device(device), "enqueue on unknown device");
  FP_CHECK(kernel.duration.count() >= 0, "negative kernel duration");
  KernelId id(next_kernel_++);
  if (kernel.collective) {
    auto& group = collectives_[kernel.collective->group];
    group.size = kernel.collective->size;
    group.members.push_back(id);
    FP_CHECK(static_cast<int>(group.members.size()) <= group.size,
             "collective group over-subscribed");
  }
  KernelState state;
  state.device = device;
  state.exec = std::move(kernel);
  state.enqueued = sim_.now();
  Future<KernelRecord> done = state.done.future();
  kernels_.emplace(id.value(), std::move(state));
  devices_[device.value()].queue.push_back(id);
  TryStart(device);
  return done;
}

void Fabric::SatisfyInput(KernelId id) {
  KernelState& k = kernels_.at(id.value());
  FP_CHECK(k.exec.pending_inputs > 0, "input satisfied twice");
  if (--k.exec.pending_inputs == 0) TryStart(k.device);
}

void Fabric::TryStart(DeviceId device) {
  DeviceState& dev = devices_[device.value()];
  if (dev.queue.empty()) return;
  const KernelId head = dev.queue.front();
  KernelState& k = kernels_.at(head.value());
  if (k.running || k.arrived || k.exec.pending_inputs > 0) return;
  if (!k.exec.collective) {
    StartKernel(head);
    return;
  }
  k.arrived = true;
  const CollectiveId group_id = k.exec.collective->group;
  CollectiveState& group = collectives_[group_id];
  group.arrived.push_back(head);
  if (static_cast<int>(group.arrived.size()) < group.size) return;
  // Rendezvous complete: every member starts now and ends together.
  Duration longest{0};
  for (KernelId m : group.arrived) longest = std::max(longest, kernels_.at(m.value()).exec.duration);
  std::vector<KernelId> members = std::move(group.arrived);
  collectives_.erase(group_id);
  for (KernelId m : members) {
    kernels_.at(m.value()).exec.duration = longest;
    StartKernel(m);
  }
}

void Fabric::StartKernel(KernelId id) {
  KernelState& k = kernels_.at(id.value());
  k.running = true;
  k.start = sim_.now();
  const DeviceState& dev = devices_[k.device.value()];
  sim_.ScheduleAfter(k.exec.duration, dev.process, "kernel_done",
                     DigestOf("kernel", k.exec.program.value(), k.exec.node.value(),
                              k.exec.shard),
                     [this, id] { FinishKernel(id); });
}

void Fabric::FinishKernel(KernelId id) {
  KernelState& k = kernels_.at(id.value());
  DeviceState& dev = devices_[k.device.value()];
  FP_CHECK(!dev.queue.empty() && dev.queue.front() == id, "kernel finished out of order");
  dev.queue.pop_front();
  KernelRecord record{id,
                      k.device,
                      topology_.device(k.device).host,
                      k.exec.program,
                      k.exec.client,
                      k.exec.node,
                      k.exec.shard,
                      std::move(k.exec.label),
                      k.enqueued,
                      k.start,
                      sim_.now()};
  const DeviceId device = k.device;
  Promise<KernelRecord> done = std::move(k.done);
  kernels_.erase(id.value());
  for (const auto& obs : kernel_observers_) obs(record);
  done.Set(std::move(record));
  TryStart(device);
}

Future<TransferRecord> Fabric::Transfer(DeviceId src, DeviceId dst, int64_t bytes) {
  FP_CHECK(topology_.has_device(src) && topology_.has_device(dst), "transfer on unknown device");
  FP_CHECK(bytes >= 0, "negative transfer size");
  const LinkClass& link = topology_.LinkBetween(src, dst);
  Promise<TransferRecord> done;
  TransferRecord record{src, dst, bytes, link.kind, sim_.now(),
                        sim_.now() + link.TransferTime(bytes)};
  sim_.Schedule(record.end, devices_[dst.value()].process, "transfer_done",
                DigestOf("transfer", src.value(), dst.value(), bytes),
                [this, done, record]() mutable {
                  for (const auto& obs : transfer_observers_) obs(record);
                  done.Set(record);
                });
  return done.future();
}

absl::StatusOr<HbmGrant> Fabric::AllocHbm(DeviceId device, int64_t bytes, OwnerLabel owner) {
  FP_CHECK(topology_.has_device(device), "alloc on unknown device");
  FP_CHECK(bytes >= 0, "negative allocation");
  DeviceState& dev = devices_[device.value()];
  if (bytes > dev.capacity) {
    return absl::ResourceExhaustedError(absl::StrCat("allocation of ", bytes,
                                                     " bytes exceeds HBM capacity ",
                                                     dev.capacity, " of device ",
                                                     device.value()));
  }
  if (CanAllocNow(device, bytes)) {
    return HbmGrant{false, Future<AllocationId>::Ready(Grant(device, bytes, owner))};
  }
  Promise<AllocationId> grant;
  Future<AllocationId> f = grant.future();
  dev.hbm_waiters.push_back({bytes, owner, std::move(grant)});
  return HbmGrant{true, std::move(f)};
}

bool Fabric::CanAllocNow(DeviceId device, int64_t bytes) const {
  const DeviceState& dev = devices_.at(device.value());
  return dev.hbm_waiters.empty() && dev.used + bytes <= dev.capacity;
}

AllocationId Fabric::Grant(DeviceId device, int64_t bytes, OwnerLabel owner) {
  devices_[device.value()].used += bytes;
  AllocationId id(static_cast<int64_t>(allocations_.size()));
  allocations_.push_back({device, bytes, owner, true});
  return id;
}

void Fabric::FreeHbm(AllocationId allocation) {
  FP_CHECK(allocation.valid() && allocation.value() < static_cast<int64_t>(allocations_.size()),
           "free of unknown allocation");
  Allocation& a = allocations_[allocation.value()];
  FP_CHECK(a.live, "double free of HBM allocation");
  a.live = false;
  devices_[a.device.value()].used -= a.bytes;
  ++free_count_;
  const DeviceId device = a.device;
  DrainWaiters(device);
  for (const auto& obs : free_observers_) obs(device);
}

void Fabric::DrainWaiters(DeviceId device) {
  DeviceState& dev = devices_[device.value()];
  while (!dev.hbm_waiters.empty() && dev.used + dev.hbm_waiters.front().bytes <= dev.capacity) {
    auto waiter = std::move(dev.hbm_waiters.front());
    dev.hbm_waiters.pop_front();
    waiter.grant.Set(Grant(device, waiter.bytes, waiter.owner));
  }
}

bool Fabric::allocation_live(AllocationId allocation) const {
  return allocations_.at(allocation.value()).live;
}
DeviceId Fabric::allocation_device(AllocationId allocation) const {
  return allocations_.at(allocation.value()).device;
}
int64_t Fabric::allocation_bytes(AllocationId allocation) const {
  return allocations_.at(allocation.value()).bytes;
}

bool Fabric::device_idle(DeviceId device) const { return devices_.at(device.value()).queue.empty(); }

bool Fabric::HasBlockedDevice() const {
  if (!sim_.idle()) return false;
  return std::any_of(devices_.begin(), devices_.end(),
                     [](const DeviceState& d) { return !d.queue.empty(); });
}

WaitForGraph Fabric::BuildWaitForGraph() const {
  WaitForGraph graph;
  graph.vertex_count = static_cast<int>(devices_.size());
  for (size_t d = 0; d < devices_.size(); ++d) {
    if (devices_[d].queue.empty()) continue;
    const KernelState& head = kernels_.at(devices_[d].queue.front().value());
    if (!head.arrived || head.running) continue;
    auto it = collectives_.find(head.exec.collective->group);
    if (it == collectives_.end()) continue;
    for (KernelId m : it->second.members) {
      const KernelState& member = kernels_.at(m.value());
      if (member.arrived) continue;
      graph.edges.push_back({static_cast<int>(d), static_cast<int>(member.device.value())});
    }
  }
  return graph;
}

}  // namespace flowpath
