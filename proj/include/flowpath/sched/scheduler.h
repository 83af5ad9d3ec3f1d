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

#ifndef FLOWPATH_SCHED_SCHEDULER_H_
#define FLOWPATH_SCHED_SCHEDULER_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/owner.h"
#include "flowpath/base/time.h"
#include "flowpath/hardware/fabric.h"
#include "flowpath/simcore/simulator.h"
#include "json.hpp"

namespace flowpath {

enum class SharePolicy { kFifo, kProportional };

struct SchedulerConfig {
  SharePolicy policy = SharePolicy::kFifo;
  std::map<int64_t, int> weights;  // client id -> weight, default 1
  // Released-but-unfinished gangs allowed per device; 0 means unbounded.
  int window = 0;
  Duration decision = Micros(10);  // per decision round
  Duration per_gang = Duration(0);
  Duration per_host = Duration(0);  // per host notified of a gang

  int weight(ClientId c) const;
  static absl::StatusOr<SchedulerConfig> FromJson(const nlohmann::json& j, const std::string& path);
  nlohmann::json ToJson() const;
};

// One gang-scheduled computation: a kernel on every listed device.
struct GangSpec {
  InstanceId instance;
  ClientId client;
  NodeId node;
  std::vector<DeviceId> devices;
  std::vector<HostId> hosts;  // distinct hosts of `devices`
  // Per device (parallel to `devices`), the buffer sizes to reserve.
  std::vector<std::vector<int64_t>> hbm;
  Duration duration{0};  // busy time charged to the client
  OwnerLabel owner;
};

struct GangGrant {
  uint64_t ticket = 0;
  InstanceId instance;
  NodeId node;
  absl::Status status;
  // Parallel to GangSpec::hbm; zero-byte requests get no allocation.
  std::vector<std::vector<std::optional<AllocationId>>> allocations;
};

struct TicketRecord {
  uint64_t ticket = 0;
  InstanceId instance;
  ClientId client;
  NodeId node;
  std::vector<DeviceId> devices;
  VirtualTime released;
};

// Centralized per-island gang scheduler. Assigns island-wide tickets whose
// order every device follows, and reserves each gang's HBM atomically in
// ticket order.
class GangScheduler {
 public:
  using GrantFn = std::function<void(const GangGrant&)>;

  GangScheduler(Simulator* sim, Fabric* fabric, IslandId island, SchedulerConfig config,
                GrantFn on_grant);
  GangScheduler(const GangScheduler&) = delete;
  GangScheduler& operator=(const GangScheduler&) = delete;

  ProcessId process() const { return process_; }
  IslandId island() const { return island_; }
  const SchedulerConfig& config() const { return config_; }

  // The following are invoked when the corresponding message is delivered
  // to the scheduler process.

  // Announces a program's gangs in dispatch order. Entries with ready=false
  // are placeholders completed later by SubmitGang.
  struct Slot {
    GangSpec spec;
    bool ready = true;
  };
  absl::Status SubmitProgram(InstanceId instance, ClientId client, std::vector<Slot> slots);
  // Completes a placeholder (sequential dispatch).
  void SubmitGang(InstanceId instance, NodeId node);
  void GangFinished(uint64_t ticket);
  // Drops queued gangs of the instance; returns their node ids.
  std::vector<NodeId> CancelInstance(InstanceId instance);

  int64_t tickets_issued() const { return next_ticket_; }
  int64_t messages_received() const { return messages_; }
  int64_t decision_rounds() const { return rounds_; }
  int queued() const;
  const std::vector<TicketRecord>& ticket_log() const { return log_; }
  // Busy time charged per client so far.
  const std::map<ClientId, Duration>& charged() const { return charged_; }

 private:
  struct Queued {
    uint64_t seq = 0;
    Slot slot;
    std::vector<std::vector<std::optional<AllocationId>>> allocations;
  };
  struct ClientQueue {
    std::deque<Queued> gangs;
    int64_t pass = 0;
  };

  void Kick();
  void Round();
  // Picks gangs to release now, in ticket order.
  std::vector<Queued> Select();
  bool Releasable(const Slot& s, const std::set<DeviceId>& claimed) const;
  bool HbmFits(const GangSpec& spec) const;
  absl::Status HbmPossible(const GangSpec& spec) const;
  void ReserveNow(Queued& q);
  void Release(Queued q, VirtualTime at);

  Simulator* sim_;
  Fabric* fabric_;
  IslandId island_;
  SchedulerConfig config_;
  GrantFn on_grant_;
  ProcessId process_;

  std::map<ClientId, ClientQueue> queues_;
  uint64_t next_seq_ = 0;
  int64_t global_pass_ = 0;
  std::map<DeviceId, int> in_flight_;
  std::map<uint64_t, std::vector<DeviceId>> released_;
  std::set<InstanceId> cancelled_;
  std::map<std::pair<int64_t, int64_t>, int> early_;  // SubmitGang before SubmitProgram
  VirtualTime cpu_free_;
  bool round_pending_ = false;
  bool hbm_blocked_ = false;
  uint64_t next_ticket_ = 0;
  int64_t messages_ = 0;
  int64_t rounds_ = 0;
  std::vector<TicketRecord> log_;
  std::map<ClientId, Duration> charged_;
};

}  // namespace flowpath

#endif  // FLOWPATH_SCHED_SCHEDULER_H_
