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

#ifndef FLOWPATH_EXEC_RUNTIME_H_
#define FLOWPATH_EXEC_RUNTIME_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "flowpath/base/future.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"
#include "flowpath/coord/batcher.h"
#include "flowpath/coord/progress.h"
#include "flowpath/exec/dispatch_plan.h"
#include "flowpath/exec/trace.h"
#include "flowpath/hardware/fabric.h"
#include "flowpath/ir/program.h"
#include "flowpath/sched/scheduler.h"
#include "flowpath/simcore/simulator.h"
#include "flowpath/store/object_store.h"
#include "json.hpp"

namespace flowpath {

struct HostCostModel {
  Duration client_rpc = Micros(50);     // client <-> scheduler or host
  Duration client_per_host = Duration(0);  // client CPU per host touched by a call
  Duration sched_to_host = Micros(50);  // either direction
  Duration host_to_host = Micros(50);
  Duration host_prep = Duration(0);     // per node, per host
  Duration pcie_enqueue = Micros(5);    // per kernel
  // Control messages modeled per edge: output future handoff, input
  // address exchange, ready notification.
  int control_messages_per_edge = 3;

  static absl::StatusOr<HostCostModel> FromJson(const nlohmann::json& j, const std::string& path);
  nlohmann::json ToJson() const;
};

struct RuntimeConfig {
  HostCostModel cost;
  SchedulerConfig sched;
  DispatchMode dispatch = DispatchMode::kParallel;
  // Batches non-critical host->client notifications when set.
  std::optional<BatchPolicy> batching;
  bool trace = false;
};

struct CallResult {
  InstanceId instance;
  std::vector<ObjectHandle> results;
  std::vector<uint64_t> result_digests;  // content digests, parallel to results
  int64_t kernels = 0;
  VirtualTime issued;
  VirtualTime enqueued;  // last kernel of the call reached its device queue
  VirtualTime first_kernel_start;
  VirtualTime last_kernel_end;
  VirtualTime completed;  // done notification reached the client
};

struct CallHandles {
  InstanceId instance;
  // Result handles, once every kernel of the call is enqueued.
  Future<std::vector<ObjectHandle>> enqueued;
  Future<CallResult> done;
};

// Single-controller runtime: clients, one gang scheduler per island and one
// executor per host, all exchanging messages through the simulator.
class Runtime {
 public:
  Runtime(Simulator* sim, Fabric* fabric, RuntimeConfig config);
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;
  ~Runtime();

  ClientId AddClient();
  ProcessId client_process(ClientId c) const { return clients_.at(c.value()).process; }

  // Issues a call at the current simulated time. `args` binds Arg nodes in
  // node order; unbound args are produced in place on their devices.
  absl::StatusOr<CallHandles> Call(ClientId client, std::shared_ptr<const ProgramGraph> lowered,
                                   std::vector<std::optional<ObjectHandle>> args = {});
  absl::Status ReleaseResult(ObjectHandle h);
  // Aborts the client's calls and collects everything it owns.
  void FailClient(ClientId client);

  const RuntimeConfig& config() const { return config_; }
  ObjectStore& store() { return store_; }
  const ObjectStore& store() const { return store_; }
  const GangScheduler& scheduler(IslandId island) const { return *schedulers_.at(island.value()); }
  const TraceLog& trace() const { return trace_; }
  const ProgressTracker& tracker() const { return tracker_; }
  int live_instances() const { return static_cast<int>(instances_.size()); }
  int64_t control_messages() const { return control_messages_; }
  int64_t client_messages() const { return client_messages_; }
  // Content digest of a buffer this runtime produced or was given.
  std::optional<uint64_t> content_digest(ObjectHandle h) const;

 private:
  struct ClientState {
    ProcessId process;
    VirtualTime cpu_free;
    bool failed = false;
  };
  struct HostTask {
    int priority = 0;  // lower runs first
    uint64_t seq = 0;
    Duration cost{0};
    TraceRecord trace;
    std::function<void()> done;
  };
  struct TicketArrival {
    InstanceId instance;
    NodeId node;
  };
  struct HostState {
    ProcessId process;
    bool busy = false;
    uint64_t next_task = 0;
    std::map<std::pair<int, uint64_t>, HostTask> tasks;
    std::deque<TicketArrival> tickets;  // ticket order
  };
  struct ShardState {
    bool input_ready = false;
    bool waiting = false;  // enqueued with an unsatisfied input
    bool done = false;
    std::optional<KernelId> kernel;
    std::optional<AllocationId> landing;
  };
  enum class NodePhase { kWaiting, kCancelled, kGranted, kDropped, kFinished };
  struct NodeState {
    DispatchMode mode = DispatchMode::kParallel;
    IslandId island;
    std::vector<HostId> hosts;                 // ascending
    std::map<HostId, std::vector<int>> shards_on;
    std::set<HostId> prepped;
    std::map<HostId, int> handoffs;            // sequential nodes
    int prepared_acks = 0;                     // at the leader
    int enqueued_acks = 0;                     // at the leader
    std::set<HostId> enqueued;
    bool enqueue_started = false;
    NodePhase phase = NodePhase::kWaiting;
    std::optional<GangGrant> grant;
    std::vector<ObjectHandle> outputs;
    std::vector<uint64_t> output_digests;
    std::vector<ShardState> shards;
    int shards_done = 0;
    int compute_producers = 0;
    std::vector<NodeId> sequential_consumers;
    bool window_released = false;
    CollectiveId collective;
  };
  struct EdgeState {
    std::vector<bool> src_ready;
    // (destination host, source host) pairs whose input addresses arrived.
    std::set<std::pair<HostId, HostId>> addressed;
    std::map<int, int> punct_acks;  // src shard -> dst-host messages received
    std::vector<bool> started;      // per piece
    std::vector<std::vector<int>> by_src;           // src shard -> pieces
    // Non-local pieces by (destination host, source host).
    std::map<std::pair<HostId, HostId>, std::vector<int>> by_hosts;
    int dst_hosts = 0;
  };
  struct Instance {
    InstanceId id;
    ClientId client;
    std::shared_ptr<const ProgramGraph> graph;
    std::vector<std::optional<ObjectHandle>> bound;  // per node, Arg only
    std::vector<NodeState> nodes;
    std::vector<EdgeState> edges;
    std::vector<HostId> hosts;  // every host touched
    std::set<HostId> instantiated;
    std::set<IslandId> islands;
    std::set<IslandId> submitted;
    HostId last_host;
    std::map<int64_t, int> result_ready;  // result node -> ready shards
    int compute_nodes = 0;
    int nodes_enqueued = 0;
    int nodes_finished = 0;
    int results_ready = 0;
    int result_shards = 0;
    bool failed = false;
    absl::Status failure;
    CallResult result;
    Promise<std::vector<ObjectHandle>> enqueued;
    Promise<CallResult> done;
  };

  // Messaging helpers.
  void SendHost(HostId from, HostId to, std::string_view kind, uint64_t digest,
                std::function<void()> fn);
  void SendScheduler(HostId from, IslandId island, std::string_view kind, uint64_t digest,
                     std::function<void()> fn);
  void SendToClient(HostId from, ClientId client, std::string_view kind, uint64_t digest,
                    std::function<void()> fn, bool critical);
  void AddTask(HostId host, int priority, Duration cost, TraceRecord trace,
               std::function<void()> done);
  void RunNextTask(HostId host);

  // Adds executors and schedulers for islands added since construction.
  void SyncTopology();
  Instance* Find(InstanceId id);
  HostId Leader(const NodeState& n) const { return n.hosts.front(); }

  void OnInstantiate(InstanceId id, HostId host);
  void StartPrep(Instance& inst, NodeId node, HostId host);
  void OnPrepDone(InstanceId id, NodeId node, HostId host);
  void OnPreparedAck(InstanceId id, NodeId node);
  void OnGrant(const GangGrant& grant);
  void OnTicket(InstanceId id, NodeId node, HostId host);
  void Pump(HostId host);
  void DropNode(Instance& inst, NodeId node);
  void Enqueue(Instance& inst, NodeId node, HostId host);
  void OnEnqueued(InstanceId id, NodeId node, HostId host);
  void OnEnqueuedAck(InstanceId id, NodeId node);
  void OnHandoff(InstanceId id, NodeId node, HostId host);
  void SendAddresses(Instance& inst, NodeId node, HostId host);
  void OnAddress(InstanceId id, int edge, HostId dst_host, HostId src_host);
  void StartTransfer(Instance& inst, int edge, int piece);
  void SourceShardReady(Instance& inst, NodeId node, int shard);
  void TryStartPieces(Instance& inst, int edge);
  void DeliverTuple(Instance& inst, int edge, const ReshardingSpec::Piece& piece);
  void OnPunctuationMessage(InstanceId id, int edge, int src_shard);
  void OnShardReady(const ShardReady& r);
  void OnKernelDone(InstanceId id, NodeId node, int shard, const KernelRecord& rec);
  void NodeFinished(Instance& inst, NodeId node);
  void CheckComplete(Instance& inst);
  void FailInstance(Instance& inst, absl::Status status);
  void MaybeFinalizeFailed(Instance& inst);
  void Finalize(Instance& inst);

  Simulator* sim_;
  Fabric* fabric_;
  RuntimeConfig config_;
  ObjectStore store_;
  ProgressTracker tracker_;
  std::unique_ptr<MessageBatcher> batcher_;
  std::vector<std::unique_ptr<GangScheduler>> schedulers_;
  std::vector<ClientState> clients_;
  std::vector<HostState> hosts_;
  std::map<InstanceId, std::unique_ptr<Instance>> instances_;
  std::map<uint64_t, uint64_t> digests_;  // handle id -> content digest
  int64_t next_instance_ = 0;
  uint64_t next_transfer_ = 0;
  int64_t next_collective_ = 0;
  int64_t control_messages_ = 0;
  int64_t client_messages_ = 0;
  TraceLog trace_;
  std::shared_ptr<bool> alive_;
};

}  // namespace flowpath

#endif  // FLOWPATH_EXEC_RUNTIME_H_
