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

#include "flowpath/exec/runtime.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "flowpath/base/check.h"
#include "flowpath/base/digest.h"
#include "flowpath/base/json_util.h"

namespace flowpath {
namespace {

// Content digest of output `k` of `fn` applied to `inputs`. A fused
// function repeats the step on its own output.
uint64_t ContentDigest(const CompiledFunction& fn, int k, const std::vector<uint64_t>& inputs) {
  Digest d;
  d.Bytes(fn.name).Int(k);
  for (uint64_t in : inputs) d.Int(in);
  uint64_t out = d.value();
  for (int i = 1; i < fn.fuses; ++i) out = Digest().Bytes(fn.name).Int(k).Int(out).value();
  return out;
}

}  // namespace

absl::StatusOr<HostCostModel> HostCostModel::FromJson(const nlohmann::json& j,
                                                      const std::string& path) {
  HostCostModel c;
  if (!j.is_object()) return json_util::ParseError(path, "expected object");
  auto micros = [&](const char* key, Duration& out) -> absl::Status {
    if (!j.contains(key)) return absl::OkStatus();
    FP_ASSIGN_OR_RETURN(double us, json_util::Number(j, key, path));
    if (us < 0) return json_util::ParseError(json_util::Child(path, key), "must be >= 0");
    out = Micros(us);
    return absl::OkStatus();
  };
  FP_RETURN_IF_ERROR(micros("client_rpc_us", c.client_rpc));
  FP_RETURN_IF_ERROR(micros("client_per_host_us", c.client_per_host));
  FP_RETURN_IF_ERROR(micros("sched_to_host_us", c.sched_to_host));
  FP_RETURN_IF_ERROR(micros("host_to_host_us", c.host_to_host));
  FP_RETURN_IF_ERROR(micros("host_prep_us", c.host_prep));
  FP_RETURN_IF_ERROR(micros("pcie_enqueue_us", c.pcie_enqueue));
  if (j.contains("control_messages_per_edge")) {
    FP_ASSIGN_OR_RETURN(int64_t n, json_util::Int(j, "control_messages_per_edge", path));
    if (n < 0) {
      return json_util::ParseError(json_util::Child(path, "control_messages_per_edge"),
                                   "must be >= 0");
    }
    c.control_messages_per_edge = static_cast<int>(n);
  }
  return c;
}

nlohmann::json HostCostModel::ToJson() const {
  return {{"client_rpc_us", ToMicros(client_rpc)},
          {"client_per_host_us", ToMicros(client_per_host)},
          {"sched_to_host_us", ToMicros(sched_to_host)},
          {"host_to_host_us", ToMicros(host_to_host)},
          {"host_prep_us", ToMicros(host_prep)},
          {"pcie_enqueue_us", ToMicros(pcie_enqueue)},
          {"control_messages_per_edge", control_messages_per_edge}};
}

Runtime::Runtime(Simulator* sim, Fabric* fabric, RuntimeConfig config)
    : sim_(sim),
      fabric_(fabric),
      config_(std::move(config)),
      store_(fabric),
      tracker_([this](const ShardReady& r) { OnShardReady(r); }),
      alive_(std::make_shared<bool>(true)) {
  if (config_.batching) batcher_ = std::make_unique<MessageBatcher>(sim_, *config_.batching);
  SyncTopology();
  fabric_->AddKernelObserver([this, alive = alive_](const KernelRecord& r) {
    if (!*alive || !config_.trace) return;
    trace_.Add({TraceCategory::kKernel, r.label, r.host.value(), r.device.value(), r.start, r.end,
                r.program, 0});
  });
  fabric_->AddTransferObserver([this, alive = alive_](const TransferRecord& r) {
    if (!*alive || !config_.trace) return;
    const Topology& topo = fabric_->topology();
    trace_.Add({TraceCategory::kTransfer,
                absl::StrCat(std::string(LinkKindName(r.link)), " ", r.bytes, "B"),
                topo.device(r.src).host.value(), r.src.value(), r.start, r.end, InstanceId(),
                next_transfer_++});
  });
}

Runtime::~Runtime() { *alive_ = false; }

void Runtime::SyncTopology() {
  const Topology& topo = fabric_->topology();
  while (hosts_.size() < topo.hosts().size()) {
    HostState h;
    h.process = sim_->AddProcess(ProcessKind::kHostExecutor, absl::StrCat("host", hosts_.size()));
    hosts_.push_back(std::move(h));
  }
  while (schedulers_.size() < topo.islands().size()) {
    const IslandId island(static_cast<int64_t>(schedulers_.size()));
    schedulers_.push_back(std::make_unique<GangScheduler>(
        sim_, fabric_, island, config_.sched, [this](const GangGrant& g) { OnGrant(g); }));
  }
}

ClientId Runtime::AddClient() {
  const ClientId id(static_cast<int64_t>(clients_.size()));
  ClientState c;
  c.process = sim_->AddProcess(ProcessKind::kClient, absl::StrCat("client", id.value()));
  clients_.push_back(c);
  return id;
}

std::optional<uint64_t> Runtime::content_digest(ObjectHandle h) const {
  auto it = digests_.find(h.id);
  if (it == digests_.end()) return std::nullopt;
  return it->second;
}

Runtime::Instance* Runtime::Find(InstanceId id) {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : it->second.get();
}

absl::StatusOr<CallHandles> Runtime::Call(ClientId client,
                                          std::shared_ptr<const ProgramGraph> lowered,
                                          std::vector<std::optional<ObjectHandle>> args) {
  SyncTopology();
  if (client.value() < 0 || client.value() >= static_cast<int64_t>(clients_.size())) {
    return absl::NotFoundError(absl::StrCat("unknown client ", client.value()));
  }
  ClientState& cs = clients_[client.value()];
  if (cs.failed) return absl::FailedPreconditionError("client has failed");
  if (lowered == nullptr || lowered->form != GraphForm::kLowered) {
    return absl::FailedPreconditionError("call needs a lowered program");
  }
  const ProgramGraph& g = *lowered;
  FP_RETURN_IF_ERROR(g.Validate());
  const Topology& topo = fabric_->topology();
  if (g.CountKind(NodeKind::kCompute) == 0) {
    return absl::InvalidArgumentError("program has no computations");
  }
  const int arg_count = g.CountKind(NodeKind::kArg);
  if (!args.empty() && static_cast<int>(args.size()) != arg_count) {
    return absl::InvalidArgumentError(
        absl::StrCat("program takes ", arg_count, " args; got ", args.size()));
  }
  for (const auto& a : args) {
    if (a && !store_.live(*a)) {
      return absl::NotFoundError(absl::StrCat("argument handle ", a->id, " is not live"));
    }
  }
  for (const Node& n : g.nodes) {
    if (static_cast<int>(n.devices.size()) != n.fn.shards) {
      return absl::InvalidArgumentError(absl::StrCat("node ", n.id.value(), " is not placed"));
    }
    for (DeviceId d : n.devices) {
      if (!topo.has_device(d)) {
        return absl::InvalidArgumentError(absl::StrCat("node ", n.id.value(),
                                                       " uses unknown device ", d.value()));
      }
    }
    if (n.kind == NodeKind::kResult) {
      const Edge& in = g.edges[g.InEdges(n.id).at(0)];
      if (g.node(in.src).kind != NodeKind::kCompute) {
        return absl::InvalidArgumentError(
            absl::StrCat("result node ", n.id.value(), " is not produced by a computation"));
      }
    }
    if (n.kind != NodeKind::kCompute) continue;
    // Reservation per device: outputs plus landing space for remote inputs.
    std::vector<int64_t> need(n.devices.size(), 0);
    for (size_t s = 0; s < n.devices.size(); ++s) {
      for (const TensorSpec& o : n.fn.outputs) need[s] += o.bytes;
    }
    for (int e : g.InEdges(n.id)) {
      for (const auto& p : g.edges[e].reshard->pieces) {
        if (p.link) need[p.dst] += p.bytes;
      }
    }
    for (size_t s = 0; s < n.devices.size(); ++s) {
      if (need[s] > fabric_->hbm_capacity(n.devices[s])) {
        return absl::ResourceExhaustedError(absl::StrCat(
            "capacity error: node ", n.id.value(), " needs ", need[s], " bytes on device ",
            n.devices[s].value(), " with capacity ", fabric_->hbm_capacity(n.devices[s])));
      }
    }
  }

  auto owned = std::make_unique<Instance>();
  Instance& inst = *owned;
  inst.id = InstanceId(next_instance_++);
  inst.client = client;
  inst.graph = lowered;
  inst.result.instance = inst.id;
  inst.result.issued = sim_->now();
  inst.bound.resize(g.nodes.size());
  inst.nodes.resize(g.nodes.size());
  inst.edges.resize(g.edges.size());
  const std::vector<DispatchMode> modes = NodeModes(g, config_.dispatch);
  std::set<HostId> all_hosts;
  int arg_index = 0;
  for (NodeId id : g.TopologicalOrder()) {
    const Node& n = g.node(id);
    NodeState& ns = inst.nodes[id.value()];
    ns.mode = modes[id.value()];
    ns.shards.resize(n.devices.size());
    std::set<HostId> hosts;
    for (size_t s = 0; s < n.devices.size(); ++s) {
      const HostId h = topo.device(n.devices[s]).host;
      hosts.insert(h);
      ns.shards_on[h].push_back(static_cast<int>(s));
    }
    ns.hosts.assign(hosts.begin(), hosts.end());
    all_hosts.insert(hosts.begin(), hosts.end());
    ns.island = topo.device(n.devices.at(0)).island;
    switch (n.kind) {
      case NodeKind::kArg: {
        const int index = arg_index++;
        if (!args.empty()) inst.bound[id.value()] = args[index];
        uint64_t digest = DigestOf("arg", index);
        if (inst.bound[id.value()]) {
          auto it = digests_.find(inst.bound[id.value()]->id);
          digest = it != digests_.end() ? it->second : DigestOf("handle", inst.bound[id.value()]->id);
        }
        ns.output_digests = {digest};
        break;
      }
      case NodeKind::kCompute: {
        ++inst.compute_nodes;
        inst.islands.insert(ns.island);
        std::vector<uint64_t> in_digests;
        std::set<int64_t> producers;
        for (int e : g.InEdges(id)) {
          const Edge& edge = g.edges[e];
          in_digests.push_back(inst.nodes[edge.src.value()].output_digests.at(edge.src_output));
          if (g.node(edge.src).kind == NodeKind::kCompute) producers.insert(edge.src.value());
        }
        ns.compute_producers = static_cast<int>(producers.size());
        for (int64_t p : producers) {
          if (ns.mode == DispatchMode::kSequential) {
            inst.nodes[p].sequential_consumers.push_back(id);
          }
        }
        for (size_t k = 0; k < n.fn.outputs.size(); ++k) {
          ns.output_digests.push_back(ContentDigest(n.fn, static_cast<int>(k), in_digests));
        }
        break;
      }
      case NodeKind::kResult:
        inst.result_shards += static_cast<int>(n.devices.size());
        break;
    }
  }
  inst.hosts.assign(all_hosts.begin(), all_hosts.end());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    EdgeState& es = inst.edges[e];
    const Node& src = g.node(edge.src);
    const Node& dst = g.node(edge.dst);
    es.src_ready.assign(src.devices.size(), false);
    es.started.assign(edge.reshard->pieces.size(), false);
    es.by_src.resize(src.devices.size());
    es.dst_hosts = static_cast<int>(inst.nodes[edge.dst.value()].hosts.size());
    for (size_t p = 0; p < edge.reshard->pieces.size(); ++p) {
      const auto& piece = edge.reshard->pieces[p];
      es.by_src[piece.src].push_back(static_cast<int>(p));
      if (piece.link) {
        es.by_hosts[{topo.device(dst.devices[piece.dst]).host, topo.device(src.devices[piece.src]).host}]
            .push_back(static_cast<int>(p));
      }
    }
  }
  FP_RETURN_IF_ERROR(tracker_.Instantiate(lowered.get(), inst.id));
  // Sources with statically known output sizes punctuate up front.
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    const Node& src = g.node(edge.src);
    if (src.kind == NodeKind::kCompute && !src.fn.regular) continue;
    std::vector<std::map<int, int64_t>> counts(src.devices.size());
    for (const auto& piece : edge.reshard->pieces) ++counts[piece.src][piece.dst];
    for (size_t s = 0; s < counts.size(); ++s) {
      absl::Status st = tracker_.OnPunctuation(
          {static_cast<int>(e), inst.id, static_cast<int>(s), std::move(counts[s])});
      FP_CHECK(st.ok(), st.ToString());
    }
  }
  for (const auto& a : args) {
    if (a) FP_CHECK(store_.AddRef(*a).ok(), "argument vanished");
  }

  CallHandles handles{inst.id, inst.enqueued.future(), inst.done.future()};
  const InstanceId id = inst.id;
  const VirtualTime start = Later(sim_->now(), cs.cpu_free);
  cs.cpu_free = start + config_.cost.client_per_host * static_cast<int64_t>(inst.hosts.size());
  instances_.emplace(id, std::move(owned));

  sim_->Schedule(cs.cpu_free, cs.process, "call", DigestOf("call", id.value()), [this, id] {
    Instance* inst = Find(id);
    if (inst == nullptr || inst->failed) return;
    const ProgramGraph& g = *inst->graph;
    const ProcessId from = clients_[inst->client.value()].process;
    for (HostId h : inst->hosts) {
      ++client_messages_;
      sim_->Send(from, hosts_[h.value()].process, config_.cost.client_rpc, "instantiate",
                 DigestOf("instantiate", id.value(), h.value()),
                 [this, id, h] { OnInstantiate(id, h); });
    }
    std::map<IslandId, std::vector<GangScheduler::Slot>> slots;
    for (NodeId nid : g.TopologicalOrder()) {
      const Node& n = g.node(nid);
      if (n.kind != NodeKind::kCompute) continue;
      const NodeState& ns = inst->nodes[nid.value()];
      GangSpec spec;
      spec.instance = id;
      spec.client = inst->client;
      spec.node = nid;
      spec.devices = n.devices;
      spec.hosts = ns.hosts;
      spec.duration = n.fn.per_shard;
      spec.owner = OwnerLabel::Instance(id);
      spec.hbm.assign(n.devices.size(), {});
      std::vector<int64_t> landing(n.devices.size(), 0);
      for (int e : g.InEdges(nid)) {
        for (const auto& p : g.edges[e].reshard->pieces) {
          if (p.link) landing[p.dst] += p.bytes;
        }
      }
      for (size_t s = 0; s < n.devices.size(); ++s) {
        for (const TensorSpec& o : n.fn.outputs) spec.hbm[s].push_back(o.bytes);
        spec.hbm[s].push_back(landing[s]);
      }
      slots[ns.island].push_back({std::move(spec), ns.mode == DispatchMode::kParallel});
    }
    for (auto& [island, island_slots] : slots) {
      ++client_messages_;
      GangScheduler* sched = schedulers_[island.value()].get();
      sim_->Send(from, sched->process(), config_.cost.client_rpc, "submit_program",
                 DigestOf("submit_program", id.value(), island.value()),
                 [this, id, island, sched, s = std::move(island_slots)]() mutable {
                   Instance* inst = Find(id);
                   if (inst == nullptr || inst->failed) return;
                   inst->submitted.insert(island);
                   absl::Status st = sched->SubmitProgram(id, inst->client, std::move(s));
                   if (!st.ok()) FailInstance(*inst, st);
                 });
    }
  });
  return handles;
}

void Runtime::SendHost(HostId from, HostId to, std::string_view kind, uint64_t digest,
                       std::function<void()> fn) {
  ++control_messages_;
  const Duration latency = from == to ? Duration(0) : config_.cost.host_to_host;
  sim_->Send(hosts_[from.value()].process, hosts_[to.value()].process, latency, kind, digest,
             std::move(fn));
}

void Runtime::SendScheduler(HostId from, IslandId island, std::string_view kind, uint64_t digest,
                            std::function<void()> fn) {
  sim_->Send(hosts_[from.value()].process, schedulers_[island.value()]->process(),
             config_.cost.sched_to_host, kind, digest, std::move(fn));
}

void Runtime::SendToClient(HostId from, ClientId client, std::string_view kind, uint64_t digest,
                           std::function<void()> fn, bool critical) {
  ++client_messages_;
  const ProcessId src = hosts_[from.value()].process;
  const ProcessId dst = clients_[client.value()].process;
  if (batcher_ != nullptr) {
    batcher_->Send(src, dst, config_.cost.client_rpc, critical, kind, digest, std::move(fn));
  } else {
    sim_->Send(src, dst, config_.cost.client_rpc, kind, digest, std::move(fn));
  }
}

void Runtime::AddTask(HostId host, int priority, Duration cost, TraceRecord trace,
                      std::function<void()> done) {
  HostState& h = hosts_[host.value()];
  const uint64_t seq = h.next_task++;
  h.tasks.emplace(std::make_pair(priority, seq),
                  HostTask{priority, seq, cost, std::move(trace), std::move(done)});
  RunNextTask(host);
}

void Runtime::RunNextTask(HostId host) {
  HostState& h = hosts_[host.value()];
  if (h.busy || h.tasks.empty()) return;
  auto node = h.tasks.extract(h.tasks.begin());
  h.busy = true;
  const VirtualTime start = sim_->now();
  sim_->ScheduleAfter(node.mapped().cost, h.process, "host_task", node.mapped().seq,
                      [this, host, start, task = std::move(node.mapped())]() mutable {
                        hosts_[host.value()].busy = false;
                        if (config_.trace && task.cost.count() > 0) {
                          task.trace.start = start;
                          task.trace.end = sim_->now();
                          trace_.Add(std::move(task.trace));
                        }
                        task.done();
                        RunNextTask(host);
                      });
}

void Runtime::OnInstantiate(InstanceId id, HostId host) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  inst->instantiated.insert(host);
  const ProgramGraph& g = *inst->graph;
  for (NodeId nid : g.TopologicalOrder()) {
    const Node& n = g.node(nid);
    NodeState& ns = inst->nodes[nid.value()];
    auto on = ns.shards_on.find(host);
    if (on == ns.shards_on.end()) continue;
    if (n.kind == NodeKind::kArg) {
      const std::vector<int> shards = on->second;
      if (!inst->bound[nid.value()]) {
        for (int s : shards) SourceShardReady(*inst, nid, s);
        continue;
      }
      store_.Resolve(*inst->bound[nid.value()])
          .OnReady([this, id, nid, shards](const absl::StatusOr<BufferView>& view) {
            Instance* inst = Find(id);
            if (inst == nullptr || inst->failed) return;
            if (!view.ok()) {
              FailInstance(*inst, view.status());
              return;
            }
            for (int s : shards) SourceShardReady(*inst, nid, s);
          });
      inst = Find(id);
      if (inst == nullptr || inst->failed) return;
      continue;
    }
    if (n.kind != NodeKind::kCompute) continue;
    if (ns.mode == DispatchMode::kParallel || ns.handoffs[host] == ns.compute_producers) {
      StartPrep(*inst, nid, host);
    }
  }
  Pump(host);
}

void Runtime::StartPrep(Instance& inst, NodeId node, HostId host) {
  const Node& n = inst.graph->node(node);
  const InstanceId id = inst.id;
  AddTask(host, 1, config_.cost.host_prep,
          {TraceCategory::kPrep, absl::StrCat("prep ", n.fn.name), host.value(), kHostLane, {},
           {}, id, 0},
          [this, id, node, host] { OnPrepDone(id, node, host); });
}

void Runtime::OnPrepDone(InstanceId id, NodeId node, HostId host) {
  Instance* inst = Find(id);
  if (inst == nullptr) return;
  NodeState& ns = inst->nodes[node.value()];
  ns.prepped.insert(host);
  if (ns.mode == DispatchMode::kSequential && !inst->failed) {
    SendHost(host, Leader(ns), "prepared", DigestOf("prepared", id.value(), node.value()),
             [this, id, node] { OnPreparedAck(id, node); });
  }
  Pump(host);
}

void Runtime::OnPreparedAck(InstanceId id, NodeId node) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  NodeState& ns = inst->nodes[node.value()];
  if (++ns.prepared_acks != static_cast<int>(ns.hosts.size())) return;
  GangScheduler* sched = schedulers_[ns.island.value()].get();
  SendScheduler(Leader(ns), ns.island, "submit_gang",
                DigestOf("submit_gang", id.value(), node.value()),
                [sched, id, node] { sched->SubmitGang(id, node); });
}

void Runtime::OnGrant(const GangGrant& grant) {
  Instance* inst = Find(grant.instance);
  if (inst == nullptr) {
    for (const auto& per_device : grant.allocations) {
      for (const auto& a : per_device) {
        if (a) fabric_->FreeHbm(*a);
      }
    }
    return;
  }
  NodeState& ns = inst->nodes[grant.node.value()];
  const Node& n = inst->graph->node(grant.node);
  if (!grant.status.ok()) {
    ns.phase = NodePhase::kDropped;
    FailInstance(*inst, grant.status);
    return;
  }
  ns.phase = NodePhase::kGranted;
  ns.grant = grant;
  ns.collective = CollectiveId(next_collective_++);
  const Topology& topo = fabric_->topology();
  for (size_t k = 0; k < n.fn.outputs.size(); ++k) {
    std::vector<ShardLocation> shards;
    for (size_t s = 0; s < n.devices.size(); ++s) {
      shards.push_back({topo.device(n.devices[s]).host, n.devices[s], n.fn.outputs[k].bytes,
                        grant.allocations[s][k]});
    }
    const ObjectHandle h =
        store_.Put(Leader(ns), std::move(shards), OwnerLabel::Instance(inst->id), false);
    digests_[h.id] = ns.output_digests[k];
    ns.outputs.push_back(h);
  }
  for (size_t s = 0; s < n.devices.size(); ++s) {
    ns.shards[s].landing = grant.allocations[s][n.fn.outputs.size()];
  }
  GangScheduler* sched = schedulers_[ns.island.value()].get();
  if (config_.trace) {
    const int64_t pid = static_cast<int64_t>(hosts_.size()) + ns.island.value();
    trace_.Add({TraceCategory::kSchedule, absl::StrCat("ticket ", grant.ticket, " ", n.fn.name),
                pid, 0, sim_->now(), sim_->now(), inst->id, 0});
  }
  const InstanceId id = inst->id;
  const NodeId node = grant.node;
  for (HostId h : ns.hosts) {
    sim_->Send(sched->process(), hosts_[h.value()].process, config_.cost.sched_to_host, "ticket",
               DigestOf("ticket", grant.ticket, h.value()),
               [this, id, node, h] { OnTicket(id, node, h); });
  }
}

void Runtime::OnTicket(InstanceId id, NodeId node, HostId host) {
  hosts_[host.value()].tickets.push_back({id, node});
  Pump(host);
}

void Runtime::Pump(HostId host) {
  HostState& hs = hosts_[host.value()];
  while (!hs.tickets.empty()) {
    const TicketArrival head = hs.tickets.front();
    Instance* inst = Find(head.instance);
    if (inst == nullptr) {
      hs.tickets.pop_front();
      continue;
    }
    NodeState& ns = inst->nodes[head.node.value()];
    if (inst->failed && !ns.enqueue_started) {
      hs.tickets.pop_front();
      DropNode(*inst, head.node);  // may retire the instance
      continue;
    }
    if (ns.prepped.count(host) == 0) return;
    hs.tickets.pop_front();
    ns.enqueue_started = true;
    Enqueue(*inst, head.node, host);
  }
}

void Runtime::DropNode(Instance& inst, NodeId node) {
  NodeState& ns = inst.nodes[node.value()];
  if (ns.phase != NodePhase::kGranted) return;
  ns.phase = NodePhase::kDropped;
  for (ShardState& s : ns.shards) {
    if (s.landing) fabric_->FreeHbm(*s.landing);
    s.landing.reset();
  }
  if (config_.sched.window > 0 && !ns.window_released) {
    ns.window_released = true;
    GangScheduler* sched = schedulers_[ns.island.value()].get();
    const uint64_t ticket = ns.grant->ticket;
    SendScheduler(Leader(ns), ns.island, "gang_finished", DigestOf("gang_finished", ticket),
                  [sched, ticket] { sched->GangFinished(ticket); });
  }
  MaybeFinalizeFailed(inst);
}

void Runtime::Enqueue(Instance& inst, NodeId node, HostId host) {
  const NodeState& ns = inst.nodes[node.value()];
  const Node& n = inst.graph->node(node);
  if (!inst.failed) SendAddresses(inst, node, host);
  const InstanceId id = inst.id;
  const int kernels = static_cast<int>(ns.shards_on.at(host).size());
  AddTask(host, 0, config_.cost.pcie_enqueue * kernels,
          {TraceCategory::kPrep, absl::StrCat("enqueue ", n.fn.name), host.value(), kHostLane, {},
           {}, id, 0},
          [this, id, node, host] { OnEnqueued(id, node, host); });
}

void Runtime::SendAddresses(Instance& inst, NodeId node, HostId host) {
  const InstanceId id = inst.id;
  for (int e : inst.graph->InEdges(node)) {
    const EdgeState& es = inst.edges[e];
    for (auto it = es.by_hosts.lower_bound({host, HostId(0)});
         it != es.by_hosts.end() && it->first.first == host; ++it) {
      const HostId src = it->first.second;
      SendHost(host, src, "address", DigestOf("address", id.value(), e, host.value()),
               [this, id, e, host, src] { OnAddress(id, e, host, src); });
    }
  }
}

void Runtime::OnAddress(InstanceId id, int edge, HostId dst_host, HostId src_host) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  EdgeState& es = inst->edges[edge];
  if (!es.addressed.insert({dst_host, src_host}).second) return;
  const Edge& e = inst->graph->edges[edge];
  for (int p : es.by_hosts[{dst_host, src_host}]) {
    if (!es.started[p] && es.src_ready[e.reshard->pieces[p].src]) StartTransfer(*inst, edge, p);
  }
}

void Runtime::StartTransfer(Instance& inst, int edge, int p) {
  EdgeState& es = inst.edges[edge];
  es.started[p] = true;
  const Edge& e = inst.graph->edges[edge];
  const ReshardingSpec::Piece piece = e.reshard->pieces[p];
  const DeviceId src = inst.graph->node(e.src).devices[piece.src];
  const DeviceId dst = inst.graph->node(e.dst).devices[piece.dst];
  const InstanceId id = inst.id;
  fabric_->Transfer(src, dst, piece.bytes)
      .OnReady([this, id, edge, piece](const absl::StatusOr<TransferRecord>&) {
        Instance* inst = Find(id);
        if (inst == nullptr || inst->failed) return;
        DeliverTuple(*inst, edge, piece);
      });
}

void Runtime::SourceShardReady(Instance& inst, NodeId node, int shard) {
  if (inst.failed) return;
  const ProgramGraph& g = *inst.graph;
  const Topology& topo = fabric_->topology();
  const InstanceId id = inst.id;
  const Node& n = g.node(node);
  for (int e : g.OutEdges(node)) {
    EdgeState& es = inst.edges[e];
    es.src_ready[shard] = true;
    const Edge& edge = g.edges[e];
    for (int p : es.by_src[shard]) {
      const auto& piece = edge.reshard->pieces[p];
      if (es.started[p]) continue;
      if (!piece.link) {
        es.started[p] = true;
        DeliverTuple(inst, e, piece);
        if (Find(id) == nullptr || inst.failed) return;
        continue;
      }
      const HostId dst_host = topo.device(g.node(edge.dst).devices[piece.dst]).host;
      const HostId src_host = topo.device(n.devices[piece.src]).host;
      if (es.addressed.count({dst_host, src_host}) > 0) StartTransfer(inst, e, p);
    }
    if (n.kind == NodeKind::kCompute && !n.fn.regular) {
      // Output sizes were only known now; tell every destination host.
      const HostId from = topo.device(n.devices[shard]).host;
      for (HostId to : inst.nodes[edge.dst.value()].hosts) {
        SendHost(from, to, "punctuation", DigestOf("punctuation", id.value(), e, shard),
                 [this, id, e, shard] { OnPunctuationMessage(id, e, shard); });
      }
    }
  }
}

void Runtime::DeliverTuple(Instance& inst, int edge, const ReshardingSpec::Piece& piece) {
  absl::Status st =
      tracker_.OnTuple({edge, inst.id, piece.src, piece.dst, piece.bytes, 0});
  FP_CHECK(st.ok(), st.ToString());
}

void Runtime::OnPunctuationMessage(InstanceId id, int edge, int src_shard) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  EdgeState& es = inst->edges[edge];
  if (++es.punct_acks[src_shard] != es.dst_hosts) return;
  std::map<int, int64_t> counts;
  for (int p : es.by_src[src_shard]) ++counts[inst->graph->edges[edge].reshard->pieces[p].dst];
  absl::Status st = tracker_.OnPunctuation({edge, id, src_shard, std::move(counts)});
  FP_CHECK(st.ok(), st.ToString());
}

void Runtime::OnShardReady(const ShardReady& r) {
  Instance* inst = Find(r.instance);
  if (inst == nullptr || inst->failed) return;
  const Node& n = inst->graph->node(r.node);
  if (n.kind == NodeKind::kResult) {
    ++inst->results_ready;
    CheckComplete(*inst);
    return;
  }
  if (n.kind != NodeKind::kCompute) return;
  ShardState& s = inst->nodes[r.node.value()].shards[r.shard];
  s.input_ready = true;
  if (s.waiting) {
    s.waiting = false;
    fabric_->SatisfyInput(*s.kernel);
  }
}

void Runtime::OnEnqueued(InstanceId id, NodeId node, HostId host) {
  Instance* inst = Find(id);
  if (inst == nullptr) return;
  NodeState& ns = inst->nodes[node.value()];
  const Node& n = inst->graph->node(node);
  const bool has_inputs = !inst->graph->InEdges(node).empty();
  for (int s : ns.shards_on.at(host)) {
    ShardState& shard = ns.shards[s];
    KernelExec k;
    k.program = id;
    k.client = inst->client;
    k.node = node;
    k.shard = s;
    k.duration = n.fn.per_shard;
    k.label = n.fn.name;
    if (n.fn.collective && n.devices.size() > 1) {
      k.collective = CollectiveSpec{ns.collective, static_cast<int>(n.devices.size())};
    }
    shard.waiting = has_inputs && !shard.input_ready && !inst->failed;
    k.pending_inputs = shard.waiting ? 1 : 0;
    shard.kernel = fabric_->next_kernel_id();
    fabric_->EnqueueKernel(n.devices[s], std::move(k))
        .OnReady([this, id, node, s](const absl::StatusOr<KernelRecord>& rec) {
          FP_CHECK(rec.ok(), rec.status().ToString());
          OnKernelDone(id, node, s, *rec);
        });
  }
  ns.enqueued.insert(host);
  if (ns.enqueued.size() == ns.hosts.size()) {
    ++inst->nodes_enqueued;
    if (inst->nodes_enqueued == inst->compute_nodes && !inst->failed) {
      inst->result.enqueued = sim_->now();
      std::vector<ObjectHandle> results;
      const ProgramGraph& g = *inst->graph;
      for (NodeId r : g.results) {
        const Edge& in = g.edges[g.InEdges(r).at(0)];
        results.push_back(inst->nodes[in.src.value()].outputs.at(in.src_output));
      }
      SendToClient(host, inst->client, "enqueued", DigestOf("enqueued", id.value()),
                   [this, client = inst->client, p = inst->enqueued,
                    results = std::move(results)]() mutable {
                     if (p.fulfilled()) return;
                     if (clients_.at(client.value()).failed) {
                       p.Fail(absl::AbortedError("client failed"));
                       return;
                     }
                     p.Set(std::move(results));
                   },
                   false);
    }
  }
  if (!ns.sequential_consumers.empty() && !inst->failed) {
    SendHost(host, Leader(ns), "enqueued", DigestOf("enqueued", id.value(), node.value()),
             [this, id, node] { OnEnqueuedAck(id, node); });
  }
}

void Runtime::OnEnqueuedAck(InstanceId id, NodeId node) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  NodeState& ns = inst->nodes[node.value()];
  if (++ns.enqueued_acks != static_cast<int>(ns.hosts.size())) return;
  for (NodeId next : ns.sequential_consumers) {
    for (HostId h : inst->nodes[next.value()].hosts) {
      SendHost(Leader(ns), h, "handoff", DigestOf("handoff", id.value(), next.value(), h.value()),
               [this, id, next, h] { OnHandoff(id, next, h); });
    }
  }
}

void Runtime::OnHandoff(InstanceId id, NodeId node, HostId host) {
  Instance* inst = Find(id);
  if (inst == nullptr || inst->failed) return;
  NodeState& ns = inst->nodes[node.value()];
  if (++ns.handoffs[host] == ns.compute_producers && inst->instantiated.count(host) > 0) {
    StartPrep(*inst, node, host);
  }
}

void Runtime::OnKernelDone(InstanceId id, NodeId node, int shard, const KernelRecord& rec) {
  Instance* inst = Find(id);
  FP_CHECK(inst != nullptr, "kernel finished for a retired instance");
  NodeState& ns = inst->nodes[node.value()];
  ShardState& s = ns.shards[shard];
  FP_CHECK(!s.done, "shard finished twice");
  s.done = true;
  if (inst->result.kernels == 0 || rec.start < inst->result.first_kernel_start) {
    inst->result.first_kernel_start = rec.start;
  }
  inst->result.last_kernel_end = Later(inst->result.last_kernel_end, rec.end);
  ++inst->result.kernels;
  inst->last_host = rec.host;
  if (s.landing) fabric_->FreeHbm(*s.landing);
  s.landing.reset();
  SourceShardReady(*inst, node, shard);
  if (Find(id) == nullptr) return;
  if (++ns.shards_done == static_cast<int>(ns.shards.size())) NodeFinished(*inst, node);
}

void Runtime::NodeFinished(Instance& inst, NodeId node) {
  NodeState& ns = inst.nodes[node.value()];
  ns.phase = NodePhase::kFinished;
  ++inst.nodes_finished;
  for (ObjectHandle h : ns.outputs) {
    if (store_.live(h)) FP_CHECK(store_.MarkReady(h).ok(), "output vanished");
  }
  if (config_.sched.window > 0 && !ns.window_released) {
    ns.window_released = true;
    GangScheduler* sched = schedulers_[ns.island.value()].get();
    const uint64_t ticket = ns.grant->ticket;
    SendScheduler(Leader(ns), ns.island, "gang_finished", DigestOf("gang_finished", ticket),
                  [sched, ticket] { sched->GangFinished(ticket); });
  }
  if (inst.failed) {
    MaybeFinalizeFailed(inst);
  } else {
    CheckComplete(inst);
  }
}

void Runtime::CheckComplete(Instance& inst) {
  if (inst.failed || inst.nodes_finished != inst.compute_nodes ||
      inst.results_ready != inst.result_shards) {
    return;
  }
  const ProgramGraph& g = *inst.graph;
  std::set<uint64_t> seen;
  for (NodeId r : g.results) {
    const Edge& in = g.edges[g.InEdges(r).at(0)];
    const ObjectHandle h = inst.nodes[in.src.value()].outputs.at(in.src_output);
    if (seen.insert(h.id).second) {
      FP_CHECK(store_.Transfer(h, OwnerLabel::Client(inst.client)).ok(), "result vanished");
    } else {
      FP_CHECK(store_.AddRef(h).ok(), "result vanished");
    }
    inst.result.results.push_back(h);
    inst.result.result_digests.push_back(digests_.at(h.id));
  }
  const InstanceId id = inst.id;
  const HostId from = inst.last_host;
  const ClientId client = inst.client;
  Promise<std::vector<ObjectHandle>> enqueued = inst.enqueued;
  Promise<CallResult> done = inst.done;
  CallResult result = inst.result;
  Finalize(inst);
  SendToClient(from, client, "done", DigestOf("done", id.value()),
               [this, client, enqueued, done, result = std::move(result)]() mutable {
                 // The results were collected with the client.
                 if (clients_.at(client.value()).failed) {
                   const absl::Status gone = absl::AbortedError("client failed");
                   if (!enqueued.fulfilled()) enqueued.Fail(gone);
                   done.Fail(gone);
                   return;
                 }
                 if (!enqueued.fulfilled()) enqueued.Set(result.results);
                 result.completed = sim_->now();
                 done.Set(std::move(result));
               },
               false);
}

void Runtime::Finalize(Instance& inst) {
  for (NodeState& ns : inst.nodes) {
    for (ShardState& s : ns.shards) {
      if (s.landing) fabric_->FreeHbm(*s.landing);
      s.landing.reset();
    }
  }
  for (const auto& b : inst.bound) {
    if (b && store_.live(*b)) FP_CHECK(store_.Release(*b).ok(), "argument release failed");
  }
  store_.GcOwner(OwnerLabel::Instance(inst.id));
  tracker_.Retire(inst.id);
  if (clients_[inst.client.value()].failed) store_.GcOwner(OwnerLabel::Client(inst.client));
  instances_.erase(inst.id);
}

void Runtime::FailInstance(Instance& inst, absl::Status status) {
  if (inst.failed) return;
  inst.failed = true;
  inst.failure = status;
  for (IslandId island : inst.islands) {
    std::set<int64_t> cancelled;
    if (inst.submitted.count(island) > 0) {
      for (NodeId n : schedulers_[island.value()]->CancelInstance(inst.id)) {
        cancelled.insert(n.value());
      }
    } else {
      schedulers_[island.value()]->CancelInstance(inst.id);
    }
    for (size_t n = 0; n < inst.nodes.size(); ++n) {
      NodeState& ns = inst.nodes[n];
      if (inst.graph->nodes[n].kind != NodeKind::kCompute || ns.island != island) continue;
      if (ns.phase != NodePhase::kWaiting) continue;
      if (inst.submitted.count(island) == 0 || cancelled.count(static_cast<int64_t>(n)) > 0) {
        ns.phase = NodePhase::kCancelled;
      }
    }
  }
  if (!inst.enqueued.fulfilled()) inst.enqueued.Fail(status);
  if (!inst.done.fulfilled()) inst.done.Fail(status);
  const std::vector<HostId> hosts = inst.hosts;
  // Kernels already enqueued run without their inputs so every device
  // queue drains.
  for (NodeState& ns : inst.nodes) {
    for (ShardState& s : ns.shards) {
      if (s.waiting) {
        s.waiting = false;
        fabric_->SatisfyInput(*s.kernel);
      }
    }
  }
  MaybeFinalizeFailed(inst);
  // Granted gangs that never started are dropped from the ticket queues.
  for (HostId h : hosts) Pump(h);
}

void Runtime::MaybeFinalizeFailed(Instance& inst) {
  if (!inst.failed) return;
  for (size_t n = 0; n < inst.nodes.size(); ++n) {
    if (inst.graph->nodes[n].kind != NodeKind::kCompute) continue;
    const NodePhase phase = inst.nodes[n].phase;
    if (phase == NodePhase::kWaiting || phase == NodePhase::kGranted) return;
  }
  Finalize(inst);
}

void Runtime::FailClient(ClientId client) {
  ClientState& cs = clients_.at(client.value());
  if (cs.failed) return;
  cs.failed = true;
  std::vector<InstanceId> ids;
  for (const auto& [id, inst] : instances_) {
    if (inst->client == client) ids.push_back(id);
  }
  for (InstanceId id : ids) {
    Instance* inst = Find(id);
    if (inst != nullptr) FailInstance(*inst, absl::AbortedError("client failed"));
  }
  store_.GcOwner(OwnerLabel::Client(client));
}

absl::Status Runtime::ReleaseResult(ObjectHandle h) { return store_.Release(h); }

}  // namespace flowpath
