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

#include "flowpath/bench/harness.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "absl/strings/str_cat.h"
#include "flowpath/base/digest.h"
#include "flowpath/base/status_macros.h"
#include "flowpath/bench/workloads.h"
#include "flowpath/exec/baseline.h"
#include "flowpath/exec/runtime.h"

namespace flowpath {
namespace {

double PerSecond(double units, Duration d) { return d.count() > 0 ? units / ToSeconds(d) : 0.0; }

bool Close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

absl::Status Drain(Simulator& sim) {
  const RunResult run = sim.RunUntilQuiescent();
  if (run.status != RunStatus::kQuiescent) {
    return absl::InternalError(
        absl::StrCat("run did not drain: ", std::string(RunStatusName(run.status))));
  }
  return absl::OkStatus();
}

RuntimeConfig WithTrace(const BenchConfig& config, bool trace) {
  RuntimeConfig rc = config.runtime;
  rc.trace = trace;
  return rc;
}

}  // namespace

std::string_view DriveModeName(DriveMode mode) {
  switch (mode) {
    case DriveMode::kOpByOp:
      return "opbyop";
    case DriveMode::kChained:
      return "chained";
    case DriveMode::kFused:
      return "fused";
  }
  return "unknown";
}

void Audit::Merge(const Audit& other) {
  hbm_leaked_bytes += other.hbm_leaked_bytes;
  double_frees += other.double_frees;
  live_buffers += other.live_buffers;
  busy_devices += other.busy_devices;
  throughput_matches = throughput_matches && other.throughput_matches;
}

nlohmann::json Audit::ToJson() const {
  return {{"hbm_leaked_bytes", hbm_leaked_bytes},
          {"double_frees", double_frees},
          {"live_buffers", live_buffers},
          {"busy_devices", busy_devices},
          {"throughput_matches", throughput_matches},
          {"ok", ok()}};
}

Audit AuditCluster(const Fabric& fabric, const Runtime* runtime) {
  Audit a;
  for (const DeviceInfo& d : fabric.topology().devices()) {
    a.hbm_leaked_bytes += fabric.hbm_used(d.id);
    if (!fabric.device_idle(d.id)) ++a.busy_devices;
  }
  if (runtime != nullptr) {
    a.double_frees = runtime->store().double_frees();
    a.live_buffers = runtime->store().live_buffers();
  }
  return a;
}

KernelLog::KernelLog(Fabric& fabric) : records_(std::make_shared<std::vector<KernelRecord>>()) {
  fabric.AddKernelObserver([log = records_](const KernelRecord& r) { log->push_back(r); });
}

VirtualTime KernelLog::first_start() const {
  if (records_->empty()) return VirtualTime();
  VirtualTime t = records_->front().start;
  for (const KernelRecord& r : *records_) t = std::min(t, r.start);
  return t;
}

VirtualTime KernelLog::last_end() const {
  VirtualTime t;
  for (const KernelRecord& r : *records_) t = Later(t, r.end);
  return t;
}

absl::StatusOr<Measurement> MeasureSingleController(const BenchConfig& config, int hosts,
                                                    DriveMode mode, int nodes, Duration per_node,
                                                    bool trace) {
  if (nodes < 1) return absl::InvalidArgumentError("nodes must be >= 1");
  Simulator sim;
  Fabric fabric(sim, Topology(ScaleCluster(config.cluster, hosts)));
  KernelLog log(fabric);
  Runtime rt(&sim, &fabric, WithTrace(config, trace));
  const ClientId client = rt.AddClient();

  ChainStage stage;
  stage.devices = DevicesOfHosts(fabric.topology(), IslandId(0), hosts);
  stage.per_shard = per_node;
  stage.collective = true;
  std::vector<ChainStage> stages;
  int calls = 1;
  switch (mode) {
    case DriveMode::kOpByOp:
      stages = {stage};
      calls = nodes;
      break;
    case DriveMode::kChained:
      stages = RepeatStage(stage, nodes);
      break;
    case DriveMode::kFused:
      stage.per_shard = per_node * nodes;
      stage.fuses = nodes;
      stages = {stage};
      break;
  }
  FP_ASSIGN_OR_RETURN(std::shared_ptr<const ProgramGraph> program,
                      BuildChain(fabric.topology(), client, stages));

  // Call k+1 is issued as soon as call k's results are enqueued, with
  // call k's result as its argument.
  struct Driver {
    int issued = 0;
    absl::Status error;
    std::vector<ObjectHandle> results;
    std::vector<CallResult> done;
  };
  auto driver = std::make_shared<Driver>();
  std::function<void(std::optional<ObjectHandle>)> issue =
      [&, driver](std::optional<ObjectHandle> arg) {
        std::vector<std::optional<ObjectHandle>> args;
        if (arg.has_value()) args.push_back(arg);
        absl::StatusOr<CallHandles> h = rt.Call(client, program, std::move(args));
        if (!h.ok()) {
          driver->error = h.status();
          return;
        }
        ++driver->issued;
        h->done.OnReady([driver](const absl::StatusOr<CallResult>& r) {
          if (!r.ok()) {
            driver->error = r.status();
            return;
          }
          driver->done.push_back(*r);
        });
        h->enqueued.OnReady([&, driver](const absl::StatusOr<std::vector<ObjectHandle>>& r) {
          if (!r.ok()) return;
          driver->results.insert(driver->results.end(), r->begin(), r->end());
          if (driver->issued < calls) issue(r->front());
        });
      };
  const VirtualTime begin = sim.now();
  issue(std::nullopt);
  FP_RETURN_IF_ERROR(Drain(sim));
  FP_RETURN_IF_ERROR(driver->error);
  if (static_cast<int>(driver->done.size()) != calls) {
    return absl::InternalError("not every call completed");
  }
  for (ObjectHandle h : driver->results) FP_RETURN_IF_ERROR(rt.ReleaseResult(h));
  FP_RETURN_IF_ERROR(Drain(sim));

  Measurement m;
  m.units = nodes;
  m.begin = begin;
  for (const CallResult& r : driver->done) {
    m.kernels += r.kernels;
    m.end = Later(m.end, r.last_kernel_end);
  }
  m.throughput = PerSecond(static_cast<double>(m.units), m.end - m.begin);
  m.audit = AuditCluster(fabric, &rt);
  const int64_t per_unit = static_cast<int64_t>(stage.devices.size());
  const int64_t fold = mode == DriveMode::kFused ? nodes : 1;
  const double recount = PerSecond(
      static_cast<double>(static_cast<int64_t>(log.records().size()) / per_unit * fold),
      log.last_end() - begin);
  m.audit.throughput_matches = Close(recount, m.throughput);
  m.trace = rt.trace();
  return m;
}

absl::StatusOr<Measurement> MeasureMulticontroller(const BenchConfig& config, int hosts, int nodes,
                                                   Duration per_node) {
  Simulator sim;
  Fabric fabric(sim, Topology(ScaleCluster(config.cluster, hosts)));
  KernelLog log(fabric);
  ChainStage stage;
  stage.devices = DevicesOfHosts(fabric.topology(), IslandId(0), hosts);
  stage.per_shard = per_node;
  stage.collective = true;
  FP_ASSIGN_OR_RETURN(std::shared_ptr<const ProgramGraph> program,
                      BuildChain(fabric.topology(), ClientId(0), {stage}));
  FP_ASSIGN_OR_RETURN(BaselineResult r,
                      RunMulticontroller(sim, fabric, *program, nodes, config.runtime.cost));
  Measurement m;
  m.units = nodes;
  m.kernels = r.kernels;
  m.end = r.last_kernel_end;
  m.throughput = r.steps_per_sec;
  m.audit = AuditCluster(fabric, nullptr);
  const double recount =
      PerSecond(static_cast<double>(static_cast<int64_t>(log.records().size()) /
                                    static_cast<int64_t>(stage.devices.size())),
                log.last_end() - m.begin);
  m.audit.throughput_matches = Close(recount, m.throughput);
  return m;
}

Duration PerNodeOverhead(const BenchConfig& config, int hosts) {
  const HostCostModel& c = config.runtime.cost;
  const SchedulerConfig& s = config.runtime.sched;
  const int dph = config.cluster.islands.at(0).devices_per_host;
  return c.client_rpc + c.client_per_host * hosts + s.decision + s.per_gang + s.per_host * hosts +
         c.sched_to_host + c.host_prep + c.pcie_enqueue * dph + c.host_to_host;
}

absl::StatusOr<PipelineMeasurement> MeasurePipeline(const BenchConfig& config,
                                                    const PipelineSpec& spec, bool trace) {
  if (spec.stages < 1 || spec.microbatches < 1 || spec.islands < 1 ||
      spec.stages % spec.islands != 0) {
    return absl::InvalidArgumentError("stages must split evenly across islands");
  }
  const int per_island = spec.stages / spec.islands;
  ClusterConfig cluster = ScaleCluster(config.cluster, per_island);
  cluster.islands.assign(static_cast<size_t>(spec.islands), cluster.islands[0]);
  Simulator sim;
  Fabric fabric(sim, Topology(cluster));
  KernelLog log(fabric);
  Runtime rt(&sim, &fabric, WithTrace(config, trace));
  const ClientId client = rt.AddClient();

  std::vector<ChainStage> stages;
  for (int s = 0; s < spec.stages; ++s) {
    ChainStage stage;
    stage.name = "stage";
    stage.devices = DevicesOfHosts(fabric.topology(), IslandId(s / per_island), 1, s % per_island);
    stage.per_shard = spec.stage_time;
    stage.collective = true;
    stages.push_back(stage);
  }
  FP_ASSIGN_OR_RETURN(
      std::shared_ptr<const ProgramGraph> program,
      BuildPipeline(fabric.topology(), client, stages, spec.microbatches, spec.activation_bytes));
  FP_ASSIGN_OR_RETURN(CallHandles call, rt.Call(client, program));
  FP_RETURN_IF_ERROR(Drain(sim));
  if (!call.done.ready()) return absl::InternalError("pipeline call did not complete");
  FP_RETURN_IF_ERROR(call.done.result().status());
  for (ObjectHandle h : call.done.result()->results) FP_RETURN_IF_ERROR(rt.ReleaseResult(h));
  FP_RETURN_IF_ERROR(Drain(sim));

  PipelineMeasurement m;
  const VirtualTime lo = log.first_start();
  const VirtualTime hi = log.last_end();
  m.step = hi - lo;
  m.kernels = static_cast<int64_t>(log.records().size());
  std::map<int64_t, Duration> busy;
  for (const KernelRecord& r : log.records()) busy[r.device.value()] += r.end - r.start;
  m.busy_min = 1.0;
  for (const auto& [device, b] : busy) {
    const double f = static_cast<double>(b.count()) / static_cast<double>(m.step.count());
    m.busy_mean += f / static_cast<double>(busy.size());
    m.busy_min = std::min(m.busy_min, f);
    m.busy_max = std::max(m.busy_max, f);
  }
  m.ideal = static_cast<double>(spec.microbatches) / (spec.microbatches + spec.stages - 1);
  m.tokens_per_sec =
      PerSecond(static_cast<double>(spec.microbatches * spec.tokens_per_microbatch), m.step);
  m.audit = AuditCluster(fabric, &rt);
  m.trace = rt.trace();
  return m;
}

absl::StatusOr<TenantMeasurement> MeasureTenants(const BenchConfig& config, const TenantSpec& spec,
                                                 bool trace) {
  if (spec.clients < 1 || spec.max_outstanding < 1 || spec.horizon.count() <= 0) {
    return absl::InvalidArgumentError("need clients, outstanding calls and a horizon");
  }
  Simulator sim;
  Fabric fabric(sim, Topology(ScaleCluster(config.cluster, spec.hosts)));
  KernelLog log(fabric);
  Runtime rt(&sim, &fabric, WithTrace(config, trace));
  const VirtualTime horizon(spec.horizon);
  std::mt19937_64 rng(spec.seed);

  struct Client {
    ClientId id;
    std::shared_ptr<const ProgramGraph> program;
    int outstanding = 0;
    bool failed = false;
  };
  std::vector<Client> clients(static_cast<size_t>(spec.clients));
  ChainStage stage;
  stage.name = "step";
  stage.devices = DevicesOfHosts(fabric.topology(), IslandId(0), spec.hosts);
  stage.per_shard = spec.compute;
  stage.out_bytes = spec.out_bytes;
  stage.collective = true;
  for (Client& c : clients) {
    c.id = rt.AddClient();
    FP_ASSIGN_OR_RETURN(c.program, BuildChain(fabric.topology(), c.id, {stage}));
  }
  absl::Status error;
  std::function<void(Client&)> pump = [&](Client& c) {
    while (!c.failed && error.ok() && c.outstanding < spec.max_outstanding && sim.now() < horizon) {
      absl::StatusOr<CallHandles> h = rt.Call(c.id, c.program);
      if (!h.ok()) {
        error = h.status();
        return;
      }
      ++c.outstanding;
      h->done.OnReady([&, cp = &c](const absl::StatusOr<CallResult>& r) {
        --cp->outstanding;
        if (!r.ok()) return;
        for (ObjectHandle res : r->results) {
          absl::Status s = rt.ReleaseResult(res);
          if (!s.ok() && error.ok()) error = s;
        }
        pump(*cp);
      });
    }
  };
  for (Client& c : clients) {
    const int64_t span = spec.max_jitter.count();
    const Duration offset(span > 0 ? static_cast<int64_t>(rng() % static_cast<uint64_t>(span + 1))
                                   : 0);
    sim.Schedule(VirtualTime(offset), rt.client_process(c.id), "client_start",
                 DigestOf("client_start", c.id.value()), [&pump, cp = &c] { pump(*cp); });
  }
  if (spec.fail_at.has_value()) {
    Client& victim = clients.front();
    sim.Schedule(VirtualTime(*spec.fail_at), rt.client_process(victim.id), "client_fail",
                 DigestOf("client_fail", victim.id.value()), [&rt, &victim] {
                   victim.failed = true;
                   rt.FailClient(victim.id);
                 });
  }
  sim.RunUntil(horizon);
  FP_RETURN_IF_ERROR(Drain(sim));
  FP_RETURN_IF_ERROR(error);

  TenantMeasurement m;
  m.gangs.assign(clients.size(), 0);
  std::vector<int64_t> busy(clients.size(), 0);
  std::map<int64_t, VirtualTime> gang_start;  // instance -> first kernel start
  int64_t total_busy = 0;
  for (const KernelRecord& r : log.records()) {
    const VirtualTime s = std::min(r.start, horizon);
    const VirtualTime e = std::min(r.end, horizon);
    const int64_t b = (e - s).count();
    busy.at(r.client.value()) += b;
    total_busy += b;
    auto [it, inserted] = gang_start.emplace(r.program.value(), r.start);
    if (!inserted) it->second = std::min(it->second, r.start);
  }
  std::map<int64_t, int64_t> owner;
  for (const KernelRecord& r : log.records()) owner[r.program.value()] = r.client.value();
  for (const auto& [instance, start] : gang_start) {
    if (start < horizon) {
      ++m.gangs.at(owner[instance]);
      ++m.total_gangs;
    }
  }
  const auto devices = static_cast<int64_t>(stage.devices.size());
  m.utilization = static_cast<double>(total_busy) /
                  (static_cast<double>(devices) * static_cast<double>(spec.horizon.count()));
  for (int64_t b : busy) {
    m.shares.push_back(total_busy > 0 ? static_cast<double>(b) / static_cast<double>(total_busy)
                                      : 0.0);
  }
  m.gangs_per_sec = PerSecond(static_cast<double>(m.total_gangs), spec.horizon);
  m.audit = AuditCluster(fabric, &rt);
  m.trace = rt.trace();
  return m;
}

}  // namespace flowpath
