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

#include "flowpath/exec/baseline.h"

#include <map>
#include <vector>

#include "absl/strings/str_cat.h"
#include "flowpath/base/digest.h"

namespace flowpath {

absl::StatusOr<BaselineResult> RunMulticontroller(Simulator& sim, Fabric& fabric,
                                                  const ProgramGraph& lowered, int64_t steps,
                                                  const HostCostModel& cost) {
  if (lowered.form != GraphForm::kLowered) {
    return absl::FailedPreconditionError("baseline needs a lowered program");
  }
  if (lowered.CountKind(NodeKind::kCompute) != 1) {
    return absl::UnimplementedError(
        absl::StrCat("multi-controller baseline supports single-computation SPMD programs; got ",
                     lowered.CountKind(NodeKind::kCompute), " computations"));
  }
  if (steps < 1) return absl::InvalidArgumentError("steps must be >= 1");
  const Node* node = nullptr;
  for (const Node& n : lowered.nodes) {
    if (n.kind == NodeKind::kCompute) node = &n;
  }
  const Topology& topo = fabric.topology();
  std::map<HostId, std::vector<DeviceId>> by_host;
  for (DeviceId d : node->devices) by_host[topo.device(d).host].push_back(d);

  const VirtualTime t0 = sim.now();
  BaselineResult result;
  result.steps = steps;
  bool first = true;
  std::vector<ProcessId> procs;
  for (const auto& [host, devices] : by_host) {
    procs.push_back(sim.AddProcess(ProcessKind::kHostExecutor, absl::StrCat("mc_host", host.value())));
  }
  // Each host enqueues step after step as fast as PCIe allows; the device
  // queues absorb the backlog.
  size_t hi = 0;
  for (const auto& [host, devices] : by_host) {
    const ProcessId proc = procs[hi++];
    int64_t issued = 0;
    for (int64_t step = 0; step < steps; ++step) {
      for (DeviceId d : devices) {
        ++issued;
        const VirtualTime at = t0 + cost.pcie_enqueue * issued;
        sim.Schedule(at, proc, "mc_enqueue", DigestOf("mc", step, d.value()),
                     [&fabric, &result, &first, node, step, d] {
                       KernelExec k;
                       k.node = node->id;
                       k.duration = node->fn.per_shard;
                       k.label = node->fn.name;
                       if (node->fn.collective && node->devices.size() > 1) {
                         // Every host derives the same group from the step.
                         k.collective = CollectiveSpec{CollectiveId((1LL << 40) + step),
                                                       static_cast<int>(node->devices.size())};
                       }
                       fabric.EnqueueKernel(d, k).OnReady(
                           [&result, &first](const absl::StatusOr<KernelRecord>& r) {
                             if (first || r->start < result.first_kernel_start) {
                               result.first_kernel_start = r->start;
                             }
                             first = false;
                             result.last_kernel_end = Later(result.last_kernel_end, r->end);
                             ++result.kernels;
                           });
                     });
      }
    }
  }
  const RunResult run = sim.RunUntilQuiescent();
  if (run.status != RunStatus::kQuiescent) {
    return absl::InternalError(
        absl::StrCat("baseline did not drain: ", std::string(RunStatusName(run.status))));
  }
  result.makespan = result.last_kernel_end - t0;
  if (result.makespan.count() > 0) result.steps_per_sec = steps / ToSeconds(result.makespan);
  return result;
}

}  // namespace flowpath
