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

#include "flowpath/exec/dispatch_plan.h"

#include "absl/strings/str_cat.h"

namespace flowpath {

std::string_view DispatchModeName(DispatchMode mode) {
  return mode == DispatchMode::kSequential ? "sequential" : "parallel";
}

absl::StatusOr<DispatchMode> ParseDispatchMode(std::string_view name) {
  if (name == "sequential") return DispatchMode::kSequential;
  if (name == "parallel") return DispatchMode::kParallel;
  return absl::InvalidArgumentError(absl::StrCat("unknown dispatch mode '", std::string(name), "'"));
}

std::vector<DispatchMode> NodeModes(const ProgramGraph& lowered, DispatchMode requested) {
  std::vector<DispatchMode> modes(lowered.nodes.size(), DispatchMode::kParallel);
  for (const Node& n : lowered.nodes) {
    if (n.kind != NodeKind::kCompute) continue;
    if (requested == DispatchMode::kSequential || !n.fn.regular) {
      modes[n.id.value()] = DispatchMode::kSequential;
    }
  }
  return modes;
}

absl::StatusOr<DispatchPlan> PlanDispatch(const ProgramGraph& lowered, HostId host,
                                          const Topology& topology, DispatchMode requested) {
  if (lowered.form != GraphForm::kLowered) {
    return absl::FailedPreconditionError("dispatch needs a lowered program");
  }
  const std::vector<DispatchMode> modes = NodeModes(lowered, requested);
  DispatchPlan plan;
  plan.host = host;
  for (NodeId id : lowered.TopologicalOrder()) {
    const Node& n = lowered.node(id);
    if (n.kind != NodeKind::kCompute) continue;
    DispatchPlan::Step step{id, modes[id.value()], {}};
    for (size_t s = 0; s < n.devices.size(); ++s) {
      if (topology.device(n.devices[s]).host == host) step.shards.push_back(static_cast<int>(s));
    }
    if (!step.shards.empty()) plan.steps.push_back(std::move(step));
  }
  return plan;
}

}  // namespace flowpath
