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

#ifndef FLOWPATH_EXEC_DISPATCH_PLAN_H_
#define FLOWPATH_EXEC_DISPATCH_PLAN_H_

#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/base/ids.h"
#include "flowpath/ir/program.h"

namespace flowpath {

enum class DispatchMode { kSequential, kParallel };

std::string_view DispatchModeName(DispatchMode mode);
absl::StatusOr<DispatchMode> ParseDispatchMode(std::string_view name);

// Per-host view of a lowered program. Parallel dispatch covers regular
// nodes only; irregular nodes fall back to sequential dispatch.
struct DispatchPlan {
  struct Step {
    NodeId node;
    DispatchMode mode = DispatchMode::kParallel;
    std::vector<int> shards;  // shards placed on this host
  };
  HostId host;
  std::vector<Step> steps;  // topological order
};

// Dispatch mode of every node, indexed by node id. Non-compute nodes get
// kParallel.
std::vector<DispatchMode> NodeModes(const ProgramGraph& lowered, DispatchMode requested);

absl::StatusOr<DispatchPlan> PlanDispatch(const ProgramGraph& lowered, HostId host,
                                          const Topology& topology, DispatchMode requested);

}  // namespace flowpath

#endif  // FLOWPATH_EXEC_DISPATCH_PLAN_H_
