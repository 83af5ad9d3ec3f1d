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

#ifndef FLOWPATH_BENCH_WORKLOADS_H_
#define FLOWPATH_BENCH_WORKLOADS_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"
#include "flowpath/hardware/cluster.h"
#include "flowpath/ir/program.h"

namespace flowpath {

// One computation of a chain, placed on explicit devices.
struct ChainStage {
  std::string name = "unit";
  std::vector<DeviceId> devices;
  Duration per_shard{0};
  int64_t out_bytes = 0;  // per shard
  bool regular = true;
  bool collective = false;
  int fuses = 1;
};

// Traces and lowers Arg -> stage 0 -> ... -> stage n-1 -> Result. Each
// stage consumes the previous stage's output.
absl::StatusOr<std::shared_ptr<const ProgramGraph>> BuildChain(const Topology& topology,
                                                               ClientId client,
                                                               const std::vector<ChainStage>& stages);

// `microbatches` independent copies of the chain Arg -> stage 0 -> ... ->
// Result, traced microbatch-major so every stage sees microbatches in
// order. `activation_bytes` is the logical size passed between stages.
absl::StatusOr<std::shared_ptr<const ProgramGraph>> BuildPipeline(
    const Topology& topology, ClientId client, const std::vector<ChainStage>& stages,
    int microbatches, int64_t activation_bytes);

// `n` identical stages on the same devices.
std::vector<ChainStage> RepeatStage(const ChainStage& stage, int n);

// All devices of the first `hosts` hosts of `island`.
std::vector<DeviceId> DevicesOfHosts(const Topology& topology, IslandId island, int hosts,
                                     int first_host = 0);

}  // namespace flowpath

#endif  // FLOWPATH_BENCH_WORKLOADS_H_
