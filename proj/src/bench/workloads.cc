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

#include "flowpath/bench/workloads.h"

#include "absl/strings/str_cat.h"
#include "flowpath/base/status_macros.h"
#include "flowpath/ir/lowering.h"
#include "flowpath/ir/tracer.h"

namespace flowpath {

absl::StatusOr<std::shared_ptr<const ProgramGraph>> BuildChain(
    const Topology& topology, ClientId client, const std::vector<ChainStage>& stages) {
  if (stages.empty()) return absl::InvalidArgumentError("chain needs at least one stage");
  Tracer tracer(client);
  SlicePlacement placement;
  std::vector<SliceRef> slices;
  for (size_t i = 0; i < stages.size(); ++i) {
    const ChainStage& s = stages[i];
    if (s.devices.empty()) {
      return absl::InvalidArgumentError(absl::StrCat("stage ", i, " has no devices"));
    }
    slices.push_back(tracer.DeclareSlice({static_cast<int>(s.devices.size())}));
    placement[slices.back().index] = s.devices;
  }
  Value v = tracer.Arg(static_cast<int>(stages[0].devices.size()), TensorSpec{0, "block"},
                       slices[0]);
  int64_t logical = 0;
  for (size_t i = 0; i < stages.size(); ++i) {
    const ChainStage& s = stages[i];
    const int shards = static_cast<int>(s.devices.size());
    if (logical % shards != 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("stage ", i, " cannot split ", logical, " bytes over ", shards, " shards"));
    }
    CompiledFunction fn;
    fn.name = s.name;
    fn.shards = shards;
    fn.inputs = {TensorSpec{logical / shards, "block"}};
    fn.outputs = {TensorSpec{s.out_bytes, "block"}};
    fn.per_shard = s.per_shard;
    fn.regular = s.regular;
    fn.collective = s.collective;
    fn.fuses = s.fuses;
    FP_ASSIGN_OR_RETURN(std::vector<Value> out, tracer.Call(fn, slices[i], {v}));
    v = out[0];
    logical = s.out_bytes * shards;
  }
  FP_RETURN_IF_ERROR(tracer.Return({v}));
  FP_ASSIGN_OR_RETURN(TracedProgram traced, std::move(tracer).Finish());
  FP_ASSIGN_OR_RETURN(ProgramGraph lowered, Lower(traced, placement, topology));
  return std::make_shared<const ProgramGraph>(std::move(lowered));
}

absl::StatusOr<std::shared_ptr<const ProgramGraph>> BuildPipeline(
    const Topology& topology, ClientId client, const std::vector<ChainStage>& stages,
    int microbatches, int64_t activation_bytes) {
  if (stages.empty() || microbatches < 1) {
    return absl::InvalidArgumentError("pipeline needs stages and microbatches");
  }
  Tracer tracer(client);
  SlicePlacement placement;
  std::vector<SliceRef> slices;
  for (size_t i = 0; i < stages.size(); ++i) {
    const int shards = static_cast<int>(stages[i].devices.size());
    if (shards == 0 || activation_bytes % shards != 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("stage ", i, " cannot split ", activation_bytes, " bytes"));
    }
    slices.push_back(tracer.DeclareSlice({shards}));
    placement[slices.back().index] = stages[i].devices;
  }
  std::vector<Value> results;
  for (int m = 0; m < microbatches; ++m) {
    const int first = static_cast<int>(stages[0].devices.size());
    Value v = tracer.Arg(first, TensorSpec{activation_bytes / first, "block"}, slices[0]);
    for (size_t i = 0; i < stages.size(); ++i) {
      const ChainStage& s = stages[i];
      const int shards = static_cast<int>(s.devices.size());
      CompiledFunction fn;
      fn.name = absl::StrCat(s.name, i);
      fn.shards = shards;
      fn.inputs = {TensorSpec{activation_bytes / shards, "block"}};
      fn.outputs = {TensorSpec{activation_bytes / shards, "block"}};
      fn.per_shard = s.per_shard;
      fn.regular = s.regular;
      fn.collective = s.collective;
      FP_ASSIGN_OR_RETURN(std::vector<Value> out, tracer.Call(fn, slices[i], {v}));
      v = out[0];
    }
    results.push_back(v);
  }
  FP_RETURN_IF_ERROR(tracer.Return(results));
  FP_ASSIGN_OR_RETURN(TracedProgram traced, std::move(tracer).Finish());
  FP_ASSIGN_OR_RETURN(ProgramGraph lowered, Lower(traced, placement, topology));
  return std::make_shared<const ProgramGraph>(std::move(lowered));
}

std::vector<ChainStage> RepeatStage(const ChainStage& stage, int n) {
  return std::vector<ChainStage>(static_cast<size_t>(n), stage);
}

std::vector<DeviceId> DevicesOfHosts(const Topology& topology, IslandId island, int hosts,
                                     int first_host) {
  std::vector<DeviceId> out;
  const IslandInfo& info = topology.island(island);
  for (int h = first_host; h < first_host + hosts && h < static_cast<int>(info.hosts.size()); ++h) {
    const HostInfo& host = topology.host(info.hosts[h]);
    out.insert(out.end(), host.devices.begin(), host.devices.end());
  }
  return out;
}

}  // namespace flowpath
