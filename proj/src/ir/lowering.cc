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

#include "flowpath/ir/lowering.h"

#include <algorithm>

#include "absl/strings/str_cat.h"

namespace flowpath {
namespace {

// Start offset of block `i` when `total` bytes are split into `parts` blocks.
int64_t BlockStart(int64_t total, int64_t i, int64_t parts) {
  return static_cast<int64_t>(static_cast<__int128>(total) * i / parts);
}

}  // namespace

ReshardingSpec ComputeResharding(int64_t logical_bytes, const std::vector<DeviceId>& src_devices,
                                 const std::string& src_layout,
                                 const std::vector<DeviceId>& dst_devices,
                                 const std::string& dst_layout, const Topology& topology) {
  ReshardingSpec spec;
  const int m = static_cast<int>(src_devices.size());
  const int n = static_cast<int>(dst_devices.size());
  spec.src_shards = m;
  spec.dst_shards = n;
  auto add = [&](int i, int j, int64_t bytes) {
    ReshardingSpec::Piece piece{i, j, bytes, std::nullopt};
    if (src_devices[i] != dst_devices[j]) {
      piece.link = topology.LinkBetween(src_devices[i], dst_devices[j]).kind;
    }
    spec.pieces.push_back(piece);
  };

  if (src_layout != dst_layout) {
    // Layout change: every source block is spread over every destination.
    spec.kind = ReshardKind::kAllToAll;
    for (int i = 0; i < m; ++i) {
      const int64_t block = BlockStart(logical_bytes, i + 1, m) - BlockStart(logical_bytes, i, m);
      for (int j = 0; j < n; ++j) {
        add(i, j, BlockStart(block, j + 1, n) - BlockStart(block, j, n));
      }
    }
    return spec;
  }

  spec.kind = m == n ? ReshardKind::kOneToOne : (m < n ? ReshardKind::kScatter : ReshardKind::kGather);
  for (int j = 0; j < n; ++j) {
    const int64_t lo = BlockStart(logical_bytes, j, n);
    const int64_t hi = BlockStart(logical_bytes, j + 1, n);
    bool received = false;
    for (int i = 0; i < m; ++i) {
      const int64_t s_lo = BlockStart(logical_bytes, i, m);
      const int64_t s_hi = BlockStart(logical_bytes, i + 1, m);
      const int64_t overlap = std::min(hi, s_hi) - std::max(lo, s_lo);
      if (overlap > 0) {
        add(i, j, overlap);
        received = true;
      }
    }
    // Empty destination blocks still depend on the source that would own
    // their position, so they carry a zero-byte piece.
    if (!received) add(static_cast<int>(static_cast<int64_t>(j) * m / n), j, 0);
  }
  return spec;
}

absl::StatusOr<ProgramGraph> Lower(const TracedProgram& program, const SlicePlacement& placement,
                                   const Topology& topology) {
  const ProgramGraph& traced = program.graph;
  if (traced.form != GraphForm::kTraced) {
    return absl::InvalidArgumentError("lowering expects a traced program");
  }
  ProgramGraph lowered = traced;
  lowered.form = GraphForm::kLowered;

  for (NodeId id : traced.TopologicalOrder()) {
    Node& node = lowered.nodes[id.value()];
    if (node.kind == NodeKind::kResult) {
      const Edge& in = lowered.edges[lowered.InEdges(id).at(0)];
      node.devices = lowered.nodes[in.src.value()].devices;
      continue;
    }
    if (node.slice < 0) {
      return absl::FailedPreconditionError(
          absl::StrCat("lowering error: node ", id.value(), " has no slice"));
    }
    auto it = placement.find(node.slice);
    if (it == placement.end()) {
      return absl::NotFoundError(
          absl::StrCat("lowering error: device map missing slice ", node.slice));
    }
    if (static_cast<int>(it->second.size()) != node.fn.shards) {
      return absl::InvalidArgumentError(
          absl::StrCat("lowering error: slice ", node.slice, " maps ", it->second.size(),
                       " devices for node ", id.value(), " with ", node.fn.shards, " shards"));
    }
    for (DeviceId d : it->second) {
      if (!topology.has_device(d)) {
        return absl::InvalidArgumentError(
            absl::StrCat("lowering error: unknown device ", d.value()));
      }
    }
    node.devices = it->second;
  }

  for (size_t e = 0; e < lowered.edges.size(); ++e) {
    Edge& edge = lowered.edges[e];
    const Node& src = lowered.nodes[edge.src.value()];
    const Node& dst = lowered.nodes[edge.dst.value()];
    const TensorSpec& out = src.fn.outputs[edge.src_output];
    const TensorSpec& in = dst.fn.inputs[edge.dst_input];
    const int64_t src_logical = out.bytes * src.fn.shards;
    const int64_t dst_logical = in.bytes * dst.fn.shards;
    if (src_logical != dst_logical) {
      return absl::InvalidArgumentError(absl::StrCat(
          "type error: edge ", e, " carries ", src_logical, " logical bytes from '", src.fn.name,
          "' (", src.fn.shards, " shards) but '", dst.fn.name, "' expects ", dst_logical, " (",
          dst.fn.shards, " shards)"));
    }
    edge.reshard = ComputeResharding(src_logical, src.devices, out.layout, dst.devices,
                                     in.layout, topology);
  }
  return lowered;
}

}  // namespace flowpath
