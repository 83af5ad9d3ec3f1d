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

#ifndef FLOWPATH_IR_PROGRAM_H_
#define FLOWPATH_IR_PROGRAM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"
#include "flowpath/hardware/cluster.h"

namespace flowpath {

// Per-shard tensor signature.
struct TensorSpec {
  int64_t bytes = 0;
  std::string layout = "block";

  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

// A sharded computation with statically known per-shard resource needs.
// Irregular functions only learn their output sizes once inputs exist.
struct CompiledFunction {
  std::string name;
  int shards = 1;
  std::vector<TensorSpec> inputs;
  std::vector<TensorSpec> outputs;
  Duration per_shard{0};
  bool regular = true;
  bool collective = false;
  // Number of identical single-input steps folded into this function.
  int fuses = 1;

  absl::Status Validate() const;
  friend bool operator==(const CompiledFunction&, const CompiledFunction&) = default;
};

enum class NodeKind { kArg, kCompute, kResult };
std::string_view NodeKindName(NodeKind kind);

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::kCompute;
  // Arg: shards + outputs[0]. Result: shards + inputs[0]. Compute: all.
  CompiledFunction fn;
  int slice = -1;                // index into ProgramGraph::slices; -1 if none
  std::vector<DeviceId> devices;  // lowered form only, one per shard

  friend bool operator==(const Node&, const Node&) = default;
};

enum class ReshardKind { kOneToOne, kScatter, kGather, kAllToAll };
std::string_view ReshardKindName(ReshardKind kind);

// Byte movement between the shards of two sharded endpoints, over a 1-D
// logical index space with contiguous block ownership.
struct ReshardingSpec {
  struct Piece {
    int src = 0;
    int dst = 0;
    int64_t bytes = 0;
    // Absent when both shards live on the same device (no transfer).
    std::optional<LinkKind> link;

    friend bool operator==(const Piece&, const Piece&) = default;
  };

  ReshardKind kind = ReshardKind::kOneToOne;
  int src_shards = 1;
  int dst_shards = 1;
  std::vector<Piece> pieces;

  int64_t total_bytes() const;
  int64_t transfer_bytes() const;  // excludes same-device pieces
  int64_t bytes_from(int src) const;
  int64_t bytes_into(int dst) const;

  friend bool operator==(const ReshardingSpec&, const ReshardingSpec&) = default;
};

struct Edge {
  NodeId src;
  int src_output = 0;
  NodeId dst;
  int dst_input = 0;
  std::optional<ReshardingSpec> reshard;  // lowered form only

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct SliceRequirement {
  std::vector<int> mesh;
  std::optional<IslandId> island;
  bool exclusive = false;

  int device_count() const;
  friend bool operator==(const SliceRequirement&, const SliceRequirement&) = default;
};

enum class GraphForm { kTraced, kLowered };

// Compact sharded dataflow DAG: one node per sharded computation, whatever
// its shard count. Node ids equal their index in `nodes`.
struct ProgramGraph {
  GraphForm form = GraphForm::kTraced;
  ClientId client{0};
  std::vector<SliceRequirement> slices;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<NodeId> results;

  const Node& node(NodeId id) const { return nodes.at(id.value()); }
  std::vector<int> InEdges(NodeId id) const;   // edge indices, by dst_input
  std::vector<int> OutEdges(NodeId id) const;  // edge indices, in edge order
  int CountKind(NodeKind kind) const;
  // Kahn order, lowest id first among ready nodes. Empty if cyclic.
  std::vector<NodeId> TopologicalOrder() const;
  bool IsAcyclic() const;
  absl::Status Validate() const;

  friend bool operator==(const ProgramGraph&, const ProgramGraph&) = default;
};

// Location-agnostic program produced by the tracer.
struct TracedProgram {
  ProgramGraph graph;

  ClientId client() const { return graph.client; }
  const std::vector<SliceRequirement>& slices() const { return graph.slices; }
  friend bool operator==(const TracedProgram&, const TracedProgram&) = default;
};

}  // namespace flowpath

#endif  // FLOWPATH_IR_PROGRAM_H_
