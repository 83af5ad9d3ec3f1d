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

#include "flowpath/ir/program.h"

#include <algorithm>
#include <queue>

#include "absl/strings/str_cat.h"

namespace flowpath {

std::string_view NodeKindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kArg:
      return "arg";
    case NodeKind::kCompute:
      return "compute";
    case NodeKind::kResult:
      return "result";
  }
  return "unknown";
}

std::string_view ReshardKindName(ReshardKind kind) {
  switch (kind) {
    case ReshardKind::kOneToOne:
      return "one-to-one";
    case ReshardKind::kScatter:
      return "scatter";
    case ReshardKind::kGather:
      return "gather";
    case ReshardKind::kAllToAll:
      return "all-to-all";
  }
  return "unknown";
}

absl::Status CompiledFunction::Validate() const {
  if (shards < 1) {
    return absl::InvalidArgumentError(absl::StrCat("function '", name, "' has ", shards,
                                                   " shards; need at least 1"));
  }
  if (per_shard.count() < 0) {
    return absl::InvalidArgumentError(absl::StrCat("function '", name, "' has negative duration"));
  }
  if (fuses < 1) {
    return absl::InvalidArgumentError(absl::StrCat("function '", name, "' has fuses < 1"));
  }
  for (const auto* specs : {&inputs, &outputs}) {
    for (const auto& s : *specs) {
      if (s.bytes < 0) {
        return absl::InvalidArgumentError(
            absl::StrCat("function '", name, "' has a negative tensor size"));
      }
    }
  }
  return absl::OkStatus();
}

int64_t ReshardingSpec::total_bytes() const {
  int64_t total = 0;
  for (const auto& p : pieces) total += p.bytes;
  return total;
}

int64_t ReshardingSpec::transfer_bytes() const {
  int64_t total = 0;
  for (const auto& p : pieces) {
    if (p.link) total += p.bytes;
  }
  return total;
}

int64_t ReshardingSpec::bytes_from(int src) const {
  int64_t total = 0;
  for (const auto& p : pieces) {
    if (p.src == src) total += p.bytes;
  }
  return total;
}

int64_t ReshardingSpec::bytes_into(int dst) const {
  int64_t total = 0;
  for (const auto& p : pieces) {
    if (p.dst == dst) total += p.bytes;
  }
  return total;
}

int SliceRequirement::device_count() const {
  int count = 1;
  for (int d : mesh) count *= d;
  return count;
}

std::vector<int> ProgramGraph::InEdges(NodeId id) const {
  std::vector<int> in;
  for (size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].dst == id) in.push_back(static_cast<int>(e));
  }
  std::stable_sort(in.begin(), in.end(), [&](int a, int b) {
    return edges[a].dst_input < edges[b].dst_input;
  });
  return in;
}

std::vector<int> ProgramGraph::OutEdges(NodeId id) const {
  std::vector<int> out;
  for (size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].src == id) out.push_back(static_cast<int>(e));
  }
  return out;
}

int ProgramGraph::CountKind(NodeKind kind) const {
  int n = 0;
  for (const auto& node : nodes) n += node.kind == kind ? 1 : 0;
  return n;
}

std::vector<NodeId> ProgramGraph::TopologicalOrder() const {
  const size_t n = nodes.size();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> succ(n);
  for (const auto& e : edges) {
    ++indegree[e.dst.value()];
    succ[e.src.value()].push_back(static_cast<int>(e.dst.value()));
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(static_cast<int>(i));
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(NodeId(v));
    for (int w : succ[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != n) return {};
  return order;
}

bool ProgramGraph::IsAcyclic() const { return TopologicalOrder().size() == nodes.size(); }

absl::Status ProgramGraph::Validate() const {
  const auto n = static_cast<int64_t>(nodes.size());
  for (int64_t i = 0; i < n; ++i) {
    const Node& node = nodes[i];
    if (node.id.value() != i) {
      return absl::InvalidArgumentError(absl::StrCat("node at index ", i, " has id ", node.id.value()));
    }
    if (absl::Status s = node.fn.Validate(); !s.ok()) return s;
    if (node.slice >= static_cast<int>(slices.size())) {
      return absl::InvalidArgumentError(absl::StrCat("node ", i, " references undeclared slice ",
                                                     node.slice));
    }
    if (node.kind == NodeKind::kCompute && node.slice < 0) {
      return absl::InvalidArgumentError(absl::StrCat("compute node ", i, " has no slice"));
    }
    if (node.kind == NodeKind::kArg && node.fn.outputs.size() != 1) {
      return absl::InvalidArgumentError(absl::StrCat("arg node ", i, " must have one output"));
    }
    if (node.kind == NodeKind::kResult && node.fn.inputs.size() != 1) {
      return absl::InvalidArgumentError(absl::StrCat("result node ", i, " must have one input"));
    }
    if (form == GraphForm::kLowered &&
        static_cast<int>(node.devices.size()) != node.fn.shards) {
      return absl::InvalidArgumentError(absl::StrCat("lowered node ", i, " binds ",
                                                     node.devices.size(), " devices for ",
                                                     node.fn.shards, " shards"));
    }
  }
  std::vector<std::vector<int>> inputs_seen(n);
  for (size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    if (edge.src.value() < 0 || edge.src.value() >= n || edge.dst.value() < 0 ||
        edge.dst.value() >= n) {
      return absl::InvalidArgumentError(absl::StrCat("edge ", e, " references an unknown node"));
    }
    const Node& src = nodes[edge.src.value()];
    const Node& dst = nodes[edge.dst.value()];
    if (edge.src_output < 0 || edge.src_output >= static_cast<int>(src.fn.outputs.size())) {
      return absl::InvalidArgumentError(absl::StrCat("edge ", e, " reads missing output ",
                                                     edge.src_output));
    }
    if (edge.dst_input < 0 || edge.dst_input >= static_cast<int>(dst.fn.inputs.size())) {
      return absl::InvalidArgumentError(absl::StrCat("edge ", e, " feeds missing input ",
                                                     edge.dst_input));
    }
    if (dst.kind == NodeKind::kArg) {
      return absl::InvalidArgumentError(absl::StrCat("edge ", e, " feeds an arg node"));
    }
    inputs_seen[edge.dst.value()].push_back(edge.dst_input);
    if (form == GraphForm::kLowered && !edge.reshard) {
      return absl::InvalidArgumentError(absl::StrCat("lowered edge ", e, " has no resharding"));
    }
  }
  for (int64_t i = 0; i < n; ++i) {
    auto& seen = inputs_seen[i];
    std::sort(seen.begin(), seen.end());
    if (static_cast<int>(seen.size()) != static_cast<int>(nodes[i].fn.inputs.size()) ||
        std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", i, " inputs must each have exactly one producer"));
    }
  }
  for (NodeId r : results) {
    if (r.value() < 0 || r.value() >= n || nodes[r.value()].kind != NodeKind::kResult) {
      return absl::InvalidArgumentError(absl::StrCat("results lists non-result node ", r.value()));
    }
  }
  if (!IsAcyclic()) return absl::InvalidArgumentError("program graph has a cycle");
  return absl::OkStatus();
}

}  // namespace flowpath
