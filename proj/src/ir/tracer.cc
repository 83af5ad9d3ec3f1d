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

#include "flowpath/ir/tracer.h"

#include <atomic>

#include "absl/strings/str_cat.h"

namespace flowpath {
namespace {

uint64_t NextTracerTag() {
  static std::atomic<uint64_t> next{1};
  return next.fetch_add(1);
}

}  // namespace

Tracer::Tracer(ClientId client) : tag_(NextTracerTag()) { graph_.client = client; }

SliceRef Tracer::DeclareSlice(std::vector<int> mesh, std::optional<IslandId> island,
                              bool exclusive) {
  graph_.slices.push_back({std::move(mesh), island, exclusive});
  return {static_cast<int>(graph_.slices.size()) - 1, tag_};
}

Value Tracer::Arg(int shards, TensorSpec spec, std::optional<SliceRef> slice) {
  Node node;
  node.id = NodeId(static_cast<int64_t>(graph_.nodes.size()));
  node.kind = NodeKind::kArg;
  node.fn.name = "arg";
  node.fn.shards = shards;
  node.fn.outputs = {std::move(spec)};
  node.slice = slice && slice->tracer == tag_ ? slice->index : -1;
  graph_.nodes.push_back(node);
  return {node.id, 0, tag_};
}

absl::Status Tracer::CheckValue(const Value& v) const {
  if (v.tracer != tag_ || v.node.value() < 0 ||
      v.node.value() >= static_cast<int64_t>(graph_.nodes.size())) {
    return absl::InvalidArgumentError("trace error: reference to undefined value");
  }
  const Node& node = graph_.nodes[v.node.value()];
  if (node.kind == NodeKind::kResult || v.output < 0 ||
      v.output >= static_cast<int>(node.fn.outputs.size())) {
    return absl::InvalidArgumentError(absl::StrCat("trace error: node ", v.node.value(),
                                                   " has no output ", v.output));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Value>> Tracer::Call(const CompiledFunction& fn, SliceRef slice,
                                                const std::vector<Value>& inputs) {
  if (absl::Status s = fn.Validate(); !s.ok()) return s;
  if (slice.tracer != tag_ || slice.index < 0 ||
      slice.index >= static_cast<int>(graph_.slices.size())) {
    return absl::InvalidArgumentError("trace error: reference to undeclared slice");
  }
  if (graph_.slices[slice.index].device_count() != fn.shards) {
    return absl::InvalidArgumentError(
        absl::StrCat("trace error: function '", fn.name, "' has ", fn.shards,
                     " shards but its slice has ", graph_.slices[slice.index].device_count(),
                     " devices"));
  }
  if (inputs.size() != fn.inputs.size()) {
    return absl::InvalidArgumentError(absl::StrCat("trace error: function '", fn.name,
                                                   "' takes ", fn.inputs.size(),
                                                   " inputs, got ", inputs.size()));
  }
  for (const Value& v : inputs) {
    if (absl::Status s = CheckValue(v); !s.ok()) return s;
  }
  Node node;
  node.id = NodeId(static_cast<int64_t>(graph_.nodes.size()));
  node.kind = NodeKind::kCompute;
  node.fn = fn;
  node.slice = slice.index;
  graph_.nodes.push_back(node);
  for (size_t i = 0; i < inputs.size(); ++i) {
    graph_.edges.push_back({inputs[i].node, inputs[i].output, node.id, static_cast<int>(i), {}});
  }
  std::vector<Value> outputs;
  for (size_t i = 0; i < fn.outputs.size(); ++i) {
    outputs.push_back({node.id, static_cast<int>(i), tag_});
  }
  return outputs;
}

absl::Status Tracer::Return(const std::vector<Value>& values) {
  for (const Value& v : values) {
    if (absl::Status s = CheckValue(v); !s.ok()) return s;
  }
  for (const Value& v : values) {
    const Node& src = graph_.nodes[v.node.value()];
    Node node;
    node.id = NodeId(static_cast<int64_t>(graph_.nodes.size()));
    node.kind = NodeKind::kResult;
    node.fn.name = "result";
    node.fn.shards = src.fn.shards;
    node.fn.inputs = {src.fn.outputs[v.output]};
    node.slice = src.slice;
    graph_.nodes.push_back(node);
    graph_.edges.push_back({v.node, v.output, node.id, 0, {}});
    graph_.results.push_back(node.id);
  }
  return absl::OkStatus();
}

absl::StatusOr<TracedProgram> Tracer::Finish() && {
  for (Node& node : graph_.nodes) {
    if (node.kind != NodeKind::kArg || node.slice >= 0) continue;
    for (int e : graph_.OutEdges(node.id)) {
      node.slice = graph_.nodes[graph_.edges[e].dst.value()].slice;
      if (node.slice >= 0) break;
    }
    if (node.slice >= 0 && graph_.slices[node.slice].device_count() != node.fn.shards) {
      return absl::InvalidArgumentError(
          absl::StrCat("trace error: arg ", node.id.value(), " has ", node.fn.shards,
                       " shards but its consumer's slice has ",
                       graph_.slices[node.slice].device_count(), " devices"));
    }
  }
  graph_.form = GraphForm::kTraced;
  if (absl::Status s = graph_.Validate(); !s.ok()) return s;
  return TracedProgram{std::move(graph_)};
}

}  // namespace flowpath
