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

#ifndef FLOWPATH_IR_TRACER_H_
#define FLOWPATH_IR_TRACER_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/ir/program.h"

namespace flowpath {

// A traced value: output `output` of node `node`.
struct Value {
  NodeId node;
  int output = 0;
  uint64_t tracer = 0;
};

struct SliceRef {
  int index = -1;
  uint64_t tracer = 0;
};

// Records calls to compiled functions into a compact dataflow graph.
//
//   Tracer t(client);
//   SliceRef s = t.DeclareSlice({2});
//   Value v = t.Arg(2, {1024});
//   auto x = t.Call(a, s, {v});
//   t.Return({(*x)[0]});
//   absl::StatusOr<TracedProgram> p = std::move(t).Finish();
class Tracer {
 public:
  explicit Tracer(ClientId client);

  SliceRef DeclareSlice(std::vector<int> mesh, std::optional<IslandId> island = std::nullopt,
                        bool exclusive = false);

  // An Arg without a slice is placed on the slice of its first consumer.
  Value Arg(int shards, TensorSpec spec, std::optional<SliceRef> slice = std::nullopt);

  // Fails on values not produced by this tracer, or when the function's
  // shard count differs from the slice's device count.
  absl::StatusOr<std::vector<Value>> Call(const CompiledFunction& fn, SliceRef slice,
                                          const std::vector<Value>& inputs);

  // Appends one Result node per value.
  absl::Status Return(const std::vector<Value>& values);

  absl::StatusOr<TracedProgram> Finish() &&;

 private:
  absl::Status CheckValue(const Value& v) const;

  uint64_t tag_;
  ProgramGraph graph_;
};

}  // namespace flowpath

#endif  // FLOWPATH_IR_TRACER_H_
