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

#ifndef FLOWPATH_IR_REGULARITY_H_
#define FLOWPATH_IR_REGULARITY_H_

#include <vector>

#include "flowpath/ir/program.h"

namespace flowpath {

// A run of compute nodes in topological order. Parallel segments contain
// only regular nodes; each irregular node forms its own sequential segment.
struct DispatchSegment {
  bool parallel = true;
  std::vector<NodeId> nodes;
};

struct RegularityReport {
  std::vector<NodeId> irregular;
  std::vector<DispatchSegment> segments;

  bool all_regular() const { return irregular.empty(); }
};

RegularityReport ValidateRegularity(const ProgramGraph& graph);

}  // namespace flowpath

#endif  // FLOWPATH_IR_REGULARITY_H_
