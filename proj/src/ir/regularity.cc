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

#include "flowpath/ir/regularity.h"

namespace flowpath {

RegularityReport ValidateRegularity(const ProgramGraph& graph) {
  RegularityReport report;
  for (NodeId id : graph.TopologicalOrder()) {
    const Node& node = graph.node(id);
    if (node.kind != NodeKind::kCompute) continue;
    if (!node.fn.regular) {
      report.irregular.push_back(id);
      report.segments.push_back({false, {id}});
      continue;
    }
    if (report.segments.empty() || !report.segments.back().parallel) {
      report.segments.push_back({true, {}});
    }
    report.segments.back().nodes.push_back(id);
  }
  return report;
}

}  // namespace flowpath
