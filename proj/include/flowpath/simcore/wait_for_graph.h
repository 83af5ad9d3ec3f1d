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

#ifndef FLOWPATH_SIMCORE_WAIT_FOR_GRAPH_H_
#define FLOWPATH_SIMCORE_WAIT_FOR_GRAPH_H_

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace flowpath {

// Directed "a waits for b" relation between numbered waiters.
struct WaitForGraph {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;
};

// Returns one cycle (as a vertex sequence) if the graph has any.
std::optional<std::vector<int>> FindWaitCycle(const WaitForGraph& graph);

}  // namespace flowpath

#endif  // FLOWPATH_SIMCORE_WAIT_FOR_GRAPH_H_
