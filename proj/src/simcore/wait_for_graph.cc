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

#include "flowpath/simcore/wait_for_graph.h"

#include <algorithm>

namespace flowpath {

std::optional<std::vector<int>> FindWaitCycle(const WaitForGraph& graph) {
  std::vector<std::vector<int>> adj(graph.vertex_count);
  for (auto [a, b] : graph.edges) adj[a].push_back(b);
  for (auto& out : adj) std::sort(out.begin(), out.end());

  // 0 = unvisited, 1 = on stack, 2 = done.
  std::vector<int> color(graph.vertex_count, 0);
  std::vector<int> parent(graph.vertex_count, -1);
  for (int root = 0; root < graph.vertex_count; ++root) {
    if (color[root] != 0) continue;
    std::vector<std::pair<int, size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == adj[v].size()) {
        color[v] = 2;
        stack.pop_back();
        continue;
      }
      int w = adj[v][next++];
      if (color[w] == 1) {
        std::vector<int> cycle{w};
        for (int u = v; u != w; u = parent[u]) cycle.push_back(u);
        std::reverse(cycle.begin() + 1, cycle.end());
        return cycle;
      }
      if (color[w] == 0) {
        color[w] = 1;
        parent[w] = v;
        stack.push_back({w, 0});
      }
    }
  }
  return std::nullopt;
}

}  // namespace flowpath
