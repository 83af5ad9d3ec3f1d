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

#ifndef FLOWPATH_COORD_PROGRESS_H_
#define FLOWPATH_COORD_PROGRESS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "absl/status/status.h"
#include "flowpath/base/ids.h"
#include "flowpath/ir/program.h"

namespace flowpath {

struct DataTuple {
  int edge = 0;
  InstanceId instance;
  int src_shard = 0;
  int dst_shard = 0;
  int64_t bytes = 0;
  uint64_t payload = 0;
};

// End of stream from one source shard of one edge. Absent destinations
// received zero tuples.
struct Punctuation {
  int edge = 0;
  InstanceId instance;
  int src_shard = 0;
  std::map<int, int64_t> counts;
};

struct ShardReady {
  InstanceId instance;
  NodeId node;
  int shard = 0;
};

// Count-based completion detection for sharded edges. A destination shard
// of a node is ready once every in-edge has a punctuation from each source
// shard and all punctuated tuples have arrived.
class ProgressTracker {
 public:
  using ReadyFn = std::function<void(const ShardReady&)>;

  explicit ProgressTracker(ReadyFn on_ready) : on_ready_(std::move(on_ready)) {}

  // The graph must be lowered and outlive the instance.
  absl::Status Instantiate(const ProgramGraph* graph, InstanceId instance);
  absl::Status OnTuple(const DataTuple& t);
  absl::Status OnPunctuation(const Punctuation& p);
  void Retire(InstanceId instance);

  bool live(InstanceId instance) const { return instances_.count(instance) > 0; }
  // Destination shards holding partial progress. Quiescent sparse edges
  // cost nothing here.
  int64_t active_entries() const;
  int64_t ready_count() const { return ready_count_; }

 private:
  struct DstProgress {
    int64_t received = 0;
    int64_t expected = 0;
    std::map<int, int64_t> per_src;  // tuples seen per source shard
  };
  struct EdgeProgress {
    int src_shards = 0;
    int dst_shards = 0;
    std::map<int, std::map<int, int64_t>> punctuated;  // src -> dst counts
    std::map<int, DstProgress> dsts;                  // lazily created
    bool all_punctuated() const {
      return static_cast<int>(punctuated.size()) == src_shards;
    }
  };
  struct Instance {
    const ProgramGraph* graph = nullptr;
    std::vector<int> in_edges;  // per node
    std::vector<EdgeProgress> edges;
    // (node, shard) -> number of in-edges complete. Erased on readiness.
    std::map<std::pair<int64_t, int>, int> pending;
    std::set<std::pair<int64_t, int>> fired;
  };

  absl::Status CheckEdge(const Instance& inst, int edge, int src, int dst) const;
  void EdgeCompleteFor(Instance& inst, InstanceId id, int edge, int dst);

  ReadyFn on_ready_;
  std::map<InstanceId, Instance> instances_;
  int64_t ready_count_ = 0;
};

}  // namespace flowpath

#endif  // FLOWPATH_COORD_PROGRESS_H_
