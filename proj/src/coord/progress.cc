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

#include "flowpath/coord/progress.h"

#include "absl/strings/str_cat.h"
#include "flowpath/base/check.h"

namespace flowpath {

absl::Status ProgressTracker::Instantiate(const ProgramGraph* graph, InstanceId instance) {
  if (graph->form != GraphForm::kLowered) {
    return absl::FailedPreconditionError("instantiate requires a lowered graph");
  }
  if (instances_.count(instance) > 0) {
    return absl::AlreadyExistsError(absl::StrCat("duplicate instance ", instance.value()));
  }
  Instance& inst = instances_[instance];
  inst.graph = graph;
  inst.in_edges.assign(graph->nodes.size(), 0);
  for (const Edge& e : graph->edges) {
    ++inst.in_edges[e.dst.value()];
    EdgeProgress ep;
    ep.src_shards = graph->node(e.src).fn.shards;
    ep.dst_shards = graph->node(e.dst).fn.shards;
    inst.edges.push_back(std::move(ep));
  }
  return absl::OkStatus();
}

absl::Status ProgressTracker::CheckEdge(const Instance& inst, int edge, int src, int dst) const {
  if (edge < 0 || edge >= static_cast<int>(inst.edges.size())) {
    return absl::InvalidArgumentError(absl::StrCat("unknown edge ", edge));
  }
  const EdgeProgress& ep = inst.edges[edge];
  if (src < 0 || src >= ep.src_shards || dst < 0 || dst >= ep.dst_shards) {
    return absl::InvalidArgumentError(
        absl::StrCat("shard out of range on edge ", edge, ": ", src, "->", dst));
  }
  return absl::OkStatus();
}

absl::Status ProgressTracker::OnTuple(const DataTuple& t) {
  auto it = instances_.find(t.instance);
  if (it == instances_.end()) {
    return absl::FailedPreconditionError(absl::StrCat("instance ", t.instance.value(), " not live"));
  }
  Instance& inst = it->second;
  if (absl::Status s = CheckEdge(inst, t.edge, t.src_shard, t.dst_shard); !s.ok()) return s;
  EdgeProgress& ep = inst.edges[t.edge];
  if (ep.all_punctuated() && ep.dsts.count(t.dst_shard) == 0) {
    return absl::FailedPreconditionError(
        absl::StrCat("protocol violation: edge ", t.edge, " dst ", t.dst_shard,
                     " received a tuple after completing"));
  }
  auto punct = ep.punctuated.find(t.src_shard);
  DstProgress& dp = ep.dsts[t.dst_shard];
  const int64_t seen = dp.per_src[t.src_shard] + 1;
  if (punct != ep.punctuated.end()) {
    auto c = punct->second.find(t.dst_shard);
    const int64_t allowed = c == punct->second.end() ? 0 : c->second;
    if (seen > allowed) {
      return absl::FailedPreconditionError(absl::StrCat(
          "protocol violation: edge ", t.edge, " src ", t.src_shard, " dst ", t.dst_shard,
          " tuple ", seen, " exceeds punctuated count ", allowed));
    }
  }
  dp.per_src[t.src_shard] = seen;
  ++dp.received;
  if (ep.all_punctuated() && dp.received == dp.expected) {
    EdgeCompleteFor(inst, t.instance, t.edge, t.dst_shard);
  }
  return absl::OkStatus();
}

absl::Status ProgressTracker::OnPunctuation(const Punctuation& p) {
  auto it = instances_.find(p.instance);
  if (it == instances_.end()) {
    return absl::FailedPreconditionError(absl::StrCat("instance ", p.instance.value(), " not live"));
  }
  Instance& inst = it->second;
  if (absl::Status s = CheckEdge(inst, p.edge, p.src_shard, 0); !s.ok()) return s;
  EdgeProgress& ep = inst.edges[p.edge];
  if (ep.punctuated.count(p.src_shard) > 0) {
    return absl::FailedPreconditionError(absl::StrCat(
        "protocol violation: duplicate punctuation on edge ", p.edge, " src ", p.src_shard));
  }
  for (const auto& [dst, count] : p.counts) {
    if (absl::Status s = CheckEdge(inst, p.edge, p.src_shard, dst); !s.ok()) return s;
    if (count < 0) return absl::InvalidArgumentError("negative punctuation count");
  }
  // Tuples that arrived early must not exceed the announced counts.
  for (auto& [dst, dp] : ep.dsts) {
    auto seen = dp.per_src.find(p.src_shard);
    if (seen == dp.per_src.end()) continue;
    auto c = p.counts.find(dst);
    const int64_t allowed = c == p.counts.end() ? 0 : c->second;
    if (seen->second > allowed) {
      return absl::FailedPreconditionError(absl::StrCat(
          "protocol violation: edge ", p.edge, " src ", p.src_shard, " dst ", dst, " saw ",
          seen->second, " tuples but punctuation says ", allowed));
    }
  }
  for (const auto& [dst, count] : p.counts) {
    if (count > 0) ep.dsts[dst].expected += count;
  }
  ep.punctuated[p.src_shard] = p.counts;
  if (!ep.all_punctuated()) return absl::OkStatus();
  for (int dst = 0; dst < ep.dst_shards; ++dst) {
    auto d = ep.dsts.find(dst);
    if (d == ep.dsts.end() || d->second.received == d->second.expected) {
      EdgeCompleteFor(inst, p.instance, p.edge, dst);
    }
  }
  return absl::OkStatus();
}

void ProgressTracker::EdgeCompleteFor(Instance& inst, InstanceId id, int edge, int dst) {
  inst.edges[edge].dsts.erase(dst);
  const NodeId node = inst.graph->edges[edge].dst;
  const auto key = std::make_pair(node.value(), dst);
  if (++inst.pending[key] < inst.in_edges[node.value()]) return;
  inst.pending.erase(key);
  FP_CHECK(inst.fired.insert(key).second, "shard readiness fired twice");
  ++ready_count_;
  on_ready_({id, node, dst});
}

void ProgressTracker::Retire(InstanceId instance) { instances_.erase(instance); }

int64_t ProgressTracker::active_entries() const {
  int64_t n = 0;
  for (const auto& [id, inst] : instances_) {
    for (const auto& ep : inst.edges) n += static_cast<int64_t>(ep.dsts.size());
    n += static_cast<int64_t>(inst.pending.size());
  }
  return n;
}

}  // namespace flowpath
