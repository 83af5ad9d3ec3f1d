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

#include "progress_oracle.h"

#include <algorithm>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "flowpath/coord/progress.h"
#include "flowpath/hardware/cluster.h"
#include "flowpath/ir/lowering.h"
#include "flowpath/ir/tracer.h"

namespace flowpath::testing {

ProgramGraph ShardedPair(int shards) {
  Tracer t(ClientId(0));
  SliceRef s = t.DeclareSlice({shards});
  CompiledFunction f;
  f.shards = shards;
  f.inputs = {{64}};
  f.outputs = {{64}};
  Value v = t.Arg(shards, {64});
  f.name = "A";
  Value a = (*t.Call(f, s, {v}))[0];
  f.name = "B";
  Value b = (*t.Call(f, s, {a}))[0];
  (void)t.Return({b});
  TracedProgram p = *std::move(t).Finish();
  Topology topo(ClusterConfig::Uniform(1, 1, shards));
  std::vector<DeviceId> devices;
  for (int i = 0; i < shards; ++i) devices.push_back(DeviceId(i));
  return *Lower(p, {{0, devices}}, topo);
}

namespace {

// Message code: 0..3 tuple (src*2+dst), 4..5 punctuation from src.
struct Replay {
  std::vector<int> ready_at = {-1, -1};
  int fired[2] = {0, 0};
};

}  // namespace

OrderCheck CheckAllDeliveryOrders(const std::array<std::array<int, 2>, 2>& counts) {
  static const ProgramGraph graph = ShardedPair(2);
  constexpr int kEdge = 1;
  std::vector<int> messages;
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 2; ++d) messages.insert(messages.end(), counts[s][d], s * 2 + d);
  }
  messages.push_back(4);
  messages.push_back(5);
  std::sort(messages.begin(), messages.end());

  OrderCheck out;
  do {
    ++out.orders;
    Replay got;
    int step = 0;
    ProgressTracker tracker([&](const ShardReady& r) {
      if (r.node != NodeId(2)) return;
      ++got.fired[r.shard];
      got.ready_at[r.shard] = step;
    });
    (void)tracker.Instantiate(&graph, InstanceId(1));
    bool protocol_ok = true;
    for (step = 0; step < static_cast<int>(messages.size()); ++step) {
      const int m = messages[step];
      absl::Status s;
      if (m < 4) {
        s = tracker.OnTuple({kEdge, InstanceId(1), m / 2, m % 2, 64, 0});
      } else {
        Punctuation p{kEdge, InstanceId(1), m - 4, {}};
        for (int d = 0; d < 2; ++d) {
          if (counts[m - 4][d] > 0) p.counts[d] = counts[m - 4][d];
        }
        s = tracker.OnPunctuation(p);
      }
      protocol_ok &= s.ok();
    }

    // Oracle: replay the log and find the first prefix that contains both
    // punctuations and every tuple addressed to the shard.
    std::vector<int> expect = {-1, -1};
    for (int d = 0; d < 2; ++d) {
      int puncts = 0;
      int tuples = 0;
      const int need = counts[0][d] + counts[1][d];
      for (int i = 0; i < static_cast<int>(messages.size()); ++i) {
        const int m = messages[i];
        if (m >= 4) ++puncts;
        if (m < 4 && m % 2 == d) ++tuples;
        if (puncts == 2 && tuples == need) {
          expect[d] = i;
          break;
        }
      }
    }
    const bool ok = protocol_ok && got.fired[0] == 1 && got.fired[1] == 1 &&
                    got.ready_at == expect;
    if (!ok) {
      if (out.failures++ == 0) {
        out.first_failure =
            absl::StrCat("order [", absl::StrJoin(messages, ","), "] fired ", got.fired[0], "/",
                         got.fired[1], " at ", got.ready_at[0], "/", got.ready_at[1],
                         " expected ", expect[0], "/", expect[1]);
      }
    }
  } while (std::next_permutation(messages.begin(), messages.end()));
  return out;
}

}  // namespace flowpath::testing
