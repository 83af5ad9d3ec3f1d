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

#include <map>
#include <random>

#include <gtest/gtest.h>

#include "flowpath/hardware/cluster.h"
#include "flowpath/ir/lowering.h"
#include "flowpath/ir/program.h"
#include "flowpath/ir/regularity.h"
#include "flowpath/ir/serialization.h"
#include "flowpath/ir/tracer.h"

namespace flowpath {
namespace {

constexpr int64_t kMB = 1000LL * 1000;

CompiledFunction Fn(const std::string& name, int shards, int64_t bytes, bool regular = true) {
  CompiledFunction f;
  f.name = name;
  f.shards = shards;
  f.inputs = {{bytes, "block"}};
  f.outputs = {{bytes, "block"}};
  f.per_shard = Micros(100);
  f.regular = regular;
  return f;
}

std::vector<DeviceId> Devices(int first, int count) {
  std::vector<DeviceId> out;
  for (int i = 0; i < count; ++i) out.push_back(DeviceId(first + i));
  return out;
}

// f(v) = (b(a(v)), a(c(a(v))))
TracedProgram ForkedProgram() {
  Tracer t(ClientId(0));
  SliceRef s = t.DeclareSlice({2});
  Value v = t.Arg(2, {1024});
  CompiledFunction a = Fn("a", 2, 1024);
  CompiledFunction b = Fn("b", 2, 1024);
  CompiledFunction c = Fn("c", 2, 1024);
  Value x = (*t.Call(a, s, {v}))[0];
  Value y = (*t.Call(b, s, {x}))[0];
  Value z = (*t.Call(c, s, {x}))[0];
  Value w = (*t.Call(a, s, {z}))[0];
  EXPECT_TRUE(t.Return({y, w}).ok());
  auto p = std::move(t).Finish();
  EXPECT_TRUE(p.ok()) << p.status();
  return *p;
}

absl::StatusOr<TracedProgram> Chain(int k, const std::vector<int>& shards, int64_t logical,
                                    const std::vector<bool>& regular = {}) {
  Tracer t(ClientId(3));
  std::vector<SliceRef> slices;
  for (int i = 0; i < k; ++i) slices.push_back(t.DeclareSlice({shards[i]}));
  Value v = t.Arg(shards[0], {logical / shards[0]});
  for (int i = 0; i < k; ++i) {
    CompiledFunction f = Fn("f" + std::to_string(i), shards[i], logical / shards[i],
                            regular.empty() ? true : static_cast<bool>(regular[i]));
    auto out = t.Call(f, slices[i], {v});
    if (!out.ok()) return out.status();
    v = (*out)[0];
  }
  if (absl::Status s = t.Return({v}); !s.ok()) return s;
  return std::move(t).Finish();
}

TEST(TracerTest, ForkedProgramIsCompact) {
  TracedProgram p = ForkedProgram();
  const ProgramGraph& g = p.graph;
  EXPECT_EQ(g.CountKind(NodeKind::kArg), 1);
  EXPECT_EQ(g.CountKind(NodeKind::kCompute), 4);
  EXPECT_EQ(g.CountKind(NodeKind::kResult), 2);
  std::vector<std::string> names;
  for (const Node& n : g.nodes) {
    if (n.kind == NodeKind::kCompute) names.push_back(n.fn.name);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"a", "b", "c", "a"}));
  EXPECT_EQ(g.edges.size(), 6u);
  EXPECT_TRUE(g.IsAcyclic());
}

TEST(TracerTest, ThousandShardChainHasFourNodes) {
  auto p = Chain(2, {1024, 1024}, 1024 * 4096);
  ASSERT_TRUE(p.ok()) << p.status();
  EXPECT_EQ(p->graph.nodes.size(), 4u);
  EXPECT_EQ(p->graph.edges.size(), 3u);
}

TEST(TracerTest, CompactnessIndependentOfShardCount) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 12)(rng);
    std::vector<int> shards;
    for (int i = 0; i < k; ++i) shards.push_back(1 << std::uniform_int_distribution<int>(0, 11)(rng));
    auto p = Chain(k, shards, int64_t{1} << 22);
    ASSERT_TRUE(p.ok()) << p.status();
    EXPECT_EQ(static_cast<int>(p->graph.nodes.size()), k + 2);
  }
}

TEST(TracerTest, EmptyProgramIsValid) {
  Tracer t(ClientId(0));
  auto p = std::move(t).Finish();
  ASSERT_TRUE(p.ok());
  EXPECT_TRUE(p->graph.nodes.empty());
  EXPECT_TRUE(ValidateRegularity(p->graph).all_regular());
}

TEST(TracerTest, UndefinedValueIsTraceError) {
  Tracer other(ClientId(0));
  Value foreign = other.Arg(2, {16});
  Tracer t(ClientId(0));
  SliceRef s = t.DeclareSlice({2});
  auto out = t.Call(Fn("a", 2, 16), s, {foreign});
  ASSERT_FALSE(out.ok());
  EXPECT_NE(out.status().message().find("trace error"), std::string::npos);
  EXPECT_FALSE(t.Return({Value{NodeId(9), 0, 0}}).ok());
}

TEST(TracerTest, ShardCountMustMatchSlice) {
  Tracer t(ClientId(0));
  SliceRef s = t.DeclareSlice({2, 2});
  Value v = t.Arg(4, {16});
  EXPECT_FALSE(t.Call(Fn("a", 2, 16), s, {v}).ok());
  EXPECT_TRUE(t.Call(Fn("a", 4, 16), s, {v}).ok());
}

class LoweringTest : public ::testing::Test {
 protected:
  Topology topo_{ClusterConfig::Uniform(2, 2, 4)};  // 16 devices
};

TEST_F(LoweringTest, SameDevicesGiveOneToOneWithoutTransfer) {
  auto p = Chain(2, {4, 4}, 16 * kMB);
  ASSERT_TRUE(p.ok());
  auto g = Lower(*p, {{0, Devices(0, 4)}, {1, Devices(0, 4)}}, topo_);
  ASSERT_TRUE(g.ok()) << g.status();
  const Edge& ab = g->edges[g->InEdges(NodeId(2)).at(0)];
  EXPECT_EQ(ab.reshard->kind, ReshardKind::kOneToOne);
  EXPECT_EQ(ab.reshard->transfer_bytes(), 0);
  EXPECT_EQ(ab.reshard->total_bytes(), 16 * kMB);
}

TEST_F(LoweringTest, TwoToFourScatter) {
  auto p = Chain(2, {2, 4}, 8 * kMB);
  ASSERT_TRUE(p.ok());
  auto g = Lower(*p, {{0, Devices(0, 2)}, {1, Devices(4, 4)}}, topo_);
  ASSERT_TRUE(g.ok()) << g.status();
  const ReshardingSpec& r = *g->edges[g->InEdges(NodeId(2)).at(0)].reshard;
  EXPECT_EQ(r.kind, ReshardKind::kScatter);
  ASSERT_EQ(r.pieces.size(), 4u);
  // Source shard i owns [4i, 4i+4) MB; destination j owns [2j, 2j+2) MB.
  const std::vector<std::pair<int, int>> expected = {{0, 0}, {0, 1}, {1, 2}, {1, 3}};
  for (size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(r.pieces[k].src, expected[k].first);
    EXPECT_EQ(r.pieces[k].dst, expected[k].second);
    EXPECT_EQ(r.pieces[k].bytes, 2 * kMB);
    EXPECT_EQ(r.pieces[k].link, LinkKind::kIci);
  }
  EXPECT_EQ(r.bytes_from(0), 4 * kMB);
  EXPECT_EQ(r.bytes_into(3), 2 * kMB);
}

TEST_F(LoweringTest, MissingSliceIsLoweringError) {
  auto p = Chain(2, {2, 2}, kMB);
  ASSERT_TRUE(p.ok());
  auto g = Lower(*p, {{0, Devices(0, 2)}}, topo_);
  ASSERT_FALSE(g.ok());
  EXPECT_NE(g.status().message().find("lowering error"), std::string::npos);
}

TEST_F(LoweringTest, LogicalSizeMismatchIsTypeError) {
  Tracer t(ClientId(0));
  SliceRef s0 = t.DeclareSlice({2});
  SliceRef s1 = t.DeclareSlice({4});
  Value v = t.Arg(2, {100});
  CompiledFunction b = Fn("b", 4, 100);  // 400 logical bytes, producer gives 200
  Value x = (*t.Call(Fn("a", 2, 100), s0, {v}))[0];
  ASSERT_TRUE(t.Call(b, s1, {x}).ok());
  auto p = std::move(t).Finish();
  ASSERT_TRUE(p.ok());
  auto g = Lower(*p, {{0, Devices(0, 2)}, {1, Devices(0, 4)}}, topo_);
  ASSERT_FALSE(g.ok());
  EXPECT_NE(g.status().message().find("type error"), std::string::npos);
}

TEST_F(LoweringTest, ReLowerChangesOnlyBindingsAndLinks) {
  auto p = Chain(3, {4, 4, 2}, 8 * kMB);
  ASSERT_TRUE(p.ok());
  SlicePlacement first = {{0, Devices(0, 4)}, {1, Devices(4, 4)}, {2, Devices(0, 2)}};
  SlicePlacement second = {{0, Devices(0, 4)}, {1, Devices(8, 4)}, {2, Devices(12, 2)}};
  auto g1 = Lower(*p, first, topo_);
  auto g2 = Lower(*p, second, topo_);
  ASSERT_TRUE(g1.ok() && g2.ok());
  ASSERT_EQ(g1->nodes.size(), g2->nodes.size());
  ASSERT_EQ(g1->edges.size(), g2->edges.size());
  for (size_t i = 0; i < g1->nodes.size(); ++i) {
    Node a = g1->nodes[i];
    Node b = g2->nodes[i];
    a.devices.clear();
    b.devices.clear();
    EXPECT_EQ(a, b);
  }
  bool some_link_changed = false;
  for (size_t e = 0; e < g1->edges.size(); ++e) {
    const auto& r1 = *g1->edges[e].reshard;
    const auto& r2 = *g2->edges[e].reshard;
    EXPECT_EQ(r1.kind, r2.kind);
    ASSERT_EQ(r1.pieces.size(), r2.pieces.size());
    for (size_t k = 0; k < r1.pieces.size(); ++k) {
      EXPECT_EQ(r1.pieces[k].bytes, r2.pieces[k].bytes);
      some_link_changed |= r1.pieces[k].link != r2.pieces[k].link;
    }
  }
  EXPECT_TRUE(some_link_changed);
}

TEST_F(LoweringTest, LoweringIsPure) {
  auto p = Chain(3, {4, 2, 8}, 8 * kMB);
  ASSERT_TRUE(p.ok());
  SlicePlacement map = {{0, Devices(0, 4)}, {1, Devices(8, 2)}, {2, Devices(8, 8)}};
  auto g1 = Lower(*p, map, topo_);
  auto g2 = Lower(*p, map, topo_);
  ASSERT_TRUE(g1.ok() && g2.ok());
  EXPECT_EQ(*g1, *g2);
  EXPECT_TRUE(g1->IsAcyclic());
  EXPECT_TRUE(g1->Validate().ok());
}

// Brute-force oracle: assign every byte of the logical buffer to its owning
// shard on each side and count pairs.
std::map<std::pair<int, int>, int64_t> ByteOracle(int64_t total, int m, int n) {
  std::map<std::pair<int, int>, int64_t> pairs;
  auto owner = [&](int64_t b, int parts) {
    int s = 0;
    while (static_cast<int64_t>(static_cast<__int128>(total) * (s + 1) / parts) <= b) ++s;
    return s;
  };
  for (int64_t b = 0; b < total; ++b) ++pairs[{owner(b, m), owner(b, n)}];
  return pairs;
}

TEST_F(LoweringTest, BlockRedistributionMatchesByteOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const int64_t total = std::uniform_int_distribution<int64_t>(0, 200)(rng);
    ReshardingSpec r =
        ComputeResharding(total, Devices(0, m), "block", Devices(8, n), "block", topo_);
    std::map<std::pair<int, int>, int64_t> got;
    for (const auto& p : r.pieces) {
      if (p.bytes > 0) got[{p.src, p.dst}] += p.bytes;
    }
    EXPECT_EQ(got, ByteOracle(total, m, n)) << m << "x" << n << " of " << total;
    EXPECT_EQ(r.total_bytes(), total);
    int64_t from = 0;
    int64_t into = 0;
    for (int i = 0; i < m; ++i) from += r.bytes_from(i);
    for (int j = 0; j < n; ++j) into += r.bytes_into(j);
    EXPECT_EQ(from, into);
    if (r.kind == ReshardKind::kOneToOne) EXPECT_EQ(m, n);
  }
}

TEST_F(LoweringTest, LayoutChangeIsAllToAll) {
  ReshardingSpec r = ComputeResharding(4000, Devices(0, 2), "row", Devices(0, 2), "col", topo_);
  EXPECT_EQ(r.kind, ReshardKind::kAllToAll);
  EXPECT_EQ(r.pieces.size(), 4u);
  EXPECT_EQ(r.total_bytes(), 4000);
  EXPECT_EQ(r.transfer_bytes(), 2000);
}

TEST(RegularityTest, IrregularNodeSplitsSegments) {
  auto p = Chain(5, {2, 2, 2, 2, 2}, 1024, {true, true, false, true, true});
  ASSERT_TRUE(p.ok());
  RegularityReport r = ValidateRegularity(p->graph);
  ASSERT_EQ(r.irregular.size(), 1u);
  EXPECT_EQ(r.irregular[0], NodeId(3));  // node 0 is the arg
  ASSERT_EQ(r.segments.size(), 3u);
  EXPECT_TRUE(r.segments[0].parallel);
  EXPECT_EQ(r.segments[0].nodes, (std::vector<NodeId>{NodeId(1), NodeId(2)}));
  EXPECT_FALSE(r.segments[1].parallel);
  EXPECT_TRUE(r.segments[2].parallel);
  EXPECT_EQ(r.segments[2].nodes, (std::vector<NodeId>{NodeId(4), NodeId(5)}));
}

TEST(RegularityTest, AllRegular) {
  auto p = Chain(3, {2, 2, 2}, 1024);
  ASSERT_TRUE(p.ok());
  RegularityReport r = ValidateRegularity(p->graph);
  EXPECT_TRUE(r.all_regular());
  EXPECT_EQ(r.segments.size(), 1u);
}

TEST(SerializationTest, RoundTripTraced) {
  TracedProgram p = ForkedProgram();
  auto back = DeserializeProgram(SerializeProgram(p.graph));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, p.graph);
}

TEST(SerializationTest, RoundTripLowered) {
  Topology topo(ClusterConfig::Uniform(2, 1, 4));
  auto p = Chain(2, {2, 4}, 8 * kMB);
  ASSERT_TRUE(p.ok());
  auto g = Lower(*p, {{0, Devices(0, 2)}, {1, Devices(2, 4)}}, topo);
  ASSERT_TRUE(g.ok());
  auto back = DeserializeProgram(SerializeProgram(*g));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, *g);
}

TEST(SerializationTest, EmptyObjectIsParseError) {
  auto r = DeserializeProgram("{}");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("parse error at /form"), std::string::npos);
  EXPECT_FALSE(DeserializeProgram("{nope").ok());
}

TEST(SerializationTest, ErrorNamesNodePath) {
  nlohmann::json j = ProgramToJson(ForkedProgram().graph);
  j["nodes"][2]["fn"]["shards"] = "two";
  auto r = ProgramFromJson(j);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("/nodes/2/fn/shards"), std::string::npos)
      << r.status().message();
}

TEST(SerializationTest, DigestIsStable) {
  EXPECT_EQ(ProgramDigest(ForkedProgram().graph), ProgramDigest(ForkedProgram().graph));
  auto other = Chain(2, {2, 2}, 2048);
  ASSERT_TRUE(other.ok());
  EXPECT_NE(ProgramDigest(ForkedProgram().graph), ProgramDigest(other->graph));
}

}  // namespace
}  // namespace flowpath
