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

#include "flowpath/sched/scheduler.h"

#include <algorithm>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "flowpath/hardware/cluster.h"
#include "flowpath/hardware/fabric.h"

namespace flowpath {
namespace {

constexpr int64_t kMB = 1000LL * 1000;

ClusterConfig OneHost(int devices, int64_t hbm = 16000 * kMB) {
  ClusterConfig c = ClusterConfig::Uniform(1, 1, devices);
  c.hbm_bytes = hbm;
  return c;
}

GangSpec Gang(int64_t instance, int64_t client, int64_t node, std::vector<int> devices,
              Duration d = Micros(100), int64_t hbm = 0) {
  GangSpec g;
  g.instance = InstanceId(instance);
  g.client = ClientId(client);
  g.node = NodeId(node);
  for (int dev : devices) {
    g.devices.push_back(DeviceId(dev));
    g.hbm.push_back({hbm});
  }
  g.hosts = {HostId(0)};
  g.duration = d;
  g.owner = OwnerLabel::Instance(InstanceId(instance));
  return g;
}

std::vector<GangScheduler::Slot> Slots(std::vector<GangSpec> specs) {
  std::vector<GangScheduler::Slot> out;
  for (auto& s : specs) out.push_back({std::move(s), true});
  return out;
}

// Harness that runs each granted gang as one kernel per device, frees its
// reservation at the end, and reports completion.
struct Harness {
  explicit Harness(ClusterConfig config, SchedulerConfig sc = {})
      : fabric(sim, Topology(config)),
        sched(&sim, &fabric, IslandId(0), sc, [this](const GangGrant& g) { OnGrant(g); }) {}

  void OnGrant(const GangGrant& g) {
    grants.push_back(g);
    if (!g.status.ok()) return;
    const GangSpec& spec = specs.at({g.instance.value(), g.node.value()});
    auto left = std::make_shared<int>(static_cast<int>(spec.devices.size()));
    const CollectiveId group(next_group++);
    for (size_t i = 0; i < spec.devices.size(); ++i) {
      KernelExec k;
      k.program = g.instance;
      k.client = spec.client;
      k.node = spec.node;
      k.shard = static_cast<int>(i);
      k.duration = spec.duration;
      if (spec.devices.size() > 1) k.collective = CollectiveSpec{group, static_cast<int>(spec.devices.size())};
      auto allocs = g.allocations[i];
      const uint64_t ticket = g.ticket;
      fabric.EnqueueKernel(spec.devices[i], k).OnReady([=, this](const auto& r) {
        order[r->device.value()].push_back(ticket);
        for (auto a : allocs) {
          if (a) fabric.FreeHbm(*a);
        }
        if (--*left == 0) {
          finished.push_back(ticket);
          sched.GangFinished(ticket);
        }
      });
    }
  }

  void Submit(int64_t instance, int64_t client, std::vector<GangSpec> gangs) {
    for (const auto& g : gangs) specs[{g.instance.value(), g.node.value()}] = g;
    ASSERT_TRUE(sched.SubmitProgram(InstanceId(instance), ClientId(client), Slots(gangs)).ok());
  }

  Simulator sim;
  Fabric fabric;
  GangScheduler sched;
  std::map<std::pair<int64_t, int64_t>, GangSpec> specs;
  std::vector<GangGrant> grants;
  std::vector<uint64_t> finished;
  std::map<int64_t, std::vector<uint64_t>> order;  // device -> tickets run
  int64_t next_group = 0;
};

std::vector<int64_t> ClientSequence(const GangScheduler& s) {
  std::vector<int64_t> out;
  for (const auto& t : s.ticket_log()) out.push_back(t.client.value());
  return out;
}

TEST(SchedulerTest, FifoReleasesInSubmitOrder) {
  Harness h(OneHost(2));
  h.Submit(0, 0, {Gang(0, 0, 1, {0}), Gang(0, 0, 2, {0, 1})});
  h.Submit(1, 1, {Gang(1, 1, 1, {1})});
  h.Submit(2, 0, {Gang(2, 0, 1, {0, 1})});
  EXPECT_EQ(h.sim.RunUntilQuiescent().status, RunStatus::kQuiescent);
  ASSERT_EQ(h.sched.ticket_log().size(), 4u);
  std::vector<std::pair<int64_t, int64_t>> got;
  for (const auto& t : h.sched.ticket_log()) got.push_back({t.instance.value(), t.node.value()});
  EXPECT_EQ(got, (std::vector<std::pair<int64_t, int64_t>>{{0, 1}, {0, 2}, {1, 1}, {2, 1}}));
}

TEST(SchedulerTest, SubgraphIsOneMessage) {
  Harness h(OneHost(4));
  h.Submit(0, 0, {Gang(0, 0, 1, {0, 1}), Gang(0, 0, 2, {2, 3}), Gang(0, 0, 3, {0, 1, 2, 3})});
  h.sim.RunUntilQuiescent();
  EXPECT_EQ(h.sched.tickets_issued(), 3);
  // One program message plus one completion per gang.
  EXPECT_EQ(h.sched.messages_received(), 1 + 3);
}

TEST(SchedulerTest, GrantCostsSchedulerTime) {
  SchedulerConfig sc;
  sc.decision = Micros(10);
  sc.per_gang = Micros(2);
  sc.per_host = Micros(3);
  Harness h(OneHost(2), sc);
  h.Submit(0, 0, {Gang(0, 0, 1, {0}), Gang(0, 0, 2, {1})});
  h.sim.RunUntilQuiescent();
  ASSERT_EQ(h.sched.ticket_log().size(), 2u);
  EXPECT_EQ(h.sched.ticket_log()[0].released, VirtualTime(Micros(15)));
  EXPECT_EQ(h.sched.ticket_log()[1].released, VirtualTime(Micros(20)));
  // Completions need no round without a window.
  EXPECT_EQ(h.sched.decision_rounds(), 1);
}

TEST(SchedulerTest, PlaceholderHoldsLaterGangsOfClient) {
  Harness h(OneHost(3));
  std::vector<GangScheduler::Slot> slots = Slots({Gang(0, 0, 1, {0}), Gang(0, 0, 2, {1})});
  slots[0].ready = false;
  h.specs[{0, 1}] = slots[0].spec;
  h.specs[{0, 2}] = slots[1].spec;
  ASSERT_TRUE(h.sched.SubmitProgram(InstanceId(0), ClientId(0), slots).ok());
  h.Submit(1, 1, {Gang(1, 1, 1, {2})});
  h.Submit(2, 1, {Gang(2, 1, 1, {1})});
  h.sim.RunUntil(VirtualTime(Millis(1)));
  // Client 1's gang on a free device goes. Its gang on device 1 may not
  // overtake client 0's earlier gang there.
  ASSERT_EQ(h.sched.ticket_log().size(), 1u);
  EXPECT_EQ(h.sched.ticket_log()[0].instance, InstanceId(1));
  h.sched.SubmitGang(InstanceId(0), NodeId(1));
  h.sim.RunUntilQuiescent();
  std::vector<std::pair<int64_t, int64_t>> got;
  for (const auto& t : h.sched.ticket_log()) got.push_back({t.instance.value(), t.node.value()});
  EXPECT_EQ(got, (std::vector<std::pair<int64_t, int64_t>>{{1, 1}, {0, 1}, {0, 2}, {2, 1}}));
}

TEST(SchedulerTest, EarlySubmitGangIsRemembered) {
  Harness h(OneHost(1));
  h.sched.SubmitGang(InstanceId(0), NodeId(1));
  std::vector<GangScheduler::Slot> slots = Slots({Gang(0, 0, 1, {0})});
  slots[0].ready = false;
  h.specs[{0, 1}] = slots[0].spec;
  ASSERT_TRUE(h.sched.SubmitProgram(InstanceId(0), ClientId(0), slots).ok());
  h.sim.RunUntilQuiescent();
  EXPECT_EQ(h.sched.tickets_issued(), 1);
}

TEST(SchedulerTest, CancelDropsQueuedGangs) {
  Harness h(OneHost(1));
  std::vector<GangScheduler::Slot> slots = Slots({Gang(0, 0, 1, {0}), Gang(0, 0, 2, {0})});
  slots[0].ready = false;
  slots[1].ready = false;
  ASSERT_TRUE(h.sched.SubmitProgram(InstanceId(0), ClientId(0), slots).ok());
  std::vector<NodeId> dropped = h.sched.CancelInstance(InstanceId(0));
  EXPECT_EQ(dropped, (std::vector<NodeId>{NodeId(1), NodeId(2)}));
  h.sched.SubmitGang(InstanceId(0), NodeId(1));
  h.sim.RunUntilQuiescent();
  EXPECT_EQ(h.sched.tickets_issued(), 0);
  EXPECT_EQ(h.sched.queued(), 0);
  EXPECT_FALSE(h.sched.SubmitProgram(InstanceId(0), ClientId(0), {}).ok());
}

TEST(SchedulerTest, RejectsForeignDevices) {
  Harness h(OneHost(2));
  EXPECT_FALSE(h.sched.SubmitProgram(InstanceId(0), ClientId(0), Slots({Gang(0, 0, 1, {5})})).ok());
}

// Fills one device with `clients` backlogged clients and returns the busy
// time each received by `horizon`.
std::map<ClientId, Duration> Shares(SharePolicy policy, std::vector<int> weights,
                                    VirtualTime horizon) {
  SchedulerConfig sc;
  sc.policy = policy;
  sc.window = 1;
  for (size_t c = 0; c < weights.size(); ++c) sc.weights[static_cast<int64_t>(c)] = weights[c];
  Harness h(OneHost(1), sc);
  int64_t instance = 0;
  for (size_t c = 0; c < weights.size(); ++c) {
    for (int i = 0; i < 400; ++i) {
      h.Submit(instance, static_cast<int64_t>(c), {Gang(instance, static_cast<int64_t>(c), 1, {0})});
      ++instance;
    }
  }
  h.sim.RunUntil(horizon);
  std::map<ClientId, Duration> out;
  for (const auto& t : h.sched.ticket_log()) out[t.client] += Micros(100);
  return out;
}

TEST(SchedulerTest, ProportionalSharesFollowWeights) {
  std::vector<int> weights = {1, 2, 4, 8};
  auto shares = Shares(SharePolicy::kProportional, weights, VirtualTime(Millis(60)));
  Duration total(0);
  for (const auto& [c, d] : shares) total += d;
  for (size_t c = 0; c < weights.size(); ++c) {
    const double got = static_cast<double>(shares[ClientId(c)].count()) / total.count();
    EXPECT_NEAR(got, weights[c] / 15.0, 0.01) << "client " << c;
  }
}

TEST(SchedulerTest, EqualWeightsRoundRobin) {
  SchedulerConfig sc;
  sc.policy = SharePolicy::kProportional;
  sc.window = 1;
  Harness h(OneHost(1), sc);
  for (int64_t c = 0; c < 4; ++c) {
    for (int i = 0; i < 5; ++i) h.Submit(c * 10 + i, c, {Gang(c * 10 + i, c, 1, {0})});
  }
  h.sim.RunUntilQuiescent();
  std::vector<int64_t> expect;
  for (int i = 0; i < 5; ++i) {
    for (int64_t c = 0; c < 4; ++c) expect.push_back(c);
  }
  EXPECT_EQ(ClientSequence(h.sched), expect);
}

TEST(SchedulerTest, FifoIgnoresWeights) {
  auto shares = Shares(SharePolicy::kFifo, {1, 2, 4, 8}, VirtualTime(Millis(30)));
  // Client 0 submitted first and owns the whole prefix.
  EXPECT_EQ(shares.size(), 1u);
}

TEST(SchedulerTest, SingleClientPoliciesAgree) {
  std::mt19937 rng(7);
  std::vector<GangSpec> gangs;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> devs;
    for (int d = 0; d < 4; ++d) {
      if (rng() % 2) devs.push_back(d);
    }
    if (devs.empty()) devs.push_back(static_cast<int>(rng() % 4));
    gangs.push_back(Gang(i, 0, 1, devs, Micros(10 + rng() % 90)));
  }
  std::vector<std::vector<uint64_t>> logs;
  for (SharePolicy p : {SharePolicy::kFifo, SharePolicy::kProportional}) {
    SchedulerConfig sc;
    sc.policy = p;
    sc.window = 2;
    Harness h(OneHost(4), sc);
    for (const auto& g : gangs) h.Submit(g.instance.value(), 0, {g});
    h.sim.RunUntilQuiescent();
    std::vector<uint64_t> log;
    for (const auto& t : h.sched.ticket_log()) log.push_back(t.instance.value());
    logs.push_back(log);
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(logs[0].size(), 50u);
}

TEST(SchedulerTest, HbmShortageBlocksOnlyThatDevice) {
  Harness h(OneHost(2, 100 * kMB));
  auto held = h.fabric.AllocHbm(DeviceId(0), 80 * kMB, OwnerLabel::Client(ClientId(9)));
  ASSERT_TRUE(held.ok());
  const AllocationId hold = *held->allocation.result();
  h.Submit(0, 0, {Gang(0, 0, 1, {0}, Micros(100), 50 * kMB)});
  h.Submit(1, 1, {Gang(1, 1, 1, {1}, Micros(100), 50 * kMB)});
  h.sim.RunUntil(VirtualTime(Millis(1)));
  ASSERT_EQ(h.sched.ticket_log().size(), 1u);
  EXPECT_EQ(h.sched.ticket_log()[0].client, ClientId(1));
  h.sim.Schedule(VirtualTime(Millis(2)), ProcessId(0), "free", 0, [&] { h.fabric.FreeHbm(hold); });
  EXPECT_EQ(h.sim.RunUntilQuiescent().status, RunStatus::kQuiescent);
  ASSERT_EQ(h.sched.ticket_log().size(), 2u);
  EXPECT_GE(h.sched.ticket_log()[1].released, VirtualTime(Millis(2)));
  EXPECT_EQ(h.fabric.hbm_used(DeviceId(0)), 0);
}

TEST(SchedulerTest, ImpossibleReservationFailsGrant) {
  Harness h(OneHost(1, 100 * kMB));
  h.Submit(0, 0, {Gang(0, 0, 1, {0}, Micros(100), 200 * kMB)});
  h.Submit(1, 0, {Gang(1, 0, 1, {0})});
  h.sim.RunUntilQuiescent();
  ASSERT_EQ(h.grants.size(), 2u);
  EXPECT_EQ(h.grants[0].status.code(), absl::StatusCode::kResourceExhausted);
  EXPECT_TRUE(h.grants[1].status.ok());
  EXPECT_EQ(h.sched.tickets_issued(), 1);
}

// Per-device greedy allocator: each device serves requests in its own order
// and holds its single slot for the head until that gang has every device.
bool GreedyDeadlocks(const std::vector<std::vector<int>>& device_orders, int gangs) {
  std::vector<size_t> next(device_orders.size(), 0);
  std::vector<bool> done(gangs, false);
  std::vector<int> need(gangs, 0);
  for (const auto& order : device_orders) {
    for (int g : order) ++need[g];
  }
  bool progress = true;
  while (progress) {
    progress = false;
    for (int g = 0; g < gangs; ++g) {
      if (done[g]) continue;
      int heads = 0;
      for (size_t d = 0; d < device_orders.size(); ++d) {
        if (next[d] < device_orders[d].size() && device_orders[d][next[d]] == g) ++heads;
      }
      if (heads == need[g]) {
        done[g] = true;
        for (size_t d = 0; d < device_orders.size(); ++d) {
          if (next[d] < device_orders[d].size() && device_orders[d][next[d]] == g) ++next[d];
        }
        progress = true;
      }
    }
  }
  return std::count(done.begin(), done.end(), false) > 0;
}

TEST(SchedulerTest, CrossedCapacityDoesNotDeadlock) {
  EXPECT_TRUE(GreedyDeadlocks({{0, 1}, {1, 0}}, 2));
  EXPECT_FALSE(GreedyDeadlocks({{0, 1}, {0, 1}}, 2));

  // Each device fits one gang's buffer at a time; both gangs need both.
  Harness h(OneHost(2, 100 * kMB));
  h.Submit(0, 0, {Gang(0, 0, 1, {0, 1}, Micros(100), 60 * kMB)});
  h.Submit(1, 1, {Gang(1, 1, 1, {1, 0}, Micros(100), 60 * kMB)});
  EXPECT_EQ(h.sim.RunUntilQuiescent().status, RunStatus::kQuiescent);
  EXPECT_EQ(h.finished.size(), 2u);
}

TEST(SchedulerTest, EveryDeviceFollowsTicketOrder) {
  for (uint32_t seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    SchedulerConfig sc;
    sc.policy = seed % 2 ? SharePolicy::kProportional : SharePolicy::kFifo;
    sc.window = static_cast<int>(seed % 3);
    sc.weights = {{0, 1}, {1, 3}, {2, 2}};
    Harness h(OneHost(4, 100 * kMB), sc);
    for (int64_t i = 0; i < 60; ++i) {
      std::vector<int> devs;
      for (int d = 0; d < 4; ++d) {
        if (rng() % 2) devs.push_back(d);
      }
      if (devs.empty()) devs.push_back(static_cast<int>(rng() % 4));
      std::shuffle(devs.begin(), devs.end(), rng);
      const int64_t client = static_cast<int64_t>(rng() % 3);
      const int64_t hbm = static_cast<int64_t>(rng() % 70) * kMB;
      const VirtualTime at(Micros(static_cast<double>(rng() % 2000)));
      GangSpec g = Gang(i, client, 1, devs, Micros(10 + rng() % 200), hbm);
      h.sim.Schedule(at, h.sched.process(), "submit", 0, [&h, g, i, client] {
        h.Submit(i, client, {g});
      });
    }
    ASSERT_EQ(h.sim.RunUntilQuiescent().status, RunStatus::kQuiescent) << "seed " << seed;
    EXPECT_EQ(h.finished.size(), 60u);
    for (const auto& [device, tickets] : h.order) {
      EXPECT_TRUE(std::is_sorted(tickets.begin(), tickets.end())) << "device " << device;
    }
    for (int d = 0; d < 4; ++d) EXPECT_EQ(h.fabric.hbm_used(DeviceId(d)), 0);
  }
}

TEST(SchedulerTest, ConfigJsonRoundTrip) {
  SchedulerConfig c;
  c.policy = SharePolicy::kProportional;
  c.weights = {{0, 1}, {3, 8}};
  c.window = 2;
  c.per_host = Micros(5);
  auto back = SchedulerConfig::FromJson(c.ToJson(), "/sched");
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->ToJson(), c.ToJson());
  auto bad = SchedulerConfig::FromJson({{"policy", "lottery"}}, "/sched");
  EXPECT_FALSE(bad.ok());
  EXPECT_NE(bad.status().message().find("/sched/policy"), std::string::npos);
}

}  // namespace
}  // namespace flowpath
