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

#include "flowpath/store/object_store.h"

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

namespace flowpath {
namespace {

constexpr int64_t kMB = 1000LL * 1000;

class StoreTest : public ::testing::Test {
 protected:
  StoreTest() : fabric_(sim_, Topology(ClusterConfig::Uniform(1, 2, 4))), store_(&fabric_) {}

  std::vector<ShardLocation> Alloc(int first_device, int shards, int64_t bytes, OwnerLabel owner) {
    std::vector<ShardLocation> out;
    for (int i = 0; i < shards; ++i) {
      DeviceId d(first_device + i);
      auto grant = fabric_.AllocHbm(d, bytes, owner);
      EXPECT_TRUE(grant.ok() && !grant->would_block);
      out.push_back({fabric_.topology().device(d).host, d, bytes, *grant->allocation.result()});
    }
    return out;
  }

  bool AllFree() const {
    for (const auto& d : fabric_.topology().devices()) {
      if (fabric_.hbm_free(d.id) != fabric_.hbm_capacity(d.id)) return false;
    }
    return true;
  }

  Simulator sim_;
  Fabric fabric_;
  ObjectStore store_;
};

TEST_F(StoreTest, PutFourShardBuffer) {
  const OwnerLabel owner = OwnerLabel::Client(ClientId(1));
  ObjectHandle h = store_.Put(HostId(0), Alloc(0, 4, kMB, owner), owner);
  EXPECT_EQ(store_.refcount(h), 1);
  EXPECT_EQ(store_.live_buffers(), 1);
  for (int d = 0; d < 4; ++d) EXPECT_EQ(fabric_.hbm_used(DeviceId(d)), kMB);
  auto view = store_.Resolve(h);
  ASSERT_TRUE(view.ready());
  EXPECT_EQ(view.result()->shards.size(), 4u);
}

TEST_F(StoreTest, EmptyBufferIsValid) {
  ObjectHandle h = store_.Put(HostId(0), {}, OwnerLabel::Client(ClientId(0)));
  EXPECT_TRUE(store_.live(h));
  EXPECT_TRUE(store_.Release(h).ok());
  EXPECT_FALSE(store_.live(h));
}

TEST_F(StoreTest, HandlesUniqueAcrossHosts) {
  std::set<uint64_t> ids;
  for (int host = 0; host < 2; ++host) {
    for (int i = 0; i < 100; ++i) {
      ids.insert(store_.Put(HostId(host), {}, OwnerLabel::Client(ClientId(0))).id);
    }
  }
  EXPECT_EQ(ids.size(), 200u);
}

TEST_F(StoreTest, AddRefThenReleaseTwiceFrees) {
  const OwnerLabel owner = OwnerLabel::Client(ClientId(1));
  ObjectHandle h = store_.Put(HostId(0), Alloc(0, 2, kMB, owner), owner);
  ASSERT_TRUE(store_.AddRef(h).ok());
  ASSERT_TRUE(store_.Release(h).ok());
  EXPECT_TRUE(store_.live(h));
  ASSERT_TRUE(store_.Release(h).ok());
  EXPECT_FALSE(store_.live(h));
  EXPECT_TRUE(AllFree());
  EXPECT_EQ(store_.free_log().size(), 2u);
}

TEST_F(StoreTest, ReleaseUnknownHandleIsError) {
  EXPECT_EQ(store_.Release(ObjectHandle{12345}).code(), absl::StatusCode::kNotFound);
}

TEST_F(StoreTest, ReleaseBelowZeroIsFatal) {
  ObjectHandle h = store_.Put(HostId(0), {}, OwnerLabel::Client(ClientId(0)));
  ASSERT_TRUE(store_.Release(h).ok());
  EXPECT_DEATH((void)store_.Release(h), "below zero");
}

TEST_F(StoreTest, OneRefcountOpPerLogicalOp) {
  for (int shards : {1, 2, 8}) {
    const OwnerLabel owner = OwnerLabel::Client(ClientId(shards));
    const int64_t before = store_.refcount_ops();
    ObjectHandle h = store_.Put(HostId(0), Alloc(0, shards, kMB, owner), owner);
    ASSERT_TRUE(store_.AddRef(h).ok());
    ASSERT_TRUE(store_.Release(h).ok());
    ASSERT_TRUE(store_.Release(h).ok());
    EXPECT_EQ(store_.refcount_ops() - before, 4) << shards << " shards";
  }
}

TEST_F(StoreTest, GcOwnerFreesEverything) {
  const OwnerLabel victim = OwnerLabel::Client(ClientId(7));
  for (int i = 0; i < 3; ++i) {
    ObjectHandle h = store_.Put(HostId(0), Alloc(i, 2, kMB, victim), victim);
    ASSERT_TRUE(store_.AddRef(h).ok());  // refcount ignored by gc
  }
  EXPECT_EQ(store_.GcOwner(victim).size(), 3u);
  EXPECT_TRUE(AllFree());
  EXPECT_TRUE(store_.GcOwner(OwnerLabel::Client(ClientId(99))).empty());
  EXPECT_EQ(store_.double_frees(), 0);
}

TEST_F(StoreTest, ReleaseAfterCollectionIsNotFatal) {
  const OwnerLabel owner = OwnerLabel::Instance(InstanceId(1));
  ObjectHandle h = store_.Put(HostId(0), {}, owner);
  store_.GcOwner(owner);
  EXPECT_EQ(store_.Release(h).code(), absl::StatusCode::kAborted);
}

// Program A owns X, program B reads X and owns Y. Enumerate every order of
// {B resolves X, A produces X, A is collected}: B's read succeeds exactly
// when the collection comes last, and Y always survives.
TEST_F(StoreTest, CollectionInterleavingsFailReadersOnly) {
  std::vector<int> ops = {0, 1, 2};
  do {
    Simulator sim;
    Fabric fabric(sim, Topology(ClusterConfig::Uniform(1, 1, 2)));
    ObjectStore store(&fabric);
    const OwnerLabel a = OwnerLabel::Instance(InstanceId(1));
    const OwnerLabel b = OwnerLabel::Instance(InstanceId(2));
    ObjectHandle x = store.Put(HostId(0), {}, a, /*ready=*/false);
    ObjectHandle y = store.Put(HostId(0), {}, b);
    Future<BufferView> read;
    for (int op : ops) {
      if (op == 0) read = store.Resolve(x);
      if (op == 1) (void)store.MarkReady(x);
      if (op == 2) store.GcOwner(a);
    }
    const bool collected_last = ops.back() == 2;
    ASSERT_TRUE(read.ready());
    EXPECT_EQ(read.result().ok(), collected_last);
    EXPECT_TRUE(store.live(y));
    EXPECT_FALSE(store.live(x));
  } while (std::next_permutation(ops.begin(), ops.end()));
}

TEST_F(StoreTest, MigratedHandleStillResolves) {
  const OwnerLabel owner = OwnerLabel::Client(ClientId(1));
  ObjectHandle h = store_.Put(HostId(0), Alloc(0, 1, kMB, owner), owner);
  auto fresh = Alloc(5, 1, kMB, owner);
  ASSERT_TRUE(store_.Migrate(h, 0, fresh[0]).ok());
  EXPECT_EQ(fabric_.hbm_used(DeviceId(0)), 0);
  auto view = store_.Resolve(h);
  ASSERT_TRUE(view.ready() && view.result().ok());
  EXPECT_EQ(view.result()->shards[0].device, DeviceId(5));
  ASSERT_TRUE(store_.Release(h).ok());
  EXPECT_TRUE(AllFree());
}

TEST_F(StoreTest, NoLeaksUnderRandomTraffic) {
  std::mt19937_64 rng(3);
  std::vector<ObjectHandle> live;
  for (int step = 0; step < 2000; ++step) {
    const int op = std::uniform_int_distribution<int>(0, 3)(rng);
    const OwnerLabel owner = OwnerLabel::Client(ClientId(step % 4));
    if (op == 0 || live.empty()) {
      const int first = std::uniform_int_distribution<int>(0, 4)(rng);
      const int shards = std::uniform_int_distribution<int>(0, 3)(rng);
      live.push_back(store_.Put(HostId(0), Alloc(first, shards, 1000, owner), owner));
    } else if (op == 1) {
      ASSERT_TRUE(store_.AddRef(live[rng() % live.size()]).ok());
    } else if (op == 2) {
      const size_t i = rng() % live.size();
      ASSERT_TRUE(store_.Release(live[i]).ok());
      if (!store_.live(live[i])) live.erase(live.begin() + static_cast<long>(i));
    } else {
      store_.GcOwner(owner);
      live.erase(std::remove_if(live.begin(), live.end(),
                                [&](ObjectHandle h) { return !store_.live(h); }),
                 live.end());
    }
  }
  for (int c = 0; c < 4; ++c) store_.GcOwner(OwnerLabel::Client(ClientId(c)));
  EXPECT_EQ(store_.live_buffers(), 0);
  EXPECT_TRUE(AllFree());
  EXPECT_EQ(store_.double_frees(), 0);
}

}  // namespace
}  // namespace flowpath
