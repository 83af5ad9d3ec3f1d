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

#ifndef FLOWPATH_STORE_OBJECT_STORE_H_
#define FLOWPATH_STORE_OBJECT_STORE_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "flowpath/base/future.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/owner.h"
#include "flowpath/base/time.h"
#include "flowpath/hardware/fabric.h"

namespace flowpath {

// Opaque reference to a logical buffer. Ids carry no location.
struct ObjectHandle {
  uint64_t id = 0;
  friend auto operator<=>(const ObjectHandle&, const ObjectHandle&) = default;
};

struct ShardLocation {
  HostId host;
  std::optional<DeviceId> device;  // absent for host memory
  int64_t bytes = 0;
  std::optional<AllocationId> allocation;  // HBM owned by the store
};

struct BufferView {
  ObjectHandle handle;
  std::vector<ShardLocation> shards;
};

struct FreeEvent {
  VirtualTime at;
  ObjectHandle handle;
  int shard = 0;
  std::optional<AllocationId> allocation;
};

// Sharded buffers keyed by opaque handles. Reference counts apply to the
// logical buffer, one operation per call whatever the shard count.
class ObjectStore {
 public:
  explicit ObjectStore(Fabric* fabric);

  // Takes ownership of the shard allocations. A buffer put with
  // `ready = false` is a placeholder whose data is still being produced.
  ObjectHandle Put(HostId host, std::vector<ShardLocation> shards, OwnerLabel owner,
                   bool ready = true);
  absl::Status MarkReady(ObjectHandle h);

  // Resolves once the buffer is ready. Fails if it was collected.
  Future<BufferView> Resolve(ObjectHandle h);

  absl::Status AddRef(ObjectHandle h);
  // Frees every shard when the count reaches zero. Releasing a buffer that
  // already reached zero is a fatal accounting error.
  absl::Status Release(ObjectHandle h);

  // Frees all buffers owned by `owner` regardless of refcount and fails
  // their pending readers.
  std::vector<ObjectHandle> GcOwner(OwnerLabel owner);

  // Relocates one shard. The old allocation, if any, is freed.
  absl::Status Migrate(ObjectHandle h, int shard, ShardLocation to);

  // Changes the GC owner, e.g. when an intermediate becomes a client result.
  absl::Status Transfer(ObjectHandle h, OwnerLabel owner);

  bool live(ObjectHandle h) const { return buffers_.count(h.id) > 0; }
  bool ready(ObjectHandle h) const;
  int refcount(ObjectHandle h) const;
  OwnerLabel owner(ObjectHandle h) const;
  int live_buffers() const { return static_cast<int>(buffers_.size()); }
  std::vector<ObjectHandle> OwnedBy(OwnerLabel owner) const;
  int64_t refcount_ops() const { return refcount_ops_; }
  const std::vector<FreeEvent>& free_log() const { return free_log_; }
  // Number of (handle, shard) pairs freed more than once.
  int64_t double_frees() const;

 private:
  struct Buffer {
    std::vector<ShardLocation> shards;
    OwnerLabel owner;
    int refs = 1;
    bool ready = true;
    std::vector<Promise<BufferView>> waiters;
  };

  void FreeShards(uint64_t id, Buffer& b);
  void Erase(uint64_t id, absl::Status reason);

  Fabric* fabric_;
  std::unordered_map<uint64_t, Buffer> buffers_;
  std::unordered_map<uint64_t, bool> tombstones_;  // true if collected
  std::map<OwnerLabel, std::set<uint64_t>> by_owner_;
  std::map<int64_t, uint32_t> next_per_host_;
  std::vector<FreeEvent> free_log_;
  int64_t refcount_ops_ = 0;
};

}  // namespace flowpath

#endif  // FLOWPATH_STORE_OBJECT_STORE_H_
