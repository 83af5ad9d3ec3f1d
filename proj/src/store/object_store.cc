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

#include "absl/strings/str_cat.h"
#include "flowpath/base/check.h"

namespace flowpath {

ObjectStore::ObjectStore(Fabric* fabric) : fabric_(fabric) {}

ObjectHandle ObjectStore::Put(HostId host, std::vector<ShardLocation> shards, OwnerLabel owner,
                              bool ready) {
  // High bits: minting host. Low bits: per-host sequence.
  const uint64_t seq = ++next_per_host_[host.value()];
  const ObjectHandle h{(static_cast<uint64_t>(host.value() + 1) << 32) | seq};
  Buffer& b = buffers_[h.id];
  b.shards = std::move(shards);
  b.owner = owner;
  b.ready = ready;
  by_owner_[owner].insert(h.id);
  ++refcount_ops_;
  return h;
}

absl::Status ObjectStore::MarkReady(ObjectHandle h) {
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) return absl::NotFoundError(absl::StrCat("unknown handle ", h.id));
  if (it->second.ready) return absl::OkStatus();
  it->second.ready = true;
  auto waiters = std::move(it->second.waiters);
  it->second.waiters.clear();
  BufferView view{h, it->second.shards};
  for (auto& w : waiters) w.Set(view);
  return absl::OkStatus();
}

Future<BufferView> ObjectStore::Resolve(ObjectHandle h) {
  Promise<BufferView> p;
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) {
    auto t = tombstones_.find(h.id);
    p.Fail(t != tombstones_.end() && t->second
               ? absl::AbortedError(absl::StrCat("buffer ", h.id, " was collected"))
               : absl::NotFoundError(absl::StrCat("unknown handle ", h.id)));
  } else if (it->second.ready) {
    p.Set({h, it->second.shards});
  } else {
    it->second.waiters.push_back(p);
  }
  return p.future();
}

absl::Status ObjectStore::AddRef(ObjectHandle h) {
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) return absl::NotFoundError(absl::StrCat("unknown handle ", h.id));
  ++refcount_ops_;
  ++it->second.refs;
  return absl::OkStatus();
}

absl::Status ObjectStore::Release(ObjectHandle h) {
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) {
    auto t = tombstones_.find(h.id);
    if (t == tombstones_.end()) return absl::NotFoundError(absl::StrCat("unknown handle ", h.id));
    FP_CHECK(t->second, "refcount released below zero");
    return absl::AbortedError(absl::StrCat("buffer ", h.id, " was collected"));
  }
  ++refcount_ops_;
  if (--it->second.refs == 0) {
    Erase(h.id, absl::CancelledError(absl::StrCat("buffer ", h.id, " freed before ready")));
    tombstones_[h.id] = false;
  }
  return absl::OkStatus();
}

void ObjectStore::FreeShards(uint64_t id, Buffer& b) {
  for (size_t i = 0; i < b.shards.size(); ++i) {
    ShardLocation& s = b.shards[i];
    free_log_.push_back({fabric_->sim().now(), ObjectHandle{id}, static_cast<int>(i), s.allocation});
    if (s.allocation) fabric_->FreeHbm(*s.allocation);
    s.allocation.reset();
  }
}

void ObjectStore::Erase(uint64_t id, absl::Status reason) {
  auto it = buffers_.find(id);
  Buffer b = std::move(it->second);
  buffers_.erase(it);
  auto owned = by_owner_.find(b.owner);
  owned->second.erase(id);
  if (owned->second.empty()) by_owner_.erase(owned);
  FreeShards(id, b);
  for (auto& w : b.waiters) w.Fail(reason);
}

std::vector<ObjectHandle> ObjectStore::GcOwner(OwnerLabel owner) {
  std::vector<ObjectHandle> freed;
  auto it = by_owner_.find(owner);
  if (it == by_owner_.end()) return freed;
  const std::set<uint64_t> ids = it->second;
  for (uint64_t id : ids) {
    tombstones_[id] = true;
    Erase(id, absl::AbortedError(
                  absl::StrCat("buffer ", id, " collected with owner ", owner.ToString())));
    freed.push_back(ObjectHandle{id});
  }
  return freed;
}

absl::Status ObjectStore::Migrate(ObjectHandle h, int shard, ShardLocation to) {
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) return absl::NotFoundError(absl::StrCat("unknown handle ", h.id));
  if (shard < 0 || shard >= static_cast<int>(it->second.shards.size())) {
    return absl::OutOfRangeError(absl::StrCat("handle ", h.id, " has no shard ", shard));
  }
  ShardLocation& from = it->second.shards[shard];
  if (from.allocation) fabric_->FreeHbm(*from.allocation);
  from = to;
  return absl::OkStatus();
}

absl::Status ObjectStore::Transfer(ObjectHandle h, OwnerLabel owner) {
  auto it = buffers_.find(h.id);
  if (it == buffers_.end()) return absl::NotFoundError(absl::StrCat("unknown handle ", h.id));
  auto old = by_owner_.find(it->second.owner);
  old->second.erase(h.id);
  if (old->second.empty()) by_owner_.erase(old);
  it->second.owner = owner;
  by_owner_[owner].insert(h.id);
  return absl::OkStatus();
}

bool ObjectStore::ready(ObjectHandle h) const {
  auto it = buffers_.find(h.id);
  return it != buffers_.end() && it->second.ready;
}

int ObjectStore::refcount(ObjectHandle h) const {
  auto it = buffers_.find(h.id);
  return it == buffers_.end() ? 0 : it->second.refs;
}

OwnerLabel ObjectStore::owner(ObjectHandle h) const { return buffers_.at(h.id).owner; }

std::vector<ObjectHandle> ObjectStore::OwnedBy(OwnerLabel owner) const {
  std::vector<ObjectHandle> out;
  auto it = by_owner_.find(owner);
  if (it == by_owner_.end()) return out;
  for (uint64_t id : it->second) out.push_back(ObjectHandle{id});
  return out;
}

int64_t ObjectStore::double_frees() const {
  std::map<std::pair<uint64_t, int>, int> seen;
  int64_t dup = 0;
  for (const FreeEvent& e : free_log_) {
    if (++seen[{e.handle.id, e.shard}] == 2) ++dup;
  }
  return dup;
}

}  // namespace flowpath
