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

#include "flowpath/resman/resource_manager.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace flowpath {

ResourceManager::ResourceManager(const Topology* topology) : topology_(topology) {
  devices_.resize(topology_->devices().size());
}

bool ResourceManager::Eligible(const DeviceState& d, bool exclusive) const {
  if (!d.available || d.exclusive) return false;
  return !exclusive || d.slices == 0;
}

absl::StatusOr<SliceGrant> ResourceManager::Place(const SliceRequirement& req) const {
  const int need = req.device_count();
  if (need < 1) return absl::InvalidArgumentError("allocation error: empty mesh");

  std::optional<IslandId> best;
  int64_t best_load = 0;
  std::vector<std::string> availability;
  for (const IslandInfo& island : topology_->islands()) {
    int eligible = 0;
    int64_t load = 0;
    for (DeviceId d : island.devices) {
      const DeviceState& s = devices_[d.value()];
      if (Eligible(s, req.exclusive)) ++eligible;
      if (s.available) load += s.slices;
    }
    availability.push_back(absl::StrCat("island", island.id.value(), "=", eligible));
    if (req.island && *req.island != island.id) continue;
    if (eligible < need) continue;
    if (!best || load < best_load) {
      best = island.id;
      best_load = load;
    }
  }
  if (!best) {
    return absl::ResourceExhaustedError(
        absl::StrCat("allocation error: need ", need, " devices",
                     req.island ? absl::StrCat(" on island", req.island->value()) : "",
                     "; available per island: ", absl::StrJoin(availability, ", ")));
  }

  std::vector<DeviceId> candidates;
  for (DeviceId d : topology_->island(*best).devices) {
    if (Eligible(devices_[d.value()], req.exclusive)) candidates.push_back(d);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](DeviceId a, DeviceId b) {
    return devices_[a.value()].slices < devices_[b.value()].slices;
  });
  candidates.resize(need);
  std::sort(candidates.begin(), candidates.end());
  SliceGrant grant;
  grant.requirement = req;
  grant.island = *best;
  grant.devices = std::move(candidates);
  return grant;
}

bool ResourceManager::CouldEverFit(const SliceRequirement& req) const {
  for (const IslandInfo& island : topology_->islands()) {
    if (req.island && *req.island != island.id) continue;
    int available = 0;
    for (DeviceId d : island.devices) available += devices_[d.value()].available ? 1 : 0;
    if (available >= req.device_count()) return true;
  }
  return false;
}

void ResourceManager::Assign(const SliceGrant& grant) {
  for (DeviceId d : grant.devices) {
    DeviceState& s = devices_[d.value()];
    ++s.slices;
    s.exclusive = grant.requirement.exclusive;
  }
}

void ResourceManager::Unassign(const SliceGrant& grant) {
  for (DeviceId d : grant.devices) {
    DeviceState& s = devices_[d.value()];
    --s.slices;
    if (grant.requirement.exclusive) s.exclusive = false;
  }
}

absl::StatusOr<SliceGrant> ResourceManager::AllocateSlice(const SliceRequirement& req) {
  absl::StatusOr<SliceGrant> grant = Place(req);
  if (!grant.ok()) return grant.status();
  grant->id = SliceId(next_slice_++);
  Assign(*grant);
  slices_[grant->id] = {*grant, 0};
  return grant;
}

void ResourceManager::AllocateSliceWhenAvailable(
    const SliceRequirement& req, std::function<void(absl::StatusOr<SliceGrant>)> done) {
  if (pending_.empty()) {
    absl::StatusOr<SliceGrant> grant = AllocateSlice(req);
    if (grant.ok() || !CouldEverFit(req)) {
      done(std::move(grant));
      return;
    }
  } else if (!CouldEverFit(req)) {
    done(Place(req).status());
    return;
  }
  pending_.push_back({req, std::move(done)});
}

void ResourceManager::RetryPending() {
  while (!pending_.empty()) {
    absl::StatusOr<SliceGrant> grant = AllocateSlice(pending_.front().req);
    if (!grant.ok()) {
      if (CouldEverFit(pending_.front().req)) return;
    }
    auto done = std::move(pending_.front().done);
    pending_.pop_front();
    done(std::move(grant));
  }
}

absl::StatusOr<ResourceManager::ProgramSlices> ResourceManager::AllocateProgram(
    const std::vector<SliceRequirement>& slices) {
  ProgramSlices out;
  for (size_t i = 0; i < slices.size(); ++i) {
    absl::StatusOr<SliceGrant> grant = AllocateSlice(slices[i]);
    if (!grant.ok()) {
      for (SliceId id : out.ids) (void)ReleaseSlice(id);
      return grant.status();
    }
    out.ids.push_back(grant->id);
    out.placement[static_cast<int>(i)] = grant->devices;
  }
  return out;
}

absl::Status ResourceManager::ReleaseProgram(const ProgramSlices& slices) {
  for (SliceId id : slices.ids) {
    if (absl::Status s = ReleaseSlice(id); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status ResourceManager::ReleaseSlice(SliceId id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown slice ", id.value()));
  }
  if (it->second.pins > 0) {
    return absl::FailedPreconditionError(absl::StrCat("slice busy: ", id.value()));
  }
  Unassign(it->second.grant);
  slices_.erase(it);
  RetryPending();
  return absl::OkStatus();
}

absl::StatusOr<SliceGrant> ResourceManager::Remap(SliceId id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown slice ", id.value()));
  }
  if (it->second.pins > 0) {
    return absl::FailedPreconditionError(absl::StrCat("slice busy: ", id.value()));
  }
  SliceGrant& current = it->second.grant;
  Unassign(current);
  absl::StatusOr<SliceGrant> fresh = Place(current.requirement);
  if (!fresh.ok()) {
    Assign(current);
    return fresh.status();
  }
  fresh->id = id;
  current = *fresh;
  Assign(current);
  for (auto& fn : remap_listeners_) fn(current);
  return current;
}

absl::Status ResourceManager::Pin(SliceId id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) return absl::NotFoundError(absl::StrCat("unknown slice ", id.value()));
  ++it->second.pins;
  return absl::OkStatus();
}

absl::Status ResourceManager::Unpin(SliceId id) {
  auto it = slices_.find(id);
  if (it == slices_.end()) return absl::NotFoundError(absl::StrCat("unknown slice ", id.value()));
  if (it->second.pins == 0) {
    return absl::FailedPreconditionError(absl::StrCat("slice not pinned: ", id.value()));
  }
  --it->second.pins;
  return absl::OkStatus();
}

void ResourceManager::SyncNewDevices() {
  if (devices_.size() == topology_->devices().size()) return;
  devices_.resize(topology_->devices().size());
  RetryPending();
}

absl::Status ResourceManager::RemoveDevices(const std::vector<DeviceId>& devices) {
  for (DeviceId d : devices) {
    if (!topology_->has_device(d) || d.value() >= static_cast<int64_t>(devices_.size())) {
      return absl::NotFoundError(absl::StrCat("unknown device ", d.value()));
    }
    if (devices_[d.value()].slices > 0) {
      return absl::FailedPreconditionError(
          absl::StrCat("device ", d.value(), " is assigned to ", devices_[d.value()].slices,
                       " slices"));
    }
  }
  for (DeviceId d : devices) devices_[d.value()].available = false;
  // Requests that can no longer fit anywhere fail now instead of waiting.
  std::deque<Pending> keep;
  std::deque<Pending> failed;
  for (Pending& p : pending_) {
    (CouldEverFit(p.req) ? keep : failed).push_back(std::move(p));
  }
  pending_ = std::move(keep);
  for (Pending& p : failed) p.done(Place(p.req).status());
  return absl::OkStatus();
}

const SliceGrant* ResourceManager::slice(SliceId id) const {
  auto it = slices_.find(id);
  return it == slices_.end() ? nullptr : &it->second.grant;
}

std::vector<DeviceId> ResourceManager::AvailableDevices() const {
  std::vector<DeviceId> out;
  for (size_t i = 0; i < devices_.size(); ++i) {
    if (devices_[i].available) out.push_back(DeviceId(static_cast<int64_t>(i)));
  }
  return out;
}

nlohmann::json ResourceManager::DumpState() const {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& [id, s] : slices_) {
    nlohmann::json devices = nlohmann::json::array();
    for (DeviceId d : s.grant.devices) devices.push_back(d.value());
    slices.push_back({{"id", id.value()},
                      {"island", s.grant.island.value()},
                      {"devices", devices},
                      {"exclusive", s.grant.requirement.exclusive},
                      {"pins", s.pins}});
  }
  nlohmann::json devices = nlohmann::json::array();
  for (size_t i = 0; i < devices_.size(); ++i) {
    devices.push_back({{"id", i},
                       {"available", devices_[i].available},
                       {"slices", devices_[i].slices}});
  }
  return {{"slices", slices}, {"devices", devices}, {"pending", pending_.size()}};
}

}  // namespace flowpath
