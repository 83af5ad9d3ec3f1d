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

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "flowpath/base/digest.h"
#include "flowpath/base/json_util.h"

namespace flowpath {
namespace {

// Divisible by every weight from 1 to 16.
constexpr int64_t kStrideBase = 720720;

}  // namespace

int SchedulerConfig::weight(ClientId c) const {
  auto it = weights.find(c.value());
  return it == weights.end() ? 1 : it->second;
}

absl::StatusOr<SchedulerConfig> SchedulerConfig::FromJson(const nlohmann::json& j,
                                                          const std::string& path) {
  SchedulerConfig c;
  if (!j.is_object()) return json_util::ParseError(path, "expected object");
  if (j.contains("policy")) {
    FP_ASSIGN_OR_RETURN(std::string policy, json_util::String(j, "policy", path));
    if (policy == "fifo") {
      c.policy = SharePolicy::kFifo;
    } else if (policy == "proportional") {
      c.policy = SharePolicy::kProportional;
    } else {
      return json_util::ParseError(json_util::Child(path, "policy"),
                                   absl::StrCat("unknown policy '", policy, "'"));
    }
  }
  if (j.contains("weights")) {
    const nlohmann::json& w = j["weights"];
    const std::string wpath = json_util::Child(path, "weights");
    if (!w.is_object()) return json_util::ParseError(wpath, "expected object");
    for (const auto& [key, value] : w.items()) {
      int64_t client = 0;
      if (!absl::SimpleAtoi(key, &client)) {
        return json_util::ParseError(json_util::Child(wpath, key), "client id must be an integer");
      }
      if (!value.is_number_integer() || value.get<int>() < 1) {
        return json_util::ParseError(json_util::Child(wpath, key), "weight must be >= 1");
      }
      c.weights[client] = value.get<int>();
    }
  }
  if (j.contains("window")) {
    FP_ASSIGN_OR_RETURN(int64_t window, json_util::Int(j, "window", path));
    if (window < 0) return json_util::ParseError(json_util::Child(path, "window"), "must be >= 0");
    c.window = static_cast<int>(window);
  }
  auto micros = [&](const char* key, Duration& out) -> absl::Status {
    if (!j.contains(key)) return absl::OkStatus();
    FP_ASSIGN_OR_RETURN(double us, json_util::Number(j, key, path));
    if (us < 0) return json_util::ParseError(json_util::Child(path, key), "must be >= 0");
    out = Micros(us);
    return absl::OkStatus();
  };
  FP_RETURN_IF_ERROR(micros("decision_us", c.decision));
  FP_RETURN_IF_ERROR(micros("per_gang_us", c.per_gang));
  FP_RETURN_IF_ERROR(micros("per_host_us", c.per_host));
  return c;
}

nlohmann::json SchedulerConfig::ToJson() const {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [client, weight] : weights) w[std::to_string(client)] = weight;
  return {{"policy", policy == SharePolicy::kFifo ? "fifo" : "proportional"},
          {"weights", w},
          {"window", window},
          {"decision_us", ToMicros(decision)},
          {"per_gang_us", ToMicros(per_gang)},
          {"per_host_us", ToMicros(per_host)}};
}

GangScheduler::GangScheduler(Simulator* sim, Fabric* fabric, IslandId island,
                             SchedulerConfig config, GrantFn on_grant)
    : sim_(sim),
      fabric_(fabric),
      island_(island),
      config_(std::move(config)),
      on_grant_(std::move(on_grant)) {
  process_ = sim_->AddProcess(ProcessKind::kScheduler, absl::StrCat("scheduler", island.value()));
  fabric_->AddFreeObserver([this](DeviceId d) {
    if (hbm_blocked_ && fabric_->topology().device(d).island == island_) Kick();
  });
}

absl::Status GangScheduler::SubmitProgram(InstanceId instance, ClientId client,
                                          std::vector<Slot> slots) {
  ++messages_;
  if (cancelled_.count(instance) > 0) {
    return absl::FailedPreconditionError(absl::StrCat("instance ", instance.value(), " cancelled"));
  }
  for (const Slot& s : slots) {
    for (DeviceId d : s.spec.devices) {
      if (!fabric_->topology().has_device(d) || fabric_->topology().device(d).island != island_) {
        return absl::InvalidArgumentError(absl::StrCat(
            "unknown device ", d.value(), " for scheduler of island ", island_.value()));
      }
    }
  }
  ClientQueue& q = queues_[client];
  if (q.gangs.empty()) q.pass = std::max(q.pass, global_pass_);
  for (Slot& s : slots) {
    auto early = early_.find({instance.value(), s.spec.node.value()});
    if (!s.ready && early != early_.end()) {
      s.ready = true;
      early_.erase(early);
    }
    q.gangs.push_back({next_seq_++, std::move(s), {}});
  }
  Kick();
  return absl::OkStatus();
}

void GangScheduler::SubmitGang(InstanceId instance, NodeId node) {
  ++messages_;
  if (cancelled_.count(instance) > 0) return;
  for (auto& [client, q] : queues_) {
    for (Queued& g : q.gangs) {
      if (g.slot.spec.instance == instance && g.slot.spec.node == node) {
        g.slot.ready = true;
        Kick();
        return;
      }
    }
  }
  early_[{instance.value(), node.value()}] = 1;
}

void GangScheduler::GangFinished(uint64_t ticket) {
  ++messages_;
  auto it = released_.find(ticket);
  if (it == released_.end()) return;
  for (DeviceId d : it->second) --in_flight_[d];
  released_.erase(it);
  Kick();
}

std::vector<NodeId> GangScheduler::CancelInstance(InstanceId instance) {
  cancelled_.insert(instance);
  std::vector<NodeId> dropped;
  for (auto& [client, q] : queues_) {
    std::deque<Queued> keep;
    for (Queued& g : q.gangs) {
      if (g.slot.spec.instance == instance) {
        dropped.push_back(g.slot.spec.node);
      } else {
        keep.push_back(std::move(g));
      }
    }
    q.gangs = std::move(keep);
  }
  Kick();
  return dropped;
}

int GangScheduler::queued() const {
  int n = 0;
  for (const auto& [client, q] : queues_) n += static_cast<int>(q.gangs.size());
  return n;
}

void GangScheduler::Kick() {
  if (round_pending_) return;
  round_pending_ = true;
  const VirtualTime at = Later(sim_->now(), cpu_free_) + config_.decision;
  cpu_free_ = at;
  sim_->Schedule(at, process_, "sched_round", 0, [this] { Round(); });
}

absl::Status GangScheduler::HbmPossible(const GangSpec& spec) const {
  for (size_t i = 0; i < spec.devices.size(); ++i) {
    int64_t total = 0;
    for (int64_t b : spec.hbm[i]) total += b;
    if (total > fabric_->hbm_capacity(spec.devices[i])) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "gang for node ", spec.node.value(), " needs ", total, " bytes on device ",
          spec.devices[i].value(), " with capacity ", fabric_->hbm_capacity(spec.devices[i])));
    }
  }
  return absl::OkStatus();
}

bool GangScheduler::HbmFits(const GangSpec& spec) const {
  for (size_t i = 0; i < spec.devices.size(); ++i) {
    int64_t total = 0;
    for (int64_t b : spec.hbm[i]) total += b;
    if (total > 0 && !fabric_->CanAllocNow(spec.devices[i], total)) return false;
  }
  return true;
}

bool GangScheduler::Releasable(const Slot& s, const std::set<DeviceId>& claimed) const {
  if (!s.ready) return false;
  for (DeviceId d : s.spec.devices) {
    if (claimed.count(d) > 0) return false;
    if (config_.window > 0) {
      auto it = in_flight_.find(d);
      if (it != in_flight_.end() && it->second >= config_.window) return false;
    }
  }
  return true;
}

void GangScheduler::Round() {
  round_pending_ = false;
  ++rounds_;
  hbm_blocked_ = false;
  std::vector<Queued> picked = Select();
  VirtualTime at = sim_->now();
  for (Queued& q : picked) {
    at = at + config_.per_gang +
         config_.per_host * static_cast<int64_t>(q.slot.spec.hosts.size());
    Release(std::move(q), at);
  }
  cpu_free_ = at;
}

std::vector<GangScheduler::Queued> GangScheduler::Select() {
  std::vector<Queued> picked;
  auto take = [&](ClientQueue& q, std::deque<Queued>::iterator it) {
    Queued g = std::move(*it);
    q.gangs.erase(it);
    absl::Status possible = HbmPossible(g.slot.spec);
    if (possible.ok()) {
      if (config_.window > 0) {
        for (DeviceId d : g.slot.spec.devices) ++in_flight_[d];
      }
    }
    picked.push_back(std::move(g));
  };
  // A gang that cannot go yet claims its devices so later gangs do not
  // overtake it there.
  auto blocked = [&](const Slot& s, std::set<DeviceId>& claimed) {
    if (s.ready && HbmPossible(s.spec).ok() && !HbmFits(s.spec)) hbm_blocked_ = true;
    claimed.insert(s.spec.devices.begin(), s.spec.devices.end());
  };
  auto ready_now = [&](const Slot& s, const std::set<DeviceId>& claimed) {
    if (!Releasable(s, claimed)) return false;
    // Impossible reservations are released so the error reaches the client.
    return !HbmPossible(s.spec).ok() || HbmFits(s.spec);
  };

  if (config_.policy == SharePolicy::kFifo) {
    std::vector<std::pair<uint64_t, ClientId>> order;
    for (auto& [client, q] : queues_) {
      for (const Queued& g : q.gangs) order.push_back({g.seq, client});
    }
    std::sort(order.begin(), order.end());
    std::set<DeviceId> claimed;
    std::set<ClientId> stalled;
    for (const auto& [seq, client] : order) {
      ClientQueue& q = queues_[client];
      auto it = std::find_if(q.gangs.begin(), q.gangs.end(),
                             [seq = seq](const Queued& g) { return g.seq == seq; });
      if (stalled.count(client) == 0 && ready_now(it->slot, claimed)) {
        // Reservation happens in take(); later candidates see the new usage.
        take(q, it);
        const Slot& s = picked.back().slot;
        if (HbmPossible(s.spec).ok()) ReserveNow(picked.back());
      } else {
        blocked(it->slot, claimed);
        stalled.insert(client);
      }
    }
    return picked;
  }

  while (true) {
    std::vector<std::pair<int64_t, ClientId>> order;
    for (auto& [client, q] : queues_) {
      if (!q.gangs.empty()) order.push_back({q.pass, client});
    }
    std::sort(order.begin(), order.end());
    std::set<DeviceId> claimed;
    bool released = false;
    for (const auto& [pass, client] : order) {
      ClientQueue& q = queues_[client];
      if (ready_now(q.gangs.front().slot, claimed)) {
        const int64_t stride = kStrideBase / config_.weight(client);
        const int64_t cost = std::max<int64_t>(q.gangs.front().slot.spec.duration.count(), 1);
        global_pass_ = q.pass;
        q.pass += stride * cost;
        take(q, q.gangs.begin());
        if (HbmPossible(picked.back().slot.spec).ok()) ReserveNow(picked.back());
        released = true;
        break;
      }
      blocked(q.gangs.front().slot, claimed);
    }
    if (!released) return picked;
  }
}

void GangScheduler::ReserveNow(Queued& q) {
  const GangSpec& spec = q.slot.spec;
  q.allocations.resize(spec.hbm.size());
  for (size_t i = 0; i < spec.hbm.size(); ++i) {
    for (int64_t bytes : spec.hbm[i]) {
      if (bytes == 0) {
        q.allocations[i].push_back(std::nullopt);
        continue;
      }
      absl::StatusOr<HbmGrant> g = fabric_->AllocHbm(spec.devices[i], bytes, spec.owner);
      FP_CHECK(g.ok() && !g->would_block, "gang reservation raced with another allocator");
      q.allocations[i].push_back(*g->allocation.result());
    }
  }
}

void GangScheduler::Release(Queued q, VirtualTime at) {
  GangGrant grant;
  grant.instance = q.slot.spec.instance;
  grant.node = q.slot.spec.node;
  grant.status = HbmPossible(q.slot.spec);
  if (grant.status.ok()) {
    grant.ticket = next_ticket_++;
    grant.allocations = std::move(q.allocations);
    if (config_.window > 0) released_[grant.ticket] = q.slot.spec.devices;
    charged_[q.slot.spec.client] += q.slot.spec.duration;
    log_.push_back({grant.ticket, q.slot.spec.instance, q.slot.spec.client, q.slot.spec.node,
                    q.slot.spec.devices, at});
  }
  sim_->Schedule(at, process_, "sched_grant",
                 DigestOf("grant", grant.instance.value(), grant.node.value(), grant.ticket),
                 [this, grant = std::move(grant)] { on_grant_(grant); });
}

}  // namespace flowpath
