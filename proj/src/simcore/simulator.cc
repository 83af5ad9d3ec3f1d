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

#include "flowpath/simcore/simulator.h"

#include <algorithm>

#include "absl/strings/str_format.h"
#include "flowpath/base/check.h"
#include "flowpath/base/digest.h"

namespace flowpath {

std::string_view ProcessKindName(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::kClient:
      return "client";
    case ProcessKind::kResourceManager:
      return "resource-manager";
    case ProcessKind::kScheduler:
      return "scheduler";
    case ProcessKind::kHostExecutor:
      return "host-executor";
    case ProcessKind::kDevice:
      return "device";
  }
  return "unknown";
}

std::string_view RunStatusName(RunStatus status) {
  switch (status) {
    case RunStatus::kQuiescent:
      return "quiescent";
    case RunStatus::kDeadlock:
      return "deadlock";
    case RunStatus::kHorizon:
      return "horizon";
  }
  return "unknown";
}

ProcessId Simulator::AddProcess(ProcessKind kind, std::string name) {
  ProcessId id(static_cast<int64_t>(processes_.size()));
  processes_.push_back({id, kind, std::move(name)});
  return id;
}

const LogicalProcess& Simulator::process(ProcessId id) const {
  FP_CHECK(id.valid() && id.value() < static_cast<int64_t>(processes_.size()),
           "unknown process");
  return processes_[id.value()];
}

EventId Simulator::Schedule(VirtualTime fire_at, ProcessId target, std::string_view kind,
                            uint64_t payload_digest, Callback fn) {
  FP_CHECK(fire_at >= now_, "event scheduled in the past");
  const uint64_t seq = next_seq_++;
  heap_.push_back({fire_at, seq, target, kind, payload_digest, std::move(fn)});
  retired_.push_back(false);
  std::push_heap(heap_.begin(), heap_.end(), FiresLater());
  ++live_events_;
  return seq;
}

EventId Simulator::Send(ProcessId from, ProcessId to, Duration latency, std::string_view kind,
                        uint64_t payload_digest, Callback fn) {
  VirtualTime deliver = now_ + latency;
  auto& tail = channel_tail_[{from.value(), to.value()}];
  deliver = Later(deliver, tail);
  tail = deliver;
  return Schedule(deliver, to, kind, payload_digest, std::move(fn));
}

bool Simulator::Cancel(EventId id) {
  if (id >= next_seq_ || retired_[id]) return false;
  retired_[id] = true;
  cancelled_.insert(id);
  --live_events_;
  return true;
}

bool Simulator::Step(VirtualTime horizon) {
  while (!heap_.empty()) {
    if (heap_.front().fire_at > horizon) return false;
    std::pop_heap(heap_.begin(), heap_.end(), FiresLater());
    Pending ev = std::move(heap_.back());
    heap_.pop_back();
    if (cancelled_.erase(ev.seq) > 0) continue;
    retired_[ev.seq] = true;
    --live_events_;
    now_ = ev.fire_at;
    ++processed_;
    log_digest_ = Digest(log_digest_ ^ Digest::kOffset)
                      .Int(now_.nanos())
                      .Int(ev.seq)
                      .Int(ev.target.value())
                      .Bytes(ev.kind)
                      .Int(ev.digest)
                      .value();
    if (log_enabled_) {
      log_.push_back({now_.nanos(), ev.seq, ev.target, std::string(ev.kind), ev.digest});
    }
    ev.fn();
    return true;
  }
  return false;
}

RunStatus Simulator::Classify() const {
  for (const auto& probe : probes_) {
    if (probe()) return RunStatus::kDeadlock;
  }
  return RunStatus::kQuiescent;
}

RunResult Simulator::RunUntilQuiescent() {
  const VirtualTime forever = VirtualTime::FromNanos(INT64_MAX);
  while (Step(forever)) {
  }
  return {now_, Classify()};
}

RunResult Simulator::RunUntil(VirtualTime horizon) {
  while (Step(horizon)) {
  }
  if (live_events_ > 0) {
    if (horizon > now_) now_ = horizon;
    return {now_, RunStatus::kHorizon};
  }
  return {now_, Classify()};
}

void Simulator::DumpEventLog(std::ostream& os) const {
  for (const auto& e : log_) {
    os << absl::StrFormat(
        "{\"t_ns\":%d,\"seq\":%d,\"target\":%d,\"kind\":\"%s\",\"payload_digest\":\"%016x\"}\n",
        e.t_ns, e.seq, e.target.value(), e.kind, e.payload_digest);
  }
}

}  // namespace flowpath
