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

#ifndef FLOWPATH_SIMCORE_SIMULATOR_H_
#define FLOWPATH_SIMCORE_SIMULATOR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"

namespace flowpath {

enum class ProcessKind { kClient, kResourceManager, kScheduler, kHostExecutor, kDevice };

std::string_view ProcessKindName(ProcessKind kind);

struct LogicalProcess {
  ProcessId id;
  ProcessKind kind;
  std::string name;
};

using EventId = uint64_t;

struct EventLogEntry {
  int64_t t_ns;
  uint64_t seq;
  ProcessId target;
  std::string kind;
  uint64_t payload_digest;
};

enum class RunStatus { kQuiescent, kDeadlock, kHorizon };

std::string_view RunStatusName(RunStatus status);

struct RunResult {
  VirtualTime clock;
  RunStatus status;
};

// Single-threaded discrete-event kernel. Events with equal fire times run in
// the order they were scheduled.
class Simulator {
 public:
  using Callback = std::function<void()>;

  Simulator() = default;
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  ProcessId AddProcess(ProcessKind kind, std::string name);
  const LogicalProcess& process(ProcessId id) const;
  int process_count() const { return static_cast<int>(processes_.size()); }

  // Aborts if `fire_at` is earlier than now(). `kind` must outlive the
  // simulator (string literals).
  EventId Schedule(VirtualTime fire_at, ProcessId target, std::string_view kind,
                   uint64_t payload_digest, Callback fn);
  EventId ScheduleAfter(Duration delay, ProcessId target, std::string_view kind,
                        uint64_t payload_digest, Callback fn) {
    return Schedule(now_ + delay, target, kind, payload_digest, std::move(fn));
  }

  // Message delivery over the (from, to) channel. Delivery never precedes an
  // earlier message on the same channel.
  EventId Send(ProcessId from, ProcessId to, Duration latency, std::string_view kind,
               uint64_t payload_digest, Callback fn);

  // Returns false if the event already fired or was cancelled.
  bool Cancel(EventId id);

  VirtualTime now() const { return now_; }
  bool idle() const { return live_events_ == 0; }
  uint64_t events_processed() const { return processed_; }

  RunResult RunUntilQuiescent();
  // Processes events with fire_at <= horizon, then advances the clock to
  // the horizon if events remain.
  RunResult RunUntil(VirtualTime horizon);

  // A probe reports whether some component is stuck waiting. Consulted only
  // when the event queue drains.
  void AddBlockedProbe(std::function<bool()> probe) { probes_.push_back(std::move(probe)); }

  void set_event_log_enabled(bool enabled) { log_enabled_ = enabled; }
  const std::vector<EventLogEntry>& event_log() const { return log_; }
  // Running digest over every processed event, kept even when the log is off.
  uint64_t log_digest() const { return log_digest_; }
  void DumpEventLog(std::ostream& os) const;

 private:
  struct Pending {
    VirtualTime fire_at;
    uint64_t seq;
    ProcessId target;
    std::string_view kind;
    uint64_t digest;
    Callback fn;
  };
  struct FiresLater {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  bool Step(VirtualTime horizon);
  RunStatus Classify() const;

  std::vector<LogicalProcess> processes_;
  std::vector<Pending> heap_;
  std::unordered_set<uint64_t> cancelled_;
  std::vector<bool> retired_;  // indexed by seq: fired or cancelled
  std::map<std::pair<int64_t, int64_t>, VirtualTime> channel_tail_;
  std::vector<std::function<bool()>> probes_;
  VirtualTime now_;
  uint64_t next_seq_ = 0;
  uint64_t live_events_ = 0;
  uint64_t processed_ = 0;
  bool log_enabled_ = false;
  std::vector<EventLogEntry> log_;
  uint64_t log_digest_ = 0;
};

}  // namespace flowpath

#endif  // FLOWPATH_SIMCORE_SIMULATOR_H_
