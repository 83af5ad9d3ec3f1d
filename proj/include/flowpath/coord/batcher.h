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

#ifndef FLOWPATH_COORD_BATCHER_H_
#define FLOWPATH_COORD_BATCHER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"
#include "flowpath/simcore/simulator.h"

namespace flowpath {

struct BatchPolicy {
  int max_messages = 16;
  Duration max_delay = Micros(100);
};

// Same-destination batching of non-critical control messages. A batch is
// flushed when it holds max_messages or when its oldest message has waited
// max_delay, and travels as one wire message.
class MessageBatcher {
 public:
  MessageBatcher(Simulator* sim, BatchPolicy policy) : sim_(sim), policy_(policy) {}

  void Send(ProcessId from, ProcessId to, Duration latency, bool critical, std::string_view kind,
            uint64_t digest, std::function<void()> deliver);
  void FlushAll();

  const BatchPolicy& policy() const { return policy_; }
  int64_t wire_messages() const { return wire_messages_; }
  int64_t logical_messages() const { return logical_messages_; }

 private:
  struct Queue {
    Duration latency{0};
    std::vector<std::pair<uint64_t, std::function<void()>>> messages;
    std::optional<EventId> timer;
  };

  void Flush(std::pair<int64_t, int64_t> channel);

  Simulator* sim_;
  BatchPolicy policy_;
  std::map<std::pair<int64_t, int64_t>, Queue> queues_;
  int64_t wire_messages_ = 0;
  int64_t logical_messages_ = 0;
};

}  // namespace flowpath

#endif  // FLOWPATH_COORD_BATCHER_H_
