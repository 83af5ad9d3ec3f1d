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

#include "flowpath/coord/batcher.h"

#include "flowpath/base/digest.h"

namespace flowpath {

void MessageBatcher::Send(ProcessId from, ProcessId to, Duration latency, bool critical,
                          std::string_view kind, uint64_t digest, std::function<void()> deliver) {
  ++logical_messages_;
  if (critical || policy_.max_messages <= 1) {
    ++wire_messages_;
    sim_->Send(from, to, latency, kind, digest, std::move(deliver));
    return;
  }
  const auto channel = std::make_pair(from.value(), to.value());
  Queue& q = queues_[channel];
  q.latency = latency;
  q.messages.emplace_back(digest, std::move(deliver));
  if (static_cast<int>(q.messages.size()) >= policy_.max_messages) {
    Flush(channel);
  } else if (!q.timer) {
    q.timer = sim_->ScheduleAfter(policy_.max_delay, from, "batch_timer", 0,
                                  [this, channel] { Flush(channel); });
  }
}

void MessageBatcher::Flush(std::pair<int64_t, int64_t> channel) {
  auto it = queues_.find(channel);
  if (it == queues_.end() || it->second.messages.empty()) return;
  Queue& q = it->second;
  if (q.timer) {
    sim_->Cancel(*q.timer);
    q.timer.reset();
  }
  Digest d;
  for (const auto& m : q.messages) d.Int(m.first);
  auto messages = std::move(q.messages);
  q.messages.clear();
  ++wire_messages_;
  sim_->Send(ProcessId(channel.first), ProcessId(channel.second), q.latency, "batch", d.value(),
             [messages = std::move(messages)] {
               for (const auto& m : messages) m.second();
             });
}

void MessageBatcher::FlushAll() {
  std::vector<std::pair<int64_t, int64_t>> channels;
  for (const auto& [c, q] : queues_) {
    if (!q.messages.empty()) channels.push_back(c);
  }
  for (const auto& c : channels) Flush(c);
}

}  // namespace flowpath
