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

#ifndef FLOWPATH_EXEC_TRACE_H_
#define FLOWPATH_EXEC_TRACE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"

namespace flowpath {

enum class TraceCategory { kKernel, kTransfer, kPrep, kSchedule };

std::string_view TraceCategoryName(TraceCategory c);

// Lane of the host CPU inside a host's trace process.
inline constexpr int64_t kHostLane = -1;

struct TraceRecord {
  TraceCategory category = TraceCategory::kKernel;
  std::string name;
  int64_t pid = 0;  // host, or a scheduler lane past the last host
  int64_t tid = 0;  // device, or kHostLane
  VirtualTime start;
  VirtualTime end;
  InstanceId instance;
  uint64_t id = 0;  // pairs the ends of a transfer
};

class TraceLog {
 public:
  void Add(TraceRecord r) { records_.push_back(std::move(r)); }
  const std::vector<TraceRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<TraceRecord> records_;
};

}  // namespace flowpath

#endif  // FLOWPATH_EXEC_TRACE_H_
