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

#include "flowpath/bench/chrome_trace.h"

#include <set>
#include <string>
#include <utility>

#include "absl/strings/str_cat.h"

namespace flowpath {
namespace {

double Us(VirtualTime t) { return static_cast<double>(t.nanos()) / 1e3; }

}  // namespace

nlohmann::json ChromeTrace(const TraceLog& log, int hosts) {
  nlohmann::json events = nlohmann::json::array();
  if (log.empty()) return events;
  std::set<int64_t> pids;
  std::set<std::pair<int64_t, int64_t>> lanes;
  for (const TraceRecord& r : log.records()) {
    pids.insert(r.pid);
    if (r.category != TraceCategory::kTransfer) lanes.insert({r.pid, r.tid});
  }
  for (int64_t pid : pids) {
    const std::string name = pid < hosts ? absl::StrCat("host ", pid)
                                         : absl::StrCat("scheduler island ", pid - hosts);
    events.push_back({{"name", "process_name"}, {"ph", "M"}, {"pid", pid}, {"tid", 0},
                      {"args", {{"name", name}}}});
  }
  for (const auto& [pid, tid] : lanes) {
    const std::string name = tid == kHostLane ? "cpu" : absl::StrCat("device ", tid);
    events.push_back({{"name", "thread_name"}, {"ph", "M"}, {"pid", pid}, {"tid", tid},
                      {"args", {{"name", name}}}});
  }
  for (const TraceRecord& r : log.records()) {
    const std::string cat(TraceCategoryName(r.category));
    nlohmann::json args = {{"instance", r.instance.value()}};
    if (r.category == TraceCategory::kTransfer) {
      const std::string id = absl::StrCat("0x", absl::Hex(r.id));
      events.push_back({{"name", r.name}, {"cat", cat}, {"ph", "b"}, {"id", id},
                        {"pid", r.pid}, {"tid", r.tid}, {"ts", Us(r.start)}, {"args", args}});
      events.push_back({{"name", r.name}, {"cat", cat}, {"ph", "e"}, {"id", id},
                        {"pid", r.pid}, {"tid", r.tid}, {"ts", Us(r.end)}});
      continue;
    }
    events.push_back({{"name", r.name}, {"cat", cat}, {"ph", "X"}, {"pid", r.pid},
                      {"tid", r.tid}, {"ts", Us(r.start)}, {"dur", Us(r.end) - Us(r.start)},
                      {"args", args}});
  }
  return events;
}

}  // namespace flowpath
