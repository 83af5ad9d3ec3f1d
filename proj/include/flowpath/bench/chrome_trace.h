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

#ifndef FLOWPATH_BENCH_CHROME_TRACE_H_
#define FLOWPATH_BENCH_CHROME_TRACE_H_

#include "flowpath/exec/trace.h"
#include "json.hpp"

namespace flowpath {

// Chrome trace-event array. Kernels, host work and scheduler decisions
// are complete ("X") events; transfers are async begin/end pairs. Process
// ids below `hosts` are hosts, the rest are island schedulers. An empty
// log gives an empty array.
nlohmann::json ChromeTrace(const TraceLog& log, int hosts);

}  // namespace flowpath

#endif  // FLOWPATH_BENCH_CHROME_TRACE_H_
