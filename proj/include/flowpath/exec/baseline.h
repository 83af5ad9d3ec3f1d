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

#ifndef FLOWPATH_EXEC_BASELINE_H_
#define FLOWPATH_EXEC_BASELINE_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "flowpath/base/time.h"
#include "flowpath/exec/runtime.h"
#include "flowpath/hardware/fabric.h"
#include "flowpath/ir/program.h"
#include "flowpath/simcore/simulator.h"

namespace flowpath {

struct BaselineResult {
  int64_t steps = 0;
  int64_t kernels = 0;
  VirtualTime first_kernel_start;
  VirtualTime last_kernel_end;
  Duration makespan{0};  // from the call to the last kernel end
  double steps_per_sec = 0;
};

// Multi-controller execution: every host runs the same program and
// enqueues its local shards over PCIe, `steps` times, with no coordinator.
// Only single-computation SPMD programs are supported. Runs the simulator
// to quiescence.
absl::StatusOr<BaselineResult> RunMulticontroller(Simulator& sim, Fabric& fabric,
                                                  const ProgramGraph& lowered, int64_t steps,
                                                  const HostCostModel& cost);

}  // namespace flowpath

#endif  // FLOWPATH_EXEC_BASELINE_H_
