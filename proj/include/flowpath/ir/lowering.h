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

#ifndef FLOWPATH_IR_LOWERING_H_
#define FLOWPATH_IR_LOWERING_H_

#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/hardware/cluster.h"
#include "flowpath/ir/program.h"

namespace flowpath {

// Physical devices for each program slice index, virtual device i -> entry i.
using SlicePlacement = std::map<int, std::vector<DeviceId>>;

// Block redistribution of `logical_bytes` from `src_devices.size()` shards to
// `dst_devices.size()` shards.
ReshardingSpec ComputeResharding(int64_t logical_bytes, const std::vector<DeviceId>& src_devices,
                                 const std::string& src_layout,
                                 const std::vector<DeviceId>& dst_devices,
                                 const std::string& dst_layout, const Topology& topology);

// Binds devices and computes per-edge resharding. Pure: equal inputs give
// equal outputs.
absl::StatusOr<ProgramGraph> Lower(const TracedProgram& program, const SlicePlacement& placement,
                                   const Topology& topology);

}  // namespace flowpath

#endif  // FLOWPATH_IR_LOWERING_H_
