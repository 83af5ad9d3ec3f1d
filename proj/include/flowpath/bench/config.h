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

#ifndef FLOWPATH_BENCH_CONFIG_H_
#define FLOWPATH_BENCH_CONFIG_H_

#include <string>

#include "absl/status/statusor.h"
#include "flowpath/exec/runtime.h"
#include "flowpath/hardware/cluster.h"
#include "json.hpp"

namespace flowpath {

// Cluster file: a cluster description plus an optional "runtime" object
// with "cost", "sched", "dispatch" and "batching".
struct BenchConfig {
  ClusterConfig cluster;
  RuntimeConfig runtime;

  static absl::StatusOr<BenchConfig> FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

absl::StatusOr<nlohmann::json> ReadJsonFile(const std::string& path);

// Single island of `hosts` hosts shaped like the first island of `base`.
ClusterConfig ScaleCluster(const ClusterConfig& base, int hosts);

}  // namespace flowpath

#endif  // FLOWPATH_BENCH_CONFIG_H_
