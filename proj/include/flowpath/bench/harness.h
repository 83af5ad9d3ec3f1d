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

#ifndef FLOWPATH_BENCH_HARNESS_H_
#define FLOWPATH_BENCH_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/base/time.h"
#include "flowpath/bench/config.h"
#include "flowpath/exec/trace.h"
#include "flowpath/hardware/fabric.h"
#include "json.hpp"

namespace flowpath {

class Runtime;

// How a client drives a chain of computations.
//   kOpByOp:  one call per computation, each issued once the previous
//             call's results are enqueued.
//   kChained: one call for the whole chain.
//   kFused:   one call of a single computation doing all the work.
enum class DriveMode { kOpByOp, kChained, kFused };

std::string_view DriveModeName(DriveMode mode);

// End-of-run resource accounting plus a recount of the reported throughput
// from the raw kernel stream.
struct Audit {
  int64_t hbm_leaked_bytes = 0;
  int64_t double_frees = 0;
  int64_t live_buffers = 0;
  int64_t busy_devices = 0;
  bool throughput_matches = true;

  bool ok() const {
    return hbm_leaked_bytes == 0 && double_frees == 0 && live_buffers == 0 && busy_devices == 0 &&
           throughput_matches;
  }
  void Merge(const Audit& other);
  nlohmann::json ToJson() const;
};

// Checks every device of `fabric` and, when given, the runtime's store.
Audit AuditCluster(const Fabric& fabric, const Runtime* runtime);

// Collects kernel records straight from the fabric.
class KernelLog {
 public:
  explicit KernelLog(Fabric& fabric);
  const std::vector<KernelRecord>& records() const { return *records_; }
  VirtualTime first_start() const;
  VirtualTime last_end() const;

 private:
  std::shared_ptr<std::vector<KernelRecord>> records_;
};

struct Measurement {
  int64_t units = 0;  // computations completed
  int64_t kernels = 0;
  VirtualTime begin;  // first call issued
  VirtualTime end;    // last kernel end
  double throughput = 0;  // units per simulated second
  Audit audit;
  TraceLog trace;
};

// `nodes` computations of `per_node` each, spanning every device of a
// single island of `hosts` hosts.
absl::StatusOr<Measurement> MeasureSingleController(const BenchConfig& config, int hosts,
                                                    DriveMode mode, int nodes, Duration per_node,
                                                    bool trace);
absl::StatusOr<Measurement> MeasureMulticontroller(const BenchConfig& config, int hosts, int nodes,
                                                   Duration per_node);

// Host-side cost charged to one computation of a chained call on `hosts`
// hosts, summed over every stage it passes through.
Duration PerNodeOverhead(const BenchConfig& config, int hosts);

struct PipelineSpec {
  int stages = 4;
  int microbatches = 16;
  int islands = 1;  // stages are split evenly across islands
  Duration stage_time = Millis(10);
  int64_t activation_bytes = 4'000'000;
  int64_t tokens_per_microbatch = 2048;
};

struct PipelineMeasurement {
  double busy_mean = 0;  // per-device busy time over the kernel window
  double busy_min = 0;
  double busy_max = 0;
  double ideal = 0;  // M / (M + S - 1)
  Duration step{0};  // kernel window
  double tokens_per_sec = 0;
  int64_t kernels = 0;
  Audit audit;
  TraceLog trace;
};

// One stage per host with its own devices; one call runs every microbatch.
absl::StatusOr<PipelineMeasurement> MeasurePipeline(const BenchConfig& config,
                                                    const PipelineSpec& spec, bool trace);

struct TenantSpec {
  int clients = 1;
  int hosts = 1;
  Duration compute = Micros(330);  // per gang
  int64_t out_bytes = 1'000'000;   // per shard
  Duration horizon = Millis(100);
  int max_outstanding = 1;  // calls in flight per client
  Duration max_jitter{0};   // random start offset per client
  std::optional<Duration> fail_at;  // client 0 fails at this time
  uint64_t seed = 1;
};

struct TenantMeasurement {
  double utilization = 0;  // device busy time / (devices * horizon)
  std::vector<int64_t> gangs;     // per client, started before the horizon
  std::vector<double> shares;     // per client fraction of busy time
  int64_t total_gangs = 0;
  double gangs_per_sec = 0;
  Audit audit;
  TraceLog trace;
};

// Clients repeatedly calling one single-gang program on the same devices.
absl::StatusOr<TenantMeasurement> MeasureTenants(const BenchConfig& config, const TenantSpec& spec,
                                                 bool trace);

}  // namespace flowpath

#endif  // FLOWPATH_BENCH_HARNESS_H_
