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

#ifndef FLOWPATH_BENCH_BENCHMARKS_H_
#define FLOWPATH_BENCH_BENCHMARKS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/bench/config.h"
#include "flowpath/exec/trace.h"
#include "json.hpp"

namespace flowpath {

struct BenchOutput {
  nlohmann::json results;  // {benchmark, seed, params, config, rows, audit}
  TraceLog trace;          // one representative run
  int trace_hosts = 0;     // hosts of the traced cluster
};

// dispatch, crossover, pipeline, multitenancy.
const std::vector<std::string>& BenchmarkNames();

// `params` overrides the benchmark's defaults; unknown keys are rejected.
absl::StatusOr<BenchOutput> RunBenchmark(std::string_view name, const BenchConfig& config,
                                         const nlohmann::json& params, uint64_t seed);

// Runs one serialized program once. Traced programs are placed by the
// resource manager first.
absl::StatusOr<BenchOutput> RunProgram(const BenchConfig& config, const nlohmann::json& program);

// Smallest per-computation duration at which a chained single-controller
// call reaches `ratio` of the multi-controller throughput on `hosts` hosts.
struct Crossover {
  Duration per_node{0};
  double ratio = 0;
  int evaluations = 0;
};
absl::StatusOr<Crossover> FindCrossover(const BenchConfig& config, int hosts, int nodes,
                                        double ratio, Duration limit);

}  // namespace flowpath

#endif  // FLOWPATH_BENCH_BENCHMARKS_H_
