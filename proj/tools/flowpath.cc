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

// Command-line driver: runs a named benchmark or a single program on a
// simulated cluster and writes results and a Chrome trace.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "flowpath/bench/benchmarks.h"
#include "flowpath/bench/chrome_trace.h"
#include "flowpath/bench/config.h"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kInputError = 2;

int ExitCode(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kResourceExhausted:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kUnimplemented:
      return kInputError;
    default:
      return kRuntimeError;
  }
}

int Fail(const absl::Status& s) {
  std::cerr << "flowpath: " << s << "\n";
  return ExitCode(s);
}

absl::Status WriteJson(const std::string& path, const nlohmann::json& j, bool pretty) {
  if (path.empty()) return absl::OkStatus();
  std::ofstream out(path);
  if (!out) return absl::NotFoundError("cannot write " + path);
  out << j.dump(pretty ? 1 : -1) << "\n";
  return out.good() ? absl::OkStatus() : absl::InternalError("write failed: " + path);
}

absl::StatusOr<flowpath::BenchConfig> LoadConfig(const std::string& path) {
  auto j = flowpath::ReadJsonFile(path);
  if (!j.ok()) return j.status();
  return flowpath::BenchConfig::FromJson(*j);
}

int Emit(const flowpath::BenchOutput& out, const std::string& results_path,
         const std::string& trace_path) {
  absl::Status s = WriteJson(trace_path, flowpath::ChromeTrace(out.trace, out.trace_hosts), false);
  if (s.ok()) s = WriteJson(results_path, out.results, true);
  if (!s.ok()) return Fail(s);
  if (results_path.empty()) std::cout << out.results.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated single-controller accelerator runtime"};
  app.require_subcommand(1);

  std::string name, config_path, workload_path, trace_path, out_path, program_path;
  uint64_t seed = 1;

  CLI::App* bench = app.add_subcommand("bench", "Run a named benchmark");
  bench->add_option("name", name, "dispatch, crossover, pipeline or multitenancy")->required();
  bench->add_option("--config", config_path, "Cluster JSON")->required();
  bench->add_option("--workload", workload_path, "Workload JSON {benchmark, params}");
  bench->add_option("--trace-out", trace_path, "Chrome trace output");
  bench->add_option("--seed", seed, "Random seed");
  bench->add_option("--out", out_path, "Results JSON output (default stdout)");

  CLI::App* run = app.add_subcommand("run", "Run one program");
  run->add_option("program", program_path, "Program JSON")->required();
  run->add_option("--config", config_path, "Cluster JSON")->required();
  run->add_option("--trace-out", trace_path, "Chrome trace output");
  run->add_option("--out", out_path, "Results JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  auto config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());

  if (*bench) {
    nlohmann::json params;
    if (!workload_path.empty()) {
      auto w = flowpath::ReadJsonFile(workload_path);
      if (!w.ok()) return Fail(w.status());
      if (!w->is_object()) return Fail(absl::InvalidArgumentError("workload must be an object"));
      if (w->contains("benchmark") && (*w)["benchmark"] != name) {
        return Fail(absl::InvalidArgumentError("workload is for benchmark " +
                                               (*w)["benchmark"].dump() + ", not " + name));
      }
      if (w->contains("params")) params = (*w)["params"];
    }
    auto out = flowpath::RunBenchmark(name, *config, params, seed);
    if (!out.ok()) return Fail(out.status());
    return Emit(*out, out_path, trace_path);
  }

  auto program = flowpath::ReadJsonFile(program_path);
  if (!program.ok()) return Fail(program.status());
  auto out = flowpath::RunProgram(*config, *program);
  if (!out.ok()) return Fail(out.status());
  return Emit(*out, out_path, trace_path);
}
