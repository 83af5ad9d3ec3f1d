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

#include "flowpath/bench/benchmarks.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "flowpath/base/status_macros.h"
#include "flowpath/bench/harness.h"
#include "flowpath/exec/runtime.h"
#include "flowpath/ir/lowering.h"
#include "flowpath/ir/serialization.h"
#include "flowpath/resman/resource_manager.h"

namespace flowpath {
namespace {

using nlohmann::json;

// Workload parameters merged over defaults. Keys outside the defaults and
// values of the wrong JSON type are errors.
absl::StatusOr<json> Resolve(const json& defaults, const json& params, std::string_view bench) {
  if (params.is_null()) return defaults;
  if (!params.is_object()) return absl::InvalidArgumentError("params must be an object");
  json out = defaults;
  for (const auto& [key, value] : params.items()) {
    if (!defaults.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown parameter '", key, "' for benchmark ", std::string(bench)));
    }
    const json& d = defaults[key];
    const bool same = (d.is_number() && value.is_number()) || d.type() == value.type() ||
                      d.is_null();
    if (!same) {
      return absl::InvalidArgumentError(absl::StrCat("parameter '", key, "' has the wrong type"));
    }
    out[key] = value;
  }
  return out;
}

absl::Status Positive(const json& p, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const json& v = p[k];
    auto bad = [&](const json& x) { return !x.is_number() || x.get<double>() <= 0; };
    if (v.is_array() ? (v.empty() || std::any_of(v.begin(), v.end(), bad)) : bad(v)) {
      return absl::InvalidArgumentError(absl::StrCat("parameter '", k, "' must be positive"));
    }
  }
  return absl::OkStatus();
}

json Result(std::string_view name, uint64_t seed, const json& params, const BenchConfig& config) {
  return {{"benchmark", std::string(name)},
          {"seed", seed},
          {"params", params},
          {"config", config.ToJson()},
          {"rows", json::array()}};
}

absl::StatusOr<BenchOutput> Dispatch(const BenchConfig& config, const json& params,
                                     uint64_t seed) {
  const json defaults = {{"hosts", {1, 2, 4, 8, 16}},
                         {"nodes", 128},
                         {"unit_us", 1.0},
                         {"parity", true},
                         {"trace_hosts", 2}};
  FP_ASSIGN_OR_RETURN(json p, Resolve(defaults, params, "dispatch"));
  FP_RETURN_IF_ERROR(Positive(p, {"hosts", "nodes", "unit_us", "trace_hosts"}));
  const int nodes = p["nodes"];
  const Duration unit = Micros(p["unit_us"].get<double>());
  BenchOutput out;
  out.results = Result("dispatch", seed, p, config);
  Audit audit;
  for (int hosts : p["hosts"].get<std::vector<int>>()) {
    for (DriveMode mode : {DriveMode::kOpByOp, DriveMode::kChained, DriveMode::kFused}) {
      const bool trace = mode == DriveMode::kChained && hosts == p["trace_hosts"].get<int>();
      FP_ASSIGN_OR_RETURN(Measurement m,
                          MeasureSingleController(config, hosts, mode, nodes, unit, trace));
      audit.Merge(m.audit);
      out.results["rows"].push_back({{"hosts", hosts},
                                     {"mode", std::string(DriveModeName(mode))},
                                     {"computations_per_sec", m.throughput},
                                     {"elapsed_us", ToMicros(m.end - m.begin)},
                                     {"kernels", m.kernels}});
      if (trace) {
        out.trace = std::move(m.trace);
        out.trace_hosts = hosts;
      }
    }
    FP_ASSIGN_OR_RETURN(Measurement b, MeasureMulticontroller(config, hosts, nodes, unit));
    audit.Merge(b.audit);
    out.results["rows"].push_back({{"hosts", hosts},
                                   {"mode", "multicontroller"},
                                   {"computations_per_sec", b.throughput},
                                   {"elapsed_us", ToMicros(b.end - b.begin)},
                                   {"kernels", b.kernels}});
    if (!p["parity"].get<bool>()) continue;
    // Compute-bound: each computation outlasts its host-side cost tenfold.
    const Duration t = PerNodeOverhead(config, hosts) * 10;
    FP_ASSIGN_OR_RETURN(Measurement s,
                        MeasureSingleController(config, hosts, DriveMode::kChained, nodes, t,
                                                false));
    FP_ASSIGN_OR_RETURN(Measurement mc, MeasureMulticontroller(config, hosts, nodes, t));
    audit.Merge(s.audit);
    audit.Merge(mc.audit);
    out.results["rows"].push_back({{"hosts", hosts},
                                   {"mode", "parity"},
                                   {"per_node_us", ToMicros(t)},
                                   {"single_controller", s.throughput},
                                   {"multicontroller", mc.throughput},
                                   {"ratio", s.throughput / mc.throughput}});
  }
  out.results["audit"] = audit.ToJson();
  return out;
}

absl::StatusOr<BenchOutput> CrossoverBench(const BenchConfig& config, const json& params,
                                           uint64_t seed) {
  const json defaults = {{"hosts", {2, 4, 8, 16, 32, 64}},
                         {"nodes", 128},
                         {"ratio", 0.99},
                         {"limit_ms", 1000.0}};
  FP_ASSIGN_OR_RETURN(json p, Resolve(defaults, params, "crossover"));
  FP_RETURN_IF_ERROR(Positive(p, {"hosts", "nodes", "ratio", "limit_ms"}));
  const double ratio = p["ratio"];
  if (ratio > 1) return absl::InvalidArgumentError("parameter 'ratio' must be <= 1");
  const int nodes = p["nodes"];
  BenchOutput out;
  out.results = Result("crossover", seed, p, config);
  const std::vector<int> hosts = p["hosts"].get<std::vector<int>>();
  for (int h : hosts) {
    FP_ASSIGN_OR_RETURN(Crossover c, FindCrossover(config, h, nodes, ratio,
                                                   Millis(p["limit_ms"].get<double>())));
    out.results["rows"].push_back({{"hosts", h},
                                   {"crossover_us", ToMicros(c.per_node)},
                                   {"ratio", c.ratio},
                                   {"evaluations", c.evaluations}});
    if (h == hosts.front()) {
      FP_ASSIGN_OR_RETURN(Measurement m, MeasureSingleController(config, h, DriveMode::kChained,
                                                                 nodes, c.per_node, true));
      out.results["audit"] = m.audit.ToJson();
      out.trace = std::move(m.trace);
      out.trace_hosts = h;
    }
  }
  return out;
}

absl::StatusOr<BenchOutput> Pipeline(const BenchConfig& config, const json& params,
                                     uint64_t seed) {
  const json defaults = {{"configs", {{4, 16}, {8, 32}, {16, 64}}},
                         {"islands", {1, 4}},
                         {"stage_ms", 10.0},
                         {"activation_bytes", 4'000'000},
                         {"tokens_per_microbatch", 2048}};
  FP_ASSIGN_OR_RETURN(json p, Resolve(defaults, params, "pipeline"));
  FP_RETURN_IF_ERROR(Positive(p, {"islands", "stage_ms", "activation_bytes",
                                  "tokens_per_microbatch"}));
  BenchOutput out;
  out.results = Result("pipeline", seed, p, config);
  Audit audit;
  bool traced = false;
  for (const json& c : p["configs"]) {
    if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() ||
        !c[1].is_number_integer() || c[0].get<int>() < 1 || c[1].get<int>() < 1) {
      return absl::InvalidArgumentError("each pipeline config is [stages, microbatches]");
    }
    for (int islands : p["islands"].get<std::vector<int>>()) {
      PipelineSpec spec;
      spec.stages = c[0];
      spec.microbatches = c[1];
      spec.islands = islands;
      if (spec.stages % islands != 0) continue;
      spec.stage_time = Millis(p["stage_ms"].get<double>());
      spec.activation_bytes = p["activation_bytes"];
      spec.tokens_per_microbatch = p["tokens_per_microbatch"];
      FP_ASSIGN_OR_RETURN(PipelineMeasurement m, MeasurePipeline(config, spec, !traced));
      audit.Merge(m.audit);
      out.results["rows"].push_back({{"stages", spec.stages},
                                     {"microbatches", spec.microbatches},
                                     {"islands", islands},
                                     {"busy_fraction", m.busy_mean},
                                     {"busy_min", m.busy_min},
                                     {"busy_max", m.busy_max},
                                     {"ideal", m.ideal},
                                     {"step_ms", ToMicros(m.step) / 1e3},
                                     {"tokens_per_sec", m.tokens_per_sec}});
      if (!traced) {
        out.trace = std::move(m.trace);
        out.trace_hosts = spec.stages;
        traced = true;
      }
    }
  }
  out.results["audit"] = audit.ToJson();
  return out;
}

absl::StatusOr<BenchOutput> Multitenancy(const BenchConfig& config, const json& params,
                                         uint64_t seed) {
  const json defaults = {{"clients", {1, 2, 4, 8, 16}},
                         {"hosts", 1},
                         {"compute_us", 330.0},
                         {"horizon_ms", 100.0},
                         {"jitter_us", 50.0},
                         {"trace_clients", 4},
                         {"fairness_weights", {{1, 2, 4, 8}, {1, 1, 1, 1}}},
                         {"fairness_window", 2},
                         {"fairness_outstanding", 8},
                         {"fairness_horizon_ms", 3500.0},
                         {"fail_at_ms", nullptr}};
  FP_ASSIGN_OR_RETURN(json p, Resolve(defaults, params, "multitenancy"));
  FP_RETURN_IF_ERROR(Positive(p, {"clients", "hosts", "compute_us", "horizon_ms",
                                  "fairness_outstanding", "fairness_horizon_ms"}));
  BenchOutput out;
  out.results = Result("multitenancy", seed, p, config);
  Audit audit;
  TenantSpec base;
  base.hosts = p["hosts"];
  base.compute = Micros(p["compute_us"].get<double>());
  base.horizon = Millis(p["horizon_ms"].get<double>());
  base.max_jitter = Micros(p["jitter_us"].get<double>());
  base.seed = seed;
  for (int k : p["clients"].get<std::vector<int>>()) {
    TenantSpec spec = base;
    spec.clients = k;
    const bool trace = k == p["trace_clients"].get<int>();
    FP_ASSIGN_OR_RETURN(TenantMeasurement m, MeasureTenants(config, spec, trace));
    audit.Merge(m.audit);
    out.results["rows"].push_back({{"kind", "utilization"},
                                   {"clients", k},
                                   {"utilization", m.utilization},
                                   {"programs_per_sec", m.gangs_per_sec},
                                   {"programs", m.total_gangs}});
    if (trace) {
      out.trace = std::move(m.trace);
      out.trace_hosts = spec.hosts;
    }
  }
  for (const json& w : p["fairness_weights"]) {
    if (!w.is_array() || w.empty() ||
        std::any_of(w.begin(), w.end(), [](const json& x) {
          return !x.is_number_integer() || x.get<int64_t>() < 1;
        })) {
      return absl::InvalidArgumentError("fairness weights must be positive integers");
    }
    const std::vector<int64_t> weights = w.get<std::vector<int64_t>>();
    BenchConfig fair = config;
    fair.runtime.sched.policy = SharePolicy::kProportional;
    fair.runtime.sched.window = p["fairness_window"];
    fair.runtime.sched.weights.clear();
    int64_t total = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      fair.runtime.sched.weights[static_cast<int64_t>(i)] = static_cast<int>(weights[i]);
      total += weights[i];
    }
    TenantSpec spec = base;
    spec.clients = static_cast<int>(weights.size());
    spec.max_outstanding = p["fairness_outstanding"];
    spec.horizon = Millis(p["fairness_horizon_ms"].get<double>());
    FP_ASSIGN_OR_RETURN(TenantMeasurement m, MeasureTenants(fair, spec, false));
    audit.Merge(m.audit);
    json expected = json::array();
    double worst = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      const double e = static_cast<double>(weights[i]) / static_cast<double>(total);
      expected.push_back(e);
      worst = std::max(worst, std::abs(m.shares[i] - e) / e);
    }
    out.results["rows"].push_back({{"kind", "fairness"},
                                   {"weights", weights},
                                   {"shares", m.shares},
                                   {"expected", expected},
                                   {"max_relative_error", worst},
                                   {"programs", m.total_gangs},
                                   {"utilization", m.utilization}});
  }
  if (!p["fail_at_ms"].is_null()) {
    TenantSpec spec = base;
    spec.clients = 4;
    spec.max_outstanding = 2;
    spec.fail_at = Millis(p["fail_at_ms"].get<double>());
    FP_ASSIGN_OR_RETURN(TenantMeasurement m, MeasureTenants(config, spec, false));
    audit.Merge(m.audit);
    out.results["rows"].push_back({{"kind", "client_failure"},
                                   {"clients", spec.clients},
                                   {"fail_at_ms", p["fail_at_ms"]},
                                   {"programs", m.gangs},
                                   {"utilization", m.utilization}});
  }
  out.results["audit"] = audit.ToJson();
  return out;
}

}  // namespace

const std::vector<std::string>& BenchmarkNames() {
  static const auto* names =
      new std::vector<std::string>{"dispatch", "crossover", "pipeline", "multitenancy"};
  return *names;
}

absl::StatusOr<Crossover> FindCrossover(const BenchConfig& config, int hosts, int nodes,
                                        double ratio, Duration limit) {
  Crossover c;
  // Throughput ratio as an elapsed-time ratio, so empty computations on a
  // cost-free cluster compare as equal.
  auto eval = [&](Duration t) -> absl::StatusOr<double> {
    ++c.evaluations;
    FP_ASSIGN_OR_RETURN(Measurement s, MeasureSingleController(config, hosts, DriveMode::kChained,
                                                               nodes, t, false));
    FP_ASSIGN_OR_RETURN(Measurement m, MeasureMulticontroller(config, hosts, nodes, t));
    const Duration single = s.end - s.begin;
    const Duration multi = m.end - m.begin;
    if (single.count() == 0) return 1.0;
    return static_cast<double>(multi.count()) / static_cast<double>(single.count());
  };
  FP_ASSIGN_OR_RETURN(double r, eval(Duration(0)));
  if (r >= ratio) {
    c.ratio = r;
    return c;
  }
  Duration lo{0};
  Duration hi = Micros(1);
  FP_ASSIGN_OR_RETURN(r, eval(hi));
  while (r < ratio) {
    lo = hi;
    hi *= 2;
    if (hi > limit) {
      return absl::OutOfRangeError(
          absl::StrCat("no crossover below ", ToMicros(limit), "us on ", hosts, " hosts"));
    }
    FP_ASSIGN_OR_RETURN(r, eval(hi));
  }
  c.ratio = r;
  // Bisect to half a percent of the answer.
  while ((hi - lo) * 200 > hi && (hi - lo) > Duration(100)) {
    const Duration mid = lo + (hi - lo) / 2;
    FP_ASSIGN_OR_RETURN(double rm, eval(mid));
    if (rm >= ratio) {
      hi = mid;
      c.ratio = rm;
    } else {
      lo = mid;
    }
  }
  c.per_node = hi;
  return c;
}

absl::StatusOr<BenchOutput> RunProgram(const BenchConfig& config, const json& program) {
  FP_ASSIGN_OR_RETURN(ProgramGraph graph, ProgramFromJson(program));
  Simulator sim;
  Fabric fabric(sim, Topology(config.cluster));
  KernelLog log(fabric);
  RuntimeConfig rc = config.runtime;
  rc.trace = true;
  Runtime rt(&sim, &fabric, rc);
  const ClientId client = rt.AddClient();
  graph.client = client;
  if (graph.form == GraphForm::kTraced) {
    ResourceManager resman(&fabric.topology());
    FP_ASSIGN_OR_RETURN(ResourceManager::ProgramSlices slices, resman.AllocateProgram(graph.slices));
    FP_ASSIGN_OR_RETURN(graph, Lower(TracedProgram{std::move(graph)}, slices.placement,
                                     fabric.topology()));
  }
  auto shared = std::make_shared<const ProgramGraph>(std::move(graph));
  FP_ASSIGN_OR_RETURN(CallHandles call, rt.Call(client, shared));
  const RunResult run = sim.RunUntilQuiescent();
  if (run.status != RunStatus::kQuiescent) {
    return absl::InternalError(
        absl::StrCat("run did not drain: ", std::string(RunStatusName(run.status))));
  }
  if (!call.done.ready()) return absl::InternalError("call did not complete");
  FP_RETURN_IF_ERROR(call.done.result().status());
  const CallResult r = *call.done.result();
  json digests = json::array();
  for (uint64_t d : r.result_digests) digests.push_back(absl::StrCat(absl::Hex(d, absl::kZeroPad16)));
  for (ObjectHandle h : r.results) FP_RETURN_IF_ERROR(rt.ReleaseResult(h));
  if (sim.RunUntilQuiescent().status != RunStatus::kQuiescent) {
    return absl::InternalError("release did not drain");
  }
  Audit audit = AuditCluster(fabric, &rt);
  audit.throughput_matches = static_cast<int64_t>(log.records().size()) == r.kernels;

  BenchOutput out;
  out.results = {{"benchmark", "run"},
                 {"config", config.ToJson()},
                 {"rows", {{{"computations", shared->CountKind(NodeKind::kCompute)},
                            {"kernels", r.kernels},
                            {"elapsed_us", ToMicros(r.last_kernel_end - r.issued)},
                            {"first_kernel_start_us", ToMicros(r.first_kernel_start.since_start())},
                            {"last_kernel_end_us", ToMicros(r.last_kernel_end.since_start())},
                            {"completed_us", ToMicros(r.completed.since_start())},
                            {"control_messages", rt.control_messages()},
                            {"result_digests", digests}}}},
                 {"audit", audit.ToJson()}};
  out.trace = rt.trace();
  out.trace_hosts = static_cast<int>(fabric.topology().hosts().size());
  return out;
}

absl::StatusOr<BenchOutput> RunBenchmark(std::string_view name, const BenchConfig& config,
                                         const json& params, uint64_t seed) {
  if (name == "dispatch") return Dispatch(config, params, seed);
  if (name == "crossover") return CrossoverBench(config, params, seed);
  if (name == "pipeline") return Pipeline(config, params, seed);
  if (name == "multitenancy") return Multitenancy(config, params, seed);
  return absl::InvalidArgumentError(absl::StrCat("unknown benchmark '", std::string(name),
                                                 "'; expected one of ",
                                                 absl::StrJoin(BenchmarkNames(), ", ")));
}

}  // namespace flowpath
