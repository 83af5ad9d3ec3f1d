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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "flowpath/bench/benchmarks.h"
#include "flowpath/bench/chrome_trace.h"
#include "flowpath/bench/config.h"
#include "flowpath/bench/harness.h"
#include "flowpath/bench/workloads.h"
#include "flowpath/exec/runtime.h"
#include "flowpath/hardware/fabric.h"
#include "flowpath/ir/tracer.h"
#include "support/progress_oracle.h"

namespace flowpath {
namespace {

using nlohmann::json;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Inputs {
  BenchConfig config;
  std::map<std::string, json> params;  // benchmark -> workload params
  std::map<std::string, BenchOutput> first_runs;
};

absl::StatusOr<BenchOutput> Bench(Inputs& in, const std::string& name) {
  auto it = in.first_runs.find(name);
  if (it != in.first_runs.end()) return it->second;
  auto out = RunBenchmark(name, in.config, in.params[name], 1);
  if (out.ok()) in.first_runs[name] = *out;
  return out;
}

// 1. Tracing a chain yields one node per computation plus Arg and Result.
Verdict Compactness() {
  auto nodes_for = [](int k, int shards) -> int64_t {
    Tracer t(ClientId(0));
    SliceRef s = t.DeclareSlice({shards});
    CompiledFunction fn;
    fn.shards = shards;
    fn.inputs = {TensorSpec{64}};
    fn.outputs = {TensorSpec{64}};
    Value v = t.Arg(shards, TensorSpec{64}, s);
    for (int i = 0; i < k; ++i) {
      fn.name = absl::StrCat("f", i);
      v = (*t.Call(fn, s, {v}))[0];
    }
    if (!t.Return({v}).ok()) return -1;
    auto p = std::move(t).Finish();
    return p.ok() ? static_cast<int64_t>(p->graph.nodes.size()) : -1;
  };
  const int64_t base = nodes_for(2, 1024);
  std::mt19937_64 rng(11);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 16);
    const int n = 1 << (rng() % 13);
    if (nodes_for(k, n) != k + 2) ++bad;
  }
  return {base == 4 && bad == 0,
          absl::StrCat("N=1024 chain of 2 -> ", base, " nodes; ", bad, "/200 random (N,k) off")};
}

// 2. Collectives over every device, one device per host.
int CountFabricDeadlocks(int devices, int programs, int* total) {
  std::vector<int> perm(programs);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<size_t> pick(devices, 0);
  int deadlocks = 0;
  while (true) {
    Simulator sim;
    Fabric fabric(sim, Topology(ClusterConfig::Uniform(1, devices, 1)));
    for (int d = 0; d < devices; ++d) {
      for (int p : perms[pick[d]]) {
        KernelExec k;
        k.program = InstanceId(p);
        k.duration = Millis(1);
        k.collective = CollectiveSpec{CollectiveId(p), devices};
        fabric.EnqueueKernel(DeviceId(d), k);
      }
    }
    ++*total;
    if (sim.RunUntilQuiescent().status == RunStatus::kDeadlock) ++deadlocks;
    int d = 0;
    while (d < devices && ++pick[d] == perms.size()) pick[d++] = 0;
    if (d == devices) break;
  }
  return deadlocks;
}

int CountScheduledDeadlocks(int devices, int programs, int* total) {
  std::vector<int> order(programs);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> dev(devices);
  std::iota(dev.begin(), dev.end(), 0);
  std::vector<std::vector<int>> dev_perms;
  do dev_perms.push_back(dev);
  while (std::next_permutation(dev.begin(), dev.end()));
  const std::vector<Duration> gaps = {Duration(0), Micros(3), Micros(700)};
  int deadlocks = 0;
  do {
    for (Duration gap : gaps) {
      std::vector<size_t> pick(programs, 0);
      while (true) {
        Simulator sim;
        Fabric fabric(sim, Topology(ClusterConfig::Uniform(1, devices, 1)));
        Runtime rt(&sim, &fabric, RuntimeConfig{});
        std::vector<Future<CallResult>> done;
        bool setup_ok = true;
        for (int i = 0; i < programs; ++i) {
          const ClientId c = rt.AddClient();
          ChainStage s;
          for (int d : dev_perms[pick[i]]) s.devices.push_back(DeviceId(d));
          s.per_shard = Millis(1);
          s.collective = true;
          auto program = BuildChain(fabric.topology(), c, {s});
          if (!program.ok()) {
            setup_ok = false;
            continue;
          }
          const VirtualTime at(gap * (std::find(order.begin(), order.end(), i) - order.begin()));
          sim.Schedule(at, rt.client_process(c), "issue", 0,
                       [&rt, &done, &setup_ok, c, p = *program] {
                         auto h = rt.Call(c, p);
                         if (!h.ok()) {
                           setup_ok = false;
                           return;
                         }
                         done.push_back(h->done);
                       });
        }
        ++*total;
        const RunStatus st = sim.RunUntilQuiescent().status;
        bool all_done = setup_ok && static_cast<int>(done.size()) == programs;
        for (const auto& f : done) all_done = all_done && f.ready() && f.result().ok();
        if (st != RunStatus::kQuiescent || !all_done) ++deadlocks;
        int i = 0;
        while (i < programs && ++pick[i] == dev_perms.size()) pick[i++] = 0;
        if (i == programs) break;
      }
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return deadlocks;
}

Verdict DeadlockFreedom() {
  std::string detail;
  bool pass = true;
  for (auto [d, p] : {std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}, std::pair{3, 3}}) {
    int fabric_total = 0;
    int sched_total = 0;
    const int independent = CountFabricDeadlocks(d, p, &fabric_total);
    const int scheduled = CountScheduledDeadlocks(d, p, &sched_total);
    pass = pass && independent >= 1 && scheduled == 0;
    absl::StrAppend(&detail, d, "dev x ", p, "prog: independent ", independent, "/", fabric_total,
                    " deadlock, scheduled ", scheduled, "/", sched_total, "; ");
  }
  return {pass, detail};
}

// 3. Random chains on distinct hosts, sequential vs parallel dispatch.
Verdict ParallelDominance() {
  std::mt19937_64 rng(2024);
  auto uniform = [&rng](int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
  };
  int violations = 0;
  int strict_cases = 0;
  int strict_misses = 0;
  constexpr int kTrials = 1200;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n = static_cast<int>(uniform(2, 6));
    ClusterConfig cluster = ClusterConfig::Uniform(1, n, 1);
    cluster.islands[0].ici = {LinkKind::kIci, Duration(uniform(0, 5000)),
                              static_cast<double>(uniform(1, 100))};
    RuntimeConfig rc;
    rc.cost.client_rpc = Duration(uniform(0, 100'000));
    rc.cost.sched_to_host = Duration(uniform(0, 100'000));
    rc.cost.host_to_host = Duration(uniform(0, 100'000));
    rc.cost.pcie_enqueue = Duration(uniform(0, 10'000));
    rc.cost.host_prep = Duration(uniform(0, 1'000'000));
    rc.sched.decision = Duration(uniform(0, 20'000));
    const Duration t(uniform(1'000, 1'000'000));
    const int64_t bytes = uniform(0, 1'000'000);
    std::vector<ChainStage> stages;
    for (int i = 0; i < n; ++i) {
      ChainStage s;
      s.devices = {DeviceId(i)};
      s.per_shard = t;
      s.out_bytes = bytes;
      stages.push_back(s);
    }
    Duration makespan[2];
    for (int m = 0; m < 2; ++m) {
      rc.dispatch = m == 0 ? DispatchMode::kSequential : DispatchMode::kParallel;
      Simulator sim;
      Fabric fabric(sim, Topology(cluster));
      Runtime rt(&sim, &fabric, rc);
      const ClientId c = rt.AddClient();
      auto call = rt.Call(c, *BuildChain(fabric.topology(), c, stages));
      sim.RunUntilQuiescent();
      if (!call.ok() || !call->done.ready() || !call->done.result().ok()) return {false, "call failed"};
      makespan[m] = call->done.result()->last_kernel_end - call->done.result()->issued;
    }
    if (makespan[1] > makespan[0]) ++violations;
    const Duration x = cluster.islands[0].ici.TransferTime(bytes);
    if (rc.cost.host_prep > t + x) {
      ++strict_cases;
      if (makespan[1] >= makespan[0]) ++strict_misses;
    }
  }
  return {violations == 0 && strict_misses == 0 && strict_cases > 0,
          absl::StrCat(kTrials, " chains, ", violations, " where parallel was slower; ",
                       strict_misses, "/", strict_cases, " with h > t + transfer not strictly faster")};
}

// 4. Crossover over host counts.
Verdict CrossoverShape(Inputs& in) {
  auto out = Bench(in, "crossover");
  if (!out.ok()) return {false, out.status().ToString()};
  const json& rows = out->results["rows"];
  bool monotone = true;
  double prev = -1, first = 0, last = 0;
  std::string series;
  for (const json& r : rows) {
    const double c = r["crossover_us"];
    monotone = monotone && c >= prev;
    if (prev < 0) first = c;
    prev = last = c;
    absl::StrAppend(&series, r["hosts"].get<int>(), ":", c, "us ");
  }
  const bool spans = !rows.empty() && rows.front()["hosts"] == 2 && rows.back()["hosts"] == 64;
  const double growth = first > 0 ? last / first : 0;
  return {monotone && spans && growth >= 5,
          absl::StrCat(series, "growth ", absl::StrFormat("%.2f", growth), "x")};
}

// 5. Compute-bound parity.
Verdict Parity(Inputs& in) {
  auto out = Bench(in, "dispatch");
  if (!out.ok()) return {false, out.status().ToString()};
  double worst = 0;
  int rows = 0;
  for (const json& r : out->results["rows"]) {
    if (r["mode"] != "parity") continue;
    ++rows;
    const double overhead = ToMicros(PerNodeOverhead(in.config, r["hosts"]));
    if (r["per_node_us"].get<double>() < 10 * overhead) return {false, "computation too short"};
    worst = std::max(worst, std::abs(r["ratio"].get<double>() - 1.0));
  }
  return {rows > 0 && worst <= 0.01,
          absl::StrCat(rows, " scales, worst deviation ", absl::StrFormat("%.4f%%", worst * 100))};
}

// 6. Weighted shares.
Verdict Fairness(Inputs& in) {
  auto out = Bench(in, "multitenancy");
  if (!out.ok()) return {false, out.status().ToString()};
  bool pass = true;
  bool weighted = false, equal = false;
  std::string detail;
  for (const json& r : out->results["rows"]) {
    if (r["kind"] != "fairness") continue;
    const auto w = r["weights"].get<std::vector<int>>();
    const double err = r["max_relative_error"];
    const int64_t gangs = r["programs"];
    const bool is_equal = std::all_of(w.begin(), w.end(), [&](int x) { return x == w[0]; });
    const double tolerance = is_equal ? 0.02 : 0.05;
    weighted |= w == std::vector<int>{1, 2, 4, 8};
    equal |= w == std::vector<int>{1, 1, 1, 1};
    pass = pass && gangs >= 10000 && err <= tolerance;
    absl::StrAppend(&detail, r["weights"].dump(), ": ", gangs, " gangs, max error ",
                    absl::StrFormat("%.3f%%", err * 100), "; ");
  }
  return {pass && weighted && equal, detail};
}

// 7. Utilization with tiny programs.
Verdict Utilization(Inputs& in) {
  auto out = Bench(in, "multitenancy");
  if (!out.ok()) return {false, out.status().ToString()};
  std::map<int, double> util;
  for (const json& r : out->results["rows"]) {
    if (r["kind"] == "utilization") util[r["clients"]] = r["utilization"];
  }
  if (!util.count(1) || !util.count(16)) return {false, "missing k=1 or k=16"};
  bool pass = util[16] >= 0.95 && in.params["multitenancy"]["compute_us"] == 330.0;
  std::string detail;
  for (const auto& [k, u] : util) {
    pass = pass && u >= util[1];
    absl::StrAppend(&detail, "k=", k, ":", absl::StrFormat("%.3f", u), " ");
  }
  return {pass, detail};
}

// 8. Pipeline bubble.
Verdict PipelineBubble(Inputs& in) {
  auto out = Bench(in, "pipeline");
  if (!out.ok()) return {false, out.status().ToString()};
  std::map<std::pair<int, int>, std::map<int, json>> by;
  for (const json& r : out->results["rows"]) by[{r["stages"], r["microbatches"]}][r["islands"]] = r;
  bool pass = true;
  std::string detail;
  for (auto [s, m] : {std::pair{4, 16}, std::pair{8, 32}, std::pair{16, 64}}) {
    if (!by[{s, m}].count(1)) return {false, absl::StrCat("missing (", s, ",", m, ")")};
    const json& r = by[{s, m}][1];
    const double ideal = static_cast<double>(m) / (m + s - 1);
    const double busy = r["busy_fraction"];
    pass = pass && std::abs(busy - ideal) <= 0.01;
    absl::StrAppend(&detail, "(", s, ",", m, ") busy ", absl::StrFormat("%.4f", busy), " vs ",
                    absl::StrFormat("%.4f", ideal), "; ");
  }
  if (!by[{16, 64}].count(4)) return {false, "missing 4-island run"};
  const double single = by[{16, 64}][1]["tokens_per_sec"];
  const double split = by[{16, 64}][4]["tokens_per_sec"];
  const BenchConfig& c = in.config;
  const int64_t piece = in.params["pipeline"]["activation_bytes"].get<int64_t>() /
                        c.cluster.islands[0].devices_per_host;
  const bool compute_bound =
      Millis(in.params["pipeline"]["stage_ms"].get<double>()) >= c.cluster.dcn.TransferTime(piece);
  const double diff = std::abs(split - single) / single;
  pass = pass && compute_bound && diff <= 0.01;
  absl::StrAppend(&detail, "4 islands vs 1: ", absl::StrFormat("%.3f%%", diff * 100));
  return {pass, detail};
}

// 9. Progress tracking over every delivery order.
Verdict ProgressOracle() {
  int64_t orders = 0, failures = 0, matrices = 0;
  std::string first;
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; b <= 3; ++b) {
      for (int c = 0; c <= 3; ++c) {
        for (int d = 0; d <= 3; ++d) {
          if (a + b + c + d + 2 > 8) continue;
          const auto r = testing::CheckAllDeliveryOrders({{{a, b}, {c, d}}});
          ++matrices;
          orders += r.orders;
          failures += r.failures;
          if (r.failures > 0 && first.empty()) first = r.first_failure;
        }
      }
    }
  }
  return {failures == 0 && orders > 0,
          absl::StrCat(matrices, " count matrices, ", orders, " orders, ", failures, " wrong",
                       first.empty() ? "" : "; " + first)};
}

// 10. Resources after every benchmark, including an injected client failure.
Verdict Hygiene(Inputs& in) {
  bool pass = in.params["multitenancy"].contains("fail_at_ms") &&
              !in.params["multitenancy"]["fail_at_ms"].is_null();
  std::string detail;
  for (const std::string& name : BenchmarkNames()) {
    auto out = Bench(in, name);
    if (!out.ok()) return {false, out.status().ToString()};
    const json& a = out->results["audit"];
    pass = pass && a["ok"].get<bool>();
    absl::StrAppend(&detail, name, ": leaked ", a["hbm_leaked_bytes"].get<int64_t>(),
                    "B, double frees ", a["double_frees"].get<int64_t>(), "; ");
  }
  return {pass, detail};
}

// 11. Same seed, same bytes.
Verdict Determinism(Inputs& in) {
  bool pass = true;
  std::string detail;
  for (const std::string& name : BenchmarkNames()) {
    auto a = Bench(in, name);
    auto b = RunBenchmark(name, in.config, in.params[name], 1);
    if (!a.ok() || !b.ok()) return {false, "benchmark failed"};
    const bool same = a->results.dump(1) == b->results.dump(1) &&
                      ChromeTrace(a->trace, a->trace_hosts).dump() ==
                          ChromeTrace(b->trace, b->trace_hosts).dump();
    pass = pass && same;
    absl::StrAppend(&detail, name, same ? " identical; " : " DIFFERS; ");
  }
  return {pass, detail};
}

}  // namespace
}  // namespace flowpath

int main(int argc, char** argv) {
  using namespace flowpath;
  CLI::App app{"Acceptance checks"};
  std::string config_path, workloads_dir;
  app.add_option("--config", config_path, "Cluster JSON")->required();
  app.add_option("--workloads", workloads_dir, "Directory of workload JSON files")->required();
  CLI11_PARSE(app, argc, argv);

  Inputs in;
  auto cj = ReadJsonFile(config_path);
  if (!cj.ok()) {
    std::fprintf(stderr, "%s\n", cj.status().ToString().c_str());
    return 2;
  }
  auto config = BenchConfig::FromJson(*cj);
  if (!config.ok()) {
    std::fprintf(stderr, "%s\n", config.status().ToString().c_str());
    return 2;
  }
  in.config = *config;
  for (const std::string& name : BenchmarkNames()) {
    auto w = ReadJsonFile(workloads_dir + "/" + name + ".json");
    if (!w.ok()) {
      std::fprintf(stderr, "%s\n", w.status().ToString().c_str());
      return 2;
    }
    in.params[name] = w->value("params", json::object());
  }

  struct Criterion {
    const char* title;
    double budget_s;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {"compactness", 1, [] { return Compactness(); }},
      {"gang scheduling deadlock freedom", 10, [] { return DeadlockFreedom(); }},
      {"parallel dispatch dominance", 30, [] { return ParallelDominance(); }},
      {"crossover monotonicity", 120, [&] { return CrossoverShape(in); }},
      {"compute-bound throughput parity", 60, [&] { return Parity(in); }},
      {"proportional share", 60, [&] { return Fairness(in); }},
      {"multi-tenant utilization", 60, [&] { return Utilization(in); }},
      {"pipeline bubble", 120, [&] { return PipelineBubble(in); }},
      {"progress tracking oracle", 30, [] { return ProgressOracle(); }},
      {"store hygiene", 0, [&] { return Hygiene(in); }},
      {"determinism", 0, [&] { return Determinism(in); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v = criteria[i].check();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = criteria[i].budget_s == 0 || secs < criteria[i].budget_s;
    const bool pass = v.pass && in_budget;
    if (!pass) ++failed;
    std::string detail = v.detail;
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    std::printf("%s %2zu %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].title,
                detail.c_str(), secs, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
