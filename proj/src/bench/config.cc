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

#include "flowpath/bench/config.h"

#include <fstream>

#include "absl/strings/str_cat.h"
#include "flowpath/base/json_util.h"
#include "flowpath/base/status_macros.h"

namespace flowpath {

absl::StatusOr<BenchConfig> BenchConfig::FromJson(const nlohmann::json& j) {
  BenchConfig c;
  FP_ASSIGN_OR_RETURN(c.cluster, ClusterConfig::FromJson(j));
  if (!j.contains("runtime")) return c;
  const nlohmann::json& r = j["runtime"];
  if (!r.is_object()) return json_util::ParseError("/runtime", "expected object");
  if (r.contains("cost")) {
    FP_ASSIGN_OR_RETURN(c.runtime.cost, HostCostModel::FromJson(r["cost"], "/runtime/cost"));
  }
  if (r.contains("sched")) {
    FP_ASSIGN_OR_RETURN(c.runtime.sched, SchedulerConfig::FromJson(r["sched"], "/runtime/sched"));
  }
  if (r.contains("dispatch")) {
    FP_ASSIGN_OR_RETURN(std::string mode, json_util::String(r, "dispatch", "/runtime"));
    auto parsed = ParseDispatchMode(mode);
    if (!parsed.ok()) return json_util::ParseError("/runtime/dispatch", std::string(parsed.status().message()));
    c.runtime.dispatch = *parsed;
  }
  if (r.contains("batching")) {
    FP_ASSIGN_OR_RETURN(bool batching, json_util::Bool(r, "batching", "/runtime"));
    if (batching) c.runtime.batching = BatchPolicy{};
  }
  return c;
}

nlohmann::json BenchConfig::ToJson() const {
  nlohmann::json j = cluster.ToJson();
  j["runtime"] = {{"cost", runtime.cost.ToJson()},
                  {"sched", runtime.sched.ToJson()},
                  {"dispatch", std::string(DispatchModeName(runtime.dispatch))},
                  {"batching", runtime.batching.has_value()}};
  return j;
}

absl::StatusOr<nlohmann::json> ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) return absl::InvalidArgumentError(absl::StrCat(path, ": malformed JSON"));
  return j;
}

ClusterConfig ScaleCluster(const ClusterConfig& base, int hosts) {
  ClusterConfig c = base;
  IslandConfig island = base.islands.at(0);
  island.hosts = hosts;
  island.mesh = {island.device_count()};
  c.islands = {island};
  return c;
}

}  // namespace flowpath
