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

#include "flowpath/hardware/cluster.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "flowpath/base/json_util.h"

namespace flowpath {
namespace {

using json_util::Child;
using nlohmann::json;

absl::StatusOr<LinkClass> ParseLink(const json& j, const std::string& key, LinkKind kind,
                                    const std::string& path) {
  FP_ASSIGN_OR_RETURN(const json* link, json_util::Field(j, key, path));
  const std::string link_path = Child(path, key);
  FP_ASSIGN_OR_RETURN(int64_t latency_ns, json_util::Int(*link, "latency_ns", link_path));
  FP_ASSIGN_OR_RETURN(double gbps, json_util::Number(*link, "gbps", link_path));
  if (latency_ns < 0) return json_util::ParseError(link_path, "negative latency");
  if (!(gbps > 0)) return json_util::ParseError(link_path, "bandwidth must be positive");
  return LinkClass{kind, Duration(latency_ns), gbps};
}

json LinkToJson(const LinkClass& link) {
  return {{"latency_ns", link.latency.count()}, {"gbps", link.gbps}};
}

}  // namespace

std::string_view LinkKindName(LinkKind kind) {
  switch (kind) {
    case LinkKind::kPcie:
      return "pcie";
    case LinkKind::kIci:
      return "ici";
    case LinkKind::kDcn:
      return "dcn";
  }
  return "unknown";
}

Duration LinkClass::TransferTime(int64_t bytes) const {
  const auto wire = static_cast<int64_t>(std::ceil(static_cast<double>(bytes) / gbps));
  return latency + Duration(wire);
}

absl::StatusOr<ClusterConfig> ClusterConfig::FromJson(const json& j) {
  ClusterConfig config;
  FP_ASSIGN_OR_RETURN(const json* islands, json_util::Array(j, "islands", ""));
  for (size_t i = 0; i < islands->size(); ++i) {
    const json& ij = (*islands)[i];
    const std::string path = Child("/islands", i);
    IslandConfig island;
    FP_ASSIGN_OR_RETURN(int64_t dph, json_util::Int(ij, "devices_per_host", path));
    FP_ASSIGN_OR_RETURN(int64_t hosts, json_util::Int(ij, "hosts", path));
    if (dph < 1 || hosts < 1) return json_util::ParseError(path, "empty island");
    island.devices_per_host = static_cast<int>(dph);
    island.hosts = static_cast<int>(hosts);
    if (ij.contains("mesh")) {
      FP_ASSIGN_OR_RETURN(const json* mesh, json_util::Array(ij, "mesh", path));
      int64_t product = 1;
      for (const auto& d : *mesh) {
        if (!d.is_number_integer() || d.get<int64_t>() < 1) {
          return json_util::ParseError(Child(path, "mesh"), "extents must be positive integers");
        }
        island.mesh.push_back(d.get<int>());
        product *= d.get<int64_t>();
      }
      if (product != dph * hosts) {
        return json_util::ParseError(Child(path, "mesh"),
                                     absl::StrCat("mesh product ", product,
                                                  " != device count ", dph * hosts));
      }
    } else {
      island.mesh = {island.device_count()};
    }
    FP_ASSIGN_OR_RETURN(island.ici, ParseLink(ij, "ici", LinkKind::kIci, path));
    config.islands.push_back(std::move(island));
  }
  if (config.islands.empty()) return json_util::ParseError("/islands", "no islands");
  FP_ASSIGN_OR_RETURN(config.dcn, ParseLink(j, "dcn", LinkKind::kDcn, ""));
  FP_ASSIGN_OR_RETURN(config.pcie, ParseLink(j, "pcie", LinkKind::kPcie, ""));
  FP_ASSIGN_OR_RETURN(config.hbm_bytes, json_util::Int(j, "hbm_bytes", ""));
  if (config.hbm_bytes <= 0) return json_util::ParseError("/hbm_bytes", "must be positive");
  return config;
}

json ClusterConfig::ToJson() const {
  json islands_json = json::array();
  for (const auto& island : islands) {
    islands_json.push_back({{"devices_per_host", island.devices_per_host},
                            {"hosts", island.hosts},
                            {"mesh", island.mesh},
                            {"ici", LinkToJson(island.ici)}});
  }
  return {{"islands", islands_json},
          {"dcn", LinkToJson(dcn)},
          {"pcie", LinkToJson(pcie)},
          {"hbm_bytes", hbm_bytes}};
}

ClusterConfig ClusterConfig::Uniform(int islands, int hosts, int devices_per_host) {
  ClusterConfig config;
  for (int i = 0; i < islands; ++i) {
    IslandConfig island;
    island.devices_per_host = devices_per_host;
    island.hosts = hosts;
    island.mesh = {hosts * devices_per_host};
    config.islands.push_back(island);
  }
  return config;
}

Topology::Topology(const ClusterConfig& config)
    : dcn_(config.dcn), pcie_(config.pcie), hbm_bytes_(config.hbm_bytes) {
  for (const auto& island : config.islands) AddIsland(island);
}

IslandId Topology::AddIsland(const IslandConfig& config) {
  IslandId island_id(static_cast<int64_t>(islands_.size()));
  IslandInfo island{island_id, {}, {}, config.mesh, config.ici};
  island.ici.kind = LinkKind::kIci;
  if (island.mesh.empty()) island.mesh = {config.device_count()};
  for (int h = 0; h < config.hosts; ++h) {
    HostId host_id(static_cast<int64_t>(hosts_.size()));
    HostInfo host{host_id, island_id, {}};
    for (int d = 0; d < config.devices_per_host; ++d) {
      DeviceId dev(static_cast<int64_t>(devices_.size()));
      devices_.push_back({dev, island_id, host_id});
      host.devices.push_back(dev);
      island.devices.push_back(dev);
    }
    island.hosts.push_back(host_id);
    hosts_.push_back(std::move(host));
  }
  islands_.push_back(std::move(island));
  return island_id;
}

const LinkClass& Topology::LinkBetween(DeviceId a, DeviceId b) const {
  const IslandId ia = device(a).island;
  if (ia == device(b).island) return islands_[ia.value()].ici;
  return dcn_;
}

}  // namespace flowpath
