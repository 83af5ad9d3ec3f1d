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

#ifndef FLOWPATH_HARDWARE_CLUSTER_H_
#define FLOWPATH_HARDWARE_CLUSTER_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "flowpath/base/ids.h"
#include "flowpath/base/time.h"
#include "json.hpp"

namespace flowpath {

enum class LinkKind { kPcie, kIci, kDcn };

std::string_view LinkKindName(LinkKind kind);

// Latency/bandwidth pair. Bandwidth is in GB/s (1e9 bytes/s), so one unit
// moves one byte per nanosecond.
struct LinkClass {
  LinkKind kind = LinkKind::kDcn;
  Duration latency{0};
  double gbps = 1.0;

  // latency + bytes / bandwidth, rounded up to whole nanoseconds.
  Duration TransferTime(int64_t bytes) const;
};

struct IslandConfig {
  int devices_per_host = 1;
  int hosts = 1;
  std::vector<int> mesh;  // product == devices_per_host * hosts
  LinkClass ici{LinkKind::kIci, Duration(1000), 100.0};

  int device_count() const { return devices_per_host * hosts; }
};

struct ClusterConfig {
  std::vector<IslandConfig> islands;
  LinkClass dcn{LinkKind::kDcn, Duration(50'000), 10.0};
  LinkClass pcie{LinkKind::kPcie, Duration(5'000), 16.0};
  int64_t hbm_bytes = 16LL * 1000 * 1000 * 1000;

  static absl::StatusOr<ClusterConfig> FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;

  // `islands` islands of `hosts` x `devices_per_host` with default links.
  static ClusterConfig Uniform(int islands, int hosts, int devices_per_host);
};

struct DeviceInfo {
  DeviceId id;
  IslandId island;
  HostId host;
};

struct HostInfo {
  HostId id;
  IslandId island;
  std::vector<DeviceId> devices;
};

struct IslandInfo {
  IslandId id;
  std::vector<HostId> hosts;
  std::vector<DeviceId> devices;
  std::vector<int> mesh;
  LinkClass ici;
};

// Static device/host/island numbering. Ids are dense and assigned in
// island-major order; islands can be appended.
class Topology {
 public:
  Topology() = default;
  explicit Topology(const ClusterConfig& config);

  IslandId AddIsland(const IslandConfig& island);

  const std::vector<DeviceInfo>& devices() const { return devices_; }
  const std::vector<HostInfo>& hosts() const { return hosts_; }
  const std::vector<IslandInfo>& islands() const { return islands_; }

  const DeviceInfo& device(DeviceId id) const { return devices_.at(id.value()); }
  const HostInfo& host(HostId id) const { return hosts_.at(id.value()); }
  const IslandInfo& island(IslandId id) const { return islands_.at(id.value()); }
  bool has_device(DeviceId id) const {
    return id.valid() && id.value() < static_cast<int64_t>(devices_.size());
  }

  // ICI inside an island, DCN across islands.
  const LinkClass& LinkBetween(DeviceId a, DeviceId b) const;

  const LinkClass& dcn() const { return dcn_; }
  const LinkClass& pcie() const { return pcie_; }
  int64_t hbm_bytes() const { return hbm_bytes_; }

 private:
  std::vector<DeviceInfo> devices_;
  std::vector<HostInfo> hosts_;
  std::vector<IslandInfo> islands_;
  LinkClass dcn_;
  LinkClass pcie_;
  int64_t hbm_bytes_ = 0;
};

}  // namespace flowpath

#endif  // FLOWPATH_HARDWARE_CLUSTER_H_
