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

#ifndef FLOWPATH_BASE_TIME_H_
#define FLOWPATH_BASE_TIME_H_

#include <chrono>
#include <compare>
#include <cstdint>
#include <ostream>

namespace flowpath {

using Duration = std::chrono::nanoseconds;

// Point on the simulated timeline, in nanoseconds since simulation start.
class VirtualTime {
 public:
  constexpr VirtualTime() = default;
  constexpr explicit VirtualTime(Duration since_start) : nanos_(since_start.count()) {}

  static constexpr VirtualTime FromNanos(int64_t ns) { return VirtualTime(Duration(ns)); }
  static constexpr VirtualTime Zero() { return VirtualTime(); }

  constexpr int64_t nanos() const { return nanos_; }
  constexpr double micros() const { return static_cast<double>(nanos_) / 1e3; }
  constexpr double seconds() const { return static_cast<double>(nanos_) / 1e9; }
  constexpr Duration since_start() const { return Duration(nanos_); }

  friend constexpr auto operator<=>(VirtualTime, VirtualTime) = default;
  friend constexpr VirtualTime operator+(VirtualTime t, Duration d) {
    return VirtualTime::FromNanos(t.nanos_ + d.count());
  }
  friend constexpr Duration operator-(VirtualTime a, VirtualTime b) {
    return Duration(a.nanos_ - b.nanos_);
  }
  VirtualTime& operator+=(Duration d) {
    nanos_ += d.count();
    return *this;
  }

  friend std::ostream& operator<<(std::ostream& os, VirtualTime t) {
    return os << t.nanos_ << "ns";
  }

 private:
  int64_t nanos_ = 0;
};

constexpr Duration Micros(double us) {
  return Duration(static_cast<int64_t>(us * 1e3 + (us >= 0 ? 0.5 : -0.5)));
}
constexpr Duration Millis(double ms) {
  return Duration(static_cast<int64_t>(ms * 1e6 + (ms >= 0 ? 0.5 : -0.5)));
}
constexpr double ToMicros(Duration d) { return static_cast<double>(d.count()) / 1e3; }
constexpr double ToSeconds(Duration d) { return static_cast<double>(d.count()) / 1e9; }

inline constexpr VirtualTime Later(VirtualTime a, VirtualTime b) { return a < b ? b : a; }

}  // namespace flowpath

#endif  // FLOWPATH_BASE_TIME_H_
