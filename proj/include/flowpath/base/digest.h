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

#ifndef FLOWPATH_BASE_DIGEST_H_
#define FLOWPATH_BASE_DIGEST_H_

#include <cstdint>
#include <string_view>
#include <type_traits>

namespace flowpath {

// 64-bit FNV-1a. Stable across processes and platforms, unlike std::hash.
class Digest {
 public:
  static constexpr uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr uint64_t kPrime = 0x100000001b3ULL;

  constexpr Digest() = default;
  constexpr explicit Digest(uint64_t seed) : state_(seed) {}

  constexpr Digest& Bytes(std::string_view bytes) {
    for (char c : bytes) {
      state_ ^= static_cast<uint8_t>(c);
      state_ *= kPrime;
    }
    return *this;
  }

  template <typename T>
    requires std::is_integral_v<T>
  constexpr Digest& Int(T value) {
    auto v = static_cast<uint64_t>(value);
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xff;
      state_ *= kPrime;
    }
    return *this;
  }

  constexpr uint64_t value() const { return state_; }

 private:
  uint64_t state_ = kOffset;
};

template <typename... Ints>
constexpr uint64_t DigestOf(std::string_view tag, Ints... values) {
  Digest d;
  d.Bytes(tag);
  (d.Int(values), ...);
  return d.value();
}

inline uint64_t DigestString(std::string_view s) { return Digest().Bytes(s).value(); }

}  // namespace flowpath

#endif  // FLOWPATH_BASE_DIGEST_H_
