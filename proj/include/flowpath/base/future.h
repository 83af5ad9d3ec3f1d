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

#ifndef FLOWPATH_BASE_FUTURE_H_
#define FLOWPATH_BASE_FUTURE_H_

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "flowpath/base/check.h"

namespace flowpath {

// Single-writer, multi-reader completion cell for simulated work. Callbacks
// run synchronously inside the simulator event that resolves the promise.
template <typename T>
class Future;

template <typename T>
class Promise;

namespace internal {

template <typename T>
struct FutureState {
  std::optional<absl::StatusOr<T>> result;
  std::vector<std::function<void(const absl::StatusOr<T>&)>> callbacks;

  void Complete(absl::StatusOr<T> value) {
    FP_CHECK(!result.has_value(), "future resolved twice");
    result.emplace(std::move(value));
    auto pending = std::move(callbacks);
    callbacks.clear();
    for (auto& cb : pending) cb(*result);
  }
};

}  // namespace internal

template <typename T>
class Future {
 public:
  Future() = default;

  bool valid() const { return state_ != nullptr; }
  bool ready() const { return state_ && state_->result.has_value(); }
  bool failed() const { return ready() && !state_->result->ok(); }

  // Requires ready().
  const absl::StatusOr<T>& result() const {
    FP_CHECK(ready(), "result() on pending future");
    return *state_->result;
  }

  // Runs `cb` immediately if already resolved.
  void OnReady(std::function<void(const absl::StatusOr<T>&)> cb) const {
    FP_CHECK(valid(), "OnReady on empty future");
    if (state_->result.has_value()) {
      cb(*state_->result);
    } else {
      state_->callbacks.push_back(std::move(cb));
    }
  }

  static Future Ready(T value) {
    Promise<T> p;
    Future f = p.future();
    p.Set(std::move(value));
    return f;
  }

 private:
  friend class Promise<T>;
  explicit Future(std::shared_ptr<internal::FutureState<T>> s) : state_(std::move(s)) {}
  std::shared_ptr<internal::FutureState<T>> state_;
};

template <typename T>
class Promise {
 public:
  Promise() : state_(std::make_shared<internal::FutureState<T>>()) {}

  Future<T> future() const { return Future<T>(state_); }
  bool fulfilled() const { return state_->result.has_value(); }

  void Set(T value) { state_->Complete(std::move(value)); }
  void Fail(absl::Status status) {
    FP_CHECK(!status.ok(), "Fail() with OK status");
    state_->Complete(std::move(status));
  }

 private:
  std::shared_ptr<internal::FutureState<T>> state_;
};

}  // namespace flowpath

#endif  // FLOWPATH_BASE_FUTURE_H_
