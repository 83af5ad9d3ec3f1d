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

#ifndef FLOWPATH_BASE_CHECK_H_
#define FLOWPATH_BASE_CHECK_H_

#include <cstdio>
#include <cstdlib>
#include <string>

// Aborts on violated programming invariants. Recoverable failures use
// absl::Status instead.
#define FP_CHECK(cond, msg)                                                  \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::fprintf(stderr, "%s:%d: check failed: %s: %s\n", __FILE__,        \
                   __LINE__, #cond, std::string(msg).c_str());               \
      std::abort();                                                          \
    }                                                                        \
  } while (0)

#endif  // FLOWPATH_BASE_CHECK_H_
