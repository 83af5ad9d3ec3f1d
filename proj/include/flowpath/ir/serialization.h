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

#ifndef FLOWPATH_IR_SERIALIZATION_H_
#define FLOWPATH_IR_SERIALIZATION_H_

#include <cstdint>
#include <string>

#include "absl/status/statusor.h"
#include "flowpath/ir/program.h"
#include "json.hpp"

namespace flowpath {

nlohmann::json ProgramToJson(const ProgramGraph& graph);
// Errors name the offending JSON path, e.g. "/nodes/2/fn/shards".
absl::StatusOr<ProgramGraph> ProgramFromJson(const nlohmann::json& j);

std::string SerializeProgram(const ProgramGraph& graph);
absl::StatusOr<ProgramGraph> DeserializeProgram(const std::string& text);

uint64_t ProgramDigest(const ProgramGraph& graph);

}  // namespace flowpath

#endif  // FLOWPATH_IR_SERIALIZATION_H_
