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

#include "flowpath/ir/serialization.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "flowpath/base/digest.h"
#include "flowpath/base/json_util.h"

namespace flowpath {
namespace {

using json_util::Child;
using json_util::ParseError;
using nlohmann::json;

json SpecsBytes(const std::vector<TensorSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs) out.push_back(s.bytes);
  return out;
}

json SpecsLayouts(const std::vector<TensorSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs) out.push_back(s.layout);
  return out;
}

std::string LinkName(const std::optional<LinkKind>& link) {
  return link ? std::string(LinkKindName(*link)) : "local";
}

absl::StatusOr<std::optional<LinkKind>> ParseLink(const json& j, const std::string& path) {
  if (!j.is_string()) return ParseError(path, "expected link name");
  const std::string s = j.get<std::string>();
  if (s == "local") return std::optional<LinkKind>();
  if (s == "ici") return std::optional<LinkKind>(LinkKind::kIci);
  if (s == "dcn") return std::optional<LinkKind>(LinkKind::kDcn);
  if (s == "pcie") return std::optional<LinkKind>(LinkKind::kPcie);
  return ParseError(path, absl::StrCat("unknown link '", s, "'"));
}

absl::StatusOr<std::vector<int64_t>> IntArray(const json& j, const std::string& key,
                                              const std::string& path) {
  FP_ASSIGN_OR_RETURN(const json* arr, json_util::Array(j, key, path));
  std::vector<int64_t> out;
  for (size_t i = 0; i < arr->size(); ++i) {
    if (!(*arr)[i].is_number_integer()) {
      return ParseError(Child(Child(path, key), i), "expected integer");
    }
    out.push_back((*arr)[i].get<int64_t>());
  }
  return out;
}

absl::StatusOr<std::vector<TensorSpec>> ParseSpecs(const json& fn, const std::string& bytes_key,
                                                   const std::string& layout_key,
                                                   const std::string& path) {
  FP_ASSIGN_OR_RETURN(std::vector<int64_t> bytes, IntArray(fn, bytes_key, path));
  std::vector<TensorSpec> specs;
  for (int64_t b : bytes) specs.push_back({b, "block"});
  if (fn.contains(layout_key)) {
    FP_ASSIGN_OR_RETURN(const json* layouts, json_util::Array(fn, layout_key, path));
    if (layouts->size() != specs.size()) {
      return ParseError(Child(path, layout_key), "length differs from byte sizes");
    }
    for (size_t i = 0; i < specs.size(); ++i) {
      if (!(*layouts)[i].is_string()) {
        return ParseError(Child(Child(path, layout_key), i), "expected string");
      }
      specs[i].layout = (*layouts)[i].get<std::string>();
    }
  }
  return specs;
}

absl::StatusOr<CompiledFunction> ParseFunction(const json& fn, const std::string& path) {
  if (!fn.is_object()) return ParseError(path, "expected object");
  CompiledFunction f;
  FP_ASSIGN_OR_RETURN(f.name, json_util::String(fn, "name", path));
  FP_ASSIGN_OR_RETURN(int64_t shards, json_util::Int(fn, "shards", path));
  if (shards < 1) return ParseError(Child(path, "shards"), "must be >= 1");
  f.shards = static_cast<int>(shards);
  FP_ASSIGN_OR_RETURN(f.inputs, ParseSpecs(fn, "in_bytes", "in_layouts", path));
  FP_ASSIGN_OR_RETURN(f.outputs, ParseSpecs(fn, "out_bytes", "out_layouts", path));
  FP_ASSIGN_OR_RETURN(double us, json_util::Number(fn, "us_per_shard", path));
  if (us < 0) return ParseError(Child(path, "us_per_shard"), "must be >= 0");
  f.per_shard = Duration(std::llround(us * 1e3));
  FP_ASSIGN_OR_RETURN(f.regular, json_util::Bool(fn, "regular", path));
  FP_ASSIGN_OR_RETURN(f.collective, json_util::Bool(fn, "collective", path));
  if (fn.contains("fuses")) {
    FP_ASSIGN_OR_RETURN(int64_t fuses, json_util::Int(fn, "fuses", path));
    if (fuses < 1) return ParseError(Child(path, "fuses"), "must be >= 1");
    f.fuses = static_cast<int>(fuses);
  }
  return f;
}

absl::StatusOr<ReshardingSpec> ParseReshard(const json& j, const std::string& path) {
  ReshardingSpec spec;
  FP_ASSIGN_OR_RETURN(std::string kind, json_util::String(j, "kind", path));
  if (kind == "one-to-one") {
    spec.kind = ReshardKind::kOneToOne;
  } else if (kind == "scatter") {
    spec.kind = ReshardKind::kScatter;
  } else if (kind == "gather") {
    spec.kind = ReshardKind::kGather;
  } else if (kind == "all-to-all") {
    spec.kind = ReshardKind::kAllToAll;
  } else {
    return ParseError(Child(path, "kind"), absl::StrCat("unknown resharding '", kind, "'"));
  }
  FP_ASSIGN_OR_RETURN(int64_t m, json_util::Int(j, "src_shards", path));
  FP_ASSIGN_OR_RETURN(int64_t n, json_util::Int(j, "dst_shards", path));
  spec.src_shards = static_cast<int>(m);
  spec.dst_shards = static_cast<int>(n);
  FP_ASSIGN_OR_RETURN(const json* pieces, json_util::Array(j, "pieces", path));
  for (size_t i = 0; i < pieces->size(); ++i) {
    const json& p = (*pieces)[i];
    const std::string ppath = Child(Child(path, "pieces"), i);
    if (!p.is_array() || p.size() != 4 || !p[0].is_number_integer() ||
        !p[1].is_number_integer() || !p[2].is_number_integer()) {
      return ParseError(ppath, "expected [src, dst, bytes, link]");
    }
    ReshardingSpec::Piece piece;
    piece.src = p[0].get<int>();
    piece.dst = p[1].get<int>();
    piece.bytes = p[2].get<int64_t>();
    if (piece.src < 0 || piece.src >= m || piece.dst < 0 || piece.dst >= n) {
      return ParseError(ppath, "shard index out of range");
    }
    FP_ASSIGN_OR_RETURN(piece.link, ParseLink(p[3], Child(ppath, size_t{3})));
    spec.pieces.push_back(piece);
  }
  return spec;
}

absl::StatusOr<NodeKind> ParseNodeKind(const json& j, const std::string& path) {
  FP_ASSIGN_OR_RETURN(std::string kind, json_util::String(j, "kind", path));
  if (kind == "arg") return NodeKind::kArg;
  if (kind == "compute") return NodeKind::kCompute;
  if (kind == "result") return NodeKind::kResult;
  return ParseError(Child(path, "kind"), absl::StrCat("unknown node kind '", kind, "'"));
}

}  // namespace

json ProgramToJson(const ProgramGraph& graph) {
  json slices = json::array();
  for (const auto& s : graph.slices) {
    slices.push_back({{"mesh", s.mesh},
                      {"island", s.island ? json(s.island->value()) : json(nullptr)},
                      {"exclusive", s.exclusive}});
  }
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    json fn = {{"name", n.fn.name},
               {"shards", n.fn.shards},
               {"in_bytes", SpecsBytes(n.fn.inputs)},
               {"in_layouts", SpecsLayouts(n.fn.inputs)},
               {"out_bytes", SpecsBytes(n.fn.outputs)},
               {"out_layouts", SpecsLayouts(n.fn.outputs)},
               {"us_per_shard", static_cast<double>(n.fn.per_shard.count()) / 1e3},
               {"regular", n.fn.regular},
               {"collective", n.fn.collective}};
    if (n.fn.fuses != 1) fn["fuses"] = n.fn.fuses;
    json node = {{"id", n.id.value()},
                 {"kind", std::string(NodeKindName(n.kind))},
                 {"fn", fn},
                 {"slice", n.slice}};
    if (graph.form == GraphForm::kLowered) {
      json devices = json::array();
      for (DeviceId d : n.devices) devices.push_back(d.value());
      node["devices"] = devices;
    }
    nodes.push_back(node);
  }
  json edges = json::array();
  for (const auto& e : graph.edges) {
    json edge = {{"src", e.src.value()},
                 {"src_output", e.src_output},
                 {"dst", e.dst.value()},
                 {"dst_input", e.dst_input}};
    if (e.reshard) {
      json pieces = json::array();
      for (const auto& p : e.reshard->pieces) {
        pieces.push_back({p.src, p.dst, p.bytes, LinkName(p.link)});
      }
      edge["reshard"] = {{"kind", std::string(ReshardKindName(e.reshard->kind))},
                         {"src_shards", e.reshard->src_shards},
                         {"dst_shards", e.reshard->dst_shards},
                         {"pieces", pieces}};
    } else {
      edge["reshard"] = nullptr;
    }
    edges.push_back(edge);
  }
  json results = json::array();
  for (NodeId r : graph.results) results.push_back(r.value());
  return {{"form", graph.form == GraphForm::kTraced ? "traced" : "lowered"},
          {"client", graph.client.value()},
          {"slices", slices},
          {"nodes", nodes},
          {"edges", edges},
          {"results", results}};
}

absl::StatusOr<ProgramGraph> ProgramFromJson(const json& j) {
  if (!j.is_object()) return ParseError("", "expected object");
  ProgramGraph graph;
  FP_ASSIGN_OR_RETURN(std::string form, json_util::String(j, "form", ""));
  if (form == "traced") {
    graph.form = GraphForm::kTraced;
  } else if (form == "lowered") {
    graph.form = GraphForm::kLowered;
  } else {
    return ParseError("/form", absl::StrCat("unknown form '", form, "'"));
  }
  FP_ASSIGN_OR_RETURN(int64_t client, json_util::Int(j, "client", ""));
  graph.client = ClientId(client);

  FP_ASSIGN_OR_RETURN(const json* slices, json_util::Array(j, "slices", ""));
  for (size_t i = 0; i < slices->size(); ++i) {
    const json& s = (*slices)[i];
    const std::string path = Child("/slices", i);
    SliceRequirement req;
    FP_ASSIGN_OR_RETURN(std::vector<int64_t> mesh, IntArray(s, "mesh", path));
    for (int64_t d : mesh) {
      if (d < 1) return ParseError(Child(path, "mesh"), "extents must be >= 1");
      req.mesh.push_back(static_cast<int>(d));
    }
    if (s.contains("island") && !s["island"].is_null()) {
      FP_ASSIGN_OR_RETURN(int64_t island, json_util::Int(s, "island", path));
      req.island = IslandId(island);
    }
    if (s.contains("exclusive")) {
      FP_ASSIGN_OR_RETURN(req.exclusive, json_util::Bool(s, "exclusive", path));
    }
    graph.slices.push_back(std::move(req));
  }

  FP_ASSIGN_OR_RETURN(const json* nodes, json_util::Array(j, "nodes", ""));
  for (size_t i = 0; i < nodes->size(); ++i) {
    const json& n = (*nodes)[i];
    const std::string path = Child("/nodes", i);
    Node node;
    FP_ASSIGN_OR_RETURN(int64_t id, json_util::Int(n, "id", path));
    if (id != static_cast<int64_t>(i)) return ParseError(Child(path, "id"), "ids must be dense");
    node.id = NodeId(id);
    FP_ASSIGN_OR_RETURN(node.kind, ParseNodeKind(n, path));
    FP_ASSIGN_OR_RETURN(const json* fn, json_util::Field(n, "fn", path));
    FP_ASSIGN_OR_RETURN(node.fn, ParseFunction(*fn, Child(path, "fn")));
    FP_ASSIGN_OR_RETURN(int64_t slice, json_util::Int(n, "slice", path));
    node.slice = static_cast<int>(slice);
    if (graph.form == GraphForm::kLowered) {
      FP_ASSIGN_OR_RETURN(std::vector<int64_t> devices, IntArray(n, "devices", path));
      for (int64_t d : devices) node.devices.push_back(DeviceId(d));
    }
    graph.nodes.push_back(std::move(node));
  }

  FP_ASSIGN_OR_RETURN(const json* edges, json_util::Array(j, "edges", ""));
  for (size_t i = 0; i < edges->size(); ++i) {
    const json& e = (*edges)[i];
    const std::string path = Child("/edges", i);
    Edge edge;
    FP_ASSIGN_OR_RETURN(int64_t src, json_util::Int(e, "src", path));
    FP_ASSIGN_OR_RETURN(int64_t dst, json_util::Int(e, "dst", path));
    edge.src = NodeId(src);
    edge.dst = NodeId(dst);
    edge.src_output = e.contains("src_output") ? e["src_output"].get<int>() : 0;
    edge.dst_input = e.contains("dst_input") ? e["dst_input"].get<int>() : 0;
    if (e.contains("reshard") && !e["reshard"].is_null()) {
      FP_ASSIGN_OR_RETURN(edge.reshard, ParseReshard(e["reshard"], Child(path, "reshard")));
    }
    graph.edges.push_back(std::move(edge));
  }

  FP_ASSIGN_OR_RETURN(std::vector<int64_t> results, IntArray(j, "results", ""));
  for (int64_t r : results) graph.results.push_back(NodeId(r));

  if (absl::Status s = graph.Validate(); !s.ok()) {
    return ParseError("", std::string(s.message()));
  }
  return graph;
}

std::string SerializeProgram(const ProgramGraph& graph) { return ProgramToJson(graph).dump(); }

absl::StatusOr<ProgramGraph> DeserializeProgram(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return ParseError("", "malformed JSON");
  return ProgramFromJson(j);
}

uint64_t ProgramDigest(const ProgramGraph& graph) {
  return DigestString(SerializeProgram(graph));
}

}  // namespace flowpath
