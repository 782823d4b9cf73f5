// Copyright 2026 The attrport Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attrport/schema.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "attrport/hashing.hpp"

#ifndef ATTRPORT_DATA_DIR
#define ATTRPORT_DATA_DIR "data"
#endif

namespace attrport {
namespace {

std::string underscores_to_spaces(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c == '_') c = ' ';
  return out;
}

}  // namespace

AttributeSchema::AttributeSchema(std::vector<AttributeTypeSpec> types)
    : types_(std::move(types)) {
  if (types_.empty()) throw SchemaError("schema has no attribute types");
  std::set<std::string> type_names;
  for (const auto& t : types_) {
    if (t.name.empty()) throw SchemaError("attribute type with empty name");
    if (!type_names.insert(t.name).second)
      throw SchemaError("duplicate attribute type '" + t.name + "'");
    if (t.values.size() < 2)
      throw SchemaError("attribute type '" + t.name +
                        "' needs at least 2 values");
    std::set<std::string> value_names;
    for (const auto& v : t.values) {
      if (v.empty())
        throw SchemaError("empty value name under '" + t.name + "'");
      if (!value_names.insert(v).second)
        throw SchemaError("duplicate value '" + v + "' under type '" +
                          t.name + "'");
    }
  }
  offsets_.reserve(types_.size());
  for (const auto& t : types_) {
    offsets_.push_back(num_slots_);
    num_slots_ += static_cast<int>(t.values.size());
  }
}

std::optional<int> AttributeSchema::find_type(std::string_view name) const {
  for (int i = 0; i < num_types(); ++i)
    if (types_[i].name == name) return i;
  return std::nullopt;
}

std::optional<int> AttributeSchema::find_value(int type,
                                               std::string_view value) const {
  const auto& vals = types_[type].values;
  for (int i = 0; i < static_cast<int>(vals.size()); ++i)
    if (vals[i] == value) return i;
  return std::nullopt;
}

std::pair<std::string, std::string> AttributeSchema::resolve(
    std::string_view type, std::string_view value) const {
  auto t = find_type(type);
  if (!t) t = find_type(underscores_to_spaces(type));
  if (!t)
    throw AttributeError(std::string(type),
                         "unknown attribute type '" + std::string(type) + "'");
  auto v = find_value(*t, value);
  if (!v) v = find_value(*t, underscores_to_spaces(value));
  if (!v)
    throw AttributeError(types_[*t].name, "value '" + std::string(value) +
                                              "' is not legal for type '" +
                                              types_[*t].name + "'");
  return {types_[*t].name, types_[*t].values[*v]};
}

nlohmann::json AttributeSchema::to_json() const {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : types_)
    types.push_back({{"name", t.name}, {"values", t.values}});
  return {{"types", types}};
}

std::string AttributeSchema::document() const { return to_json().dump(); }

std::string AttributeSchema::hash() const { return sha256_hex(document()); }

AttributeSchema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("types") || !doc["types"].is_array())
    throw SchemaError("schema document needs a top-level 'types' list");
  std::vector<AttributeTypeSpec> specs;
  for (const auto& entry : doc["types"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string() || !entry.contains("values") ||
        !entry["values"].is_array())
      throw SchemaError("each type entry needs 'name' and a 'values' list");
    AttributeTypeSpec spec{entry["name"].get<std::string>(), {}};
    for (const auto& v : entry["values"]) {
      if (!v.is_string())
        throw SchemaError("non-string value under '" + spec.name + "'");
      spec.values.push_back(v.get<std::string>());
    }
    specs.push_back(std::move(spec));
  }
  return AttributeSchema(std::move(specs));
}

AttributeSchema load_schema(std::istream& source) {
  nlohmann::json doc;
  try {
    source >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
  return schema_from_json(doc);
}

AttributeSchema load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  return load_schema(in);
}

std::filesystem::path bundled_data_dir() {
  if (const char* env = std::getenv("ATTRPORT_DATA_DIR"); env && *env)
    return env;
  return ATTRPORT_DATA_DIR;
}

AttributeSchema default_schema() {
  return load_schema_file(bundled_data_dir() / "default_schema.json");
}

AttributeSchema toy_schema() {
  return load_schema_file(bundled_data_dir() / "toy_schema.json");
}

void validate(const AttributeSet& attrs, const AttributeSchema& schema) {
  for (const auto& [type, value] : attrs) {
    const auto t = schema.find_type(type);
    if (!t)
      throw AttributeError(type, "unknown attribute type '" + type + "'");
    if (!schema.find_value(*t, value))
      throw AttributeError(type, "value '" + value +
                                     "' is not legal for type '" + type + "'");
  }
}

std::vector<int> slot_indices(const AttributeSet& attrs,
                              const AttributeSchema& schema) {
  validate(attrs, schema);
  std::vector<int> slots(schema.num_types(), -1);
  for (const auto& [type, value] : attrs) {
    const int t = *schema.find_type(type);
    slots[t] = schema.slot(t, *schema.find_value(t, value));
  }
  return slots;
}

OneHotVector encode_onehot(const AttributeSet& attrs,
                           const AttributeSchema& schema) {
  OneHotVector bits(schema.num_slots(), 0.0);
  for (int slot : slot_indices(attrs, schema))
    if (slot >= 0) bits[slot] = 1.0;
  return bits;
}

AttributeSet decode_onehot(std::span<const double> bits,
                           const AttributeSchema& schema) {
  if (static_cast<int>(bits.size()) != schema.num_slots())
    throw std::invalid_argument(
        "one-hot vector has length " + std::to_string(bits.size()) +
        ", schema expects " + std::to_string(schema.num_slots()));
  AttributeSet out;
  for (int t = 0; t < schema.num_types(); ++t) {
    const int off = schema.slot_offset(t);
    int best = 0;
    for (int v = 1; v < schema.num_values(t); ++v)
      if (bits[off + v] > bits[off + best]) best = v;
    out[schema.types()[t].name] = schema.types()[t].values[best];
  }
  return out;
}

nlohmann::json attributes_to_json(const AttributeSet& attrs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : attrs) j[k] = v;
  return j;
}

AttributeSet attributes_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw AttributeError("attributes", "attributes must be an object");
  AttributeSet out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string())
      throw AttributeError(k, "value for '" + k + "' must be a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace attrport
