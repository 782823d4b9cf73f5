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

// Attribute universe: ordered attribute types, each with an ordered list of
// legal values. The document order is the canonical order for every vector
// layout derived from a schema (one-hot slots, embedding blocks, classifier
// outputs).

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace attrport {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid attribute assignment. `field` names the offending type (or the
/// raw key when the type itself is unknown).
class AttributeError : public std::invalid_argument {
 public:
  AttributeError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct AttributeTypeSpec {
  std::string name;
  std::vector<std::string> values;
};

/// type name -> value name. Partial: unassigned types are simply absent.
using AttributeSet = std::map<std::string, std::string>;

/// Length-K real vector, one slot per (type, value) in schema order.
using OneHotVector = std::vector<double>;

class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Throws SchemaError on duplicate names or a type with fewer than 2 values.
  explicit AttributeSchema(std::vector<AttributeTypeSpec> types);

  const std::vector<AttributeTypeSpec>& types() const { return types_; }
  int num_types() const { return static_cast<int>(types_.size()); }
  /// Total slot count K.
  int num_slots() const { return num_slots_; }
  int num_values(int type) const {
    return static_cast<int>(types_[type].values.size());
  }
  int slot_offset(int type) const { return offsets_[type]; }
  int slot(int type, int value) const { return offsets_[type] + value; }

  std::optional<int> find_type(std::string_view name) const;
  std::optional<int> find_value(int type, std::string_view value) const;

  /// Canonical (type, value) names for an exact spelling or one with
  /// underscores in place of spaces.
  std::pair<std::string, std::string> resolve(std::string_view type,
                                              std::string_view value) const;

  nlohmann::json to_json() const;
  /// Canonical serialisation; identical schemas give identical bytes.
  std::string document() const;
  /// Hex SHA-256 of document().
  std::string hash() const;

  friend bool operator==(const AttributeSchema& a, const AttributeSchema& b) {
    return a.document() == b.document();
  }

 private:
  std::vector<AttributeTypeSpec> types_;
  std::vector<int> offsets_;
  int num_slots_ = 0;
};

AttributeSchema schema_from_json(const nlohmann::json& doc);
AttributeSchema load_schema(std::istream& source);
AttributeSchema load_schema_file(const std::filesystem::path& path);

/// Directory holding the bundled schema and config files. Honors the
/// ATTRPORT_DATA_DIR environment variable, else the build-time location.
std::filesystem::path bundled_data_dir();
AttributeSchema default_schema();
AttributeSchema toy_schema();

/// Throws AttributeError on an unknown type or an illegal value.
void validate(const AttributeSet& attrs, const AttributeSchema& schema);

/// Per type, the global slot of the assigned value or -1 when unassigned.
std::vector<int> slot_indices(const AttributeSet& attrs,
                              const AttributeSchema& schema);

OneHotVector encode_onehot(const AttributeSet& attrs,
                           const AttributeSchema& schema);

/// Argmax per type block, ties to the lowest slot. Always returns a full
/// assignment.
AttributeSet decode_onehot(std::span<const double> bits,
                           const AttributeSchema& schema);

nlohmann::json attributes_to_json(const AttributeSet& attrs);
AttributeSet attributes_from_json(const nlohmann::json& j);

}  // namespace attrport
