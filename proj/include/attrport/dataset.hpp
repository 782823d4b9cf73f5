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

// Paired photo/portrait datasets: a JSONL manifest reader/writer and a
// procedural toy generator whose labels can be checked from pixels.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/embeddings.hpp"
#include "attrport/image_io.hpp"
#include "attrport/random.hpp"
#include "attrport/schema.hpp"

namespace attrport {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ToyDatasetSpec {
  int count = 2000;
  int image_size = 64;
  std::uint64_t seed = 7;
  double p_blond = 0.5;
  double p_smile = 0.5;
  double p_bright_given_smile = 0.9;
  double p_bright_given_frown = 0.1;
  double test_fraction = 0.06;
  /// Photo attributes drawn independently of the portrait's; otherwise the
  /// photo repeats the portrait attributes.
  bool independent_photo_attributes = true;
  double photo_noise = 0.02;

  void validate() const;
  nlohmann::json to_json() const;
  static ToyDatasetSpec from_json(const nlohmann::json& j);
};

/// Face placement in normalized [0, 1] image coordinates.
struct FaceGeometry {
  double cx = 0.5, cy = 0.55, rx = 0.22, ry = 0.3;

  nlohmann::json to_json() const;
  static FaceGeometry from_json(const nlohmann::json& j);
  friend bool operator==(const FaceGeometry&, const FaceGeometry&) = default;
};

/// Value indices in toy-schema order: hair {Blond, Black},
/// background {Bright, Dark}, mouth {Smile, Frown}.
struct ToyAttributes {
  int hair = 0;
  int background = 0;
  int mouth = 0;
  friend bool operator==(const ToyAttributes&, const ToyAttributes&) = default;
};

AttributeSet to_attribute_set(const ToyAttributes& a);
ToyAttributes toy_attributes_from(const AttributeSet& s);

enum class RenderStyle { kPhoto, kPortrait };

struct RegionMasks {
  int size = 0;
  std::vector<std::uint8_t> hair, background, face, mouth;
};

struct RenderResult {
  Image image;  // (1,3,S,S) in [0,1]
  RegionMasks masks;
};

FaceGeometry sample_geometry(Rng& rng);
ToyAttributes sample_toy_attributes(const ToyDatasetSpec& spec, Rng& rng);
/// Hair, background and face depend on geometry only; mouth is the box the
/// mouth curve may occupy.
RegionMasks region_masks(const FaceGeometry& g, int size);
RenderResult render_face(const FaceGeometry& g, const ToyAttributes& a,
                         RenderStyle style, int size, std::uint64_t texture_seed,
                         double noise = 0.0);

inline constexpr double kBlondMinLuma = 0.6;
inline constexpr double kBlackMaxLuma = 0.3;
inline constexpr double kBrightMinLuma = 0.6;
inline constexpr double kDarkMaxLuma = 0.4;

struct ToyMeasurement {
  double hair_luminance = 0;
  double background_luminance = 0;
  /// Mean row of dark mouth pixels at the center minus at the corners, in
  /// pixels; positive for a smile.
  double mouth_curvature = 0;
};

/// Pixel statistics of sample n inside the regions implied by g.
ToyMeasurement measure_toy(const Image& img, int n, const FaceGeometry& g);

struct PairedSample {
  std::string id;
  std::filesystem::path photo;
  std::filesystem::path portrait;
  AttributeSet attrs;
  std::string split = "train";
  std::optional<FaceGeometry> geometry;
  AttributeSet photo_attrs;
};

struct SynthSummary {
  int count = 0, train = 0, test = 0;
  std::filesystem::path manifest;
};

/// Writes photos/, portraits/, manifest.jsonl and spec.json under out_dir.
SynthSummary synth_dataset(const ToyDatasetSpec& spec,
                           const std::filesystem::path& out_dir);

/// Relative paths resolve against the manifest's directory. Throws
/// DatasetError naming the record index on any invalid record.
std::vector<PairedSample> load_manifest(const std::filesystem::path& path,
                                        const AttributeSchema& schema);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<PairedSample>& samples);

std::vector<PairedSample> select_split(const std::vector<PairedSample>& samples,
                                       const std::string& split);
AttributeBagCorpus attribute_corpus(const std::vector<PairedSample>& samples);

struct LoadedImages {
  Tensor<float> photos;     // (N,3,S,S) in [0,1]
  Tensor<float> portraits;  // (N,3,S,S) in [0,1]
  std::vector<AttributeSet> attrs;
};

LoadedImages load_images(const std::vector<PairedSample>& samples, int size);

}  // namespace attrport
