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

#include "attrport/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "attrport/archive.hpp"

namespace attrport {
namespace {

using Rgb = std::array<double, 3>;

struct Palette {
  Rgb skin, eyes, mouth;
  std::array<Rgb, 2> hair, background;
};

// Luma: blond ~0.84, black ~0.09, bright ~0.83, dark ~0.20.
constexpr Palette kPhotoPalette{{0.92, 0.76, 0.64},
                                {0.15, 0.10, 0.10},
                                {0.60, 0.15, 0.15},
                                {{{0.93, 0.84, 0.58}, {0.10, 0.08, 0.07}}},
                                {{{0.82, 0.84, 0.86}, {0.16, 0.20, 0.26}}}};
constexpr Palette kPortraitPalette{{0.96, 0.74, 0.55},
                                   {0.20, 0.12, 0.18},
                                   {0.70, 0.10, 0.15},
                                   {{{0.98, 0.82, 0.45}, {0.14, 0.09, 0.12}}},
                                   {{{0.90, 0.82, 0.62}, {0.20, 0.14, 0.30}}}};

constexpr double kStrokeAmplitude = 0.05;
constexpr double kStrokeWavelength = 0.07;

struct Layout {
  double hair_cy, hair_rx, hair_ry;
  double eye_dx, eye_y, eye_r;
  double mouth_y, mouth_half_width, mouth_amp, mouth_thickness;
};

Layout layout(const FaceGeometry& g, int size) {
  Layout l;
  l.hair_cy = g.cy - 0.12 * g.ry;
  l.hair_rx = 1.25 * g.rx;
  l.hair_ry = 1.18 * g.ry;
  l.eye_dx = 0.4 * g.rx;
  l.eye_y = g.cy - 0.15 * g.ry;
  l.eye_r = 0.12 * g.rx;
  l.mouth_y = g.cy + 0.42 * g.ry;
  l.mouth_half_width = 0.45 * g.rx;
  l.mouth_amp = 0.3 * g.ry;
  l.mouth_thickness = std::max(0.06 * g.ry, 0.9 / size);
  return l;
}

double sq(double v) { return v * v; }

bool in_face(const FaceGeometry& g, double px, double py) {
  return sq((px - g.cx) / g.rx) + sq((py - g.cy) / g.ry) <= 1.0;
}

bool in_hair(const FaceGeometry& g, const Layout& l, double px, double py) {
  return !in_face(g, px, py) && py < g.cy + 0.2 * g.ry &&
         sq((px - g.cx) / l.hair_rx) + sq((py - l.hair_cy) / l.hair_ry) <= 1.0;
}

/// Mouth curve: center sits amp/2 below the mouth line for a smile, above
/// for a frown; corners the opposite way.
bool in_mouth(const FaceGeometry& g, const Layout& l, int mouth, double px,
              double py) {
  const double t = (px - g.cx) / l.mouth_half_width;
  if (std::abs(t) > 1.0) return false;
  const double c = mouth == 0 ? l.mouth_amp : -l.mouth_amp;
  const double curve = l.mouth_y + c * (0.5 - t * t);
  return std::abs(py - curve) <= l.mouth_thickness;
}

bool in_eye(const FaceGeometry& g, const Layout& l, double px, double py) {
  for (double s : {-1.0, 1.0})
    if (sq(px - (g.cx + s * l.eye_dx)) + sq(py - l.eye_y) <= sq(l.eye_r)) return true;
  return false;
}

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& m, int size) {
  std::vector<std::uint8_t> out(m.size(), 0);
  for (int y = 1; y + 1 < size; ++y)
    for (int x = 1; x + 1 < size; ++x) {
      const int i = y * size + x;
      out[i] = m[i] && m[i - 1] && m[i + 1] && m[i - size] && m[i + size];
    }
  return out;
}

double masked_luminance(const Image& img, int n, const std::vector<std::uint8_t>& mask,
                        int size) {
  double s = 0;
  int count = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (mask[y * size + x]) {
        s += luminance(img, n, y, x);
        ++count;
      }
  return count ? s / count : 0.0;
}

std::string index_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", i);
  return buf;
}

}  // namespace

void ToyDatasetSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("toy spec: " + m); };
  if (count < 1) fail("count must be >= 1");
  if (image_size < 16) fail("image_size must be >= 16");
  for (double p : {p_blond, p_smile, p_bright_given_smile, p_bright_given_frown,
                   test_fraction})
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must be in [0, 1]");
  if (!(photo_noise >= 0.0)) fail("photo_noise must be >= 0");
}

nlohmann::json ToyDatasetSpec::to_json() const {
  return {{"count", count},
          {"image_size", image_size},
          {"seed", seed},
          {"p_blond", p_blond},
          {"p_smile", p_smile},
          {"p_bright_given_smile", p_bright_given_smile},
          {"p_bright_given_frown", p_bright_given_frown},
          {"test_fraction", test_fraction},
          {"independent_photo_attributes", independent_photo_attributes},
          {"photo_noise", photo_noise}};
}

ToyDatasetSpec ToyDatasetSpec::from_json(const nlohmann::json& j) {
  ToyDatasetSpec s;
  s.count = j.value("count", s.count);
  s.image_size = j.value("image_size", s.image_size);
  s.seed = j.value("seed", s.seed);
  s.p_blond = j.value("p_blond", s.p_blond);
  s.p_smile = j.value("p_smile", s.p_smile);
  s.p_bright_given_smile = j.value("p_bright_given_smile", s.p_bright_given_smile);
  s.p_bright_given_frown = j.value("p_bright_given_frown", s.p_bright_given_frown);
  s.test_fraction = j.value("test_fraction", s.test_fraction);
  s.independent_photo_attributes =
      j.value("independent_photo_attributes", s.independent_photo_attributes);
  s.photo_noise = j.value("photo_noise", s.photo_noise);
  s.validate();
  return s;
}

nlohmann::json FaceGeometry::to_json() const {
  return {{"cx", cx}, {"cy", cy}, {"rx", rx}, {"ry", ry}};
}

FaceGeometry FaceGeometry::from_json(const nlohmann::json& j) {
  return {j.at("cx").get<double>(), j.at("cy").get<double>(),
          j.at("rx").get<double>(), j.at("ry").get<double>()};
}

AttributeSet to_attribute_set(const ToyAttributes& a) {
  static const char* hair[] = {"Blond", "Black"};
  static const char* bg[] = {"Bright", "Dark"};
  static const char* mouth[] = {"Smile", "Frown"};
  return {{"HairColor", hair[a.hair]}, {"Background", bg[a.background]},
          {"Mouth", mouth[a.mouth]}};
}

ToyAttributes toy_attributes_from(const AttributeSet& s) {
  ToyAttributes a;
  a.hair = s.at("HairColor") == "Black" ? 1 : 0;
  a.background = s.at("Background") == "Dark" ? 1 : 0;
  a.mouth = s.at("Mouth") == "Frown" ? 1 : 0;
  return a;
}

FaceGeometry sample_geometry(Rng& rng) {
  FaceGeometry g;
  g.cx = 0.5 + uniform(rng, -0.06, 0.06);
  g.cy = 0.55 + uniform(rng, -0.05, 0.05);
  g.rx = uniform(rng, 0.2, 0.25);
  g.ry = uniform(rng, 0.27, 0.32);
  return g;
}

ToyAttributes sample_toy_attributes(const ToyDatasetSpec& spec, Rng& rng) {
  ToyAttributes a;
  a.mouth = bernoulli(rng, spec.p_smile) ? 0 : 1;
  const double p_bright = a.mouth == 0 ? spec.p_bright_given_smile : spec.p_bright_given_frown;
  a.background = bernoulli(rng, p_bright) ? 0 : 1;
  a.hair = bernoulli(rng, spec.p_blond) ? 0 : 1;
  return a;
}

RegionMasks region_masks(const FaceGeometry& g, int size) {
  const Layout l = layout(g, size);
  RegionMasks m;
  m.size = size;
  const std::size_t n = static_cast<std::size_t>(size) * size;
  m.hair.assign(n, 0);
  m.background.assign(n, 0);
  m.face.assign(n, 0);
  m.mouth.assign(n, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double px = (x + 0.5) / size, py = (y + 0.5) / size;
      const std::size_t i = static_cast<std::size_t>(y) * size + x;
      const bool face = in_face(g, px, py);
      const bool hair = in_hair(g, l, px, py);
      m.face[i] = face;
      m.hair[i] = hair;
      m.background[i] = !face && !hair;
      m.mouth[i] = std::abs(px - g.cx) <= l.mouth_half_width &&
                   std::abs(py - l.mouth_y) <= l.mouth_amp / 2 + 2 * l.mouth_thickness;
    }
  return m;
}

RenderResult render_face(const FaceGeometry& g, const ToyAttributes& a,
                         RenderStyle style, int size, std::uint64_t texture_seed,
                         double noise) {
  const Palette& pal = style == RenderStyle::kPhoto ? kPhotoPalette : kPortraitPalette;
  const Layout l = layout(g, size);
  Rng rng(texture_seed);
  std::array<double, 3> angle{}, phase{};
  for (int r = 0; r < 3; ++r) {
    angle[r] = uniform(rng, 0.0, std::numbers::pi);
    phase[r] = uniform(rng, 0.0, 2 * std::numbers::pi);
  }
  RenderResult out;
  out.masks = region_masks(g, size);
  out.image = Image(Shape{1, 3, size, size});
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double px = (x + 0.5) / size, py = (y + 0.5) / size;
      const std::size_t i = static_cast<std::size_t>(y) * size + x;
      Rgb c;
      int region;
      if (out.masks.face[i]) {
        c = pal.skin;
        region = 2;
        if (in_eye(g, l, px, py)) c = pal.eyes;
        if (in_mouth(g, l, a.mouth, px, py)) c = pal.mouth;
      } else if (out.masks.hair[i]) {
        c = pal.hair[a.hair];
        region = 1;
      } else {
        c = pal.background[a.background];
        region = 0;
      }
      double shift = 0;
      if (style == RenderStyle::kPortrait) {
        const double u = px * std::cos(angle[region]) + py * std::sin(angle[region]);
        shift = kStrokeAmplitude *
                std::sin(2 * std::numbers::pi * u / kStrokeWavelength + phase[region]);
      }
      for (int ch = 0; ch < 3; ++ch) {
        double v = c[ch] + shift;
        if (noise > 0) v += noise * normal01(rng);
        out.image.at(0, ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return out;
}

ToyMeasurement measure_toy(const Image& img, int n, const FaceGeometry& g) {
  const int size = img.shape().h;
  if (img.shape().w != size || img.shape().c != 3)
    throw ShapeError("measure_toy expects square RGB images");
  const RegionMasks m = region_masks(g, size);
  ToyMeasurement out;
  out.hair_luminance = masked_luminance(img, n, erode(m.hair, size), size);
  out.background_luminance = masked_luminance(img, n, erode(m.background, size), size);

  const Layout l = layout(g, size);
  std::vector<double> lum;
  for (std::size_t i = 0; i < m.mouth.size(); ++i)
    if (m.mouth[i]) lum.push_back(luminance(img, n, static_cast<int>(i) / size,
                                            static_cast<int>(i) % size));
  if (lum.empty()) return out;
  std::nth_element(lum.begin(), lum.begin() + lum.size() / 2, lum.end());
  const double median = lum[lum.size() / 2];
  double center_sum = 0, center_w = 0, corner_sum = 0, corner_w = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      if (!m.mouth[y * size + x]) continue;
      const double d = std::max(0.0, median - luminance(img, n, y, x));
      const double t = std::abs(((x + 0.5) / size - g.cx) / l.mouth_half_width);
      if (t < 1.0 / 3) {
        center_sum += d * y;
        center_w += d;
      } else if (t > 2.0 / 3) {
        corner_sum += d * y;
        corner_w += d;
      }
    }
  if (center_w > 0 && corner_w > 0)
    out.mouth_curvature = center_sum / center_w - corner_sum / corner_w;
  return out;
}

SynthSummary synth_dataset(const ToyDatasetSpec& spec,
                           const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "photos", ec);
  if (!ec) fs::create_directories(out_dir / "portraits", ec);
  if (ec) throw DatasetError("cannot create " + out_dir.string() + ": " + ec.message());

  const int n = spec.count;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(derive_seed(spec.seed, {0x73706c6974}));
  shuffle(order.begin(), order.end(), split_rng);
  const int n_test = static_cast<int>(std::lround(n * spec.test_fraction));
  std::vector<std::string> split(n, "train");
  for (int k = 0; k < n_test; ++k) split[order[k]] = "test";

  std::vector<PairedSample> samples(n);
  std::string failure;
  #pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(i)}));
    const FaceGeometry g = sample_geometry(rng);
    const ToyAttributes a = sample_toy_attributes(spec, rng);
    const ToyAttributes pa = spec.independent_photo_attributes ? sample_toy_attributes(spec, rng) : a;
    const std::uint64_t photo_seed = rng(), portrait_seed = rng();
    PairedSample& s = samples[i];
    s.id = index_id(i);
    s.photo = fs::path("photos") / (s.id + ".png");
    s.portrait = fs::path("portraits") / (s.id + ".png");
    s.attrs = to_attribute_set(a);
    s.photo_attrs = to_attribute_set(pa);
    s.split = split[i];
    s.geometry = g;
    try {
      write_png(out_dir / s.photo, render_face(g, pa, RenderStyle::kPhoto, spec.image_size,
                                               photo_seed, spec.photo_noise).image);
      write_png(out_dir / s.portrait, render_face(g, a, RenderStyle::kPortrait,
                                                  spec.image_size, portrait_seed).image);
    } catch (const std::exception& e) {
      #pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw DatasetError(failure);

  SynthSummary summary;
  summary.count = n;
  summary.test = n_test;
  summary.train = n - n_test;
  summary.manifest = out_dir / "manifest.jsonl";
  write_manifest(summary.manifest, samples);
  write_file_atomic(out_dir / "spec.json", spec.to_json().dump(2) + "\n");
  return summary;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<PairedSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::json j = {{"id", s.id},
                        {"photo", s.photo.generic_string()},
                        {"portrait", s.portrait.generic_string()},
                        {"attrs", attributes_to_json(s.attrs)},
                        {"split", s.split}};
    if (!s.photo_attrs.empty()) j["photo_attrs"] = attributes_to_json(s.photo_attrs);
    if (s.geometry) j["geometry"] = s.geometry->to_json();
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<PairedSample> load_manifest(const std::filesystem::path& path,
                                        const AttributeSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<PairedSample> out;
  std::string line;
  int index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest record " + std::to_string(index);
    try {
      const auto j = nlohmann::json::parse(line);
      PairedSample s;
      s.id = j.value("id", std::to_string(index));
      s.photo = j.at("photo").get<std::string>();
      s.portrait = j.at("portrait").get<std::string>();
      if (s.photo.is_relative()) s.photo = base / s.photo;
      if (s.portrait.is_relative()) s.portrait = base / s.portrait;
      s.attrs = attributes_from_json(j.at("attrs"));
      validate(s.attrs, schema);
      s.split = j.value("split", std::string("train"));
      if (s.split != "train" && s.split != "test")
        throw DatasetError("split must be 'train' or 'test'");
      if (j.contains("photo_attrs")) s.photo_attrs = attributes_from_json(j["photo_attrs"]);
      if (j.contains("geometry")) s.geometry = FaceGeometry::from_json(j["geometry"]);
      for (const auto& p : {s.photo, s.portrait})
        if (!std::filesystem::exists(p)) throw DatasetError("missing file " + p.string());
      out.push_back(std::move(s));
    } catch (const AttributeError& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(where + ": " + e.what());
    }
    ++index;
  }
  return out;
}

std::vector<PairedSample> select_split(const std::vector<PairedSample>& samples,
                                       const std::string& split) {
  std::vector<PairedSample> out;
  for (const auto& s : samples)
    if (s.split == split) out.push_back(s);
  return out;
}

AttributeBagCorpus attribute_corpus(const std::vector<PairedSample>& samples) {
  AttributeBagCorpus corpus;
  for (const auto& s : samples) corpus.push_back(s.attrs);
  return corpus;
}

LoadedImages load_images(const std::vector<PairedSample>& samples, int size) {
  const int n = static_cast<int>(samples.size());
  LoadedImages out;
  out.photos = Tensor<float>(Shape{n, 3, size, size});
  out.portraits = Tensor<float>(Shape{n, 3, size, size});
  std::string failure;
  #pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    try {
      const Image p = preprocess_file(samples[i].photo, size);
      const Image q = preprocess_file(samples[i].portrait, size);
      std::copy(p.data(), p.data() + p.size(), out.photos.sample(i));
      std::copy(q.data(), q.data() + q.size(), out.portraits.sample(i));
    } catch (const std::exception& e) {
      #pragma omp critical
      if (failure.empty())
        failure = "manifest record " + std::to_string(i) + ": " + e.what();
    }
  }
  if (!failure.empty()) throw DatasetError(failure);
  for (const auto& s : samples) out.attrs.push_back(s.attrs);
  return out;
}

}  // namespace attrport
