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

#include "attrport/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "attrport/image_io.hpp"
#include "attrport/random.hpp"

namespace attrport {
namespace {

constexpr double kPosteriorEps = 1e-12;

Eigen::MatrixXd to_matrix(const FeatureSet& f) {
  const Eigen::Index n = static_cast<Eigen::Index>(f.size());
  const Eigen::Index d = static_cast<Eigen::Index>(f.front().size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(f[i].size()) != d)
      throw std::invalid_argument("feature rows have unequal length");
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = f[i][j];
  }
  return m;
}

void moments(const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
  mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
  cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

Tensor<float> slice(const Tensor<float>& t, int begin, int end) {
  Shape s = t.shape();
  s.n = end - begin;
  Tensor<float> out(s);
  const std::size_t per = s.per_sample();
  std::copy(t.sample(begin), t.sample(begin) + per * s.n, out.data());
  return out;
}

std::vector<std::vector<double>> rows_of(const Tensor<float>& t) {
  const int n = t.shape().n;
  const std::size_t per = t.shape().per_sample();
  std::vector<std::vector<double>> out(n);
  for (int i = 0; i < n; ++i) out[i].assign(t.sample(i), t.sample(i) + per);
  return out;
}

}  // namespace

std::vector<double> marginal(const PosteriorMatrix& p) {
  if (p.empty()) throw std::invalid_argument("marginal: empty posterior matrix");
  std::vector<double> q(p.front().size(), 0.0);
  for (const auto& row : p) {
    if (row.size() != q.size()) throw std::invalid_argument("marginal: ragged rows");
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += row[j];
  }
  for (double& v : q) v /= static_cast<double>(p.size());
  return q;
}

InceptionScore inception_score(const PosteriorMatrix& p, int splits) {
  if (splits < 1) throw std::invalid_argument("inception_score: splits must be >= 1");
  if (p.size() < static_cast<std::size_t>(splits))
    throw std::invalid_argument("inception_score: fewer rows than splits");
  InceptionScore out;
  const std::size_t n = p.size();
  std::vector<double> scores;
  for (int k = 0; k < splits; ++k) {
    const std::size_t begin = n * k / splits, end = n * (k + 1) / splits;
    const PosteriorMatrix part(p.begin() + begin, p.begin() + end);
    const std::vector<double> q = marginal(part);
    double kl = 0;
    for (const auto& row : part) {
      double d = 0;
      for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j] > 0) d += row[j] * (std::log(row[j]) - std::log(std::max(q[j], kPosteriorEps)));
      kl += d;
    }
    kl /= static_cast<double>(part.size());
    out.split_kl.push_back(kl);
    scores.push_back(std::exp(kl));
  }
  double mean = 0, kl_mean = 0;
  for (int k = 0; k < splits; ++k) {
    mean += scores[k];
    kl_mean += out.split_kl[k];
  }
  mean /= splits;
  kl_mean /= splits;
  double var = 0;
  for (double s : scores) var += (s - mean) * (s - mean);
  out.is_mean = mean;
  out.is_std = std::sqrt(var / splits);
  out.kl_mean = kl_mean;
  return out;
}

double frechet_distance(const FeatureSet& real, const FeatureSet& gen) {
  if (real.size() < 2 || gen.size() < 2)
    throw std::invalid_argument("frechet_distance: need at least 2 rows per set");
  if (real.front().size() != gen.front().size())
    throw std::invalid_argument("frechet_distance: feature dimension mismatch");
  Eigen::VectorXd mu_r, mu_g;
  Eigen::MatrixXd cov_r, cov_g;
  moments(to_matrix(real), mu_r, cov_r);
  moments(to_matrix(gen), mu_g, cov_g);
  // Tr sqrt(S_r S_g) = Tr sqrt(A S_g A) with A = sqrt(S_r), which is PSD.
  const Eigen::MatrixXd a = psd_sqrt(cov_r);
  const Eigen::MatrixXd m = a * cov_g * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_r - mu_g).squaredNorm() + cov_r.trace() + cov_g.trace() - 2.0 * tr_sqrt;
  return std::max(d, 0.0);
}

nlohmann::json FScoreReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t t = 0; t < types.size(); ++t)
    per[types[t]] = {{"f1", per_type[t] ? nlohmann::json(*per_type[t]) : nlohmann::json()},
                     {"support", support[t]}};
  return {{"per_type", per}, {"average", average}};
}

FScoreReport attribute_fscore(const std::vector<AttributeSet>& predicted,
                              const std::vector<AttributeSet>& truth,
                              const AttributeSchema& schema) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("attribute_fscore: prediction/truth count mismatch");
  FScoreReport r;
  double sum = 0;
  int supported = 0;
  for (const auto& spec : schema.types()) {
    int tp = 0, fp = 0, fn = 0, n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      auto gt = truth[i].find(spec.name);
      if (gt == truth[i].end()) continue;
      ++n;
      auto pr = predicted[i].find(spec.name);
      if (pr == predicted[i].end()) {
        ++fn;
      } else if (pr->second == gt->second) {
        ++tp;
      } else {
        ++fp;
        ++fn;
      }
    }
    r.types.push_back(spec.name);
    r.support.push_back(n);
    if (n == 0) {
      r.per_type.push_back(std::nullopt);
      continue;
    }
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    r.per_type.push_back(f1);
    sum += f1;
    ++supported;
  }
  r.average = supported ? sum / supported : 0.0;
  return r;
}

std::vector<AttributeSet> random_predictions(std::size_t n, const AttributeSchema& schema,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AttributeSet> out(n);
  for (auto& a : out)
    for (const auto& spec : schema.types())
      a[spec.name] = spec.values[uniform_index(rng, spec.values.size())];
  return out;
}

FScoreReport random_baseline_fscore(const std::vector<AttributeSet>& truth,
                                    const AttributeSchema& schema, std::uint64_t seed,
                                    int repeats) {
  if (repeats < 1) throw std::invalid_argument("random_baseline_fscore: repeats must be >= 1");
  FScoreReport mean;
  for (int i = 0; i < repeats; ++i) {
    const FScoreReport one = attribute_fscore(
        random_predictions(truth.size(), schema, derive_seed(seed, {static_cast<std::uint64_t>(i)})),
        truth, schema);
    if (i == 0) {
      mean = one;
      continue;
    }
    for (std::size_t t = 0; t < one.per_type.size(); ++t)
      if (one.per_type[t]) *mean.per_type[t] += *one.per_type[t];
    mean.average += one.average;
  }
  for (auto& f : mean.per_type)
    if (f) *f /= repeats;
  mean.average /= repeats;
  return mean;
}

Tensor<float> generate_images(const Generator<float>& g, const Tensor<float>& photos,
                              const SlotBatch& slots, int batch_size) {
  const int n = photos.shape().n;
  if (static_cast<int>(slots.size()) != n)
    throw std::invalid_argument("generate_images: slot rows do not match photos");
  Tensor<float> out(photos.shape());
  for (int b = 0; b < n; b += batch_size) {
    const int e = std::min(n, b + batch_size);
    const Tensor<float> x = unit_to_signed(slice(photos, b, e));
    const SlotBatch s(slots.begin() + b, slots.begin() + e);
    const Tensor<float> y = g.generate(x, s);
    std::copy(y.data(), y.data() + y.size(), out.sample(b));
  }
  return out;
}

ClassifierOutputs run_classifier(const Discriminator<float>& d, const Tensor<float>& images,
                                 int batch_size) {
  ClassifierOutputs out;
  const int n = images.shape().n;
  for (int b = 0; b < n; b += batch_size) {
    const int e = std::min(n, b + batch_size);
    const auto t = d.forward(slice(images, b, e));
    for (auto& row : rows_of(t.attr_logit)) {
      for (double& v : row) v = 1.0 / (1.0 + std::exp(-v));
      out.attr_probs.push_back(std::move(row));
    }
    for (auto& row : rows_of(t.hidden)) out.features.push_back(std::move(row));
  }
  return out;
}

PosteriorMatrix slot_posteriors(const ClassifierOutputs& c) {
  PosteriorMatrix p = c.attr_probs;
  for (auto& row : p) {
    double s = 0;
    for (double v : row) s += v;
    for (double& v : row) v /= s;
  }
  return p;
}

std::vector<AttributeSet> readout(const ClassifierOutputs& c, const AttributeSchema& schema) {
  std::vector<AttributeSet> out;
  for (const auto& row : c.attr_probs) out.push_back(decode_onehot(row, schema));
  return out;
}

nlohmann::json ComboReport::to_json() const {
  return {{"combo", attributes_to_json(combo)},
          {"reconstruction", reconstruction.to_json()},
          {"is_mean", is.is_mean},
          {"is_std", is.is_std},
          {"is_kl_mean", is.kl_mean},
          {"fid", fid}};
}

ComboReport combo_report(const AttributeSet& combo, const Generator<float>& g,
                         const Discriminator<float>& d, const AttributeSchema& schema,
                         const Tensor<float>& photos, const Tensor<float>& portraits,
                         int is_splits) {
  validate(combo, schema);
  const int n = photos.shape().n;
  const SlotBatch slots(n, slot_indices(combo, schema));
  const Tensor<float> fake = generate_images(g, photos, slots);
  const ClassifierOutputs cf = run_classifier(d, fake);
  const ClassifierOutputs cr = run_classifier(d, unit_to_signed(portraits));
  ComboReport r;
  r.combo = combo;
  r.reconstruction = attribute_fscore(readout(cf, schema),
                                      std::vector<AttributeSet>(n, combo), schema);
  r.is = inception_score(slot_posteriors(cf), std::min(is_splits, n));
  r.fid = frechet_distance(cr.features, cf.features);
  return r;
}

std::pair<ComboReport, ComboReport> affordance_eval(
    const AttributeSet& combo_a, const AttributeSet& combo_b, const Generator<float>& g,
    const Discriminator<float>& d, const AttributeSchema& schema,
    const Tensor<float>& photos, const Tensor<float>& portraits, int is_splits) {
  return {combo_report(combo_a, g, d, schema, photos, portraits, is_splits),
          combo_report(combo_b, g, d, schema, photos, portraits, is_splits)};
}

std::vector<double> interdependency_probe(const std::pair<std::string, std::string>& condition,
                                          const std::string& probe_type,
                                          const Generator<float>& g,
                                          const Discriminator<float>& d,
                                          const AttributeSchema& schema,
                                          const Tensor<float>& photos) {
  if (condition.first == probe_type)
    throw std::invalid_argument("interdependency_probe: condition and probe types must differ");
  const auto found = schema.find_type(probe_type);
  if (!found) throw AttributeError(probe_type, "unknown attribute type '" + probe_type + "'");
  const int probe = *found;
  const AttributeSet cond{{condition.first, condition.second}};
  validate(cond, schema);
  const int n = photos.shape().n;
  const SlotBatch slots(n, slot_indices(cond, schema));
  const ClassifierOutputs c = run_classifier(d, generate_images(g, photos, slots));
  std::vector<double> mass(schema.num_values(probe), 0.0);
  for (const auto& row : c.attr_probs)
    for (int v = 0; v < schema.num_values(probe); ++v) mass[v] += row[schema.slot(probe, v)];
  double total = 0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return mass;
}

nlohmann::json MetricReport::to_json() const {
  return {{"is_mean", is.is_mean},       {"is_std", is.is_std},
          {"is_kl_mean", is.kl_mean},    {"fid", fid},
          {"fscore", fscore.to_json()},  {"random_fscore", random_fscore.to_json()}};
}

std::string MetricReport::flat_table() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "is_mean\t" << is.is_mean << "\n";
  os << "is_std\t" << is.is_std << "\n";
  os << "is_kl_mean\t" << is.kl_mean << "\n";
  os << "fid\t" << fid << "\n";
  for (std::size_t t = 0; t < fscore.types.size(); ++t) {
    os << "fscore." << fscore.types[t] << "\t";
    if (fscore.per_type[t]) os << *fscore.per_type[t]; else os << "n/a";
    os << "\n";
  }
  os << "fscore.average\t" << fscore.average << "\n";
  os << "random_fscore.average\t" << random_fscore.average << "\n";
  return os.str();
}

MetricReport evaluate_model(const Generator<float>& g, const Discriminator<float>& d,
                            const AttributeSchema& schema, const Tensor<float>& photos,
                            const Tensor<float>& portraits,
                            const std::vector<AttributeSet>& attrs, int is_splits,
                            std::uint64_t seed) {
  const int n = photos.shape().n;
  if (static_cast<int>(attrs.size()) != n)
    throw std::invalid_argument("evaluate_model: attribute rows do not match photos");
  SlotBatch slots;
  for (const auto& a : attrs) slots.push_back(slot_indices(a, schema));
  const Tensor<float> fake = generate_images(g, photos, slots);
  const ClassifierOutputs cf = run_classifier(d, fake);
  const ClassifierOutputs cr = run_classifier(d, unit_to_signed(portraits));
  MetricReport r;
  r.is = inception_score(slot_posteriors(cf), std::min(is_splits, n));
  r.fid = frechet_distance(cr.features, cf.features);
  r.fscore = attribute_fscore(readout(cf, schema), attrs, schema);
  r.random_fscore = random_baseline_fscore(attrs, schema, seed);
  return r;
}

}  // namespace attrport
