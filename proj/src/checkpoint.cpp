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

#include <map>

#include "attrport/archive.hpp"
#include "attrport/hashing.hpp"
#include "attrport/training.hpp"

namespace attrport {
namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kParamsName = "params.bin";

NamedArray to_array(const std::string& name, const Tensor<float>& t) {
  return {name, t.shape(), std::vector<float>(t.data(), t.data() + t.size())};
}

void append_params(std::vector<NamedArray>& out, const ParamList<float>& params,
                   const Adam<float>& opt, const std::string& opt_prefix) {
  for (const Param<float>* p : params) out.push_back(to_array(p->name, p->value));
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(to_array(opt_prefix + "/m/" + params[i]->name, opt.first_moments()[i]));
    out.push_back(to_array(opt_prefix + "/v/" + params[i]->name, opt.second_moments()[i]));
  }
}

Tensor<float> take(std::map<std::string, NamedArray>& arrays, const std::string& name,
                   Shape shape) {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw CheckpointError("checkpoint is missing array '" + name + "'");
  if (!(it->second.shape == shape))
    throw CheckpointError("array '" + name + "' has shape " + to_string(it->second.shape) +
                          ", model expects " + to_string(shape));
  Tensor<float> t(shape);
  std::copy(it->second.values.begin(), it->second.values.end(), t.data());
  arrays.erase(it);
  return t;
}

void restore_params(std::map<std::string, NamedArray>& arrays, ParamList<float> params,
                    Adam<float>& opt, const std::string& opt_prefix, std::int64_t opt_steps) {
  std::vector<Tensor<float>> m, v;
  for (Param<float>* p : params) {
    p->value = take(arrays, p->name, p->value.shape());
    p->zero_grad();
    m.push_back(take(arrays, opt_prefix + "/m/" + p->name, p->value.shape()));
    v.push_back(take(arrays, opt_prefix + "/v/" + p->name, p->value.shape()));
  }
  opt.restore(std::move(m), std::move(v), opt_steps);
}

}  // namespace

void save_checkpoint(const Trainer& trainer, const std::filesystem::path& dir) {
  auto& t = const_cast<Trainer&>(trainer);
  std::filesystem::create_directories(dir);
  std::vector<NamedArray> arrays;
  append_params(arrays, t.generator().parameters(), t.optimizer_g(), "adam_g");
  append_params(arrays, t.discriminator().parameters(), t.optimizer_d(), "adam_d");
  write_array_archive(dir / kParamsName, arrays);
  const std::string params_bytes = read_file(dir / kParamsName);

  const TrainConfig& cfg = trainer.config();
  nlohmann::json manifest = {
      {"format", "attrport-checkpoint"},
      {"version", kCheckpointVersion},
      {"train_config", cfg.to_json()},
      {"generator", cfg.generator.to_json()},
      {"discriminator", cfg.discriminator.to_json()},
      {"schema", trainer.schema().to_json()},
      {"schema_hash", trainer.schema().hash()},
      {"epoch", trainer.epoch()},
      {"step", trainer.step()},
      {"lambdas", cfg.weights.to_json()},
      {"seed", cfg.seed},
      {"rng", {{"scheme", "derived"}, {"seed", cfg.seed}}},
      {"optimizer_steps", {{"generator", trainer.optimizer_g().steps()},
                           {"discriminator", trainer.optimizer_d().steps()}}},
      {"params", kParamsName},
      {"params_sha256", sha256_hex(params_bytes)}};
  write_file_atomic(dir / kManifestName, manifest.dump(2) + "\n");
}

std::string checkpoint_model_id(const std::filesystem::path& dir) {
  try {
    return sha256_hex(read_file(dir / kManifestName));
  } catch (const ArchiveError& e) {
    throw CheckpointError(e.what());
  }
}

std::unique_ptr<Trainer> load_checkpoint(const std::filesystem::path& dir,
                                         const AttributeSchema* expected) {
  nlohmann::json manifest;
  std::string params_bytes;
  try {
    manifest = nlohmann::json::parse(read_file(dir / kManifestName));
    params_bytes = read_file(dir / kParamsName);
  } catch (const ArchiveError& e) {
    throw CheckpointError(std::string("cannot read checkpoint: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  try {
    if (manifest.value("format", "") != "attrport-checkpoint")
      throw CheckpointError("not a checkpoint manifest");
    const int version = manifest.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    if (manifest.at("params_sha256").get<std::string>() != sha256_hex(params_bytes))
      throw CheckpointError("parameter archive does not match its manifest hash");
    const AttributeSchema schema = schema_from_json(manifest.at("schema"));
    if (schema.hash() != manifest.at("schema_hash").get<std::string>())
      throw CheckpointError("checkpoint schema does not match its recorded hash");
    if (expected && expected->hash() != schema.hash())
      throw CheckpointError("schema hash mismatch: checkpoint " + schema.hash() +
                            ", expected " + expected->hash());
    const TrainConfig cfg = TrainConfig::from_json(manifest.at("train_config"));
    auto trainer = std::make_unique<Trainer>(cfg, schema);
    std::map<std::string, NamedArray> arrays;
    for (auto& a : read_array_archive(dir / kParamsName)) {
      std::string name = a.name;
      if (!arrays.emplace(name, std::move(a)).second)
        throw CheckpointError("duplicate array '" + name + "'");
    }
    const auto& steps = manifest.at("optimizer_steps");
    restore_params(arrays, trainer->generator().parameters(), trainer->optimizer_g(),
                   "adam_g", steps.at("generator").get<std::int64_t>());
    restore_params(arrays, trainer->discriminator().parameters(), trainer->optimizer_d(),
                   "adam_d", steps.at("discriminator").get<std::int64_t>());
    if (!arrays.empty())
      throw CheckpointError("unexpected array '" + arrays.begin()->first + "'");
    trainer->set_counters(manifest.at("epoch").get<int>(),
                          manifest.at("step").get<std::int64_t>());
    return trainer;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
  } catch (const ArchiveError& e) {
    throw CheckpointError(std::string("corrupt parameter archive: ") + e.what());
  } catch (const SchemaError& e) {
    throw CheckpointError(std::string("invalid checkpoint schema: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

}  // namespace attrport
