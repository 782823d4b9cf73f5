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

// attrport command-line entry point.
//
// Exit codes: 0 success, 2 usage error, 3 data/validation error,
// 4 runtime failure.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "attrport/archive.hpp"
#include "attrport/dataset.hpp"
#include "attrport/embeddings.hpp"
#include "attrport/image_io.hpp"
#include "attrport/metrics.hpp"
#include "attrport/service.hpp"
#include "attrport/training.hpp"

namespace fs = std::filesystem;
using namespace attrport;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  } catch (const ArchiveError& e) {
    throw DatasetError(e.what());
  }
}

/// --schema if given, else schema.json beside the manifest, else the
/// bundled default.
AttributeSchema pick_schema(const std::string& flag, const fs::path& manifest) {
  if (flag == "default") return default_schema();
  if (flag == "toy") return toy_schema();
  if (!flag.empty()) return load_schema_file(flag);
  const fs::path beside = manifest.parent_path() / "schema.json";
  if (fs::exists(beside)) return load_schema_file(beside);
  return default_schema();
}

AttributeSet parse_attrs(const std::vector<std::string>& flags, const AttributeSchema& schema) {
  AttributeSet out;
  for (const auto& f : flags) {
    const auto eq = f.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == f.size())
      throw UsageError("--attr expects type=value, got '" + f + "'");
    auto [type, value] = schema.resolve(f.substr(0, eq), f.substr(eq + 1));
    if (out.count(type)) throw UsageError("--attr given twice for type '" + type + "'");
    out[type] = value;
  }
  return out;
}

int cmd_dataset_synth(const std::string& spec_path, const fs::path& out,
                      std::optional<std::uint64_t> seed) {
  ToyDatasetSpec spec = ToyDatasetSpec::from_json(read_json(spec_path));
  if (seed) spec.seed = *seed;
  const SynthSummary s = synth_dataset(spec, out);
  write_file_atomic(out / "schema.json", toy_schema().to_json().dump(2) + "\n");
  std::cout << nlohmann::json{{"count", s.count},
                              {"train", s.train},
                              {"test", s.test},
                              {"manifest", s.manifest.string()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_embed_train(const fs::path& manifest, const std::string& schema_flag,
                    const SkipGramOptions& opts, const fs::path& out) {
  const AttributeSchema schema = pick_schema(schema_flag, manifest);
  const auto samples = select_split(load_manifest(manifest, schema), "train");
  const SkipGramResult r = train_embeddings(attribute_corpus(samples), schema, opts);
  save_embeddings(r.table, out);
  std::cout << nlohmann::json{{"pairs_per_epoch", r.pairs_per_epoch},
                              {"final_loss", r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()},
                              {"out", out.string()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& manifest, const fs::path& emb_path,
              const std::string& schema_flag, const fs::path& out,
              std::optional<std::uint64_t> seed, const std::string& resume) {
  std::unique_ptr<Trainer> trainer;
  AttributeSchema schema;
  if (!resume.empty()) {
    trainer = load_checkpoint(resume);
    schema = trainer->schema();
  } else {
    schema = pick_schema(schema_flag, manifest);
    TrainConfig cfg = TrainConfig::from_json(read_json(config_path));
    if (seed) cfg.seed = *seed;
    std::optional<EmbeddingTable> table;
    if (!emb_path.empty()) table = load_embeddings(emb_path);
    if (table && table->dim != cfg.generator.embed_dim) cfg.generator.embed_dim = table->dim;
    trainer = std::make_unique<Trainer>(cfg, schema, table ? &*table : nullptr);
  }
  const auto samples = select_split(load_manifest(manifest, schema), "train");
  const TrainingData data =
      make_training_data(load_images(samples, trainer->config().image_size()), schema);
  TrainHooks hooks;
  double l1_sum = 0;
  int l1_count = 0;
  hooks.on_step = [&](const StepRecord& r) {
    l1_sum += r.losses.l1;
    ++l1_count;
  };
  hooks.on_epoch = [&](int epoch) {
    std::cerr << "epoch " << epoch << "/" << trainer->config().epochs << " mean l1 "
              << (l1_count ? l1_sum / l1_count : 0.0) << "\n";
    l1_sum = 0;
    l1_count = 0;
  };
  train(*trainer, data, out, hooks);
  std::cout << nlohmann::json{{"checkpoint", (out / "final").string()},
                              {"model_id", checkpoint_model_id(out / "final")},
                              {"epochs", trainer->epoch()},
                              {"steps", trainer->step()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& manifest, const fs::path& report_path,
             const std::string& split, std::uint64_t seed) {
  const auto model = load_checkpoint(checkpoint);
  const AttributeSchema& schema = model->schema();
  auto samples = load_manifest(manifest, schema);
  if (split != "all") samples = select_split(samples, split);
  if (samples.size() < 2) throw DatasetError("evaluation needs at least 2 samples");
  const LoadedImages images = load_images(samples, model->config().image_size());
  const MetricReport r = evaluate_model(model->generator(), model->discriminator(), schema,
                                        images.photos, images.portraits, images.attrs, 10, seed);
  nlohmann::json doc = r.to_json();
  doc["model_id"] = checkpoint_model_id(checkpoint);
  doc["samples"] = samples.size();
  doc["split"] = split;
  write_file_atomic(report_path, doc.dump(2) + "\n");

  std::printf("%-24s %10s %10s\n", "Attribute", "Generated", "Random");
  for (std::size_t t = 0; t < r.fscore.types.size(); ++t) {
    const auto& g = r.fscore.per_type[t];
    const auto& b = r.random_fscore.per_type[t];
    std::printf("%-24s %10.3f %10.3f\n", r.fscore.types[t].c_str(), g ? *g : 0.0, b ? *b : 0.0);
  }
  std::printf("%-24s %10.3f %10.3f\n", "Average", r.fscore.average, r.random_fscore.average);
  std::printf("IS %.3f +- %.3f (KL %.4f)  FID %.4f\n", r.is.is_mean, r.is.is_std, r.is.kl_mean,
              r.fid);
  return 0;
}

int cmd_generate(const fs::path& checkpoint, const fs::path& photo_path,
                 const std::vector<std::string>& attr_flags, const fs::path& out) {
  const auto model = load_checkpoint(checkpoint);
  const AttributeSet attrs = parse_attrs(attr_flags, model->schema());
  const Image photo = preprocess_file(photo_path, model->config().image_size());
  const Tensor<float> y = model->generator().generate(
      unit_to_signed(photo), SlotBatch{slot_indices(attrs, model->schema())});
  write_png(out, signed_to_unit(y));
  std::cout << nlohmann::json{{"applied_attributes", attributes_to_json(attrs)},
                              {"out", out.string()},
                              {"model_id", checkpoint_model_id(checkpoint)}}
                   .dump()
            << "\n";
  return 0;
}

PortraitService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const fs::path& checkpoint, const std::string& host, int port) {
  PortraitService service;
  service.load(checkpoint);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << checkpoint << " on " << host << ":" << port << "\n";
  const bool ok = service.listen(host, port);
  g_service = nullptr;
  if (!ok) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-conditioned photo-to-portrait generation"};
  app.require_subcommand(1);

  std::string spec_path, schema_flag, config_path, resume, report_split = "test", host = "0.0.0.0";
  fs::path out, manifest, emb_path, checkpoint, report, photo;
  std::uint64_t seed_value = 1;
  std::vector<std::string> attr_flags;
  SkipGramOptions sg;
  int port = 8080;

  auto* synth = app.add_subcommand("dataset-synth", "Render a procedural toy dataset");
  synth->add_option("--spec", spec_path, "Toy dataset spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Output directory")->required();
  auto* synth_seed = synth->add_option("--seed", seed_value, "Override the spec seed");

  auto* embed = app.add_subcommand("embed-train", "Train skip-gram attribute embeddings");
  embed->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  embed->add_option("--dim", sg.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  embed->add_option("--epochs", sg.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  embed->add_option("--negatives", sg.negatives, "Negatives per pair")->check(CLI::NonNegativeNumber);
  embed->add_option("--lr", sg.learning_rate, "Learning rate");
  embed->add_option("--seed", sg.seed, "Random seed");
  embed->add_option("--schema", schema_flag, "Schema file, or 'default' / 'toy'");
  embed->add_option("--out", out, "Output embedding file")->required();

  auto* trn = app.add_subcommand("train", "Adversarial training");
  trn->add_option("--config", config_path, "Training config (JSON)")->check(CLI::ExistingFile);
  trn->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  trn->add_option("--embeddings", emb_path, "Initial attribute embeddings")->check(CLI::ExistingFile);
  trn->add_option("--schema", schema_flag, "Schema file, or 'default' / 'toy'");
  trn->add_option("--out", out, "Output directory")->required();
  auto* train_seed = trn->add_option("--seed", seed_value, "Override the config seed");
  trn->add_option("--resume", resume, "Checkpoint directory to resume from")->check(CLI::ExistingDirectory);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--report", report, "Report output (JSON)")->required();
  ev->add_option("--split", report_split, "train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  ev->add_option("--seed", seed_value, "Seed of the random baseline");

  auto* gen = app.add_subcommand("generate", "Generate one portrait");
  gen->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  gen->add_option("--photo", photo, "Input photo (PNG)")->required()->check(CLI::ExistingFile);
  gen->add_option("--attr", attr_flags, "Attribute as type=value (repeatable)");
  gen->add_option("--out", out, "Output PNG")->required();

  auto* srv = app.add_subcommand("serve", "Run the HTTP service");
  srv->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  srv->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  srv->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth)
      return cmd_dataset_synth(spec_path, out,
                               *synth_seed ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
    if (*embed) return cmd_embed_train(manifest, schema_flag, sg, out);
    if (*trn) {
      if (config_path.empty() && resume.empty())
        throw UsageError("train needs --config or --resume");
      return cmd_train(config_path, manifest, emb_path, schema_flag, out,
                       *train_seed ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                       resume);
    }
    if (*ev) return cmd_eval(checkpoint, manifest, report, report_split, seed_value);
    if (*gen) return cmd_generate(checkpoint, photo, attr_flags, out);
    if (*srv) return cmd_serve(checkpoint, host, port);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const AttributeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ImageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ArchiveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
