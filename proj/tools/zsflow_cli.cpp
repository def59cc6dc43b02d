// Copyright 2026 The zsflow Authors.
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

// zsflow command-line front end.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 I/O or malformed
// input data, 4 numerical divergence, 1 anything else.
//
// Configuration precedence, lowest first: built-in preset, the --config file,
// the ZSFLOW_SEED environment variable, then --set overrides in the order given.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "manifest.hpp"

#include "zsflow/data/dataset.hpp"
#include "zsflow/errors.hpp"
#include "zsflow/pipeline/config.hpp"
#include "zsflow/pipeline/gsmflow.hpp"
#include "zsflow/pipeline/model_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zsflow;
using zsflow::cli::FileRecord;
using zsflow::cli::RunManifest;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kDivergence = 4,
};

void log(const std::string& msg) { std::cerr << "[zsflow] " << msg << '\n'; }

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("ZSFLOW_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text(raw);
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.front() == '-') {
    throw ConfigError("ZSFLOW_SEED must be a non-negative integer, got '" + text + "'");
  }
  return value;
}

// "train.mining.eta=0.1": the value is read as JSON when it parses, else as a string.
void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

struct ResolvedConfig {
  std::string preset = "desk";
  std::optional<SynthConfig> synth;
  TrainConfig train;

  json echo() const {
    json doc = {{"preset", preset}, {"train", to_json(train)}};
    if (synth) doc["synth"] = to_json(*synth);
    return doc;
  }
};

ResolvedConfig resolve_config(const fs::path& path, const std::vector<std::string>& overrides,
                              bool need_synth) {
  json doc = parse_json_text(read_text(path), path.string());
  if (!doc.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  if (const auto seed = env_seed()) {
    if (doc.contains("synth") && doc["synth"].is_object()) doc["synth"]["seed"] = *seed;
    if (!doc.contains("train")) doc["train"] = json::object();
    if (doc["train"].is_object()) doc["train"]["seed"] = *seed;
  }
  for (const auto& o : overrides) apply_override(doc, o);

  for (const auto& [key, value] : doc.items()) {
    if (key != "preset" && key != "synth" && key != "train") {
      throw ConfigError("config: unknown section '" + key + "'");
    }
  }
  ResolvedConfig out;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("config: 'preset' must be a string");
    out.preset = doc["preset"].get<std::string>();
  }
  if (out.preset != "desk" && out.preset != "paper") {
    throw ConfigError("config: preset must be 'desk' or 'paper', got '" + out.preset + "'");
  }
  const TrainConfig base = out.preset == "paper" ? TrainConfig{} : TrainConfig::desk_scale();
  out.train = doc.contains("train") ? train_config_from_json(doc["train"], base) : base;
  out.train.validate();
  if (doc.contains("synth")) {
    out.synth = synth_config_from_json(doc["synth"]);
    out.synth->validate();
  } else if (need_synth) {
    throw ConfigError("config: missing 'synth' section");
  }
  return out;
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  const fs::path bin = dir / "features.zsf";
  return {fs::exists(bin) ? bin : dir / "features.csv", dir / "attributes.csv", dir / "split.json"};
}

class RunRecorder {
 public:
  RunRecorder(std::string command, const std::vector<std::string>& argv)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.argv = argv;
  }

  void config(json cfg, std::uint64_t seed) {
    manifest_.config = std::move(cfg);
    manifest_.seed = seed;
  }
  void input(const fs::path& p) { manifest_.files.push_back(cli::record_file("input", p)); }
  void output(const fs::path& p) { manifest_.files.push_back(cli::record_file("output", p)); }

  fs::path finish(const fs::path& path, bool verify) {
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    cli::write_manifest(manifest_, path);
    if (verify) {
      for (const auto& r : cli::verify_manifest(path)) {
        if (!r.ok) throw IoError("verification failed for " + r.path.string());
      }
      log("verified " + std::to_string(manifest_.files.size()) + " files");
    }
    return path;
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

fs::path sidecar(const fs::path& artifact, const std::string& suffix) {
  fs::path p = artifact;
  p.replace_extension(suffix);
  return p;
}

// ---- commands ----------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  bool verify = false;
};

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  RunRecorder rec("synth", argv);
  const ResolvedConfig cfg = resolve_config(a.config, a.overrides, true);
  rec.config(cfg.echo(), cfg.synth->seed);
  rec.input(a.config);

  const Dataset ds = generate_synthetic(*cfg.synth);
  save_dataset(ds, a.out);
  for (const auto& p : dataset_files(a.out)) rec.output(p);
  const fs::path manifest = rec.finish(fs::path(a.out) / "manifest.json", a.verify);
  log("wrote " + std::to_string(ds.features.rows()) + " samples to " + a.out);

  emit({{"command", "synth"},
        {"out", a.out},
        {"samples", ds.features.rows()},
        {"classes", {{"seen", ds.seen_classes.size()}, {"unseen", ds.unseen_classes.size()}}},
        {"split",
         {{"train_seen", ds.split.train_seen.size()},
          {"test_seen", ds.split.test_seen.size()},
          {"test_unseen", ds.split.test_unseen.size()}}},
        {"manifest", manifest.string()}});
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string log_path;
  std::vector<std::string> overrides;
  bool verify = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  RunRecorder rec("train", argv);
  const ResolvedConfig cfg = resolve_config(a.config, a.overrides, false);
  rec.config(cfg.echo(), cfg.train.seed);
  rec.input(a.config);
  for (const auto& p : dataset_files(a.data)) rec.input(p);

  const Dataset ds = load_dataset(a.data);
  log("training for " + std::to_string(cfg.train.epochs) + " epochs on " +
      std::to_string(ds.split.train_seen.size()) + " seen samples");
  const TrainingRun run = train_gsmflow(ds, cfg.train);

  const fs::path log_path = a.log_path.empty() ? sidecar(a.out, ".log.jsonl") : fs::path(a.log_path);
  save_model(run.model, a.out);
  write_text_atomic(log_path, to_jsonl(run.log));
  rec.output(a.out);
  rec.output(log_path);
  const fs::path manifest = rec.finish(sidecar(a.out, ".manifest.json"), a.verify);

  json mining = nullptr;
  if (run.mining) {
    mining = {{"mined", run.mining->mined},
              {"entropy_before", run.mining->entropy_before},
              {"entropy_after", run.mining->entropy_after}};
  }
  emit({{"command", "train"},
        {"model", a.out},
        {"log", log_path.string()},
        {"epochs", run.log.size()},
        {"final", run.log.empty() ? json(nullptr) : to_json(run.log.back())},
        {"mining", mining},
        {"manifest", manifest.string()}});
  return kOk;
}

struct GenerateArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string config;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  bool verify = false;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
  RunRecorder rec("generate", argv);
  std::uint64_t seed = 0;
  json echo = json::object();
  if (!a.config.empty()) {
    const ResolvedConfig cfg = resolve_config(a.config, {}, false);
    seed = cfg.train.seed;
    echo = cfg.echo();
    rec.input(a.config);
  } else if (const auto env = env_seed()) {
    seed = *env;
  }
  if (a.seed) seed = *a.seed;
  echo["n_per_class"] = a.n;
  rec.config(echo, seed);
  rec.input(a.model);
  for (const auto& p : dataset_files(a.data)) rec.input(p);

  const GsmflowModel model = load_model(a.model);
  const Dataset ds = load_dataset(a.data);
  if (model.flow.d_v() != ds.d_v() || model.embedder.in_dim() != ds.d_a()) {
    throw ConfigError("model expects d_v=" + std::to_string(model.flow.d_v()) + ", d_a=" +
                      std::to_string(model.embedder.in_dim()) + " but the dataset has d_v=" +
                      std::to_string(ds.d_v()) + ", d_a=" + std::to_string(ds.d_a()));
  }
  const LabeledFeatures gen = generate_unseen(model.flow, model.embedder, ds.unseen_attributes(),
                                              ds.unseen_classes, a.n, generation_seed(seed));

  const fs::path out(a.out);
  fs::path tmp = out;
  tmp += ".tmp";
  write_features_csv(tmp, gen.features, gen.labels, ds.d_v());
  std::error_code ec;
  fs::rename(tmp, out, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + out.string() + ": " + ec.message());
  rec.output(out);
  const fs::path manifest = rec.finish(sidecar(out, ".manifest.json"), a.verify);

  emit({{"command", "generate"},
        {"out", a.out},
        {"rows", gen.features.rows()},
        {"n_per_class", a.n},
        {"unseen_classes", ds.unseen_classes},
        {"seed", seed},
        {"manifest", manifest.string()}});
  return kOk;
}

struct EvalArgs {
  std::string data;
  std::string config;
  std::string mode = "gzsl";
  std::string out;
  std::vector<std::string> overrides;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  RunRecorder rec("eval", argv);
  const ResolvedConfig cfg = resolve_config(a.config, a.overrides, false);
  rec.config(cfg.echo(), cfg.train.seed);
  rec.input(a.config);
  for (const auto& p : dataset_files(a.data)) rec.input(p);
  const Dataset ds = load_dataset(a.data);

  json report;
  if (a.mode == "gzsl") {
    report = to_json(run_gzsl(ds, cfg.train), EvalMode::kGzsl);
  } else if (a.mode == "zsl") {
    report = to_json(run_zsl(ds, cfg.train), EvalMode::kZsl);
  } else {
    report = json::object();
    for (const auto& [name, variant] : ablation_variants(cfg.train)) {
      log("ablation: " + name);
      report[name] = to_json(run_gzsl(ds, variant), EvalMode::kGzsl);
    }
  }

  if (!a.out.empty()) {
    write_text_atomic(a.out, report.dump(2) + "\n");
    rec.output(a.out);
    rec.finish(sidecar(a.out, ".manifest.json"), false);
  }
  emit(report);
  return kOk;
}

int cmd_verify(const std::string& manifest_path) {
  const auto results = cli::verify_manifest(manifest_path);
  bool ok = true;
  json files = json::array();
  for (const auto& r : results) {
    ok = ok && r.ok;
    files.push_back({{"path", r.path.string()},
                     {"ok", r.ok},
                     {"expected", r.expected},
                     {"actual", r.actual.empty() ? json(nullptr) : json(r.actual)}});
  }
  emit({{"command", "verify"}, {"manifest", manifest_path}, {"ok", ok}, {"files", files}});
  return ok ? kOk : kIo;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"zsflow: conditional normalizing flows for generalized zero-shot learning"};
  app.set_version_flag("--version", std::string(ZSFLOW_VERSION));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
  s->add_option("--config", synth.config, "JSON config with a 'synth' section")->required();
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--set", synth.overrides, "Override a config key, e.g. synth.seed=3");
  s->add_flag("--verify", synth.verify, "Re-hash outputs after writing");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the flow and write model.json plus a JSONL log");
  t->add_option("--data", train.data, "Dataset directory")->required();
  t->add_option("--config", train.config, "JSON config")->required();
  t->add_option("--out", train.out, "Model file")->required();
  t->add_option("--log", train.log_path, "Training log (default: <out>.log.jsonl)");
  t->add_option("--set", train.overrides, "Override a config key, e.g. train.epochs=10");
  t->add_flag("--verify", train.verify, "Re-hash outputs after writing");

  GenerateArgs gen;
  std::uint64_t gen_seed = 0;
  auto* g = app.add_subcommand("generate", "Synthesize unseen-class features from a trained model");
  g->add_option("--model", gen.model, "Model file")->required();
  g->add_option("--data", gen.data, "Dataset directory (unseen attributes)")->required();
  g->add_option("--n", gen.n, "Samples per unseen class")->required();
  g->add_option("--out", gen.out, "Output features CSV")->required();
  g->add_option("--config", gen.config, "Config whose train.seed is used");
  auto* seed_opt = g->add_option("--seed", gen_seed, "Run seed (overrides config and ZSFLOW_SEED)");
  g->add_flag("--verify", gen.verify, "Re-hash outputs after writing");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Run the pipeline and print an evaluation report");
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--config", eval.config, "JSON config")->required();
  e->add_option("--mode", eval.mode, "gzsl, zsl or ablation")
      ->check(CLI::IsMember({"gzsl", "zsl", "ablation"}));
  e->add_option("--out", eval.out, "Also write the report here, with a manifest");
  e->add_option("--set", eval.overrides, "Override a config key");

  std::string manifest_path;
  auto* v = app.add_subcommand("verify", "Re-hash the files listed in a run manifest");
  v->add_option("--manifest", manifest_path, "Manifest file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_synth(synth, args);
    if (*t) return cmd_train(train, args);
    if (*g) {
      if (*seed_opt) gen.seed = gen_seed;
      return cmd_generate(gen, args);
    }
    if (*e) return cmd_eval(eval, args);
    if (*v) return cmd_verify(manifest_path);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kIo;
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kIo;
  } catch (const DivergenceError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDivergence;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
