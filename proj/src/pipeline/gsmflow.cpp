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

#include "zsflow/pipeline/gsmflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "zsflow/errors.hpp"
#include "zsflow/flow/losses.hpp"
#include "zsflow/numcore/adam.hpp"
#include "zsflow/numcore/rng.hpp"

namespace zsflow {

using nlohmann::json;

namespace {

enum : std::uint64_t {
  kStreamEmbedder = 10,
  kStreamFlow = 11,
  kStreamContrastiveInit = 12,
  kStreamContrastiveTrain = 13,
  kStreamPerturb = 14,
  kStreamShuffle = 15,
  kStreamMiningSubset = 16,
  kStreamGenerate = 17,
  kStreamClassifier = 18,
};

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng(seed, stream).next_u64();
}

double mean_shannon_entropy(const Matrix& scores) {
  double total = 0.0;
  for (std::size_t r = 0; r < scores.rows(); ++r) total += shannon_entropy(scores.row(r));
  return scores.rows() == 0 ? 0.0 : total / static_cast<double>(scores.rows());
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.values().begin(), top.values().end(), out.values().begin());
  std::copy(bottom.values().begin(), bottom.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(top.size()));
  return out;
}

json accuracy_table(const std::vector<ClassAccuracy>& rows) {
  json table = json::array();
  for (const auto& row : rows) table.push_back({{"class_id", row.class_id}, {"accuracy", row.accuracy}});
  return table;
}

LabeledFeatures subset(const Dataset& ds, std::span<const std::size_t> idx) {
  LabeledFeatures out{gather_rows(ds.features, idx), {}};
  for (std::size_t i : idx) out.labels.push_back(ds.labels[i]);
  return out;
}

// weight_decay * 0.5 * |theta|^2 over one map, gradient added to `tape`.
double map_prior(const Mlp& net, double weight_decay, GradTape& tape) {
  if (weight_decay == 0.0) return 0.0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Dense& layer = net.layers()[l];
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
      tape.weight[l].values()[i] += weight_decay * layer.weight.values()[i];
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      tape.bias[l][i] += weight_decay * layer.bias[i];
    }
  }
  return 0.5 * weight_decay * net.squared_parameter_norm();
}

}  // namespace

TrainingRun train_gsmflow(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.seen_classes.empty() || ds.split.train_seen.empty()) {
    throw InputError("training: the seen training set is empty");
  }

  const Matrix seen_attrs = ds.seen_attributes();
  std::vector<std::size_t> slot_of(ds.num_classes(), 0);
  for (std::size_t k = 0; k < ds.seen_classes.size(); ++k) slot_of[ds.seen_classes[k]] = k;

  Matrix train_x = gather_rows(ds.features, ds.split.train_seen);
  std::vector<std::size_t> train_slot;
  for (std::size_t i : ds.split.train_seen) train_slot.push_back(slot_of[ds.labels[i]]);
  const Matrix prototypes = class_prototypes(ds, ds.split.train_seen);

  TrainingRun run;
  Rng embed_rng(cfg.seed, kStreamEmbedder);
  run.model.embedder = cfg.relative_positioning
                           ? SemanticEmbedder::relative(seen_attrs, cfg.d_g, embed_rng)
                           : SemanticEmbedder::raw(ds.d_a());
  Rng flow_rng(cfg.seed, kStreamFlow);
  run.model.flow = FlowModel::random(ds.d_v(), run.model.embedder.out_dim(), cfg.n_layers,
                                     cfg.hidden_dim, cfg.s_cap, flow_rng);

  if (cfg.mining.enabled) {
    Rng cn_rng(cfg.seed, kStreamContrastiveInit);
    ContrastiveNet cn =
        ContrastiveNet::random(ds.d_v(), ds.d_a(), cfg.mining.contrastive_hidden, cn_rng);
    MiningStats stats;
    stats.contrastive_history =
        train_contrastive(cn, train_x, train_slot, seen_attrs,
                          ContrastiveTrainConfig{.epochs = cfg.mining.contrastive_epochs,
                                                 .batch_size = cfg.mining.contrastive_batch,
                                                 .lr = cfg.mining.contrastive_lr,
                                                 .seed = derived_seed(cfg.seed, kStreamContrastiveTrain)});

    std::vector<std::size_t> pick(train_x.rows());
    std::iota(pick.begin(), pick.end(), 0);
    const auto n_mine = static_cast<std::size_t>(
        std::floor(cfg.mining.cap_fraction * static_cast<double>(pick.size())));
    if (n_mine < pick.size()) {
      Rng subset_rng(cfg.seed, kStreamMiningSubset);
      shuffle(pick, subset_rng);
      pick.resize(n_mine);
      std::sort(pick.begin(), pick.end());
    }
    if (n_mine > 0) {
      const Matrix source = gather_rows(train_x, pick);
      std::vector<std::size_t> source_slot;
      for (std::size_t i : pick) source_slot.push_back(train_slot[i]);
      const Matrix mined = mine_boundary(cn, source, source_slot, seen_attrs, cfg.mining_config());
      stats.entropy_before = mean_shannon_entropy(contrastive_scores(cn, source, seen_attrs));
      stats.entropy_after = mean_shannon_entropy(contrastive_scores(cn, mined, seen_attrs));
      stats.mined = n_mine;
      train_x = stack_rows(train_x, mined);
      train_slot.insert(train_slot.end(), source_slot.begin(), source_slot.end());
    }
    run.model.contrastive = std::move(cn);
    run.mining = std::move(stats);
  }

  FlowModel& flow = run.model.flow;
  SemanticEmbedder& embedder = run.model.embedder;
  const bool learn_embedder = embedder.mode() == SemanticEmbedder::Mode::kRelative;
  FlowGrads flow_grads = FlowGrads::like(flow);
  EmbedGrads embed_grads = embedder.make_grads();
  std::vector<ParamSlot> slots;
  append_slots(flow, flow_grads, slots);
  embedder.append_slots(embed_grads, slots);
  Adam adam(AdamOptions{.lr = cfg.lr, .beta1 = cfg.beta1, .beta2 = cfg.beta2});

  const PerturbConfig pcfg = cfg.perturb_config();
  Rng perturb_rng(cfg.seed, kStreamPerturb);
  Rng shuffle_rng(cfg.seed, kStreamShuffle);
  std::vector<std::size_t> order(train_x.rows());
  std::vector<std::size_t> batch_slot;
  const std::size_t n_seen = seen_attrs.rows();
  const std::size_t d_g = embedder.out_dim();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      const Matrix x_epoch = cfg.perturbation ? perturb(train_x, pcfg, perturb_rng) : train_x;
      std::iota(order.begin(), order.end(), 0);
      shuffle(order, shuffle_rng);
      EpochLog entry{.epoch = epoch};
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + start, end - start);
        batch_slot.clear();
        for (std::size_t i : idx) batch_slot.push_back(train_slot[i]);

        flow_grads.zero();
        embed_grads.zero();
        EmbedTrace embed_trace;
        const Matrix cond_all = embedder.embed(seen_attrs, learn_embedder ? &embed_trace : nullptr);
        const Matrix cond = gather_rows(cond_all, batch_slot);
        Matrix grad_cond(idx.size(), d_g);
        Matrix grad_cond_all(n_seen, d_g);

        const double nll = nll_loss_grad(flow, gather_rows(x_epoch, idx), cond, flow_grads,
                                         learn_embedder ? &grad_cond : nullptr);
        const double proto =
            cfg.lambda_proto > 0.0
                ? prototype_loss_grad(flow, prototypes, cond_all, flow_grads,
                                      learn_embedder ? &grad_cond_all : nullptr, cfg.lambda_proto)
                : prototype_loss(flow, prototypes, cond_all);
        double prior = prior_penalty_grad(flow, cfg.weight_decay, flow_grads);
        if (learn_embedder) {
          prior += map_prior(embedder.h_max(), cfg.weight_decay, embed_grads.max);
          prior += map_prior(embedder.h_min(), cfg.weight_decay, embed_grads.min);
          prior += map_prior(embedder.h_med(), cfg.weight_decay, embed_grads.med);
          for (std::size_t b = 0; b < idx.size(); ++b) {
            auto dst = grad_cond_all.row(batch_slot[b]);
            const auto src = grad_cond.row(b);
            for (std::size_t j = 0; j < d_g; ++j) dst[j] += src[j];
          }
          embedder.backward(embed_trace, grad_cond_all, embed_grads);
        }
        adam.step(slots);

        entry.nll += nll;
        entry.prior += prior;
        entry.proto += proto;
        entry.total += nll + prior + cfg.lambda_proto * proto;
        ++batches;
      }
      const auto nb = static_cast<double>(batches);
      entry.nll /= nb;
      entry.prior /= nb;
      entry.proto /= nb;
      entry.total /= nb;
      if (!std::isfinite(entry.total)) throw DivergenceError("non-finite loss");
      run.log.push_back(entry);
    } catch (const DivergenceError& e) {
      throw DivergenceError("flow training diverged at epoch " + std::to_string(epoch) + ": " +
                            e.what());
    }
  }
  return run;
}

Matrix class_conditions(const SemanticEmbedder& embedder, const Matrix& attributes) {
  return embedder.embed(attributes);
}

LabeledFeatures generate_unseen(const FlowModel& flow, const SemanticEmbedder& embedder,
                                const Matrix& unseen_attributes,
                                std::span<const std::size_t> unseen_classes,
                                std::size_t n_per_class, std::uint64_t seed) {
  if (unseen_attributes.rows() != unseen_classes.size()) {
    throw ConfigError("generate: one attribute row per unseen class is required");
  }
  const Matrix cond_all = class_conditions(embedder, unseen_attributes);
  LabeledFeatures out{Matrix(unseen_classes.size() * n_per_class, flow.d_v()), {}};
  out.labels.reserve(out.features.rows());
  for (std::size_t k = 0; k < unseen_classes.size(); ++k) {
    if (n_per_class == 0) break;
    Rng rng(seed, k + 1);
    Matrix z(n_per_class, flow.d_v());
    for (double& v : z.values()) v = rng.normal();
    Matrix cond(n_per_class, cond_all.cols());
    for (std::size_t r = 0; r < n_per_class; ++r) {
      std::copy(cond_all.row(k).begin(), cond_all.row(k).end(), cond.row(r).begin());
    }
    const Matrix x = flow_generate(flow, z, cond);
    std::copy(x.values().begin(), x.values().end(),
              out.features.values().begin() +
                  static_cast<std::ptrdiff_t>(k * n_per_class * flow.d_v()));
    out.labels.insert(out.labels.end(), n_per_class, unseen_classes[k]);
  }
  return out;
}

json to_json(const EvalReport& report, EvalMode mode) {
  if (mode == EvalMode::kZsl) {
    return {{"zsl_t1", report.zsl_t1},
            {"per_class", accuracy_table(report.zsl_per_class)},
            {"config_echo", report.config_echo},
            {"seed", report.seed}};
  }
  return {{"acc_seen", report.acc_seen},
          {"acc_unseen", report.acc_unseen},
          {"harmonic_mean", report.harmonic_mean},
          {"zsl_t1", report.zsl_t1},
          {"per_class", accuracy_table(report.per_class)},
          {"config_echo", report.config_echo},
          {"seed", report.seed}};
}

EvalReport evaluate(const Classifier& clf, const Dataset& ds) {
  const LabeledFeatures seen = subset(ds, ds.split.test_seen);
  const LabeledFeatures unseen = subset(ds, ds.split.test_unseen);
  const PerClassAccuracy s =
      per_class_accuracy(clf.predict(seen.features), seen.labels, ds.seen_classes);
  const PerClassAccuracy u =
      per_class_accuracy(clf.predict(unseen.features), unseen.labels, ds.unseen_classes);
  EvalReport report;
  report.acc_seen = s.mean;
  report.acc_unseen = u.mean;
  report.harmonic_mean = harmonic_mean(s.mean, u.mean);
  report.per_class = s.per_class;
  report.per_class.insert(report.per_class.end(), u.per_class.begin(), u.per_class.end());

  const auto& ids = clf.class_ids();
  const bool covers_unseen = std::all_of(ds.unseen_classes.begin(), ds.unseen_classes.end(),
                                         [&](std::size_t c) {
                                           return std::find(ids.begin(), ids.end(), c) != ids.end();
                                         });
  if (covers_unseen && !ds.unseen_classes.empty()) {
    const PerClassAccuracy t1 = per_class_accuracy(
        clf.predict_within(unseen.features, ds.unseen_classes), unseen.labels, ds.unseen_classes);
    report.zsl_t1 = t1.mean;
    report.zsl_per_class = t1.per_class;
  }
  return report;
}

std::uint64_t generation_seed(std::uint64_t run_seed) {
  return derived_seed(run_seed, kStreamGenerate);
}

PipelineRun run_pipeline(const Dataset& ds, const TrainConfig& cfg) {
  PipelineRun run;
  run.training = train_gsmflow(ds, cfg);
  run.synthetic = generate_unseen(run.training.model.flow, run.training.model.embedder,
                                  ds.unseen_attributes(), ds.unseen_classes, cfg.n_syn_per_unseen,
                                  generation_seed(cfg.seed));
  run.classifier = train_classifier(subset(ds, ds.split.train_seen), run.synthetic,
                                    ds.num_classes(), cfg.classifier,
                                    derived_seed(cfg.seed, kStreamClassifier));
  run.report = evaluate(run.classifier.classifier, ds);
  run.report.config_echo = to_json(cfg);
  run.report.seed = cfg.seed;
  return run;
}

EvalReport run_gzsl(const Dataset& ds, const TrainConfig& cfg) { return run_pipeline(ds, cfg).report; }

EvalReport run_zsl(const Dataset& ds, const TrainConfig& cfg) { return run_pipeline(ds, cfg).report; }

EvalReport run_seen_only_baseline(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const ClassifierTraining trained =
      train_classifier(subset(ds, ds.split.train_seen), ds.seen_classes, cfg.classifier,
                       derived_seed(cfg.seed, kStreamClassifier));
  EvalReport report = evaluate(trained.classifier, ds);
  report.config_echo = to_json(cfg);
  report.seed = cfg.seed;
  return report;
}

std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& cfg) {
  std::vector<std::pair<std::string, TrainConfig>> out;
  auto add = [&](std::string name, bool mining, bool perturbation, bool relative) {
    TrainConfig v = cfg;
    v.mining.enabled = cfg.mining.enabled && mining;
    v.perturbation = cfg.perturbation && perturbation;
    v.relative_positioning = cfg.relative_positioning && relative;
    out.emplace_back(std::move(name), std::move(v));
  };
  add("GSMFlow", true, true, true);
  add("GSMFlow w/o constraints", false, false, false);
  out.back().second.lambda_proto = 0.0;
  add("GSMFlow w/o EM&VP", false, false, true);
  add("GSMFlow w/o EM&RP", false, true, false);
  add("GSMFlow w/o EM", false, true, true);
  add("GSMFlow w/o VP", true, false, true);
  add("GSMFlow w/o RP", true, true, false);
  return out;
}

json to_json(const EpochLog& entry) {
  return {{"epoch", entry.epoch},
          {"nll", entry.nll},
          {"prior", entry.prior},
          {"proto", entry.proto},
          {"total", entry.total}};
}

std::string to_jsonl(std::span<const EpochLog> log) {
  std::ostringstream out;
  for (const auto& entry : log) out << to_json(entry).dump() << '\n';
  return out.str();
}

}  // namespace zsflow
