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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "zsflow/errors.hpp"
#include "zsflow/flow/losses.hpp"
#include "zsflow/flow/serialize.hpp"
#include "zsflow/pipeline/config.hpp"
#include "zsflow/pipeline/gsmflow.hpp"
#include "zsflow/pipeline/model_io.hpp"

namespace zsflow {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Dataset small_dataset() { return generate_synthetic(SynthConfig{.samples_per_class = 20}); }

TrainConfig small_config() {
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.epochs = 3;
  cfg.n_syn_per_unseen = 20;
  cfg.classifier.epochs = 5;
  cfg.mining.contrastive_epochs = 3;
  return cfg;
}

// ---- configuration ---------------------------------------------------------

TEST(TrainConfig, Defaults) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.batch_size, 256u);
  EXPECT_EQ(cfg.lr, 3e-4);
  EXPECT_EQ(cfg.hidden_dim, 2048u);
  EXPECT_EQ(cfg.n_syn_per_unseen, 300u);
  EXPECT_EQ(cfg.classifier.epochs, 50u);
  const TrainConfig desk = TrainConfig::desk_scale();
  EXPECT_EQ(desk.hidden_dim, 64u);
  EXPECT_EQ(desk.d_g, 32u);
  EXPECT_NO_THROW(desk.validate());
}

TEST(TrainConfig, ValidateRejectsNonPositive) {
  for (auto mutate : std::vector<void (*)(TrainConfig&)>{
           [](TrainConfig& c) { c.batch_size = 0; }, [](TrainConfig& c) { c.lr = 0.0; },
           [](TrainConfig& c) { c.n_layers = 0; }, [](TrainConfig& c) { c.hidden_dim = 0; },
           [](TrainConfig& c) { c.d_g = 0; }, [](TrainConfig& c) { c.lambda_proto = -1.0; },
           [](TrainConfig& c) { c.p_drop = 2.0; }, [](TrainConfig& c) { c.mining.steps = 0; },
           [](TrainConfig& c) { c.mining.cap_fraction = 1.5; }}) {
    TrainConfig cfg = TrainConfig::desk_scale();
    mutate(cfg);
    EXPECT_THROW(cfg.validate(), ConfigError);
  }
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.lambda_proto = 3.0;
  cfg.mining.sign_mode = SignMode::kPaperLiteral;
  cfg.seed = 99;
  const json doc = to_json(cfg);
  EXPECT_EQ(to_json(train_config_from_json(doc, TrainConfig{})), doc);
  EXPECT_EQ(doc["mining"]["K"], 10);
  EXPECT_EQ(doc["L"], 3);
}

TEST(TrainConfig, PartialOverrideKeepsBase) {
  const TrainConfig base = TrainConfig::desk_scale();
  const TrainConfig cfg = train_config_from_json(json{{"epochs", 7}, {"mining", {{"eta", 0.2}}}}, base);
  EXPECT_EQ(cfg.epochs, 7u);
  EXPECT_EQ(cfg.mining.eta, 0.2);
  EXPECT_EQ(cfg.mining.steps, base.mining.steps);
  EXPECT_EQ(cfg.hidden_dim, base.hidden_dim);
}

TEST(TrainConfig, UnknownKeyNamed) {
  try {
    train_config_from_json(json{{"epoch", 7}}, TrainConfig{});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'epoch'"), std::string::npos);
  }
  EXPECT_THROW(train_config_from_json(json{{"lr", "fast"}}, TrainConfig{}), ConfigError);
}

TEST(TrainConfig, SweepRangesRetained) {
  const json r = sweep_ranges();
  EXPECT_EQ(r["lambda_proto"].size(), 5u);
  EXPECT_EQ(r["L"].front(), 1);
  EXPECT_TRUE(r.contains("d_g"));
  EXPECT_TRUE(r.contains("lambda_perturb"));
}

TEST(SynthConfigJson, RoundTripAndMissingField) {
  const SynthConfig cfg{.num_seen = 4, .seed = 3};
  const SynthConfig back = synth_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  json doc = to_json(cfg);
  doc.erase("C_s");
  try {
    synth_config_from_json(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("C_s"), std::string::npos);
  }
}

// ---- metrics ---------------------------------------------------------------

TEST(HarmonicMean, Examples) {
  EXPECT_DOUBLE_EQ(harmonic_mean(0.5, 0.5), 0.5);
  EXPECT_EQ(harmonic_mean(0.9, 0.0), 0.0);
  EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
  const double h = harmonic_mean(0.803, 0.665);
  EXPECT_DOUBLE_EQ(h, 2.0 * 0.803 * 0.665 / (0.803 + 0.665));
  EXPECT_NEAR(h, 0.728, 0.0005);
}

TEST(PerClassAccuracy, Perfect) {
  const std::vector<std::size_t> y = {0, 1, 2, 2};
  const std::vector<std::size_t> classes = {0, 1, 2};
  EXPECT_EQ(per_class_accuracy(y, y, classes).mean, 1.0);
}

TEST(PerClassAccuracy, ClassBalancedMean) {
  std::vector<std::size_t> labels(99, 0);
  labels.push_back(1);
  const std::vector<std::size_t> preds(100, 0);
  const std::vector<std::size_t> classes = {0, 1};
  const PerClassAccuracy acc = per_class_accuracy(preds, labels, classes);
  EXPECT_EQ(acc.mean, 0.5);
  EXPECT_EQ(acc.per_class[0], (ClassAccuracy{0, 1.0}));
  EXPECT_EQ(acc.per_class[1], (ClassAccuracy{1, 0.0}));
}

TEST(PerClassAccuracy, MatchesCountingOracle) {
  Rng rng(17, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    const std::size_t c = 3;
    std::vector<std::size_t> labels = testsupport::random_labels(n, c, rng);
    for (std::size_t k = 0; k < c; ++k) labels[k] = k;  // every class present
    const std::vector<std::size_t> preds = testsupport::random_labels(n, c, rng);
    const std::vector<std::size_t> classes = {0, 1, 2};
    const PerClassAccuracy acc = per_class_accuracy(preds, labels, classes);
    double mean = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      std::size_t hit = 0;
      std::size_t total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != k) continue;
        ++total;
        hit += preds[i] == k;
      }
      const double oracle = static_cast<double>(hit) / static_cast<double>(total);
      EXPECT_EQ(acc.per_class[k].accuracy, oracle);
      mean += oracle;
    }
    EXPECT_EQ(acc.mean, mean / 3.0);
  }
}

TEST(PerClassAccuracy, DuplicatingSamplesKeepsAccuracy) {
  const std::vector<std::size_t> labels = {0, 0, 1, 1, 1};
  const std::vector<std::size_t> preds = {0, 1, 1, 0, 1};
  const std::vector<std::size_t> classes = {0, 1};
  std::vector<std::size_t> l2 = labels;
  std::vector<std::size_t> p2 = preds;
  l2.insert(l2.end(), labels.begin(), labels.end());
  p2.insert(p2.end(), preds.begin(), preds.end());
  EXPECT_EQ(per_class_accuracy(p2, l2, classes).mean, per_class_accuracy(preds, labels, classes).mean);
}

TEST(PerClassAccuracy, EmptyClassRejected) {
  const std::vector<std::size_t> y = {0, 0};
  const std::vector<std::size_t> classes = {0, 1};
  EXPECT_THROW(per_class_accuracy(y, y, classes), InputError);
}

// ---- classifier ------------------------------------------------------------

TEST(Classifier, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_LT(testsupport::classifier_gradient_error(seed), 1e-4) << "seed " << seed;
  }
}

TEST(Classifier, RejectsNonLinearNet) {
  Rng rng(1, 0);
  EXPECT_THROW(Classifier(make_two_layer(2, 3, 2, Activation::kReLU, Activation::kIdentity, rng),
                          {0, 1}),
               ConfigError);
  const std::size_t dims[] = {2, 3};
  const Activation acts[] = {Activation::kIdentity};
  EXPECT_THROW(Classifier(Mlp::zeros(dims, acts), {0, 1}), ConfigError);
}

TEST(Classifier, TiesGoToLowerSlot) {
  const std::size_t dims[] = {2, 3};
  const Activation acts[] = {Activation::kIdentity};
  const Classifier clf(Mlp::zeros(dims, acts), {4, 1, 7});
  EXPECT_EQ(clf.predict(Matrix::from_rows({{1, 2}})), (std::vector<std::size_t>{4}));
  const std::vector<std::size_t> within = {7, 1};
  EXPECT_EQ(clf.predict_within(Matrix::from_rows({{1, 2}}), within), (std::vector<std::size_t>{7}));
}

LabeledFeatures separable_toy() {
  Rng rng(2, 0);
  LabeledFeatures data{Matrix(60, 2), {}};
  for (std::size_t i = 0; i < 60; ++i) {
    const std::size_t y = i % 2;
    data.labels.push_back(y);
    data.features(i, 0) = (y == 0 ? -1.0 : 1.0) + 0.3 * rng.uniform(-1.0, 1.0);
    data.features(i, 1) = rng.normal();
  }
  return data;
}

TEST(Classifier, SeparableToyReachesFullAccuracy) {
  const LabeledFeatures data = separable_toy();
  const auto trained =
      train_classifier(data, {0, 1}, ClassifierConfig{.epochs = 300, .batch_size = 16, .lr = 1e-2}, 4);
  const std::vector<std::size_t> classes = {0, 1};
  EXPECT_EQ(per_class_accuracy(trained.classifier, data.features, data.labels, classes).mean, 1.0);
}

TEST(Classifier, RowOrderDoesNotMatter) {
  const LabeledFeatures data = separable_toy();
  LabeledFeatures reversed{Matrix(data.features.rows(), 2), {}};
  for (std::size_t i = 0; i < data.features.rows(); ++i) {
    const std::size_t src = data.features.rows() - 1 - i;
    std::copy(data.features.row(src).begin(), data.features.row(src).end(), reversed.features.row(i).begin());
    reversed.labels.push_back(data.labels[src]);
  }
  const ClassifierConfig cfg{.epochs = 5, .batch_size = 8};
  EXPECT_EQ(train_classifier(data, {0, 1}, cfg, 9).classifier,
            train_classifier(reversed, {0, 1}, cfg, 9).classifier);
}

TEST(Classifier, LossFallsInFiveEpochWindows) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  const LabeledFeatures data{gather_rows(ds.features, ds.split.train_seen), [&] {
                               std::vector<std::size_t> y;
                               for (std::size_t i : ds.split.train_seen) y.push_back(ds.labels[i]);
                               return y;
                             }()};
  const auto trained = train_classifier(data, ds.seen_classes, ClassifierConfig{}, 0);
  const auto& h = trained.history;
  ASSERT_EQ(h.size(), 50u);
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w + 5 <= h.size(); w += 5) {
    const double avg = std::accumulate(h.begin() + w, h.begin() + w + 5, 0.0) / 5.0;
    EXPECT_LT(avg, last) << "window at epoch " << w;
    last = avg;
  }
}

TEST(Classifier, RejectsLabelOutsideClassSet) {
  const LabeledFeatures data{Matrix::from_rows({{1.0}}), {3}};
  EXPECT_THROW(train_classifier(data, {0, 1}, ClassifierConfig{}, 0), InputError);
}

// ---- evaluation ------------------------------------------------------------

TEST(Evaluate, ConstantSeenPredictionScoresZeroH) {
  const Dataset ds = small_dataset();
  const std::size_t dims[] = {ds.d_v(), ds.num_classes()};
  const Activation acts[] = {Activation::kIdentity};
  Mlp net = Mlp::zeros(dims, acts);
  net.layers()[0].bias[2] = 1.0;
  std::vector<std::size_t> ids(ds.num_classes());
  std::iota(ids.begin(), ids.end(), 0);
  const EvalReport report = evaluate(Classifier(std::move(net), ids), ds);
  EXPECT_EQ(report.acc_unseen, 0.0);
  EXPECT_EQ(report.harmonic_mean, 0.0);
  EXPECT_DOUBLE_EQ(report.acc_seen, 0.1);
}

TEST(Evaluate, RestrictedArgmaxNeverHurtsUnseen) {
  const Dataset ds = small_dataset();
  std::vector<std::size_t> ids(ds.num_classes());
  std::iota(ids.begin(), ids.end(), 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 0);
    const EvalReport r = evaluate(Classifier::random(ds.d_v(), ids, rng), ds);
    EXPECT_GE(r.zsl_t1, r.acc_unseen);
    EXPECT_GE(r.acc_seen, 0.0);
    EXPECT_LE(r.acc_seen, 1.0);
  }
}

// ---- generation ------------------------------------------------------------

TEST(Generate, ZeroPerClassIsEmpty) {
  Rng rng(1, 0);
  const FlowModel flow = FlowModel::random(4, 3, 2, 8, 5.0, rng);
  const std::vector<std::size_t> classes = {5, 6};
  const auto out = generate_unseen(flow, SemanticEmbedder::raw(3), Matrix(2, 3), classes, 0, 1);
  EXPECT_EQ(out.features.rows(), 0u);
  EXPECT_TRUE(out.labels.empty());
}

TEST(Generate, IdentityFlowReturnsLatentDraws) {
  const FlowModel flow = FlowModel::identity(3, 2, 2, 4, 5.0);
  const std::vector<std::size_t> classes = {7, 9};
  const auto out = generate_unseen(flow, SemanticEmbedder::raw(2), Matrix::from_rows({{1, 0}, {0, 1}}),
                                   classes, 4, 11);
  ASSERT_EQ(out.features.rows(), 8u);
  for (std::size_t k = 0; k < 2; ++k) {
    Rng rng(11, k + 1);
    for (std::size_t r = 0; r < 4; ++r) {
      EXPECT_EQ(out.labels[k * 4 + r], classes[k]);
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(out.features(k * 4 + r, j), rng.normal());
    }
  }
}

TEST(Generate, RowCountIsNTimesClasses) {
  Rng rng(2, 0);
  const FlowModel flow = FlowModel::random(4, 3, 2, 8, 5.0, rng);
  const std::vector<std::size_t> classes = {0, 1, 2};
  const auto out = generate_unseen(flow, SemanticEmbedder::raw(3),
                                   testsupport::random_matrix(3, 3, rng), classes, 13, 1);
  EXPECT_EQ(out.features.rows(), 39u);
  EXPECT_TRUE(all_finite(out.features.values()));
}

TEST(Generate, ToyModelRecoversClassMeans) {
  const auto toy = testsupport::toy_problem();
  const TrainingRun run = train_gsmflow(toy.ds, testsupport::toy_config());
  const std::vector<std::size_t> classes = {0, 1};
  const auto out = generate_unseen(run.model.flow, run.model.embedder, toy.ds.attributes, classes, 1000, 5);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < 2; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < 1000; ++r) mean += out.features(c * 1000 + r, j) / 1000.0;
      EXPECT_NEAR(mean, toy.means(c, j), 0.15) << "class " << c << " dim " << j;
    }
  }
}

// ---- training --------------------------------------------------------------

TEST(TrainGsmflow, ZeroEpochsReturnsInitialization) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  cfg.mining.enabled = false;
  const TrainingRun run = train_gsmflow(ds, cfg);
  EXPECT_TRUE(run.log.empty());
  Rng embed_rng(cfg.seed, 10);
  const SemanticEmbedder embedder = SemanticEmbedder::relative(ds.seen_attributes(), cfg.d_g, embed_rng);
  Rng flow_rng(cfg.seed, 11);
  const FlowModel flow = FlowModel::random(ds.d_v(), cfg.d_g, cfg.n_layers, cfg.hidden_dim, cfg.s_cap, flow_rng);
  EXPECT_EQ(run.model.embedder, embedder);
  EXPECT_EQ(run.model.flow, flow);
}

TEST(TrainGsmflow, EmptySeenSetRejected) {
  Dataset ds = small_dataset();
  ds.split.test_seen.insert(ds.split.test_seen.end(), ds.split.train_seen.begin(), ds.split.train_seen.end());
  ds.split.train_seen.clear();
  EXPECT_THROW(train_gsmflow(ds, small_config()), InputError);
}

TEST(TrainGsmflow, DivergenceNamesEpoch) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.mining.enabled = false;
  cfg.s_cap = 0.0;
  cfg.lr = 50.0;
  cfg.epochs = 20;
  try {
    train_gsmflow(ds, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(TrainGsmflow, MiningDoublesTrainingSetAndRaisesEntropy) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.mining.contrastive_epochs = TrainConfig{}.mining.contrastive_epochs;
  const TrainingRun run = train_gsmflow(ds, cfg);
  ASSERT_TRUE(run.mining.has_value());
  EXPECT_EQ(run.mining->mined, ds.split.train_seen.size());
  EXPECT_GT(run.mining->entropy_after, run.mining->entropy_before);
  ASSERT_TRUE(run.model.contrastive.has_value());

  TrainConfig half = small_config();
  half.mining.cap_fraction = 0.5;
  EXPECT_EQ(train_gsmflow(ds, half).mining->mined, ds.split.train_seen.size() / 2);
}

TEST(TrainGsmflow, TotalLossDropsByOneNatOverFiftyEpochs) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.mining.enabled = false;
  const TrainingRun run = train_gsmflow(ds, cfg);
  ASSERT_EQ(run.log.size(), 50u);
  EXPECT_LE(run.log.back().total, run.log.front().total - 1.0);
  for (const EpochLog& e : run.log) {
    EXPECT_NEAR(e.total, e.nll + e.prior + cfg.lambda_proto * e.proto, 1e-9 * std::abs(e.total) + 1e-12);
  }
}

double prototype_gap(const TrainingRun& run, const Dataset& ds) {
  const Matrix cond = class_conditions(run.model.embedder, ds.seen_attributes());
  const Matrix centre = flow_generate(run.model.flow, Matrix(cond.rows(), ds.d_v()), cond);
  const Matrix protos = class_prototypes(ds, ds.split.train_seen);
  double total = 0.0;
  for (std::size_t c = 0; c < protos.rows(); ++c) {
    double sq = 0.0;
    for (std::size_t j = 0; j < protos.cols(); ++j) sq += std::pow(centre(c, j) - protos(c, j), 2);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(protos.rows());
}

TEST(TrainGsmflow, PrototypeLossPullsClassCentres) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 10;
  cfg.mining.enabled = false;
  TrainConfig without = cfg;
  without.lambda_proto = 0.0;
  EXPECT_LT(prototype_gap(train_gsmflow(ds, cfg), ds), prototype_gap(train_gsmflow(ds, without), ds));
}

TEST(TrainGsmflow, LogsAsJsonLines) {
  const std::vector<EpochLog> log = {{0, 1.0, 0.1, 0.5, 6.1}, {1, 0.9, 0.1, 0.4, 5.0}};
  std::istringstream lines(to_jsonl(log));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const json doc = json::parse(line);
    EXPECT_EQ(doc["epoch"], n);
    EXPECT_TRUE(doc.contains("nll") && doc.contains("prior") && doc.contains("proto") && doc.contains("total"));
    ++n;
  }
  EXPECT_EQ(n, 2u);
}

// ---- pipeline --------------------------------------------------------------

TEST(Pipeline, ReportSchemas) {
  const Dataset ds = small_dataset();
  const PipelineRun run = run_pipeline(ds, small_config());
  const json gzsl = to_json(run.report, EvalMode::kGzsl);
  for (const char* key : {"acc_seen", "acc_unseen", "harmonic_mean", "zsl_t1", "per_class", "config_echo", "seed"}) {
    EXPECT_TRUE(gzsl.contains(key)) << key;
  }
  EXPECT_EQ(gzsl["per_class"].size(), ds.num_classes());
  EXPECT_TRUE(gzsl["per_class"][0].contains("class_id"));
  EXPECT_EQ(gzsl["config_echo"], to_json(small_config()));

  const json zsl = to_json(run.report, EvalMode::kZsl);
  EXPECT_FALSE(zsl.contains("acc_seen"));
  EXPECT_FALSE(zsl.contains("harmonic_mean"));
  EXPECT_TRUE(zsl.contains("zsl_t1"));
  EXPECT_EQ(zsl["per_class"].size(), ds.unseen_classes.size());
  EXPECT_GE(run.report.zsl_t1, run.report.acc_unseen);
  EXPECT_EQ(run.synthetic.features.rows(), 20u * ds.unseen_classes.size());
}

TEST(Pipeline, Deterministic) {
  const Dataset ds = small_dataset();
  const PipelineRun a = run_pipeline(ds, small_config());
  const PipelineRun b = run_pipeline(ds, small_config());
  EXPECT_EQ(to_json(a.report, EvalMode::kGzsl).dump(), to_json(b.report, EvalMode::kGzsl).dump());
  EXPECT_EQ(model_to_json(a.training.model).dump(), model_to_json(b.training.model).dump());
}

TEST(Pipeline, SeedChangesOutcome) {
  const Dataset ds = small_dataset();
  TrainConfig other = small_config();
  other.seed = 1;
  EXPECT_NE(model_to_json(run_pipeline(ds, small_config()).training.model),
            model_to_json(run_pipeline(ds, other).training.model));
}

TEST(Pipeline, SeenOnlyBaselineHasZeroH) {
  const Dataset ds = small_dataset();
  const EvalReport r = run_seen_only_baseline(ds, small_config());
  EXPECT_EQ(r.acc_unseen, 0.0);
  EXPECT_EQ(r.harmonic_mean, 0.0);
  EXPECT_GT(r.acc_seen, 0.0);
}

TEST(Pipeline, AblationVariants) {
  const auto variants = ablation_variants(TrainConfig::desk_scale());
  std::vector<std::string> names;
  for (const auto& [name, cfg] : variants) names.push_back(name);
  EXPECT_EQ(names.front(), "GSMFlow");
  for (const char* key : {"GSMFlow w/o constraints", "GSMFlow w/o EM", "GSMFlow w/o VP", "GSMFlow w/o RP",
                          "GSMFlow w/o EM&VP"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), key), names.end()) << key;
  }
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  for (const auto& [name, cfg] : variants) {
    if (name == "GSMFlow w/o RP") EXPECT_FALSE(cfg.relative_positioning);
    if (name == "GSMFlow w/o EM") EXPECT_FALSE(cfg.mining.enabled);
    if (name == "GSMFlow w/o VP") EXPECT_FALSE(cfg.perturbation);
    if (name == "GSMFlow w/o constraints") {
      EXPECT_FALSE(cfg.mining.enabled || cfg.perturbation || cfg.relative_positioning);
      EXPECT_EQ(cfg.lambda_proto, 0.0);
    }
  }
}

// ---- model files -----------------------------------------------------------

TEST(ModelIo, RoundTripWithContrastiveNet) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const GsmflowModel model = train_gsmflow(ds, cfg).model;
  ASSERT_TRUE(model.contrastive.has_value());
  EXPECT_EQ(model_from_json(model_to_json(model)), model);

  const fs::path path = fs::temp_directory_path() / "zsflow_model_io_test.json";
  save_model(model, path);
  EXPECT_EQ(load_model(path), model);
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  fs::remove(path);
}

TEST(ModelIo, RawEmbedderRoundTrip) {
  const SemanticEmbedder raw = SemanticEmbedder::raw(5);
  EXPECT_EQ(embedder_from_json(embedder_to_json(raw)), raw);
}

TEST(ModelIo, MismatchedEmbedderRejected) {
  Rng rng(1, 0);
  GsmflowModel model{FlowModel::random(2, 3, 1, 4, 5.0, rng), SemanticEmbedder::raw(4), std::nullopt};
  EXPECT_THROW(model_from_json(model_to_json(model)), ConfigError);
}

TEST(ModelIo, VersionMismatchRejected) {
  Rng rng(1, 0);
  GsmflowModel model{FlowModel::random(2, 3, 1, 4, 5.0, rng), SemanticEmbedder::raw(3), std::nullopt};
  json doc = model_to_json(model);
  doc["format_version"] = kFlowFormatVersion + 1;
  EXPECT_THROW(model_from_json(doc), ConfigError);
}

TEST(ModelIo, FileErrors) {
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
  const fs::path path = fs::temp_directory_path() / "zsflow_model_bad.json";
  write_text_atomic(path, "{not json");
  EXPECT_THROW(load_model(path), ConfigError);
  fs::remove(path);
  EXPECT_THROW(write_text_atomic("/nonexistent/dir/x.json", "{}"), IoError);
}

}  // namespace
}  // namespace zsflow
