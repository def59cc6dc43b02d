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
#include <limits>
#include <set>

#include "test_support.hpp"
#include "zsflow/data/dataset.hpp"
#include "zsflow/errors.hpp"

namespace zsflow {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("zsflow_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::size_t thrown_line(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InputError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected InputError";
  return 0;
}

TEST(Synthetic, Counts) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  EXPECT_EQ(ds.features.rows(), 1500u);
  EXPECT_EQ(ds.split.train_seen.size(), 800u);
  EXPECT_EQ(ds.split.test_seen.size(), 200u);
  EXPECT_EQ(ds.split.test_unseen.size(), 500u);
  EXPECT_EQ(ds.seen_classes.size(), 10u);
  EXPECT_EQ(ds.unseen_classes.size(), 5u);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Synthetic, SplitCoversEveryIndexOnce) {
  const Dataset ds = generate_synthetic(SynthConfig{.samples_per_class = 7});
  std::vector<int> seen(ds.features.rows(), 0);
  for (const auto* list : {&ds.split.train_seen, &ds.split.test_seen, &ds.split.test_unseen}) {
    for (std::size_t i : *list) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Synthetic, DeterministicInSeed) {
  EXPECT_EQ(generate_synthetic(SynthConfig{}), generate_synthetic(SynthConfig{}));
  EXPECT_NE(generate_synthetic(SynthConfig{}).features,
            generate_synthetic(SynthConfig{.seed = 8}).features);
}

TEST(Synthetic, ZeroSpreadGivesClassMeans) {
  const SynthConfig cfg{.within_class_std = 0.0};
  const Dataset ds = generate_synthetic(cfg);
  const Matrix means = synthetic_class_means(cfg);
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    for (std::size_t j = 0; j < ds.d_v(); ++j) EXPECT_EQ(ds.features(i, j), means(ds.labels[i], j));
  }
}

TEST(Synthetic, AttributesInRange) {
  const Dataset ds = generate_synthetic(SynthConfig{.attr_scale = 2.5});
  for (double a : ds.attributes.values()) {
    EXPECT_GE(a, 0.0);
    EXPECT_LT(a, 2.5);
  }
}

TEST(Synthetic, NearestPrototypeSeparatesTightClasses) {
  const Dataset ds = generate_synthetic(SynthConfig{.map_noise = 0.5, .within_class_std = 0.1});
  const Matrix protos = class_prototypes(ds, ds.split.train_seen);
  std::size_t correct = 0;
  for (std::size_t i : ds.split.train_seen) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < protos.rows(); ++k) {
      double d = 0.0;
      for (std::size_t j = 0; j < ds.d_v(); ++j) {
        const double diff = ds.features(i, j) - protos(k, j);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    correct += ds.seen_classes[best] == ds.labels[i];
  }
  EXPECT_GE(static_cast<double>(correct) / ds.split.train_seen.size(), 0.99);
}

TEST(Synthetic, RejectsBadConfig) {
  EXPECT_THROW(generate_synthetic(SynthConfig{.num_seen = 2}), ConfigError);
  EXPECT_THROW(generate_synthetic(SynthConfig{.num_unseen = 0}), ConfigError);
  EXPECT_THROW(generate_synthetic(SynthConfig{.samples_per_class = 0}), ConfigError);
  EXPECT_THROW(generate_synthetic(SynthConfig{.attr_scale = 0.0}), ConfigError);
}

TEST(Prototypes, SingleSamplePerClass) {
  const Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
  const std::vector<std::size_t> labels = {0, 1};
  const std::vector<std::size_t> over = {0, 1};
  const std::vector<std::size_t> classes = {0, 1};
  EXPECT_EQ(class_prototypes(x, labels, over, classes), x);
}

TEST(Prototypes, TwoSampleMean) {
  const Matrix x = Matrix::from_rows({{0, 0}, {2, 2}});
  const std::vector<std::size_t> labels = {0, 0};
  const std::vector<std::size_t> over = {0, 1};
  const std::vector<std::size_t> classes = {0};
  EXPECT_EQ(class_prototypes(x, labels, over, classes), Matrix::from_rows({{1, 1}}));
}

TEST(Prototypes, MatchesLoopOracle) {
  Rng rng(3, 0);
  const Matrix x = testsupport::random_matrix(60, 4, rng);
  const std::vector<std::size_t> labels = testsupport::random_labels(60, 3, rng);
  std::vector<std::size_t> over;
  for (std::size_t i = 0; i < 60; i += 2) over.push_back(i);
  const std::vector<std::size_t> classes = {2, 0, 1};
  const Matrix protos = class_prototypes(x, labels, over, classes);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (std::size_t j = 0; j < 4; ++j) {
      double sum = 0.0;
      double n = 0.0;
      for (std::size_t i : over) {
        if (labels[i] == classes[k]) {
          sum += x(i, j);
          n += 1.0;
        }
      }
      EXPECT_NEAR(protos(k, j), sum / n, 1e-12);
    }
  }
}

TEST(Prototypes, EmptyClassNamesIt) {
  const Matrix x = Matrix::from_rows({{1.0}});
  const std::vector<std::size_t> labels = {0};
  const std::vector<std::size_t> over = {0};
  const std::vector<std::size_t> classes = {0, 4};
  try {
    class_prototypes(x, labels, over, classes);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("class 4"), std::string::npos);
  }
}

TEST(DatasetIo, CsvRoundTrip) {
  TempDir dir;
  const Dataset ds = generate_synthetic(SynthConfig{.samples_per_class = 10});
  save_dataset(ds, dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "features.csv"));
  EXPECT_EQ(load_dataset(dir.path()), ds);
}

TEST(DatasetIo, CsvHeader) {
  TempDir dir;
  const fs::path p = dir.path() / "f.csv";
  const std::vector<std::size_t> labels = {3};
  write_features_csv(p, Matrix::from_rows({{0.1, -2.0, 1e-300}}), labels, 3);
  std::ifstream in(p);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "label,f0,f1,f2");
  EXPECT_EQ(row, "3,0.1,-2,1e-300");
  const LabeledFeatures back = read_features_csv(p);
  EXPECT_EQ(back.labels, labels);
  EXPECT_EQ(back.features(0, 2), 1e-300);
}

TEST(DatasetIo, HeaderOnlyCsvIsEmpty) {
  TempDir dir;
  const fs::path p = dir.path() / "f.csv";
  write_features_csv(p, Matrix(0, 2), {}, 2);
  const LabeledFeatures back = read_features_csv(p);
  EXPECT_EQ(back.features.rows(), 0u);
  EXPECT_TRUE(back.labels.empty());
}

TEST(DatasetIo, BinaryRoundTripAndDetection) {
  TempDir dir;
  const Dataset ds = generate_synthetic(SynthConfig{.samples_per_class = 5});
  save_dataset(ds, dir.path());
  write_features_binary(dir.path() / "features.zsf", LabeledFeatures{ds.features, ds.labels});
  fs::remove(dir.path() / "features.csv");
  EXPECT_EQ(load_dataset(dir.path()), ds);
}

TEST(DatasetIo, BinaryRejectsTruncation) {
  TempDir dir;
  const fs::path p = dir.path() / "f.zsf";
  write_features_binary(p, LabeledFeatures{Matrix::from_rows({{1, 2}}), {0}});
  fs::resize_file(p, fs::file_size(p) - 4);
  EXPECT_THROW(read_features_binary(p), InputError);
}

TEST(DatasetIo, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset(fs::path("/nonexistent/zsflow")), IoError);
}

TEST(DatasetIo, BadNumberReportsLine) {
  TempDir dir;
  const fs::path p = dir.path() / "f.csv";
  write_file(p, "label,f0,f1\n0,1,2\n1,3,abc\n");
  EXPECT_EQ(thrown_line([&] { read_features_csv(p); }), 3u);
}

TEST(DatasetIo, WrongWidthReportsLine) {
  TempDir dir;
  const fs::path p = dir.path() / "f.csv";
  write_file(p, "label,f0,f1\n0,1\n");
  EXPECT_EQ(thrown_line([&] { read_features_csv(p); }), 2u);
}

TEST(DatasetIo, NonFiniteRejected) {
  TempDir dir;
  const fs::path p = dir.path() / "f.csv";
  write_file(p, "label,f0\n0,nan\n");
  EXPECT_EQ(thrown_line([&] { read_features_csv(p); }), 2u);
}

TEST(DatasetIo, AttributeRaggedRowReportsLine) {
  TempDir dir;
  const fs::path p = dir.path() / "a.csv";
  write_file(p, "0,1,2\n1,3\n");
  EXPECT_EQ(thrown_line([&] { read_attributes_csv(p); }), 2u);
}

class BrokenDataset : public ::testing::Test {
 protected:
  void SetUp() override {
    ds_ = generate_synthetic(SynthConfig{.samples_per_class = 5});
    dir_ = std::make_unique<TempDir>();
    save_dataset(ds_, dir_->path());
  }
  fs::path dir() const { return dir_->path(); }
  Dataset ds_;
  std::unique_ptr<TempDir> dir_;
};

TEST_F(BrokenDataset, SampleInTwoSplitsRejected) {
  ds_.split.test_seen.push_back(ds_.split.train_seen.front());
  save_dataset(ds_, dir());
  EXPECT_THROW(load_dataset(dir()), InputError);
}

TEST_F(BrokenDataset, LabelBeyondAttributesRejectedWithLine) {
  const std::size_t c = ds_.num_classes();
  ds_.labels[3] = c;
  write_features_csv(dir() / "features.csv", ds_.features, ds_.labels, ds_.d_v());
  EXPECT_EQ(thrown_line([&] { load_dataset(dir()); }), 5u);
}

TEST_F(BrokenDataset, OverlappingClassSetsRejected) {
  ds_.unseen_classes.push_back(ds_.seen_classes.front());
  save_dataset(ds_, dir());
  EXPECT_THROW(load_dataset(dir()), InputError);
}

TEST_F(BrokenDataset, WrongSplitRoleRejected) {
  std::swap(ds_.split.test_seen.front(), ds_.split.test_unseen.front());
  save_dataset(ds_, dir());
  EXPECT_THROW(load_dataset(dir()), InputError);
}

TEST_F(BrokenDataset, MalformedSplitJsonRejected) {
  write_file(dir() / "split.json", "{\"seen\": [0, 1");
  EXPECT_THROW(load_dataset(dir()), InputError);
  write_file(dir() / "split.json", "{\"seen\": [0]}");
  EXPECT_THROW(load_dataset(dir()), InputError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-3.0), "-3");
  Rng rng(9, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-20.0, 20.0));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace zsflow
