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

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "zsflow/data/dataset.hpp"
#include "zsflow/errors.hpp"

namespace zsflow {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kBinaryMagic = {'Z', 'S', 'F', '1'};

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                      : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool parse_index(std::string_view s, std::size_t& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

double parse_double(std::string_view s, std::size_t line, const fs::path& path) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InputError(path.string() + ": cannot parse number '" + std::string(s) + "'", line);
  }
  if (!std::isfinite(value)) throw InputError(path.string() + ": non-finite value", line);
  return value;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "ZSF1 I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const fs::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InputError(path.string() + ": truncated ZSF1 file");
  return value;
}

bool has_binary_magic(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  return in.gcount() == 4 && head == kBinaryMagic;
}

std::vector<std::size_t> index_list(const nlohmann::json& doc, const char* key,
                                    const fs::path& path) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw InputError(path.string() + ": missing array '" + key + "'");
  }
  std::vector<std::size_t> out;
  for (const auto& v : doc[key]) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw InputError(path.string() + ": '" + key + "' must hold non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw ConfigError("format_double: conversion failed");
  return {buf.data(), ptr};
}

void write_features_csv(const fs::path& path, const Matrix& features,
                        std::span<const std::size_t> labels, std::size_t d_v) {
  if (features.rows() != labels.size()) throw ConfigError("features csv: one label per row");
  if (features.rows() > 0 && features.cols() != d_v) throw ConfigError("features csv: width mismatch");
  std::ofstream out = open_out(path);
  out << "label";
  for (std::size_t j = 0; j < d_v; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out << labels[r];
    for (double v : features.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  finish(out, path);
}

LabeledFeatures read_features_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file", 1);
  ++line_no;
  const auto header = split_csv(trim(line));
  if (header.empty() || trim(header[0]) != "label") {
    throw InputError(path.string() + ": header must start with 'label'", line_no);
  }
  const std::size_t d_v = header.size() - 1;
  std::vector<double> data;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_csv(view);
    if (fields.size() != d_v + 1) {
      throw InputError(path.string() + ": expected " + std::to_string(d_v + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::size_t label = 0;
    if (!parse_index(fields[0], label)) {
      throw InputError(path.string() + ": bad label '" + std::string(fields[0]) + "'", line_no);
    }
    labels.push_back(label);
    for (std::size_t j = 1; j < fields.size(); ++j) data.push_back(parse_double(fields[j], line_no, path));
  }
  return {Matrix::from_data(labels.size(), d_v, std::move(data)), std::move(labels)};
}

void write_features_binary(const fs::path& path, const LabeledFeatures& table) {
  std::ofstream out = open_out(path, std::ios::binary);
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  put_le<std::uint64_t>(out, table.features.rows());
  put_le<std::uint64_t>(out, table.features.cols());
  for (std::size_t y : table.labels) put_le<std::uint64_t>(out, y);
  for (double v : table.features.values()) put_le<double>(out, v);
  finish(out, path);
}

LabeledFeatures read_features_binary(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  if (!in || head != kBinaryMagic) throw InputError(path.string() + ": missing ZSF1 magic");
  const auto rows = get_le<std::uint64_t>(in, path);
  const auto cols = get_le<std::uint64_t>(in, path);
  LabeledFeatures t;
  t.labels.reserve(rows);
  for (std::uint64_t r = 0; r < rows; ++r) t.labels.push_back(get_le<std::uint64_t>(in, path));
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    const double v = get_le<double>(in, path);
    if (!std::isfinite(v)) {
      throw InputError(path.string() + ": non-finite value in row " + std::to_string(i / cols));
    }
    data.push_back(v);
  }
  t.features = Matrix::from_data(rows, cols, std::move(data));
  return t;
}

void write_attributes_csv(const fs::path& path, const Matrix& attributes) {
  std::ofstream out = open_out(path);
  out << "class";
  for (std::size_t j = 0; j < attributes.cols(); ++j) out << ",a" << j;
  out << '\n';
  for (std::size_t r = 0; r < attributes.rows(); ++r) {
    out << r;
    for (double v : attributes.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  finish(out, path);
}

Matrix read_attributes_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::size_t, std::vector<double>>> rows;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_csv(view);
    std::size_t id = 0;
    if (!parse_index(fields[0], id)) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InputError(path.string() + ": bad class id '" + std::string(fields[0]) + "'", line_no);
    }
    if (fields.size() < 2) throw InputError(path.string() + ": row has no attributes", line_no);
    if (width == 0) width = fields.size() - 1;
    if (fields.size() - 1 != width) {
      throw InputError(path.string() + ": expected " + std::to_string(width) + " attributes, found " +
                           std::to_string(fields.size() - 1),
                       line_no);
    }
    std::vector<double> values;
    for (std::size_t j = 1; j < fields.size(); ++j) values.push_back(parse_double(fields[j], line_no, path));
    rows.emplace_back(id, std::move(values));
  }
  Matrix attrs(rows.size(), width);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [id, values] : rows) {
    if (id >= rows.size() || seen[id]) {
      throw InputError(path.string() + ": class ids must be 0.." + std::to_string(rows.size() - 1) +
                       " each exactly once (got " + std::to_string(id) + ")");
    }
    seen[id] = true;
    std::copy(values.begin(), values.end(), attrs.row(id).begin());
  }
  return attrs;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_features_csv(dir / "features.csv", ds.features, ds.labels, ds.d_v());
  write_attributes_csv(dir / "attributes.csv", ds.attributes);
  const nlohmann::json split = {
      {"seen", ds.seen_classes},           {"unseen", ds.unseen_classes},
      {"train_seen", ds.split.train_seen}, {"test_seen", ds.split.test_seen},
      {"test_unseen", ds.split.test_unseen},
  };
  const fs::path split_path = dir / "split.json";
  std::ofstream out = open_out(split_path);
  out << split.dump() << '\n';
  finish(out, split_path);
}

Dataset load_dataset(const fs::path& features_path, const fs::path& attributes_path,
                     const fs::path& split_path) {
  Dataset ds;
  ds.attributes = read_attributes_csv(attributes_path);

  LabeledFeatures table;
  if (has_binary_magic(features_path)) {
    table = read_features_binary(features_path);
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
      if (table.labels[i] >= ds.attributes.rows()) {
        throw InputError(features_path.string() + ": row " + std::to_string(i) +
                         " references class " + std::to_string(table.labels[i]) +
                         " without an attribute row");
      }
    }
  } else {
    table = read_features_csv(features_path);
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
      if (table.labels[i] >= ds.attributes.rows()) {
        // Line numbers count the header as line 1.
        throw InputError(features_path.string() + ": label " + std::to_string(table.labels[i]) +
                             " has no attribute row (" + std::to_string(ds.attributes.rows()) +
                             " classes)",
                         i + 2);
      }
    }
  }
  ds.features = std::move(table.features);
  ds.labels = std::move(table.labels);

  std::ifstream in = open_in(split_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(split_path.string() + ": " + e.what());
  }
  ds.seen_classes = index_list(doc, "seen", split_path);
  ds.unseen_classes = index_list(doc, "unseen", split_path);
  ds.split.train_seen = index_list(doc, "train_seen", split_path);
  ds.split.test_seen = index_list(doc, "test_seen", split_path);
  ds.split.test_unseen = index_list(doc, "test_unseen", split_path);
  ds.validate();
  return ds;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path bin = dir / "features.zsf";
  const fs::path features = fs::exists(bin) ? bin : dir / "features.csv";
  return load_dataset(features, dir / "attributes.csv", dir / "split.json");
}

}  // namespace zsflow
