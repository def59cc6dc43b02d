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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace zsflow::cli {

// Lower-case hex SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);

struct FileRecord {
  std::string role;  // "input" or "output"
  std::filesystem::path path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

FileRecord record_file(const std::string& role, const std::filesystem::path& path);

// Everything needed to repeat a run: the resolved configuration, the seed,
// the command line and the hashes of every file read or written.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<FileRecord> files;
  double duration_seconds = 0.0;
};

nlohmann::json to_json(const RunManifest& manifest);

// Atomic write (temporary file, then rename).
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

struct VerifyResult {
  std::filesystem::path path;
  std::string expected;
  std::string actual;  // empty when the file is missing
  bool ok = false;
};

// Re-hashes every file listed in a manifest. Paths are taken as recorded.
std::vector<VerifyResult> verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace zsflow::cli
