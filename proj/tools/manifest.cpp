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

#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "zsflow/errors.hpp"
#include "zsflow/pipeline/model_io.hpp"

namespace zsflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef ZSFLOW_VERSION
#define ZSFLOW_VERSION "unknown"
#endif

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1) {
      throw IoError("sha256: digest update failed");
    }
  }
  if (in.bad()) throw IoError("failed reading " + path.string());

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw IoError("sha256: digest finalisation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

FileRecord record_file(const std::string& role, const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  return FileRecord{role, path, sha256_file(path), size};
}

json to_json(const RunManifest& manifest) {
  json files = json::array();
  for (const auto& f : manifest.files) {
    files.push_back({{"role", f.role}, {"path", f.path.string()}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  return {{"tool", "zsflow"},
          {"tool_version", ZSFLOW_VERSION},
          {"command", manifest.command},
          {"argv", manifest.argv},
          {"config", manifest.config},
          {"seed", manifest.seed},
          {"files", files},
          {"duration_seconds", manifest.duration_seconds}};
}

void write_manifest(const RunManifest& manifest, const fs::path& path) {
  write_text_atomic(path, to_json(manifest).dump(2) + "\n");
}

std::vector<VerifyResult> verify_manifest(const fs::path& manifest_path) {
  json doc;
  try {
    doc = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  if (!doc.contains("files") || !doc["files"].is_array()) {
    throw ConfigError(manifest_path.string() + ": no 'files' list");
  }
  std::vector<VerifyResult> out;
  for (const auto& f : doc["files"]) {
    VerifyResult r;
    try {
      r.path = f.at("path").get<std::string>();
      r.expected = f.at("sha256").get<std::string>();
    } catch (const json::exception& e) {
      throw ConfigError(manifest_path.string() + ": malformed file entry: " + e.what());
    }
    if (fs::exists(r.path)) r.actual = sha256_file(r.path);
    r.ok = !r.actual.empty() && r.actual == r.expected;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace zsflow::cli
