// Copyright 2026 The qtrack Authors
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

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qtrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCheck = 4;

/// Bumped whenever a CSV column set changes.
inline constexpr int kCsvSchemaVersion = 1;

/// Environment variable holding the default seed.
inline constexpr const char* kSeedEnv = "QTRACK_SEED";

struct Output {
  std::string name;
  std::string content;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::pair<std::string, std::uint64_t>> output_hashes;

  nlohmann::json to_json() const;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<Output> outputs;
  RunManifest manifest;
  /// Diagnostics for stderr.
  std::string message;
  /// Target of --out; empty means stdout.
  std::string out_dir;
};

std::uint64_t fnv1a64(std::string_view data);

/// Runs one command; args exclude the program name. Never throws.
RunResult run(const std::vector<std::string>& args);

/// Writes outputs to result.out_dir (with manifest.json) or to stdout.
int emit(const RunResult& result);

}  // namespace qtrack::cli
