// Copyright 2026 The FAAL Desk Authors.
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

// Run configuration: JSON documents, presets, dotted-path overrides. The
// schema is described in docs/config.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faal/data.hpp"
#include "faal/eval.hpp"
#include "faal/train.hpp"

namespace faal {

enum class Command { kGenData, kTrain, kFinetune, kEval, kSolve };

std::string_view to_string(Command c);
Command parse_command(std::string_view s);

enum class DataSource { kSynthetic, kIdx };

struct IdxPaths {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::optional<std::size_t> num_classes;
};

struct RunSettings {
  std::string preset = "none";
  DataSource source = DataSource::kSynthetic;
  SyntheticSpec synthetic;
  IdxPaths idx;
  std::vector<std::size_t> hidden{64, 64};
  TrainConfig train;
  std::vector<NamedAttack> attacks;
  std::size_t probe_trials = 1000;
  std::string checkpoint;
  // Defaults that were filled in and are worth telling the user about.
  std::vector<std::string> notes;
};

// Applies "a.b.c=value" overrides to a raw document. Values parse as JSON
// when they can and fall back to strings. A path whose first segment is a
// key of the "train" section may omit the "train." prefix.
void apply_overrides(nlohmann::json& doc,
                     const std::vector<std::string>& overrides);

// Parses, defaults and range-checks a run document. Collects every problem
// (unknown keys included) and throws one ConfigError listing them all.
RunSettings resolve_run_config(const nlohmann::json& doc, Command command);

// Reads the file, applies overrides and the optional seed, then resolves.
RunSettings validate_config(const std::filesystem::path& path, Command command,
                            const std::vector<std::string>& overrides = {},
                            std::optional<std::uint64_t> seed = std::nullopt);

// Fully resolved document; feeding it back through resolve_run_config
// reproduces the same settings.
nlohmann::json to_json(const RunSettings& settings);

}  // namespace faal
