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

// JSON checkpoints:
//
//   {"layers":[{"w":[[...],...],"b":[...]},...],
//    "meta":{"arch":[in,...,classes],"epoch":E,"seed":S}}
//
// Numbers are written with 17 significant digits, so save -> load is exact
// and save -> load -> save is byte-identical.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "faal/nn.hpp"

namespace faal {

struct CheckpointMeta {
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  MlpModel model;
  CheckpointMeta meta;
};

std::string checkpoint_to_json(const MlpModel& model,
                               const CheckpointMeta& meta);
// Throws FormatError on malformed or inconsistent documents.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const MlpModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace faal
