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

// Fairness-aware adversarial training. Every batch runs three phases:
//
//   1. inner maximization   x_adv = PGD(x, y)
//   2. intermediate max     per-class CW margins on x_adv -> class weights w
//                           from the KL-ball solver at the current tau
//   3. outer minimization   L = (1/B) sum_i w[y_i] * m * ce_i,  SGD step
//
// m is the number of classes present in the batch, so tau = 0 (uniform w)
// gives exactly the plain mean cross-entropy of adversarial training.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "faal/attack.hpp"
#include "faal/checkpoint.hpp"
#include "faal/data.hpp"
#include "faal/dro.hpp"
#include "faal/errors.hpp"
#include "faal/nn.hpp"

namespace faal {

enum class TrainMode { kFaal, kAtBaseline, kErm };

std::string_view to_string(TrainMode m);
TrainMode parse_mode(std::string_view s);  // "faal" | "at_baseline" | "erm"

// Piecewise-constant schedule; the value at epoch e is the one attached to
// the last entry with entry.epoch <= e.
struct ScheduleEntry {
  std::size_t epoch = 0;
  double value = 0.0;
  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};
using Schedule = std::vector<ScheduleEntry>;

double schedule_value(const Schedule& schedule, std::size_t epoch);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  Schedule lr_schedule{{0, 0.1}};
  Schedule tau_schedule{{0, 0.5}};
  AttackConfig attack;
  double ema_decay = 0.999;
  std::size_t ema_start_epoch = 0;
  TrainMode mode = TrainMode::kFaal;
  std::uint64_t seed = 0;
  DivergenceDirection direction = DivergenceDirection::kAnchorFirst;
  SgdOptions sgd;

  // Throws ConfigError: empty or unsorted schedules, negative tau or lr,
  // zero epochs or batch size, invalid attack or EMA decay.
  void validate() const;
};

// From-scratch shape: lr 0.1 decayed x0.1 at 1/2 and 3/4 of the run; the
// class reweighting starts at the first milestone with tau 0.25 and widens
// to 0.5 at the second; EMA from the first milestone.
TrainConfig from_scratch_preset(std::size_t epochs);
// Two epochs, tau 0.5, lr 0.01 then 0.001, EMA from the start.
TrainConfig finetune_preset();
// Many-class runs: tau 0.05 throughout, lr 0.1 decayed at 3/4 and 9/10.
TrainConfig many_class_preset(std::size_t epochs);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double tau = 0.0;
  double batch_loss = 0.0;  // weighted mean CE of the outer step
  double dro_objective = 0.0;
  double achieved_divergence = 0.0;
  std::vector<double> weights;  // per class, 0 for absent classes
  std::vector<bool> present;
  bool fallback = false;
};

struct TrainResult {
  MlpModel model;
  MlpModel ema_model;  // equals `model` when EMA never became active
  bool ema_active = false;
  std::vector<StepRecord> log;
  std::size_t fallbacks = 0;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, StepRecord record)
      : Error(what), record_(std::move(record)) {}
  const StepRecord& record() const { return record_; }

 private:
  StepRecord record_;
};

// He-initialized network input -> hidden... -> classes. The initialization
// stream is derived from `seed` but independent of the batch-order stream
// that train() derives from the same seed.
MlpModel make_model(std::size_t input_dim, std::span<const std::size_t> hidden,
                    std::size_t num_classes, std::uint64_t seed);

// Runs the configured mode. `warm_ema` seeds the EMA shadow (fine-tuning);
// otherwise the shadow starts from the live model at ema_start_epoch.
// Throws TrainingDiverged, carrying the record of the failing batch, when the
// loss or the parameters stop being finite.
TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& cfg,
                  std::optional<EmaState> warm_ema = std::nullopt);

// Continues training from a checkpoint with EMA warm-started from it.
// Throws FormatError when the checkpoint does not fit the data.
TrainResult finetune(const Checkpoint& checkpoint, const Dataset& data,
                     const TrainConfig& cfg);

// epoch,batch,tau,L_faal,achieved_divergence,w_0..w_{C-1}; the weight field
// of a class absent from the batch is left empty.
void write_step_log(const std::vector<StepRecord>& log,
                    std::size_t num_classes, const std::filesystem::path& path);

}  // namespace faal
