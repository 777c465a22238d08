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

#include "faal/train.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

namespace faal {
namespace {

void validate_schedule(const Schedule& s, const char* name) {
  if (s.empty()) throw ConfigError(fmt::format("{} is empty", name));
  if (s.front().epoch != 0) {
    throw ConfigError(fmt::format("{} must start at epoch 0", name));
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0 && s[i].epoch <= s[i - 1].epoch) {
      throw ConfigError(fmt::format("{} must be sorted by epoch", name));
    }
    const double v = s[i].value;
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError(
          fmt::format("{} value {} at epoch {} must be finite and >= 0", name,
                      v, s[i].epoch));
    }
  }
}

// Builds a schedule from milestones, letting a later entry replace an
// earlier one at the same epoch (short runs collapse the milestones).
Schedule milestones(std::initializer_list<ScheduleEntry> entries) {
  Schedule out;
  for (const auto& e : entries) {
    if (!out.empty() && out.back().epoch == e.epoch) {
      out.back() = e;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

bool parameters_finite(const MlpModel& model) {
  for (const auto& layer : model.layers()) {
    if (!layer.weight.all_finite() || !layer.bias.all_finite()) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kFaal:
      return "faal";
    case TrainMode::kAtBaseline:
      return "at_baseline";
    case TrainMode::kErm:
      return "erm";
  }
  return "faal";
}

TrainMode parse_mode(std::string_view s) {
  if (s == "faal") return TrainMode::kFaal;
  if (s == "at_baseline") return TrainMode::kAtBaseline;
  if (s == "erm") return TrainMode::kErm;
  throw ConfigError(fmt::format("unknown train mode '{}'", s));
}

double schedule_value(const Schedule& schedule, std::size_t epoch) {
  if (schedule.empty()) throw ConfigError("empty schedule");
  double v = schedule.front().value;
  for (const auto& entry : schedule) {
    if (entry.epoch <= epoch) v = entry.value;
  }
  return v;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  validate_schedule(lr_schedule, "lr_schedule");
  validate_schedule(tau_schedule, "tau_schedule");
  try {
    attack.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) {
    throw ConfigError("ema_decay must lie in [0, 1]");
  }
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(sgd.weight_decay >= 0.0) || !std::isfinite(sgd.weight_decay)) {
    throw ConfigError("weight_decay must be >= 0");
  }
}

TrainConfig from_scratch_preset(std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  const std::size_t first = epochs / 2;
  const std::size_t second = (3 * epochs) / 4;
  cfg.lr_schedule = milestones({{0, 0.1}, {first, 0.01}, {second, 0.001}});
  cfg.tau_schedule = milestones({{0, 0.0}, {first, 0.25}, {second, 0.5}});
  cfg.ema_start_epoch = first;
  cfg.mode = TrainMode::kFaal;
  return cfg;
}

TrainConfig finetune_preset() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr_schedule = {{0, 0.01}, {1, 0.001}};
  cfg.tau_schedule = {{0, 0.5}};
  cfg.ema_start_epoch = 0;
  cfg.mode = TrainMode::kFaal;
  return cfg;
}

TrainConfig many_class_preset(std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr_schedule = milestones(
      {{0, 0.1}, {(3 * epochs) / 4, 0.01}, {(9 * epochs) / 10, 0.001}});
  cfg.tau_schedule = {{0, 0.05}};
  cfg.ema_start_epoch = 0;
  cfg.mode = TrainMode::kFaal;
  return cfg;
}

MlpModel make_model(std::size_t input_dim, std::span<const std::size_t> hidden,
                    std::size_t num_classes, std::uint64_t seed) {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(num_classes);
  SeededRng rng(seed ^ 0x5851f42d4c957f2dULL);
  return MlpModel(widths, rng);
}

TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& cfg,
                  std::optional<EmaState> warm_ema) {
  cfg.validate();
  if (data.dim() != model.input_dim() ||
      data.num_classes != model.num_classes()) {
    throw DimensionError(fmt::format(
        "train: data is {} features / {} classes, model is {} / {}",
        data.dim(), data.num_classes, model.input_dim(), model.num_classes()));
  }
  if (data.size() == 0) throw DomainError("train: empty dataset");

  SeededRng root(cfg.seed);
  SeededRng batch_rng = root.split();
  SeededRng attack_rng = root.split();
  Sgd optimizer(cfg.sgd);
  std::optional<EmaState> ema = std::move(warm_ema);
  TrainResult result{model, model, false, {}, 0};

  const std::size_t num_classes = data.num_classes;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_value(cfg.lr_schedule, epoch);
    const double tau = cfg.mode == TrainMode::kFaal
                           ? schedule_value(cfg.tau_schedule, epoch)
                           : 0.0;
    const bool ema_on = epoch >= cfg.ema_start_epoch;
    if (ema_on && !ema) {
      ema = EmaState::start(model, cfg.ema_decay, cfg.ema_start_epoch);
    }

    const auto epoch_batches = batches(data, cfg.batch_size, batch_rng);
    for (std::size_t b = 0; b < epoch_batches.size(); ++b) {
      const Batch& batch = epoch_batches[b];
      const std::size_t batch_n = batch.y.size();

      StepRecord rec;
      rec.epoch = epoch;
      rec.batch = b;
      rec.tau = tau;

      // Phase 1: inner maximization. Overflow inside the network means the
      // parameters have blown up.
      DenseMatrix x_adv;
      ForwardPass pass;
      try {
        x_adv = cfg.mode == TrainMode::kErm
                    ? batch.x
                    : pgd_attack(model, batch.x, batch.y, cfg.attack,
                                 &attack_rng);
        pass = forward(model, x_adv);
      } catch (const DomainError& e) {
        throw TrainingDiverged(
            fmt::format("epoch {} batch {}: {}", epoch, b, e.what()), rec);
      }

      // Phase 2: intermediate maximization.
      const std::vector<double> ce = ce_loss_per_sample(pass.softmax, batch.y);
      CdaWeights w;
      const ClassMarginVector margins =
          cw_margin_per_class(pass.softmax, batch.y, num_classes);
      if (cfg.mode == TrainMode::kFaal) {
        try {
          w = solve_kl_dro(margins, tau, cfg.direction);
        } catch (const Error& e) {
          std::cerr << fmt::format(
              "warning: epoch {} batch {}: class-weight solve failed ({}); "
              "using uniform weights\n",
              epoch, b, e.what());
          w = solve_kl_dro(margins, 0.0, cfg.direction);
          w.tau = tau;
          rec.fallback = true;
          ++result.fallbacks;
        }
      } else {
        w = solve_kl_dro(margins, 0.0, cfg.direction);
      }
      rec.weights = w.weights;
      rec.present = w.present;
      rec.achieved_divergence = w.achieved_divergence;
      rec.dro_objective = w.objective_value;

      // Phase 3: outer minimization.
      std::vector<double> sample_w = expand_to_sample_weights(w, batch.y);
      const double inv_b = 1.0 / static_cast<double>(batch_n);
      double loss = 0.0;
      for (std::size_t i = 0; i < batch_n; ++i) {
        sample_w[i] *= inv_b;
        loss += sample_w[i] * ce[i];
      }
      rec.batch_loss = loss;
      if (!std::isfinite(loss)) {
        throw TrainingDiverged(
            fmt::format("non-finite batch loss at epoch {} batch {}", epoch, b),
            rec);
      }
      backprop(model, pass, ce_logit_grad(pass.softmax, batch.y, sample_w));
      optimizer.step(model, lr);
      if (!parameters_finite(model)) {
        throw TrainingDiverged(
            fmt::format("non-finite parameters after epoch {} batch {}", epoch,
                        b),
            rec);
      }
      if (ema_on) ema_update(*ema, model);
      result.log.push_back(std::move(rec));
    }
  }

  result.model = model;
  if (ema) {
    result.ema_model = ema->shadow;
    result.ema_active = true;
  } else {
    result.ema_model = model;
  }
  return result;
}

TrainResult finetune(const Checkpoint& checkpoint, const Dataset& data,
                     const TrainConfig& cfg) {
  const MlpModel& model = checkpoint.model;
  if (model.input_dim() != data.dim() ||
      model.num_classes() != data.num_classes) {
    throw FormatError(fmt::format(
        "checkpoint architecture ({} inputs, {} classes) does not match data "
        "({} features, {} classes)",
        model.input_dim(), model.num_classes(), data.dim(), data.num_classes));
  }
  return train(model, data, cfg,
               EmaState::start(model, cfg.ema_decay, cfg.ema_start_epoch));
}

void write_step_log(const std::vector<StepRecord>& log,
                    std::size_t num_classes,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "epoch,batch,tau,L_faal,achieved_divergence";
  for (std::size_t c = 0; c < num_classes; ++c) out << ",w_" << c;
  out << '\n';
  for (const auto& r : log) {
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g}", r.epoch, r.batch,
                       r.tau, r.batch_loss, r.achieved_divergence);
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (c < r.weights.size() && r.present[c]) {
        out << fmt::format(",{:.17g}", r.weights[c]);
      } else {
        out << ',';
      }
    }
    out << '\n';
  }
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

}  // namespace faal
