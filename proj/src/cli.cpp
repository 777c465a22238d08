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

#include "faal/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "faal/checkpoint.hpp"
#include "faal/config.hpp"
#include "faal/data.hpp"
#include "faal/dro.hpp"
#include "faal/errors.hpp"
#include "faal/eval.hpp"
#include "faal/train.hpp"

namespace faal {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  Command command = Command::kTrain;
  std::string config_path;
  std::string out_dir;  // "out" when unset, except for solve
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData load_data(const RunSettings& s, bool need_train) {
  if (s.source == DataSource::kSynthetic) {
    auto split = generate_synthetic(s.synthetic);
    return {std::move(split.train), std::move(split.test)};
  }
  LoadedData out;
  if (need_train) {
    out.train = load_idx(s.idx.train_images, s.idx.train_labels,
                         s.idx.num_classes);
  }
  out.test = load_idx(s.idx.test_images, s.idx.test_labels,
                      s.idx.num_classes ? s.idx.num_classes
                      : need_train
                          ? std::optional<std::size_t>(out.train.num_classes)
                          : std::nullopt);
  out.test.split = Split::kTest;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string summary_line(std::string_view command,
                         const RobustnessReport& report) {
  std::string line = fmt::format("{}: avg_clean={:.4f} worst_clean={:.4f}",
                                 command, report.average_clean,
                                 report.worst_class_clean);
  for (const auto& r : report.robust) {
    line += fmt::format(" avg_robust[{}]={:.4f} worst_robust[{}]={:.4f}",
                        r.attack, r.average, r.attack, r.worst_class);
  }
  return line;
}

json solve_document(const Invocation& inv) {
  std::ifstream in(inv.config_path);
  if (!in) throw ConfigError(fmt::format("cannot read {}", inv.config_path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", inv.config_path, e.what()));
  }
  if (!doc.is_object()) throw ConfigError("solve input must be an object");
  apply_overrides(doc, inv.overrides);
  return doc;
}

int run_solve(const Invocation& inv, std::ostream& out) {
  const json doc = solve_document(inv);
  std::vector<std::string> errors;
  for (const auto& [key, value] : doc.items()) {
    if (key != "losses" && key != "tau" && key != "direction") {
      errors.push_back(fmt::format("{}: unknown key", key));
    }
  }
  ClassMarginVector losses;
  if (!doc.contains("losses") || !doc["losses"].is_array()) {
    errors.push_back("losses: required list of numbers (null marks an absent class)");
  } else {
    for (const auto& v : doc["losses"]) {
      if (v.is_null()) {
        losses.values.emplace_back();
      } else if (v.is_number()) {
        losses.values.emplace_back(v.get<double>());
      } else {
        errors.push_back("losses: entries must be numbers or null");
        break;
      }
    }
  }
  double tau = 0.0;
  if (!doc.contains("tau") || !doc["tau"].is_number()) {
    errors.push_back("tau: required number");
  } else {
    tau = doc["tau"].get<double>();
    if (tau < 0.0) errors.push_back("tau: must be >= 0");
  }
  DivergenceDirection direction = DivergenceDirection::kAnchorFirst;
  if (doc.contains("direction")) {
    try {
      direction = parse_direction(doc["direction"].get<std::string>());
    } catch (const std::exception& e) {
      errors.push_back(fmt::format("direction: {}", e.what()));
    }
  }
  if (losses.num_present() == 0 && doc.contains("losses")) {
    errors.push_back("losses: at least one class must be present");
  }
  if (!errors.empty()) {
    std::string msg = "invalid solve input:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  const CdaWeights w = solve_kl_dro(losses, tau, direction);
  json result = {{"weights", w.weights},
                 {"present", w.present},
                 {"tau", w.tau},
                 {"direction", std::string(to_string(w.direction))},
                 {"achieved_divergence", w.achieved_divergence},
                 {"objective_value", w.objective_value},
                 {"iterations", w.iterations}};
  out << result.dump() << '\n';
  if (!inv.out_dir.empty()) {
    fs::create_directories(inv.out_dir);
    write_text(fs::path(inv.out_dir) / "solution.json", result.dump(2) + "\n");
  }
  return kExitOk;
}

int run_pipeline(const Invocation& inv, std::ostream& out, std::ostream& err) {
  // Everything that can fail as a configuration problem happens before the
  // output directory is touched.
  const RunSettings settings = validate_config(inv.config_path, inv.command,
                                               inv.overrides, inv.seed);
  for (const auto& note : settings.notes) err << "note: " << note << '\n';

  const bool need_train = inv.command != Command::kEval;
  LoadedData data = load_data(settings, need_train);

  const fs::path dir(inv.out_dir.empty() ? "out" : inv.out_dir);
  fs::create_directories(dir);
  write_text(dir / "resolved_config.json", to_json(settings).dump(2) + "\n");

  const std::size_t num_classes =
      need_train ? data.train.num_classes : data.test.num_classes;

  switch (inv.command) {
    case Command::kGenData: {
      write_idx(data.train, dir / "train-images.idx", dir / "train-labels.idx");
      write_idx(data.test, dir / "test-images.idx", dir / "test-labels.idx");
      out << fmt::format("gen-data: {} train / {} test samples, {} classes, "
                         "dim {}\n",
                         data.train.size(), data.test.size(), num_classes,
                         data.train.dim());
      return kExitOk;
    }
    case Command::kTrain:
    case Command::kFinetune: {
      TrainResult result = [&] {
        if (inv.command == Command::kTrain) {
          MlpModel model = make_model(data.train.dim(), settings.hidden,
                                      num_classes, settings.train.seed);
          return train(std::move(model), data.train, settings.train);
        }
        return finetune(load_checkpoint(settings.checkpoint), data.train,
                        settings.train);
      }();
      if (result.fallbacks > 0) {
        err << fmt::format("warning: {} batches fell back to uniform weights\n",
                           result.fallbacks);
      }
      const CheckpointMeta meta{settings.train.epochs, settings.train.seed};
      write_step_log(result.log, num_classes, dir / "step_log.csv");
      save_checkpoint(result.model, meta, dir / "model_final.json");
      save_checkpoint(result.ema_model, meta, dir / "model_ema.json");
      const RobustnessReport report =
          evaluate(result.model, data.test, settings.attacks);
      write_report(report, dir / "report.csv");
      write_report(evaluate(result.ema_model, data.test, settings.attacks),
                   dir / "report_ema.csv");
      out << summary_line(to_string(inv.command), report) << '\n';
      return kExitOk;
    }
    case Command::kEval: {
      const Checkpoint ckpt = load_checkpoint(settings.checkpoint);
      const RobustnessReport report =
          evaluate(ckpt.model, data.test, settings.attacks);
      write_report(report, dir / "report.csv");

      // Dominance probe at the final radius of the schedule, on attacked
      // margins when the run attacks at all.
      const double tau = settings.train.tau_schedule.back().value;
      ProbeOptions opts;
      if (settings.train.attack.epsilon > 0.0) opts.attack = settings.train.attack;
      SeededRng rng(settings.train.seed);
      const ProbeResult probe = theorem1_probe(ckpt.model, data.test, tau,
                                               settings.probe_trials, rng, opts);
      const json probe_doc = {{"tau", tau},
                              {"trials", probe.trials},
                              {"in_ball_fraction", probe.in_ball_fraction},
                              {"wide_ball_fraction", probe.wide_ball_fraction},
                              {"wide_ball_factor", opts.wide_ball_factor},
                              {"l_faal", probe.l_faal},
                              {"uniform_loss", probe.uniform_loss}};
      write_text(dir / "probe.json", probe_doc.dump(2) + "\n");
      out << summary_line("eval", report) << '\n';
      return kExitOk;
    }
    case Command::kSolve:
      break;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Fairness-aware adversarial training on small MLPs"};
  std::string command;
  Invocation inv;
  app.add_option("command", command,
                 "gen-data | train | finetune | eval | solve")
      ->required();
  app.add_option("--config", inv.config_path, "JSON config file")->required();
  app.add_option("--out", inv.out_dir, "output directory");
  app.add_option("--set", inv.overrides, "dotted key=value override")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "overrides train.seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitConfigError;
  }
  if (seed_opt->count() > 0) inv.seed = seed;

  try {
    inv.command = parse_command(command);
    if (inv.command == Command::kSolve) return run_solve(inv, out);
    return run_pipeline(inv, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace faal
