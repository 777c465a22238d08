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

#include "faal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys = {"preset", "data", "model",
                                             "train", "eval", "checkpoint"};
const std::set<std::string> kTrainKeys = {
    "epochs",          "batch_size", "lr_schedule", "tau_schedule",
    "attack",          "ema_decay",  "ema_start_epoch", "mode",
    "seed",            "divergence_direction", "momentum", "weight_decay"};

// Typed view of one JSON object. Records every problem instead of throwing
// and reports keys nobody asked for.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (obj_ != nullptr && !obj_->is_object()) {
      errors_.push_back(fmt::format("{}: expected an object", path_));
      obj_ = nullptr;
    }
  }

  bool has(const std::string& key) const {
    return obj_ != nullptr && obj_->contains(key);
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &(*obj_)[key];
  }

  Section child(const std::string& key) {
    return Section(raw(key), name(key), errors_);
  }

  template <typename T>
  bool read(const std::string& key, T& out) {
    const json* v = raw(key);
    if (v == nullptr) return false;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer() && !v->is_number_unsigned()) {
          throw std::invalid_argument("expected an integer");
        }
        if (v->is_number_integer() && v->get<long long>() < 0) {
          throw std::invalid_argument("expected a non-negative integer");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("expected a string");
      }
      out = v->get<T>();
      return true;
    } catch (const std::exception& e) {
      error(key, e.what());
      return false;
    }
  }

  bool read_schedule(const std::string& key, Schedule& out) {
    const json* v = raw(key);
    if (v == nullptr) return false;
    Schedule s;
    bool ok = v->is_array() && !v->empty();
    if (ok) {
      for (const auto& entry : *v) {
        if (!entry.is_array() || entry.size() != 2 ||
            !entry[0].is_number_unsigned() || !entry[1].is_number()) {
          ok = false;
          break;
        }
        s.push_back({entry[0].get<std::size_t>(), entry[1].get<double>()});
      }
    }
    if (!ok) {
      error(key, "expected a nonempty list of [epoch, value] pairs");
      return false;
    }
    out = std::move(s);
    return true;
  }

  void error(const std::string& key, const std::string& what) {
    errors_.push_back(fmt::format("{}: {}", name(key), what));
  }

  void finish() {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) errors_.push_back(fmt::format("{}: unknown key", name(key)));
    }
  }

 private:
  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

template <typename Fn>
void guarded(std::vector<std::string>& errors, const std::string& where,
             Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    errors.push_back(fmt::format("{}: {}", where, e.what()));
  }
}

void read_attack(Section s, AttackConfig& cfg) {
  s.read("epsilon", cfg.epsilon);
  s.read("alpha", cfg.alpha);
  s.read("steps", cfg.steps);
  std::string objective;
  if (s.read("objective", objective)) {
    try {
      cfg.objective = parse_objective(objective);
    } catch (const Error& e) {
      s.error("objective", e.what());
    }
  }
  s.read("random_start", cfg.random_start);
  s.finish();
}

json schedule_json(const Schedule& s) {
  json out = json::array();
  for (const auto& e : s) out.push_back({e.epoch, e.value});
  return out;
}

json attack_json(const AttackConfig& a) {
  return {{"epsilon", a.epsilon},
          {"alpha", a.alpha},
          {"steps", a.steps},
          {"objective", std::string(to_string(a.objective))},
          {"random_start", a.random_start}};
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::kGenData:
      return "gen-data";
    case Command::kTrain:
      return "train";
    case Command::kFinetune:
      return "finetune";
    case Command::kEval:
      return "eval";
    case Command::kSolve:
      return "solve";
  }
  return "train";
}

Command parse_command(std::string_view s) {
  if (s == "gen-data") return Command::kGenData;
  if (s == "train") return Command::kTrain;
  if (s == "finetune") return Command::kFinetune;
  if (s == "eval") return Command::kEval;
  if (s == "solve") return Command::kSolve;
  throw ConfigError(fmt::format("unknown command '{}'", s));
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(fmt::format("override '{}' is not key=value", item));
    }
    const std::string path = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (part.empty()) throw ConfigError(fmt::format("bad override path '{}'", path));
      parts.push_back(part);
    }
    if (!kTopLevelKeys.count(parts.front()) && kTrainKeys.count(parts.front())) {
      parts.insert(parts.begin(), "train");
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->contains(parts[i])) (*node)[parts[i]] = json::object();
      node = &(*node)[parts[i]];
      if (!node->is_object()) {
        throw ConfigError(fmt::format("override '{}' descends into a non-object", path));
      }
    }
    (*node)[parts.back()] = value;
  }
}

RunSettings resolve_run_config(const json& doc, Command command) {
  std::vector<std::string> errors;
  RunSettings out;
  Section root(&doc, "", errors);

  // Preset first: it decides the base training configuration.
  std::string preset = command == Command::kFinetune ? "finetune" : "none";
  root.read("preset", preset);
  Section train = root.child("train");
  std::size_t epochs = 30;
  const bool epochs_given = train.read("epochs", epochs);
  if (preset == "from_scratch") {
    out.train = from_scratch_preset(epochs);
  } else if (preset == "finetune") {
    out.train = finetune_preset();
  } else if (preset == "many_class") {
    out.train = many_class_preset(epochs);
  } else if (preset == "none") {
    out.train = TrainConfig{};
  } else {
    errors.push_back(fmt::format(
        "preset: unknown preset '{}' (from_scratch, finetune, many_class, none)",
        preset));
  }
  out.preset = preset;
  if (epochs_given) out.train.epochs = epochs;

  {
    Section data = root.child("data");
    std::string source = "synthetic";
    data.read("source", source);
    if (source == "synthetic") {
      out.source = DataSource::kSynthetic;
    } else if (source == "idx") {
      out.source = DataSource::kIdx;
    } else {
      data.error("source", "expected 'synthetic' or 'idx'");
    }
    Section syn = data.child("synthetic");
    auto& spec = out.synthetic;
    syn.read("num_classes", spec.num_classes);
    syn.read("dim", spec.dim);
    syn.read("n_per_class", spec.n_per_class);
    syn.read("n_test_per_class", spec.n_test_per_class);
    syn.read("hardness", spec.hardness);
    syn.read("noise_sigma", spec.noise_sigma);
    syn.read("center_scale", spec.center_scale);
    syn.read("seed", spec.seed);
    syn.finish();
    if (out.source == DataSource::kSynthetic) {
      guarded(errors, "data.synthetic", [&] { spec.validate(); });
    }

    Section idx = data.child("idx");
    idx.read("train_images", out.idx.train_images);
    idx.read("train_labels", out.idx.train_labels);
    idx.read("test_images", out.idx.test_images);
    idx.read("test_labels", out.idx.test_labels);
    std::size_t classes = 0;
    if (idx.read("num_classes", classes)) out.idx.num_classes = classes;
    idx.finish();
    if (out.source == DataSource::kIdx &&
        (out.idx.test_images.empty() || out.idx.test_labels.empty() ||
         (command != Command::kEval &&
          (out.idx.train_images.empty() || out.idx.train_labels.empty())))) {
      errors.push_back("data.idx: image and label paths are required");
    }
    data.finish();
  }

  {
    Section model = root.child("model");
    model.read("hidden", out.hidden);
    for (std::size_t h : out.hidden) {
      if (h == 0) model.error("hidden", "layer widths must be positive");
    }
    model.finish();
  }

  {
    auto& cfg = out.train;
    train.read("batch_size", cfg.batch_size);
    train.read_schedule("lr_schedule", cfg.lr_schedule);
    if (!train.read_schedule("tau_schedule", cfg.tau_schedule) &&
        preset == "none") {
      out.notes.push_back("train.tau_schedule not set; using [[0, 0.5]]");
      cfg.tau_schedule = {{0, 0.5}};
    }
    read_attack(train.child("attack"), cfg.attack);
    train.read("ema_decay", cfg.ema_decay);
    train.read("ema_start_epoch", cfg.ema_start_epoch);
    std::string mode;
    if (train.read("mode", mode)) {
      guarded(errors, "train.mode", [&] { cfg.mode = parse_mode(mode); });
    }
    train.read("seed", cfg.seed);
    std::string direction;
    if (train.read("divergence_direction", direction)) {
      guarded(errors, "train.divergence_direction",
              [&] { cfg.direction = parse_direction(direction); });
    }
    train.read("momentum", cfg.sgd.momentum);
    train.read("weight_decay", cfg.sgd.weight_decay);
    train.finish();
    guarded(errors, "train", [&] { cfg.validate(); });
  }

  {
    Section eval = root.child("eval");
    out.attacks = default_eval_attacks(out.train.attack.epsilon);
    if (const json* list = eval.raw("attacks")) {
      out.attacks.clear();
      if (!list->is_array()) {
        eval.error("attacks", "expected a list of attack objects");
      } else {
        for (std::size_t i = 0; i < list->size(); ++i) {
          const std::string where = fmt::format("eval.attacks[{}]", i);
          Section a(&(*list)[i], where, errors);
          NamedAttack named{fmt::format("attack{}", i), {}};
          a.read("name", named.name);
          read_attack(a, named.config);  // finishes the section
          guarded(errors, where, [&] { named.config.validate(); });
          out.attacks.push_back(std::move(named));
        }
      }
    }
    eval.read("probe_trials", out.probe_trials);
    if (out.probe_trials < 100) eval.error("probe_trials", "must be >= 100");
    eval.finish();
  }

  root.read("checkpoint", out.checkpoint);
  if ((command == Command::kFinetune || command == Command::kEval) &&
      out.checkpoint.empty()) {
    errors.push_back("checkpoint: required for this command");
  }
  root.finish();

  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return out;
}

RunSettings validate_config(const std::filesystem::path& path, Command command,
                            const std::vector<std::string>& overrides,
                            std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  apply_overrides(doc, overrides);
  if (seed) doc["train"]["seed"] = *seed;
  return resolve_run_config(doc, command);
}

json to_json(const RunSettings& s) {
  json doc;
  doc["preset"] = s.preset;
  if (s.source == DataSource::kSynthetic) {
    const auto& spec = s.synthetic;
    doc["data"] = {{"source", "synthetic"},
                   {"synthetic",
                    {{"num_classes", spec.num_classes},
                     {"dim", spec.dim},
                     {"n_per_class", spec.n_per_class},
                     {"n_test_per_class", spec.n_test_per_class},
                     {"hardness", spec.hardness},
                     {"noise_sigma", spec.noise_sigma},
                     {"center_scale", spec.center_scale},
                     {"seed", spec.seed}}}};
  } else {
    json idx = {{"train_images", s.idx.train_images},
                {"train_labels", s.idx.train_labels},
                {"test_images", s.idx.test_images},
                {"test_labels", s.idx.test_labels}};
    if (s.idx.num_classes) idx["num_classes"] = *s.idx.num_classes;
    doc["data"] = {{"source", "idx"}, {"idx", idx}};
  }
  doc["model"] = {{"hidden", s.hidden}};
  const auto& t = s.train;
  doc["train"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"lr_schedule", schedule_json(t.lr_schedule)},
                  {"tau_schedule", schedule_json(t.tau_schedule)},
                  {"attack", attack_json(t.attack)},
                  {"ema_decay", t.ema_decay},
                  {"ema_start_epoch", t.ema_start_epoch},
                  {"mode", std::string(to_string(t.mode))},
                  {"seed", t.seed},
                  {"divergence_direction", std::string(to_string(t.direction))},
                  {"momentum", t.sgd.momentum},
                  {"weight_decay", t.sgd.weight_decay}};
  json attacks = json::array();
  for (const auto& a : s.attacks) {
    json entry = attack_json(a.config);
    entry["name"] = a.name;
    attacks.push_back(entry);
  }
  doc["eval"] = {{"attacks", attacks}, {"probe_trials", s.probe_trials}};
  if (!s.checkpoint.empty()) doc["checkpoint"] = s.checkpoint;
  return doc;
}

}  // namespace faal
