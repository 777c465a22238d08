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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Tolerances are pinned here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "faal/attack.hpp"
#include "faal/cli.hpp"
#include "faal/config.hpp"
#include "faal/dro.hpp"
#include "faal/eval.hpp"
#include "faal/train.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace faal;
namespace fs = std::filesystem;

namespace {

constexpr double kOracleTolTwo = 1e-6;
constexpr double kOracleTolMany = 1e-4;
constexpr double kOracleSeconds = 120.0;
constexpr double kDominanceSlack = 1e-9;
constexpr double kReductionTol = 1e-10;
constexpr double kGradTol = 1e-4;
constexpr double kBoxSlack = 1e-12;
constexpr double kDisparityGap = 0.15;
constexpr double kDisparitySeconds = 600.0;
constexpr double kFairnessGain = 0.05;
constexpr double kAverageBand = 0.03;
constexpr double kCleanDrop = 0.02;
constexpr std::size_t kSeeds = 5;
// Measured on the disparity fixture (AT, EMA model, mean over seeds 0-4).
constexpr double kPinnedAtAverage = 0.7777;
constexpr double kPinnedAtWorst = 0.3644;
constexpr double kPinnedBand = 0.02;
constexpr double kWideBallFloor = 0.9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report_check(const std::string& title, const Verdict& v) {
  std::printf("%s check: %s: %s\n", v.pass ? "PASS" : "FAIL", title.c_str(),
              v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("%s criterion %d: %s: %s\n", v.pass ? "PASS" : "FAIL", id,
              title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

void run_criterion(int id, const std::string& title,
                   const std::function<Verdict()>& body) {
  try {
    report(id, title, body());
  } catch (const std::exception& e) {
    report(id, title, {false, fmt::format("exception: {}", e.what())});
  }
}

Verdict solver_vs_oracle() {
  SeededRng rng(1);
  const double taus[] = {0.05, 0.25, 0.5, 1.0};
  double worst[5] = {0, 0, 0, 0, 0};
  bool ok = true;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const int m = 2 + i % 3;
    const double tau = taus[(i / 3) % 4];
    const auto dir = (i / 12) % 2 ? DivergenceDirection::kWeightsFirst
                                  : DivergenceDirection::kAnchorFirst;
    std::vector<double> l(m);
    for (auto& v : l) v = rng.uniform(-1.0, 1.0);
    const auto cm = ClassMarginVector::dense(l);
    const CdaWeights s = solve_kl_dro(cm, tau, dir);
    const CdaWeights o = brute_force_oracle(cm, tau, dir);
    const double gap = std::abs(s.objective_value - o.objective_value);
    worst[m] = std::max(worst[m], gap);
    ok = ok && gap <= (m == 2 ? kOracleTolTwo : kOracleTolMany);
  }
  const double sec = seconds_since(t0);
  ok = ok && sec < kOracleSeconds;
  return {ok, fmt::format("max |gap| C=2 {:.2e}, C=3 {:.2e}, C=4 {:.2e}; "
                          "{:.1f}s",
                          worst[2], worst[3], worst[4], sec)};
}

Verdict dominance() {
  SeededRng rng(2);
  std::size_t violations = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t m = 2 + rng.uniform_int(9);
    const double tau = rng.uniform(0.01, 1.0);
    std::vector<double> l(m);
    for (auto& v : l) v = rng.uniform(-1.0, 1.0);
    const CdaWeights w = solve_kl_dro(ClassMarginVector::dense(l), tau);
    for (int t = 0; t < 1000; ++t) {
      const auto q = sample_in_kl_ball(m, tau, rng);
      double value = 0.0;
      for (std::size_t c = 0; c < m; ++c) value += q[c] * l[c];
      if (value > w.objective_value + kDominanceSlack) ++violations;
    }
  }

  SyntheticSpec spec;
  spec.n_per_class = 200;
  spec.n_test_per_class = 100;
  const auto split = generate_synthetic(spec);
  TrainConfig cfg = from_scratch_preset(2);
  cfg.attack.epsilon = 0.15;
  cfg.attack.alpha = 0.0375;
  const std::vector<std::size_t> hidden{32, 32};
  const TrainResult r =
      train(make_model(16, hidden, 4, 0), split.train, cfg);
  SeededRng probe_rng(3);
  ProbeOptions opts;
  opts.attack = cfg.attack;
  const ProbeResult p =
      theorem1_probe(r.model, split.test, 0.5, 1000, probe_rng, opts);
  return {violations == 0 && p.in_ball_fraction == 1.0,
          fmt::format("{} violations in 50000 draws; probe in-ball fraction "
                      "{:.4f}, 1.5x ball {:.4f}",
                      violations, p.in_ball_fraction, p.wide_ball_fraction)};
}

Verdict reduction() {
  SyntheticSpec spec;
  spec.n_per_class = 400;
  spec.n_test_per_class = 10;
  const Dataset d = generate_synthetic(spec).train;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 64;  // 1600 / 64 = 25 batches per epoch
  cfg.lr_schedule = {{0, 0.1}};
  cfg.tau_schedule = {{0, 0.0}};
  cfg.attack.epsilon = 0.15;
  cfg.attack.alpha = 0.0375;
  cfg.seed = 7;
  const std::vector<std::size_t> hidden{64, 64};
  const MlpModel init = make_model(16, hidden, 4, 7);
  cfg.mode = TrainMode::kFaal;
  const TrainResult a = train(init, d, cfg);
  cfg.mode = TrainMode::kAtBaseline;
  const TrainResult b = train(init, d, cfg);
  const double diff = a.model.max_parameter_diff(b.model);
  return {a.log.size() == 50 && diff < kReductionTol,
          fmt::format("{} batches, max parameter difference {:.3e}",
                      a.log.size(), diff)};
}

Verdict gradients() {
  SeededRng rng(4);
  const std::vector<std::size_t> hidden{12, 10};
  MlpModel m = make_model(8, hidden, 5, 4);
  // Non-zero biases so every parameter has a generic gradient.
  m.for_each_parameter([&](DenseMatrix& p, DenseMatrix&) {
    for (auto& v : p.values()) v += rng.uniform(-0.1, 0.1);
  });
  const DenseMatrix x = faal::testing::random_matrix(24, 8, rng, 0.0, 1.0);
  std::vector<std::size_t> y(24);
  for (auto& v : y) v = rng.uniform_int(5);
  std::vector<double> w(24);
  for (auto& v : w) v = rng.uniform(0.0, 2.0);
  const auto r =
      faal::testing::check_parameter_gradients(m, x, y, w, 500, rng, 1e-5);
  return {r.checked == 500 && r.max_rel_error < kGradTol,
          fmt::format("{} entries, max relative error {:.3e}", r.checked,
                      r.max_rel_error)};
}

Verdict attack_contract() {
  SyntheticSpec spec;
  spec.n_per_class = 2500;
  spec.n_test_per_class = 10;
  const Dataset d = generate_synthetic(spec).train;  // 10^4 samples
  const std::vector<std::size_t> hidden{32, 32};
  const MlpModel m = make_model(16, hidden, 4, 5);
  std::size_t violations = 0;
  double max_dev = 0.0;
  const AttackObjective objectives[] = {AttackObjective::kCrossEntropy,
                                        AttackObjective::kCwMargin};
  for (int k = 0; k < 2; ++k) {
    AttackConfig cfg;
    cfg.epsilon = 0.1;
    cfg.alpha = 0.03;
    cfg.steps = 10;
    cfg.objective = objectives[k];
    cfg.random_start = k == 1;
    SeededRng rng(k);
    const DenseMatrix adv = pgd_attack(m, d.x, d.y, cfg, &rng);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double a = adv.values()[i];
      const double dev = std::abs(a - d.x.values()[i]);
      max_dev = std::max(max_dev, dev);
      if (dev > cfg.epsilon + kBoxSlack || a < 0.0 || a > 1.0) ++violations;
    }
  }
  AttackConfig zero;
  zero.epsilon = 0.0;
  const bool identity = pgd_attack(m, d.x, d.y, zero) == d.x;
  return {violations == 0 && identity,
          fmt::format("{} samples x 2 attacks, {} violations, max deviation "
                      "{:.6f}; epsilon 0 identity {}",
                      d.size(), violations, max_dev, identity)};
}

// Mean over seeds of the quantities criteria 6 to 8 compare.
struct Summary {
  double avg_robust = 0.0;
  double worst_robust = 0.0;
  double avg_clean = 0.0;

  void add(const RobustnessReport& r, double scale) {
    avg_robust += scale * r.robust[0].average;
    worst_robust += scale * r.robust[0].worst_class;
    avg_clean += scale * r.average_clean;
  }
  std::string str() const {
    return fmt::format("robust avg {:.4f} worst {:.4f}, clean avg {:.4f}",
                       avg_robust, worst_robust, avg_clean);
  }
};

struct FixtureResults {
  Summary at_ema, faal_ema, at_live, faal_live;
  Summary checkpoint, finetuned, at_plus_two;
  double at_seconds = 0.0;
  double wide_ball_fraction = 0.0;  // FAAL EMA model, tau 0.5
};

RunSettings load_settings(const char* name, Command command, std::size_t seed) {
  const fs::path path = faal::testing::source_dir() / "configs" / name;
  return validate_config(path,
                         command, {fmt::format("data.synthetic.seed={}", seed)},
                         seed);
}

FixtureResults run_fixture() {
  FixtureResults out;
  const double scale = 1.0 / static_cast<double>(kSeeds);
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    const RunSettings at = load_settings("disparity_at.json", Command::kTrain, seed);
    const RunSettings fa =
        load_settings("disparity_faal.json", Command::kTrain, seed);
    const RunSettings ft =
        load_settings("finetune.json", Command::kFinetune, seed);
    const auto split = generate_synthetic(at.synthetic);
    const std::vector<NamedAttack> pgd{at.attacks.front()};
    const auto eval = [&](const MlpModel& m) {
      return evaluate(m, split.test, pgd);
    };

    const auto t0 = Clock::now();
    const TrainResult at_run =
        train(make_model(split.train.dim(), at.hidden, split.train.num_classes,
                         at.train.seed),
              split.train, at.train);
    out.at_seconds += seconds_since(t0);
    const TrainResult fa_run =
        train(make_model(split.train.dim(), fa.hidden, split.train.num_classes,
                         fa.train.seed),
              split.train, fa.train);

    out.at_ema.add(eval(at_run.ema_model), scale);
    out.faal_ema.add(eval(fa_run.ema_model), scale);
    out.at_live.add(eval(at_run.model), scale);
    out.faal_live.add(eval(fa_run.model), scale);

    SeededRng probe_rng(seed);
    ProbeOptions opts;
    opts.attack = fa.train.attack;
    out.wide_ball_fraction +=
        scale * theorem1_probe(fa_run.ema_model, split.test, 0.5, 1000,
                               probe_rng, opts)
                    .wide_ball_fraction;

    const Checkpoint ckpt{at_run.model, {at.train.epochs, at.train.seed}};
    out.checkpoint.add(eval(ckpt.model), scale);
    out.finetuned.add(eval(finetune(ckpt, split.train, ft.train).model), scale);
    TrainConfig plain = ft.train;
    plain.mode = TrainMode::kAtBaseline;
    out.at_plus_two.add(eval(finetune(ckpt, split.train, plain).model), scale);
    std::printf("  fixture seed %zu done\n", seed);
    std::fflush(stdout);
  }
  return out;
}

Verdict disparity(const FixtureResults& r) {
  const double gap = r.at_ema.avg_robust - r.at_ema.worst_robust;
  return {gap >= kDisparityGap && r.at_seconds < kDisparitySeconds,
          fmt::format("AT (EMA) {}; gap {:.1f} points; AT training {:.1f}s "
                      "for {} seeds",
                      r.at_ema.str(), 100.0 * gap, r.at_seconds, kSeeds)};
}

Verdict fairness(const FixtureResults& r) {
  const double gain = r.faal_ema.worst_robust - r.at_ema.worst_robust;
  const double shift = r.faal_ema.avg_robust - r.at_ema.avg_robust;
  return {gain >= kFairnessGain && std::abs(shift) <= kAverageBand,
          fmt::format("FAAL (EMA) {}; worst +{:.1f} points, average {:+.1f} "
                      "points [live models, informational: AT {}; FAAL {}]",
                      r.faal_ema.str(), 100.0 * gain, 100.0 * shift,
                      r.at_live.str(), r.faal_live.str())};
}

Verdict finetuning(const FixtureResults& r) {
  const double drop = r.checkpoint.avg_clean - r.finetuned.avg_clean;
  const bool ok = r.finetuned.worst_robust > r.checkpoint.worst_robust &&
                  r.finetuned.worst_robust > r.at_plus_two.worst_robust &&
                  drop <= kCleanDrop;
  return {ok, fmt::format("worst robust: fine-tuned {:.4f}, checkpoint {:.4f}, "
                          "2 more AT epochs {:.4f}; clean drop {:.1f} points",
                          r.finetuned.worst_robust, r.checkpoint.worst_robust,
                          r.at_plus_two.worst_robust, 100.0 * drop)};
}

Verdict pinned_baseline(const FixtureResults& r) {
  const bool ok =
      std::abs(r.at_ema.avg_robust - kPinnedAtAverage) <= kPinnedBand &&
      std::abs(r.at_ema.worst_robust - kPinnedAtWorst) <= kPinnedBand;
  return {ok, fmt::format("AT (EMA) robust avg {:.4f} (pinned {:.4f}), worst "
                          "{:.4f} (pinned {:.4f})",
                          r.at_ema.avg_robust, kPinnedAtAverage,
                          r.at_ema.worst_robust, kPinnedAtWorst)};
}

Verdict wide_ball(const FixtureResults& r) {
  return {r.wide_ball_fraction >= kWideBallFloor,
          fmt::format("1.5x ball fraction {:.4f}", r.wide_ball_fraction)};
}

Verdict determinism() {
  faal::testing::TempDir dir;
  const std::string config =
      (faal::testing::source_dir() / "configs" / "disparity_faal.json").string();
  for (const char* name : {"a", "b"}) {
    std::ostringstream out;
    std::ostringstream err;
    const int code =
        run({"train", "--config", config, "--out", (dir / name).string(),
             "--set", "train.epochs=4"},
            out, err);
    if (code != kExitOk) {
      return {false, fmt::format("train exited with {}: {}", code, err.str())};
    }
  }
  std::vector<std::string> differing;
  for (const char* f : {"step_log.csv", "model_final.json", "model_ema.json"}) {
    if (faal::testing::read_file(dir / "a" / f) !=
        faal::testing::read_file(dir / "b" / f)) {
      differing.emplace_back(f);
    }
  }
  return {differing.empty(),
          differing.empty()
              ? std::string("step_log.csv, model_final.json, model_ema.json "
                            "byte-identical")
              : fmt::format("differing: {}", fmt::join(differing, ", "))};
}

Verdict constants() {
  std::vector<std::string> bad;
  const auto expect = [&](bool cond, const char* what) {
    if (!cond) bad.emplace_back(what);
  };
  const TrainConfig ft = finetune_preset();
  expect(ft.epochs == 2, "finetune epochs");
  expect(ft.tau_schedule == Schedule{{0, 0.5}}, "finetune tau");
  expect(ft.lr_schedule == Schedule{{0, 0.01}, {1, 0.001}}, "finetune lr");
  const TrainConfig fs20 = from_scratch_preset(20);
  expect(fs20.tau_schedule == Schedule{{0, 0.0}, {10, 0.25}, {15, 0.5}},
         "from-scratch tau shape");
  expect(many_class_preset(40).tau_schedule == Schedule{{0, 0.05}},
         "many-class tau");

  const RunSettings shipped = validate_config(
      faal::testing::source_dir() / "configs" / "finetune.json",
      Command::kFinetune);
  expect(shipped.train.epochs == 2 &&
             shipped.train.tau_schedule == ft.tau_schedule &&
             shipped.train.lr_schedule == ft.lr_schedule,
         "configs/finetune.json");
  const RunSettings scratch = validate_config(
      faal::testing::source_dir() / "configs" / "disparity_faal.json",
      Command::kTrain);
  expect(scratch.train.tau_schedule == fs20.tau_schedule,
         "configs/disparity_faal.json");
  return {bad.empty(),
          bad.empty() ? std::string("finetune tau 0.5, lr 0.01 -> 0.001, 2 "
                                    "epochs; from-scratch tau 0 -> 0.25 -> "
                                    "0.5; many-class tau 0.05")
                      : fmt::format("mismatch: {}", fmt::join(bad, ", "))};
}

}  // namespace

int main() {
  run_criterion(1, "solver matches oracle", solver_vs_oracle);
  run_criterion(2, "in-ball dominance", dominance);
  run_criterion(3, "tau 0 reduces to adversarial training", reduction);
  run_criterion(4, "gradient fidelity", gradients);
  run_criterion(5, "attack contract", attack_contract);

  FixtureResults fixture;
  bool fixture_ok = true;
  std::string fixture_error;
  try {
    fixture = run_fixture();
  } catch (const std::exception& e) {
    fixture_ok = false;
    fixture_error = e.what();
  }
  const auto on_fixture = [&](const std::function<Verdict(const FixtureResults&)>& f) {
    return [&, f] {
      if (!fixture_ok) return Verdict{false, "fixture failed: " + fixture_error};
      return f(fixture);
    };
  };
  run_criterion(6, "disparity under plain AT", on_fixture(disparity));
  run_criterion(7, "fairness improvement", on_fixture(fairness));
  run_criterion(8, "two-epoch fine-tune", on_fixture(finetuning));
  run_criterion(9, "determinism", determinism);
  run_criterion(10, "default constants", constants);

  // Measured-fixture checks outside the numbered criteria.
  const int criteria_failures = failures;
  if (fixture_ok) {
    report_check("pinned AT baseline", pinned_baseline(fixture));
    report_check("wide-ball probe on the fixture", wide_ball(fixture));
  }
  std::printf("%s: %d of 10 criteria failed, %d checks failed\n",
              failures ? "FAIL" : "PASS", criteria_failures,
              failures - criteria_failures);
  return failures ? 1 : 0;
}
