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

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faal/attack.hpp"
#include "faal/data.hpp"
#include "faal/dro.hpp"
#include "faal/nn.hpp"
#include "faal/rng.hpp"

namespace faal {

struct NamedAttack {
  std::string name;
  AttackConfig config;
};

// PGD-20 on cross-entropy ("pgd20") and on the CW margin ("cw20"), both with
// step epsilon / 8.
std::vector<NamedAttack> default_eval_attacks(double epsilon);

struct RobustAccuracy {
  std::string attack;
  std::vector<double> per_class;
  double average = 0.0;
  double worst_class = 0.0;
};

struct RobustnessReport {
  std::vector<std::size_t> n_per_class;
  std::vector<double> per_class_clean;
  double average_clean = 0.0;
  double worst_class_clean = 0.0;
  std::vector<RobustAccuracy> robust;  // one entry per attack, in input order

  const RobustAccuracy& robust_for(const std::string& attack) const;
};

// Averages are unweighted means over classes. Throws DomainError when a
// class has no test sample.
RobustnessReport evaluate(const MlpModel& model, const Dataset& test,
                          const std::vector<NamedAttack>& attacks);

// CSV: class_id,n,clean_acc,robust_acc_<attack>...; one row per class, then
// rows "avg" and "worst" (n is the total sample count on both).
void write_report(const RobustnessReport& report,
                  const std::filesystem::path& path);
RobustnessReport read_report(const std::filesystem::path& path);

struct ProbeOptions {
  std::size_t batch_size = 256;
  // Attack applied to the held-out batch before the class margins are
  // measured; clean margins when empty.
  std::optional<AttackConfig> attack;
  double wide_ball_factor = 1.5;
  std::size_t max_proposals = 100000;
};

struct ProbeResult {
  double in_ball_fraction = 0.0;
  double wide_ball_fraction = 0.0;
  double l_faal = 0.0;       // solver objective on the held-out batch
  double uniform_loss = 0.0;  // plain class mean of the same margins
  std::size_t trials = 0;
};

// Draws n_trials distributions q with KL(U || q) <= tau (and, separately,
// <= wide_ball_factor * tau) by rejection from Dirichlet proposals, and
// reports the fraction with sum_c q_c loss_c <= L_FAAL + 1e-9. Throws
// DomainError for n_trials < 100 or when a draw exceeds max_proposals.
ProbeResult theorem1_probe(const MlpModel& model, const Dataset& data,
                           double tau, std::size_t n_trials, SeededRng& rng,
                           const ProbeOptions& options = {});

// q with KL(U || q) <= radius over `dim` entries; radius 0 returns uniform.
std::vector<double> sample_in_kl_ball(std::size_t dim, double radius,
                                      SeededRng& rng,
                                      std::size_t max_proposals = 100000);

}  // namespace faal
