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

#include "faal/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

constexpr std::size_t kEvalChunk = 512;
constexpr double kDominanceTol = 1e-9;

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double minimum(const std::vector<double>& v) {
  return *std::min_element(v.begin(), v.end());
}

std::vector<double> per_class_accuracy(const Labels& truth,
                                       const Labels& predicted,
                                       const std::vector<std::size_t>& counts) {
  std::vector<double> hits(counts.size(), 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) hits[truth[i]] += 1.0;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    hits[c] /= static_cast<double>(counts[c]);
  }
  return hits;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::vector<NamedAttack> default_eval_attacks(double epsilon) {
  AttackConfig pgd;
  pgd.epsilon = epsilon;
  pgd.alpha = epsilon > 0.0 ? epsilon / 8.0 : 1.0;
  pgd.steps = 20;
  pgd.objective = AttackObjective::kCrossEntropy;
  AttackConfig cw = pgd;
  cw.objective = AttackObjective::kCwMargin;
  return {{"pgd20", pgd}, {"cw20", cw}};
}

const RobustAccuracy& RobustnessReport::robust_for(
    const std::string& attack) const {
  for (const auto& r : robust) {
    if (r.attack == attack) return r;
  }
  throw DomainError(fmt::format("report has no attack '{}'", attack));
}

RobustnessReport evaluate(const MlpModel& model, const Dataset& test,
                          const std::vector<NamedAttack>& attacks) {
  if (test.size() == 0) throw DomainError("evaluate: empty test set");
  if (test.num_classes != model.num_classes()) {
    throw DimensionError("evaluate: class count differs from model");
  }
  RobustnessReport report;
  report.n_per_class = test.class_counts();
  for (std::size_t c = 0; c < report.n_per_class.size(); ++c) {
    if (report.n_per_class[c] == 0) {
      throw DomainError(fmt::format("evaluate: class {} missing from test set", c));
    }
  }

  Labels clean_pred;
  std::vector<Labels> robust_pred(attacks.size());
  for (std::size_t start = 0; start < test.size(); start += kEvalChunk) {
    const std::size_t end = std::min(test.size(), start + kEvalChunk);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const DenseMatrix x = test.x.gather_rows(idx);
    const std::span<const std::size_t> y(test.y.data() + start, end - start);
    const Labels p = predict(model, x);
    clean_pred.insert(clean_pred.end(), p.begin(), p.end());
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      const DenseMatrix x_adv = pgd_attack(model, x, y, attacks[a].config);
      const Labels pa = predict(model, x_adv);
      robust_pred[a].insert(robust_pred[a].end(), pa.begin(), pa.end());
    }
  }

  report.per_class_clean =
      per_class_accuracy(test.y, clean_pred, report.n_per_class);
  report.average_clean = mean(report.per_class_clean);
  report.worst_class_clean = minimum(report.per_class_clean);
  for (std::size_t a = 0; a < attacks.size(); ++a) {
    RobustAccuracy r;
    r.attack = attacks[a].name;
    r.per_class = per_class_accuracy(test.y, robust_pred[a], report.n_per_class);
    r.average = mean(r.per_class);
    r.worst_class = minimum(r.per_class);
    report.robust.push_back(std::move(r));
  }
  return report;
}

void write_report(const RobustnessReport& report,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "class_id,n,clean_acc";
  for (const auto& r : report.robust) out << ",robust_acc_" << r.attack;
  out << '\n';
  const std::size_t total = std::accumulate(report.n_per_class.begin(),
                                            report.n_per_class.end(),
                                            std::size_t{0});
  for (std::size_t c = 0; c < report.per_class_clean.size(); ++c) {
    out << fmt::format("{},{},{:.17g}", c, report.n_per_class[c],
                       report.per_class_clean[c]);
    for (const auto& r : report.robust) out << fmt::format(",{:.17g}", r.per_class[c]);
    out << '\n';
  }
  out << fmt::format("avg,{},{:.17g}", total, report.average_clean);
  for (const auto& r : report.robust) out << fmt::format(",{:.17g}", r.average);
  out << '\n';
  out << fmt::format("worst,{},{:.17g}", total, report.worst_class_clean);
  for (const auto& r : report.robust) {
    out << fmt::format(",{:.17g}", r.worst_class);
  }
  out << '\n';
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

RobustnessReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("report: empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "class_id" || header[1] != "n" ||
      header[2] != "clean_acc") {
    throw FormatError("report: unexpected header");
  }
  RobustnessReport report;
  const std::string prefix = "robust_acc_";
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i].rfind(prefix, 0) != 0) {
      throw FormatError("report: bad column " + header[i]);
    }
    report.robust.push_back({header[i].substr(prefix.size()), {}, 0.0, 0.0});
  }
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != header.size()) {
        throw FormatError("report: ragged row");
      }
      const double clean = std::stod(cells[2]);
      if (cells[0] == "avg" || cells[0] == "worst") {
        const bool avg = cells[0] == "avg";
        (avg ? report.average_clean : report.worst_class_clean) = clean;
        for (std::size_t a = 0; a < report.robust.size(); ++a) {
          (avg ? report.robust[a].average : report.robust[a].worst_class) =
              std::stod(cells[3 + a]);
        }
        continue;
      }
      report.n_per_class.push_back(std::stoul(cells[1]));
      report.per_class_clean.push_back(clean);
      for (std::size_t a = 0; a < report.robust.size(); ++a) {
        report.robust[a].per_class.push_back(std::stod(cells[3 + a]));
      }
    }
  } catch (const std::logic_error& e) {
    throw FormatError(fmt::format("report: {}", e.what()));
  }
  return report;
}

std::vector<double> sample_in_kl_ball(std::size_t dim, double radius,
                                      SeededRng& rng,
                                      std::size_t max_proposals) {
  if (dim == 0) throw DomainError("sample_in_kl_ball: zero dimension");
  if (radius < 0.0) throw DomainError("sample_in_kl_ball: negative radius");
  std::vector<double> uniform(dim, 1.0 / static_cast<double>(dim));
  if (radius == 0.0 || dim == 1) return uniform;
  // Dirichlet concentration chosen so the expected divergence of a proposal
  // is about radius / 2 (second-order expansion of KL around uniform).
  const double m = static_cast<double>(dim);
  const double alpha = std::max(1.0, ((m - 1.0) / radius - 1.0) / m);
  for (std::size_t n = 0; n < max_proposals; ++n) {
    auto q = rng.dirichlet(dim, alpha);
    if (kl_from_uniform(q, DivergenceDirection::kAnchorFirst) <= radius) {
      return q;
    }
  }
  throw DomainError(fmt::format(
      "sample_in_kl_ball: no feasible proposal in {} draws (radius {})",
      max_proposals, radius));
}

ProbeResult theorem1_probe(const MlpModel& model, const Dataset& data,
                           double tau, std::size_t n_trials, SeededRng& rng,
                           const ProbeOptions& options) {
  if (n_trials < 100) throw DomainError("theorem1_probe: need >= 100 trials");
  if (data.size() == 0) throw DomainError("theorem1_probe: empty data");

  const auto order = rng.permutation(data.size());
  const std::size_t n = std::min(options.batch_size, data.size());
  const std::span<const std::size_t> idx(order.data(), n);
  DenseMatrix x = data.x.gather_rows(idx);
  Labels y;
  for (std::size_t i : idx) y.push_back(data.y[i]);
  if (options.attack) x = pgd_attack(model, x, y, *options.attack);

  const ForwardPass pass = forward(model, x);
  const ClassMarginVector margins =
      cw_margin_per_class(pass.softmax, y, data.num_classes);
  const std::vector<double> ell = margins.present_values();
  const CdaWeights w =
      solve_kl_dro(margins, tau, DivergenceDirection::kAnchorFirst);

  ProbeResult result;
  result.trials = n_trials;
  result.l_faal = w.objective_value;
  result.uniform_loss = mean(ell);

  auto q_loss = [&](const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) s += q[c] * ell[c];
    return s;
  };
  std::size_t inside = 0;
  std::size_t wide = 0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const auto q = sample_in_kl_ball(ell.size(), tau, rng, options.max_proposals);
    if (q_loss(q) <= result.l_faal + kDominanceTol) ++inside;
    const auto q_wide = sample_in_kl_ball(
        ell.size(), options.wide_ball_factor * tau, rng, options.max_proposals);
    if (q_loss(q_wide) <= result.l_faal + kDominanceTol) ++wide;
  }
  result.in_ball_fraction =
      static_cast<double>(inside) / static_cast<double>(n_trials);
  result.wide_ball_fraction =
      static_cast<double>(wide) / static_cast<double>(n_trials);
  return result;
}

}  // namespace faal
