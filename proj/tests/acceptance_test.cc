/*
 * Copyright 2026 The AMI Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ami_lab/attack.h"
#include "ami_lab/certify.h"
#include "ami_lab/cli.h"
#include "ami_lab/dpsgd.h"
#include "ami_lab/game.h"
#include "ami_lab/io.h"
#include "ami_lab/ldp.h"
#include "ami_lab/tensor_core.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace ami_lab {
namespace {

// Pinned tolerances.
constexpr double kNoLdpMinAdvantage = 0.95;
constexpr double kRuntimeBudgetSeconds = 300.0;
constexpr double kFewNeuronMinAdvantage = 0.90;
constexpr double kMonotoneSlack = 0.05;
constexpr double kHighEpsMinAdvantage = 0.9;
constexpr double kLowEpsMinAdvantage = 0.5;
constexpr double kOmeMaxSpread = 0.15;
constexpr double kMaxGradientRelError = 1e-5;
constexpr double kMaxCertifiedDelta = 1e-6;
constexpr double kMinAgreement = 0.99;
constexpr double kMinRecovery = 0.99;
constexpr double kRatioTolerance = 1e-9;

constexpr int kDim = 64;
constexpr int kComponents = 10;
constexpr uint64_t kDataSeed = 42;

struct Result {
  bool pass = false;
  std::string detail;
};

DataDistribution AcceptanceMixture() {
  return DataDistribution::RandomMixture(kDim, kComponents, 1.0, 1.0,
                                         kDataSeed);
}

GameConfig BaseGame(int r, int trials) {
  GameConfig g;
  g.batch_size = 20;
  g.trials = trials;
  g.seed = 7;
  g.attack.m = 200;
  g.attack.r = r;
  g.threads = 1;
  return g;
}

LdpMechanismConfig MixtureMechanism(const DataDistribution& dist,
                                    Mechanism kind) {
  LdpMechanismConfig mc;
  mc.mechanism = kind;
  mc.encoding.features = dist.dim();
  mc.encoding.bits_per_feature = 8;
  const auto [lo, hi] = dist.ValueRange(1);
  mc.encoding.value_min = lo;
  mc.encoding.value_max = hi;
  mc.seed = 7;
  return mc;
}

std::string Join(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    absl::StrAppend(&out, i ? "/" : "", absl::StrFormat("%.3f", v[i]));
  }
  return out;
}

Result NoLdpEfficacy() {
  const auto start = std::chrono::steady_clock::now();
  auto report = RunCampaign(BaseGame(100, 200), AcceptanceMixture());
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  if (!report.ok()) return {false, report.status().ToString()};
  return {report->advantage >= kNoLdpMinAdvantage &&
              seconds <= kRuntimeBudgetSeconds,
          absl::StrFormat("advantage %.3f (>= %.2f), %.1f s (<= %.0f s)",
                          report->advantage, kNoLdpMinAdvantage, seconds,
                          kRuntimeBudgetSeconds)};
}

Result FewNeurons() {
  GameConfig g = BaseGame(5, 200);
  g.attack.train.epochs = 1000;
  auto report = RunCampaign(g, AcceptanceMixture());
  if (!report.ok()) return {false, report.status().ToString()};
  return {report->advantage >= kFewNeuronMinAdvantage,
          absl::StrFormat("r=5 advantage %.3f (>= %.2f)", report->advantage,
                          kFewNeuronMinAdvantage)};
}

Result BitRandTrend() {
  const DataDistribution dist = AcceptanceMixture();
  GameConfig g = BaseGame(20, 500);
  g.mechanism = MixtureMechanism(dist, Mechanism::kBitRand);
  auto sweep = SweepEpsilon(g, dist, {1, 3, 5, 10});
  if (!sweep.ok()) return {false, sweep.status().ToString()};
  std::vector<double> adv;
  for (const auto& r : *sweep) adv.push_back(r.advantage);
  bool monotone = true;
  for (size_t i = 1; i < adv.size(); ++i) {
    monotone = monotone && adv[i] >= adv[i - 1] - kMonotoneSlack;
  }
  return {monotone && adv.back() >= kHighEpsMinAdvantage &&
              adv.front() >= kLowEpsMinAdvantage,
          absl::StrCat("advantage at eps 1/3/5/10: ", Join(adv))};
}

Result OmeFlatness() {
  const DataDistribution dist = AcceptanceMixture();
  GameConfig g = BaseGame(20, 500);
  g.mechanism = MixtureMechanism(dist, Mechanism::kOme);
  g.mechanism->alpha = 100.0;
  auto sweep = SweepEpsilon(g, dist, {1, 5, 10});
  if (!sweep.ok()) return {false, sweep.status().ToString()};
  std::vector<double> adv;
  for (const auto& r : *sweep) adv.push_back(r.advantage);
  const auto [lo, hi] = std::minmax_element(adv.begin(), adv.end());
  return {*hi - *lo <= kOmeMaxSpread,
          absl::StrFormat("advantage at eps 1/5/10: %s, spread %.3f (<= %.2f)",
                          Join(adv), *hi - *lo, kOmeMaxSpread)};
}

double RelError(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

Result GradientCorrectness() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr double kStep = 1e-6;
  double worst = 0.0;
  auto loss_at = [](const ChosenNeuronParams& p, const LabeledBatch& b,
                    double pw) { return LossAndGradients(p, b, pw)->loss; };
  for (int config = 0; config < 50; ++config) {
    const int r = 1 + static_cast<int>(rng() % 8);
    const int d = 1 + static_cast<int>(rng() % 8);
    const int n = 2 + static_cast<int>(rng() % 10);
    ChosenNeuronParams p = InitializeParams(r, d, rng(), config % 2 == 1);
    for (int i = 0; i < r; ++i) {
      p.h(i) = u(rng);
      for (int j = 0; j < d; ++j) p.w(i, j) = u(rng);
      if (p.use_bias) p.bias(i) = u(rng);
    }
    LabeledBatch batch;
    batch.x.resize(n, d);
    batch.y.resize(n);
    for (int s = 0; s < n; ++s) {
      for (int j = 0; j < d; ++j) batch.x(s, j) = u(rng);
      batch.y(s) = s == 0 ? 1.0 : static_cast<double>(rng() % 2);
    }
    const double pw = 1.0 + static_cast<double>(rng() % 4);
    auto g = LossAndGradients(p, batch, pw);
    if (!g.ok()) return {false, g.status().ToString()};
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + kStep;
      const double up = loss_at(p, batch, pw);
      param = saved - kStep;
      const double down = loss_at(p, batch, pw);
      param = saved;
      worst = std::max(worst, RelError(analytic, (up - down) / (2 * kStep)));
    };
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < d; ++j) check(p.w(i, j), g->dw(i, j));
      check(p.h(i), g->dh(i));
      if (p.use_bias) check(p.bias(i), g->dbias(i));
    }
  }
  return {worst <= kMaxGradientRelError,
          absl::StrFormat("max relative error %.2e (<= %.0e) over 50 configs",
                          worst, kMaxGradientRelError)};
}

Result HoeffdingCoverage() {
  // Bernoulli(0.3), known range 1, 100 draws per resample.
  constexpr int kResamples = 10000;
  constexpr int kDraws = 100;
  constexpr double kMean = 0.3;
  std::mt19937_64 rng(99);
  std::bernoulli_distribution coin(kMean);
  RangeOptions known;
  known.known_range = 1.0;
  bool pass = true;
  std::string detail;
  for (double delta : {0.01, 0.1}) {
    int lower_violations = 0;
    int upper_violations = 0;
    std::vector<double> values(kDraws);
    for (int rep = 0; rep < kResamples; ++rep) {
      for (double& v : values) v = coin(rng) ? 1.0 : 0.0;
      const ExpectationEstimate est = EstimateFromValues(values, known);
      if (*HoeffdingLower(est, delta) > kMean) ++lower_violations;
      if (*HoeffdingUpper(est, delta) < kMean) ++upper_violations;
    }
    const double limit = delta + 3 * std::sqrt(delta / kResamples);
    const double lf = static_cast<double>(lower_violations) / kResamples;
    const double uf = static_cast<double>(upper_violations) / kResamples;
    pass = pass && lf <= limit && uf <= limit;
    absl::StrAppend(&detail, detail.empty() ? "" : "; ",
                    absl::StrFormat("delta %.2f: lower %.4f upper %.4f "
                                    "(<= %.4f)",
                                    delta, lf, uf, limit));
  }
  return {pass, detail};
}

Result CertificationEndToEnd() {
  constexpr int d = 32;
  const DataDistribution dist = DataDistribution::OneHot(d);
  LdpMechanismConfig mc;
  mc.epsilon = 10.0;
  mc.encoding.features = d;
  mc.encoding.bits_per_feature = 8;
  mc.seed = 3;
  SampleVector t = SampleVector::Zero(d);
  t(0) = 1.0;
  AttackConfig attack;
  attack.r = 20;
  attack.m = 200;
  attack.train.seed = 11;
  auto planted = AmiInitLdp(t, dist, mc, attack);
  if (!planted.ok()) return {false, planted.status().ToString()};
  Matrix pool = Matrix::Identity(d, d).bottomRows(d - 1);
  CertifyConfig cc;
  cc.seed = 5;
  cc.threads = 1;
  auto found = MinDeltaSearch(*planted, t, pool, mc,
                              {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1},
                              cc);
  if (!found.ok()) return {false, found.status().ToString()};
  if (!found->has_value()) return {false, "not certified on the grid"};
  const double delta_star = (*found)->delta;
  GameConfig g = BaseGame(20, 1000);
  g.seed = 9;
  g.mechanism = mc;
  g.attack = attack;
  auto campaign = RunFixedTargetCampaign(*planted, g, dist);
  if (!campaign.ok()) return {false, campaign.status().ToString()};
  // Certified prediction: detect exactly when the target is in the batch.
  const double agreement =
      static_cast<double>(campaign->counts.true_positive +
                          campaign->counts.true_negative) /
      static_cast<double>(campaign->counts.total());
  return {delta_star <= kMaxCertifiedDelta && agreement >= kMinAgreement,
          absl::StrFormat("delta* %.0e (<= %.0e), agreement %.4f (>= %.2f)",
                          delta_star, kMaxCertifiedDelta, agreement,
                          kMinAgreement)};
}

Result DpsgdKFold() {
  const std::vector<double> epsilons = {7.5, 8, 9, 10};
  const std::vector<int> ks = {1, 2, 4, 8};
  bool law = true;
  bool monotone = true;
  double worst_recovery = 1.0;
  std::vector<int64_t> prev(ks.size(), std::numeric_limits<int64_t>::max());
  for (double eps : epsilons) {
    DpSgdConfig base;
    base.epsilon = eps;
    base.detection_z = 3.0;
    base.k = 1;
    auto p1 = RoundsToCancel(base);
    if (!p1.ok()) return {false, p1.status().ToString()};
    for (size_t i = 0; i < ks.size(); ++i) {
      DpSgdConfig cfg = base;
      cfg.k = ks[i];
      auto pk = RoundsToCancel(cfg);
      if (!pk.ok()) return {false, pk.status().ToString()};
      law = law && *pk * ks[i] >= *p1 && *pk * ks[i] <= *p1 + ks[i] - 1;
      monotone = monotone && *pk <= prev[i];
      prev[i] = *pk;
      auto rec = SimulateRecovery(cfg, *pk, 10000, 17 + i);
      if (!rec.ok()) return {false, rec.status().ToString()};
      worst_recovery = std::min(worst_recovery, rec->frequency);
    }
  }
  return {law && monotone && worst_recovery >= kMinRecovery,
          absl::StrFormat("K-fold law %s, monotone %s, min recovery %.4f "
                          "(>= %.2f)",
                          law ? "holds" : "violated",
                          monotone ? "yes" : "no", worst_recovery,
                          kMinRecovery)};
}

Result MechanismFidelity() {
  constexpr int64_t kDraws = 100000;
  bool pass = true;
  int checks = 0;
  int misses = 0;
  double worst_z = 0.0;
  auto z_score = [](double p, double empirical) {
    const double sd = std::sqrt(p * (1.0 - p) / kDraws);
    return sd > 0 ? std::abs(empirical - p) / sd : 0.0;
  };
  for (Mechanism kind : {Mechanism::kBitRand, Mechanism::kOme}) {
    for (double eps : {1.0, 5.0}) {
      LdpMechanismConfig mc;
      mc.mechanism = kind;
      mc.epsilon = eps;
      mc.encoding.features = 2;
      mc.encoding.bits_per_feature = 8;
      mc.seed = 7;
      if (kind == Mechanism::kOme) mc.alpha = 2.0;
      auto marginals = CheckMarginals(mc, kDraws);
      if (!marginals.ok()) return {false, marginals.status().ToString()};
      for (const auto& m : *marginals) {
        ++checks;
        if (!m.within_3sigma) ++misses;
        worst_z = std::max({worst_z,
                            z_score(m.p_one_given_one, m.empirical_one_given_one),
                            z_score(m.p_one_given_zero,
                                    m.empirical_one_given_zero)});
      }
    }
  }
  pass = misses == 0;
  double worst_literal = 0.0;
  double worst_exact = 0.0;
  for (double eps : {0.5, 3.0, 10.0}) {
    LdpMechanismConfig mc;
    mc.epsilon = eps;
    mc.encoding.features = 3;
    mc.encoding.bits_per_feature = 8;
    const int l = mc.encoding.bits_per_feature;
    for (double alpha : {1.0, 2.5}) {
      mc.alpha = alpha;
      auto report = LdpRatioReport(mc);
      if (!report.ok()) return {false, report.status().ToString()};
      for (const BitRatio& b : report->bits) {
        const double want =
            static_cast<double>(b.index % l) / l * eps + std::abs(std::log(alpha));
        worst_literal = std::max(worst_literal, std::abs(b.ln_max_ratio - want));
      }
    }
    // At the bound, ln alpha < 0 and the ratio is |(i%l/l) eps + ln alpha|.
    mc.alpha.reset();
    const double ln_alpha = EffectiveLogAlpha(mc);
    auto report = LdpRatioReport(mc);
    if (!report.ok()) return {false, report.status().ToString()};
    for (const BitRatio& b : report->bits) {
      const double want =
          std::abs(static_cast<double>(b.index % l) / l * eps + ln_alpha);
      worst_exact = std::max(worst_exact, std::abs(b.ln_max_ratio - want));
    }
  }
  pass = pass && worst_literal <= kRatioTolerance &&
         worst_exact <= kRatioTolerance;
  return {pass, absl::StrFormat("%d/%d bits within 3 sigma (max |z| %.2f); "
                                "ln-ratio error %.1e (alpha >= 1), %.1e "
                                "(alpha at bound)",
                                checks - misses, checks, worst_z,
                                worst_literal, worst_exact)};
}

Result LinearInfeasibility() {
  std::mt19937_64 rng(1000);
  std::normal_distribution<double> n(0.0, 1.0);
  int pairs = 0;
  int ok = 0;
  while (pairs < 1000) {
    const int d = 1 + static_cast<int>(rng() % 64);
    Vector w(d), t(d);
    for (int j = 0; j < d; ++j) {
      w(j) = n(rng);
      t(j) = n(rng);
    }
    if (!(w.dot(t) > 0)) continue;
    ++pairs;
    auto x = LinearCounterexample(w, t, 1.0);
    if (x.ok() && w.dot(*x) > 0 && *x != t) ++ok;
  }
  return {ok == pairs, absl::StrFormat("%d/%d pairs", ok, pairs)};
}

int RunCommand(std::vector<std::string> args) {
  args.insert(args.begin(), "ami_lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Result Reproducibility() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ami_lab_acceptance";
  fs::remove_all(root);
  const std::string config = (root / "cfg.json").string();
  if (!WriteFileAtomic(config, R"({
    "seed": 5,
    "distribution": {"kind": "mixture", "dim": 8, "components": 3},
    "game": {"batch_size": 6, "trials": 20},
    "attack": {"m": 40, "r": 6, "l_draws": 20, "train": {"epochs": 100}},
    "mechanism": {"epsilon": 5, "bits_per_feature": 4},
    "epsilons": [1, 5],
    "certify": {"p": 100, "q": 10, "pool_size": 20},
    "dpsgd": {"trials": 500}
  })")
           .ok()) {
    return {false, "cannot write config"};
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands =
      {{"game.csv", {"game"}},
       {"certify.csv", {"certify", "--delta-grid", "1e-6:1e-1"}},
       {"dpsgd.csv", {"dpsgd"}},
       {"ldp_bench.csv", {"ldp-bench", "--trials", "1000"}},
       {"weights.csv", {"export-weights"}},
       {"synth.csv", {"synth", "--rows", "50"}}};
  int identical = 0;
  std::string mismatched;
  for (const auto& [file, args] : commands) {
    std::string contents[2];
    for (int run = 0; run < 2; ++run) {
      std::vector<std::string> full = args;
      const std::string dir = (root / absl::StrCat("run", run)).string();
      full.insert(full.end(), {"--config", config, "--seed", "13", "--out", dir});
      if (RunCommand(full) != kExitOk) return {false, args[0] + " failed"};
      auto read = ReadFile((fs::path(dir) / file).string());
      if (!read.ok()) return {false, read.status().ToString()};
      contents[run] = *read;
    }
    if (contents[0] == contents[1] && !contents[0].empty()) {
      ++identical;
    } else {
      absl::StrAppend(&mismatched, " ", args[0]);
    }
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(commands.size()),
          absl::StrFormat("%d/%d commands byte-identical%s", identical,
                          commands.size(), mismatched)};
}

}  // namespace
}  // namespace ami_lab

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  using ami_lab::Result;
  struct Criterion {
    const char* name;
    Result (*run)();
  };
  const Criterion criteria[] = {
      {"no-LDP attack efficacy", ami_lab::NoLdpEfficacy},
      {"few-neuron attack", ami_lab::FewNeurons},
      {"BitRand monotone trend", ami_lab::BitRandTrend},
      {"OME flatness", ami_lab::OmeFlatness},
      {"gradient correctness", ami_lab::GradientCorrectness},
      {"Hoeffding coverage", ami_lab::HoeffdingCoverage},
      {"certification end-to-end", ami_lab::CertificationEndToEnd},
      {"DPSGD K-fold law", ami_lab::DpsgdKFold},
      {"LDP mechanism fidelity", ami_lab::MechanismFidelity},
      {"linear infeasibility", ami_lab::LinearInfeasibility},
      {"reproducibility", ami_lab::Reproducibility},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failed = 0;
  int ran = 0;
  int id = 0;
  for (const Criterion& c : criteria) {
    ++id;
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), id) == selected.end()) {
      continue;
    }
    ++ran;
    const Result r = c.run();
    if (!r.pass) ++failed;
    std::printf("CRITERION %d %s: %s (%s)\n", id, r.pass ? "PASS" : "FAIL",
                c.name, r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
