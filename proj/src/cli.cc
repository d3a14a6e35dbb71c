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

#include "ami_lab/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/attack.h"
#include "ami_lab/certify.h"
#include "ami_lab/config.h"
#include "ami_lab/distribution.h"
#include "ami_lab/dpsgd.h"
#include "ami_lab/game.h"
#include "ami_lab/io.h"
#include "ami_lab/ldp.h"
#include "ami_lab/seeds.h"
#include "ami_lab/status_macros.h"
#include "json.hpp"

namespace ami_lab {
namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<int64_t> trials;
  std::string epsilon;
  std::string format = "csv";
  std::string delta_grid;
  std::string k;
  int64_t rows = 1000;
  std::string dataset_format = "csv";
};

// A failure tagged with its exit code.
struct Failure {
  int code;
  absl::Status status;
};

Failure ConfigFailure(absl::Status s) { return {kExitConfig, std::move(s)}; }
Failure RuntimeFailure(absl::Status s) { return {kExitRuntime, std::move(s)}; }

#define AMI_CLI_OR_FAIL_INNER(n, wrap, lhs, expr) \
  auto or_fail_##n = (expr);                      \
  if (!or_fail_##n.ok()) return wrap(or_fail_##n.status()); \
  lhs = *std::move(or_fail_##n)
#define AMI_CLI_OR_FAIL(n, wrap, lhs, expr) \
  AMI_CLI_OR_FAIL_INNER(n, wrap, lhs, expr)
#define CONFIG_OR_FAIL(lhs, expr) \
  AMI_CLI_OR_FAIL(__COUNTER__, ConfigFailure, lhs, expr)
#define RUNTIME_OR_FAIL(lhs, expr) \
  AMI_CLI_OR_FAIL(__COUNTER__, RuntimeFailure, lhs, expr)

using Outcome = std::optional<Failure>;

struct Context {
  ExperimentConfig cfg;
  OutputFormat format = OutputFormat::kCsv;
  std::string out_dir;
};

absl::StatusOr<Context> LoadContext(const Flags& flags) {
  Context ctx;
  if (!flags.config.empty()) {
    ASSIGN_OR_RETURN(ctx.cfg, LoadExperimentConfig(flags.config));
  }
  if (flags.seed) {
    ctx.cfg.seed = *flags.seed;
    ctx.cfg.game.seed = *flags.seed;
    ctx.cfg.certify.config.seed = *flags.seed;
    if (ctx.cfg.mechanism) ctx.cfg.mechanism->config.seed = *flags.seed;
  }
  if (flags.trials && *flags.trials < 1) {
    return absl::InvalidArgumentError("--trials must be >= 1");
  }
  ASSIGN_OR_RETURN(ctx.format, ParseOutputFormat(flags.format));
  ctx.out_dir = flags.out.empty() ? ctx.cfg.output_dir : flags.out;
  return ctx;
}

std::string Extension(OutputFormat format) {
  return format == OutputFormat::kCsv ? ".csv" : ".json";
}

std::string OutPath(const Context& ctx, const std::string& stem,
                    const std::string& extension) {
  if (ctx.out_dir.empty()) return stem + extension;
  return (std::filesystem::path(ctx.out_dir) / (stem + extension)).string();
}

Outcome Write(const std::string& path, const std::string& contents,
              std::ostream& out) {
  absl::Status s = WriteFileAtomic(path, contents);
  if (!s.ok()) return RuntimeFailure(s);
  out << "wrote " << path << "\n";
  return std::nullopt;
}

MechanismSpec MechanismOrDefault(const ExperimentConfig& cfg) {
  if (cfg.mechanism) return *cfg.mechanism;
  MechanismSpec spec;
  spec.config.seed = cfg.seed;
  return spec;
}

// A generic table: CSV with a header, or a JSON array of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  std::string Render(OutputFormat format) const {
    if (format == OutputFormat::kJson) {
      json doc = json::array();
      for (const auto& row : rows) {
        json j;
        for (size_t c = 0; c < columns.size(); ++c) j[columns[c]] = row[c];
        doc.push_back(std::move(j));
      }
      return doc.dump(2) + "\n";
    }
    std::string text;
    for (size_t c = 0; c < columns.size(); ++c) {
      absl::StrAppend(&text, c ? "," : "", columns[c]);
    }
    text.push_back('\n');
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c) {
        if (c) text.push_back(',');
        const json& v = row[c];
        if (v.is_boolean()) {
          text += v.get<bool>() ? "true" : "false";
        } else if (v.is_number_integer()) {
          text += v.dump();
        } else if (v.is_number()) {
          text += FormatDouble(v.get<double>());
        } else {
          text += v.is_string() ? v.get<std::string>() : v.dump();
        }
      }
      text.push_back('\n');
    }
    return text;
  }
};

json Number(double v) {
  if (std::isfinite(v)) return v;
  return FormatDouble(v);
}

// ---------------------------------------------------------------- game

Outcome RunGame(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  ExperimentConfig& cfg = ctx.cfg;
  if (flags.trials) cfg.game.trials = static_cast<int>(*flags.trials);
  std::vector<double> epsilons = cfg.epsilons;
  if (!flags.epsilon.empty()) {
    CONFIG_OR_FAIL(epsilons, ParseDoubleList(flags.epsilon));
  }
  CONFIG_OR_FAIL(DataDistribution dist, BuildDistribution(cfg));
  GameConfig game = cfg.game;
  if (!epsilons.empty() && !cfg.mechanism) {
    return ConfigFailure(absl::InvalidArgumentError(
        "an epsilon sweep needs a mechanism section in the config"));
  }
  if (cfg.mechanism) {
    for (double eps : epsilons) {
      if (!(eps > 0.0)) {
        return ConfigFailure(
            absl::InvalidArgumentError("epsilons must be > 0"));
      }
      CONFIG_OR_FAIL(LdpMechanismConfig ignored,
                     ResolveMechanism(cfg, dist, eps));
      (void)ignored;
    }
    CONFIG_OR_FAIL(game.mechanism, ResolveMechanism(cfg, dist));
  }
  {
    absl::Status valid = ValidateGameConfig(game, dist);
    if (!valid.ok()) return ConfigFailure(valid);
  }

  std::vector<SuccessReport> reports;
  if (!epsilons.empty()) {
    RUNTIME_OR_FAIL(reports, SweepEpsilon(game, dist, epsilons));
  } else {
    RUNTIME_OR_FAIL(SuccessReport report, RunCampaign(game, dist));
    reports.push_back(report);
  }

  std::vector<GameRow> rows;
  json results = json::array();
  for (const SuccessReport& r : reports) {
    rows.push_back(ToRow(r));
    results.push_back({{"epsilon", Number(r.epsilon)},
                       {"advantage", r.advantage},
                       {"tpr", r.tpr},
                       {"tnr", r.tnr},
                       {"ci_low", r.advantage_ci.low},
                       {"ci_high", r.advantage_ci.high},
                       {"trials", r.trials},
                       {"failures", r.failures},
                       {"untrained", r.untrained},
                       {"true_positive", r.counts.true_positive},
                       {"false_negative", r.counts.false_negative},
                       {"true_negative", r.counts.true_negative},
                       {"false_positive", r.counts.false_positive}});
  }
  json summary = {
      {"seed", cfg.seed},
      {"batch_size", game.batch_size},
      {"trials_per_point", game.trials},
      {"mechanism", !game.mechanism ? "none"
                    : game.mechanism->mechanism == Mechanism::kBitRand
                        ? "bitrand"
                        : "ome"},
      {"strict", game.strict},
      {"results", results}};
  if (Outcome f = Write(OutPath(ctx, "game", Extension(ctx.format)),
                        FormatRows(absl::MakeConstSpan(rows), ctx.format),
                        out)) {
    return f;
  }
  return Write(OutPath(ctx, "game_summary", ".json"), summary.dump(2) + "\n",
               out);
}

// ------------------------------------------------------------- certify

std::vector<SampleVector> SupportPoints(const DataDistribution& dist) {
  std::vector<SampleVector> points;
  if (dist.kind() == DataDistribution::Kind::kFileBacked) {
    for (int i = 0; i < dist.dataset().size(); ++i) {
      points.push_back(dist.dataset().rows.row(i).transpose());
    }
  } else {
    for (const MixtureComponent& c : dist.components()) {
      points.push_back(c.mean);
    }
  }
  return points;
}

absl::StatusOr<Matrix> BuildPool(const ExperimentConfig& cfg,
                                 const DataDistribution& dist,
                                 const SampleVector& target) {
  Rng rng = MakeRng(cfg.seed, SeedStream::kCertifyPool);
  std::vector<SampleVector> pool;
  if (dist.support_size().has_value()) {
    for (const SampleVector& x : SupportPoints(dist)) {
      if (x != target) pool.push_back(x);
    }
    if (cfg.certify.pool_size > 0 &&
        static_cast<int>(pool.size()) > cfg.certify.pool_size) {
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(cfg.certify.pool_size);
    }
  } else {
    const int size = cfg.certify.pool_size > 0 ? cfg.certify.pool_size : 1000;
    Matrix exclude = target.transpose();
    for (int i = 0; i < size; ++i) {
      ASSIGN_OR_RETURN(SampleVector x, dist.SampleExcluding(exclude, rng));
      pool.push_back(std::move(x));
    }
  }
  if (pool.empty()) {
    return absl::FailedPreconditionError("no non-target samples for the pool");
  }
  Matrix m(static_cast<Eigen::Index>(pool.size()), dist.dim());
  for (size_t i = 0; i < pool.size(); ++i) m.row(i) = pool[i].transpose();
  return m;
}

Outcome RunCertify(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  ExperimentConfig& cfg = ctx.cfg;
  if (!cfg.mechanism) cfg.mechanism = MechanismOrDefault(cfg);
  std::vector<double> grid;
  if (!flags.delta_grid.empty()) {
    CONFIG_OR_FAIL(grid, ParseDeltaGrid(flags.delta_grid));
  }
  std::vector<double> epsilons;
  if (!flags.epsilon.empty()) {
    CONFIG_OR_FAIL(epsilons, ParseDoubleList(flags.epsilon));
  }
  if (!grid.empty() && !epsilons.empty()) {
    return ConfigFailure(absl::InvalidArgumentError(
        "--delta-grid and --epsilon select different certify modes"));
  }
  CONFIG_OR_FAIL(DataDistribution dist, BuildDistribution(cfg));
  CONFIG_OR_FAIL(LdpMechanismConfig mechanism, ResolveMechanism(cfg, dist));
  for (double eps : epsilons) {
    CONFIG_OR_FAIL(LdpMechanismConfig ignored,
                   ResolveMechanism(cfg, dist, eps));
    (void)ignored;
  }

  Rng target_rng = MakeRng(cfg.seed, SeedStream::kCertifyTarget);
  const SampleVector target = dist.Sample(target_rng);
  RUNTIME_OR_FAIL(Matrix pool, BuildPool(cfg, dist, target));
  AttackConfig attack = cfg.game.attack;
  attack.train.seed = DeriveSeed(cfg.seed, SeedStream::kAdversaryData);
  RUNTIME_OR_FAIL(PlantedModel planted,
                  AmiInitLdp(target, dist, mechanism, attack));

  std::vector<CertifyRow> rows;
  if (!epsilons.empty()) {
    RUNTIME_OR_FAIL(std::vector<CertificationReport> reports,
                    BoundSweep(planted, target, pool, mechanism, epsilons,
                               cfg.certify.delta, cfg.certify.config));
    for (const CertificationReport& r : reports) rows.push_back(ToRow(r));
  } else if (!grid.empty()) {
    RUNTIME_OR_FAIL(
        CertificationEvidence evidence,
        GatherEvidence(planted, target, pool, mechanism, cfg.certify.config));
    RUNTIME_OR_FAIL(std::optional<CertificationReport> best,
                    MinDeltaSearch(evidence, grid));
    if (best) {
      rows.push_back(ToRow(*best));
    } else {
      RUNTIME_OR_FAIL(CertificationReport last,
                      Certify(evidence, grid.back()));
      rows.push_back(ToRow(last));
    }
  } else {
    RUNTIME_OR_FAIL(CertificationReport report,
                    CheckCertified(planted, target, pool, mechanism,
                                   cfg.certify.delta, cfg.certify.config));
    rows.push_back(ToRow(report));
  }
  return Write(OutPath(ctx, "certify", Extension(ctx.format)),
               FormatRows(absl::MakeConstSpan(rows), ctx.format), out);
}

// --------------------------------------------------------------- dpsgd

Outcome RunDpsgd(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  DpsgdSpec spec = ctx.cfg.dpsgd;
  if (flags.trials) spec.trials = *flags.trials;
  if (!flags.epsilon.empty()) {
    CONFIG_OR_FAIL(spec.epsilons, ParseDoubleList(flags.epsilon));
  }
  if (!flags.k.empty()) {
    CONFIG_OR_FAIL(spec.ks, ParseIntList(flags.k));
  }
  for (double eps : spec.epsilons) {
    DpSgdConfig probe = spec.base;
    probe.epsilon = eps;
    for (int k : spec.ks) {
      probe.k = k;
      absl::Status valid = ValidateDpSgdConfig(probe);
      if (!valid.ok()) return ConfigFailure(valid);
    }
  }
  if (spec.base.signal == 0.0) {
    return ConfigFailure(absl::InvalidArgumentError("dpsgd signal must be != 0"));
  }

  std::vector<DpsgdRow> rows;
  uint64_t index = 0;
  for (double eps : spec.epsilons) {
    for (int k : spec.ks) {
      DpSgdConfig point = spec.base;
      point.epsilon = eps;
      point.k = k;
      RUNTIME_OR_FAIL(int64_t p, RoundsToCancel(point));
      RUNTIME_OR_FAIL(
          RecoveryResult recovery,
          SimulateRecovery(point, p, spec.trials,
                           DeriveSeed(ctx.cfg.seed, SeedStream::kDpsgdNoise,
                                      index++)));
      rows.push_back({eps, point.delta, k, p, recovery.frequency});
    }
  }
  return Write(OutPath(ctx, "dpsgd", Extension(ctx.format)),
               FormatRows(absl::MakeConstSpan(rows), ctx.format), out);
}

// ----------------------------------------------------------- ldp-bench

Outcome RunLdpBench(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  ExperimentConfig& cfg = ctx.cfg;
  if (!cfg.mechanism) cfg.mechanism = MechanismOrDefault(cfg);
  const int64_t draws = flags.trials.value_or(10000);
  std::vector<double> epsilons = {cfg.mechanism->config.epsilon};
  if (!flags.epsilon.empty()) {
    CONFIG_OR_FAIL(epsilons, ParseDoubleList(flags.epsilon));
  }
  CONFIG_OR_FAIL(DataDistribution dist, BuildDistribution(cfg));
  std::vector<LdpMechanismConfig> mechanisms;
  for (double eps : epsilons) {
    CONFIG_OR_FAIL(LdpMechanismConfig m, ResolveMechanism(cfg, dist, eps));
    mechanisms.push_back(m);
  }

  Table table;
  table.columns = {"epsilon",
                   "index",
                   "p_one_given_one",
                   "p_one_given_zero",
                   "empirical_one_given_one",
                   "empirical_one_given_zero",
                   "ln_max_ratio",
                   "within_3sigma"};
  for (const LdpMechanismConfig& m : mechanisms) {
    RUNTIME_OR_FAIL(RatioReport ratios, LdpRatioReport(m));
    RUNTIME_OR_FAIL(std::vector<MarginalCheck> marginals,
                    CheckMarginals(m, draws));
    for (size_t i = 0; i < marginals.size(); ++i) {
      const MarginalCheck& c = marginals[i];
      table.rows.push_back({m.epsilon, c.index, c.p_one_given_one,
                            c.p_one_given_zero, c.empirical_one_given_one,
                            c.empirical_one_given_zero,
                            Number(ratios.bits[i].ln_max_ratio),
                            c.within_3sigma});
    }
  }
  return Write(OutPath(ctx, "ldp_bench", Extension(ctx.format)),
               table.Render(ctx.format), out);
}

// ------------------------------------------------------ export-weights

Outcome RunExportWeights(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  ExperimentConfig& cfg = ctx.cfg;
  CONFIG_OR_FAIL(DataDistribution dist, BuildDistribution(cfg));
  std::optional<LdpMechanismConfig> mechanism;
  if (cfg.mechanism) {
    std::optional<double> eps;
    if (!flags.epsilon.empty()) {
      CONFIG_OR_FAIL(std::vector<double> list, ParseDoubleList(flags.epsilon));
      if (list.size() != 1) {
        return ConfigFailure(absl::InvalidArgumentError(
            "export-weights takes a single --epsilon"));
      }
      eps = list[0];
    }
    CONFIG_OR_FAIL(mechanism, ResolveMechanism(cfg, dist, eps));
  }
  Rng target_rng = MakeRng(cfg.seed, SeedStream::kCertifyTarget);
  const SampleVector target = dist.Sample(target_rng);
  AttackConfig attack = cfg.game.attack;
  attack.train.seed = DeriveSeed(cfg.seed, SeedStream::kAdversaryData);
  RUNTIME_OR_FAIL(PlantedModel planted,
                  mechanism ? AmiInitLdp(target, dist, *mechanism, attack)
                            : AmiInit(target, dist, attack));
  std::string contents;
  if (ctx.format == OutputFormat::kCsv) {
    contents = FormatWeightsCsv(planted.params);
  } else {
    json w = json::array();
    for (int i = 0; i < planted.params.neurons(); ++i) {
      json row = json::array();
      for (int j = 0; j < planted.params.dim(); ++j) {
        row.push_back(planted.params.w(i, j));
      }
      w.push_back(std::move(row));
    }
    json h = json::array();
    json bias = json::array();
    for (int i = 0; i < planted.params.neurons(); ++i) {
      h.push_back(planted.params.h(i));
      bias.push_back(planted.params.use_bias ? planted.params.bias(i) : 0.0);
    }
    contents = json{{"h", h}, {"bias", bias}, {"w", w}}.dump(2) + "\n";
  }
  return Write(OutPath(ctx, "weights", Extension(ctx.format)), contents, out);
}

// --------------------------------------------------------------- synth

Outcome RunSynth(const Flags& flags, std::ostream& out) {
  CONFIG_OR_FAIL(Context ctx, LoadContext(flags));
  CONFIG_OR_FAIL(DatasetFormat format, ParseDatasetFormat(flags.dataset_format));
  if (flags.rows < 0) {
    return ConfigFailure(absl::InvalidArgumentError("--rows must be >= 0"));
  }
  CONFIG_OR_FAIL(DataDistribution dist, BuildDistribution(ctx.cfg));
  Rng rng = MakeRng(ctx.cfg.seed, SeedStream::kSynth, 2);
  EmbeddingDataset dataset;
  dataset.rows.resize(flags.rows, dist.dim());
  for (int64_t i = 0; i < flags.rows; ++i) {
    dataset.rows.row(i) = dist.Sample(rng).transpose();
  }
  const std::string extension = format == DatasetFormat::kCsv ? ".csv" : ".f32";
  const std::string path = OutPath(ctx, "synth", extension);
  absl::Status s = WriteDataset(dataset, format, path);
  if (!s.ok()) return RuntimeFailure(s);
  out << "wrote " << path << "\n";
  return std::nullopt;
}

void AddCommonFlags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "experiment config (JSON)");
  cmd->add_option("--seed", flags.seed, "global seed (overrides config)");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--format", flags.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Active membership inference lab"};
  app.name("ami_lab");
  app.require_subcommand(1);
  Flags flags;

  CLI::App* game = app.add_subcommand("game", "security-game campaigns");
  AddCommonFlags(game, flags);
  game->add_option("--trials", flags.trials, "trials per campaign");
  game->add_option("--epsilon", flags.epsilon, "epsilon sweep, e.g. 1,3,5,10");

  CLI::App* certify = app.add_subcommand("certify", "certified guarantees");
  AddCommonFlags(certify, flags);
  certify->add_option("--delta-grid", flags.delta_grid,
                      "decade grid for the minimal delta, e.g. 1e-8:1e-1");
  certify->add_option("--epsilon", flags.epsilon, "epsilon list (bound sweep)");

  CLI::App* dpsgd = app.add_subcommand("dpsgd", "DPSGD noise cancellation");
  AddCommonFlags(dpsgd, flags);
  dpsgd->add_option("--trials", flags.trials, "recovery trials per row");
  dpsgd->add_option("--epsilon", flags.epsilon, "epsilon list");
  dpsgd->add_option("--k", flags.k, "chosen-neuron counts, e.g. 1,2,4,8");

  CLI::App* bench = app.add_subcommand("ldp-bench", "LDP ratio and marginals");
  AddCommonFlags(bench, flags);
  bench->add_option("--trials", flags.trials, "Monte-Carlo draws");
  bench->add_option("--epsilon", flags.epsilon, "epsilon list");

  CLI::App* weights =
      app.add_subcommand("export-weights", "dump a planted neuron's W and h");
  AddCommonFlags(weights, flags);
  weights->add_option("--epsilon", flags.epsilon, "epsilon of the LDP attack");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset");
  AddCommonFlags(synth, flags);
  synth->add_option("--rows", flags.rows, "number of samples");
  synth->add_option("--dataset-format", flags.dataset_format,
                    "csv or raw-f32")
      ->check(CLI::IsMember({"csv", "raw-f32"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Outcome failure;
  if (*game) {
    failure = RunGame(flags, out);
  } else if (*certify) {
    failure = RunCertify(flags, out);
  } else if (*dpsgd) {
    failure = RunDpsgd(flags, out);
  } else if (*bench) {
    failure = RunLdpBench(flags, out);
  } else if (*weights) {
    failure = RunExportWeights(flags, out);
  } else if (*synth) {
    failure = RunSynth(flags, out);
  }
  if (failure) {
    err << (failure->code == kExitConfig ? "config error: "
                                         : "runtime error: ")
        << failure->status.message() << "\n";
    return failure->code;
  }
  return kExitOk;
}

}  // namespace ami_lab
