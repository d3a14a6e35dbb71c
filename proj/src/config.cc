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

#include "ami_lab/config.h"

#include <cmath>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "ami_lab/status_macros.h"
#include "json.hpp"

namespace ami_lab {
namespace {

using nlohmann::json;

absl::Status ConfigError(absl::string_view where, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("config ", where, ": ", what));
}

// Reads typed fields from one JSON object and rejects keys never asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {}

  absl::Status Check() const {
    if (!j_.is_object()) return ConfigError(name_, "expected an object");
    return absl::OkStatus();
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& Raw(const std::string& key) const { return j_.at(key); }
  std::string Path(const std::string& key) const {
    return absl::StrCat(name_, ".", key);
  }

  absl::Status Get(const std::string& key, double* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_number()) return ConfigError(Path(key), "not a number");
    *out = Raw(key).get<double>();
    return absl::OkStatus();
  }
  absl::Status Get(const std::string& key, int* out) {
    int64_t v = *out;
    RETURN_IF_ERROR(Get(key, &v));
    if (v < INT32_MIN || v > INT32_MAX) {
      return ConfigError(Path(key), "out of range");
    }
    *out = static_cast<int>(v);
    return absl::OkStatus();
  }
  absl::Status Get(const std::string& key, int64_t* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_number_integer()) {
      return ConfigError(Path(key), "not an integer");
    }
    *out = Raw(key).get<int64_t>();
    return absl::OkStatus();
  }
  absl::Status Get(const std::string& key, uint64_t* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_number_unsigned()) {
      return ConfigError(Path(key), "not an unsigned integer");
    }
    *out = Raw(key).get<uint64_t>();
    return absl::OkStatus();
  }
  absl::Status Get(const std::string& key, bool* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_boolean()) return ConfigError(Path(key), "not a boolean");
    *out = Raw(key).get<bool>();
    return absl::OkStatus();
  }
  absl::Status Get(const std::string& key, std::string* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_string()) return ConfigError(Path(key), "not a string");
    *out = Raw(key).get<std::string>();
    return absl::OkStatus();
  }
  template <typename T>
  absl::Status Get(const std::string& key, std::vector<T>* out) {
    if (!Has(key)) return absl::OkStatus();
    if (!Raw(key).is_array()) return ConfigError(Path(key), "not an array");
    out->clear();
    for (const json& v : Raw(key)) {
      if (!v.is_number() ||
          (std::is_integral_v<T> && !v.is_number_integer())) {
        return ConfigError(Path(key), "array holds a non-number");
      }
      out->push_back(v.get<T>());
    }
    return absl::OkStatus();
  }

  absl::Status Finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        return ConfigError(name_, absl::StrCat("unknown key '", item.key(),
                                               "'"));
      }
    }
    return absl::OkStatus();
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

absl::Status ReadDistribution(const json& j, DistributionSpec& spec) {
  Section s(j, "distribution");
  RETURN_IF_ERROR(s.Check());
  std::string kind = "mixture";
  RETURN_IF_ERROR(s.Get("kind", &kind));
  if (kind == "mixture") {
    spec.kind = DistributionSpec::Kind::kMixture;
  } else if (kind == "one-hot") {
    spec.kind = DistributionSpec::Kind::kOneHot;
  } else if (kind == "file") {
    spec.kind = DistributionSpec::Kind::kFile;
  } else {
    return ConfigError("distribution.kind", absl::StrCat("unknown '", kind,
                                                         "'"));
  }
  RETURN_IF_ERROR(s.Get("dim", &spec.dim));
  RETURN_IF_ERROR(s.Get("components", &spec.components));
  RETURN_IF_ERROR(s.Get("mean_scale", &spec.mean_scale));
  RETURN_IF_ERROR(s.Get("component_stddev", &spec.component_stddev));
  RETURN_IF_ERROR(s.Get("path", &spec.path));
  std::string format = "csv";
  RETURN_IF_ERROR(s.Get("format", &format));
  absl::StatusOr<DatasetFormat> parsed = ParseDatasetFormat(format);
  if (!parsed.ok()) return ConfigError("distribution.format", format);
  spec.format = *parsed;
  return s.Finish();
}

absl::Status ReadTrain(const json& j, TrainConfig& train) {
  Section s(j, "attack.train");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("learning_rate", &train.learning_rate));
  RETURN_IF_ERROR(s.Get("epochs", &train.epochs));
  std::string optimizer = "adam";
  RETURN_IF_ERROR(s.Get("optimizer", &optimizer));
  if (optimizer == "adam") {
    train.optimizer = Optimizer::kAdam;
  } else if (optimizer == "sgd") {
    train.optimizer = Optimizer::kSgd;
  } else {
    return ConfigError("attack.train.optimizer", optimizer);
  }
  RETURN_IF_ERROR(s.Get("positive_weight", &train.positive_weight));
  RETURN_IF_ERROR(s.Get("target_loss", &train.target_loss));
  return s.Finish();
}

absl::Status ReadAttack(const json& j, AttackConfig& attack) {
  Section s(j, "attack");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("m", &attack.m));
  RETURN_IF_ERROR(s.Get("r", &attack.r));
  RETURN_IF_ERROR(s.Get("l_draws", &attack.l_draws));
  RETURN_IF_ERROR(s.Get("zero_tolerance", &attack.zero_tolerance));
  RETURN_IF_ERROR(s.Get("perturb_negatives", &attack.perturb_negatives));
  RETURN_IF_ERROR(s.Get("use_bias", &attack.use_bias));
  RETURN_IF_ERROR(s.Get("trained_loss", &attack.trained_loss));
  RETURN_IF_ERROR(s.Get("restarts", &attack.restarts));
  RETURN_IF_ERROR(s.Get("restart_loss", &attack.restart_loss));
  if (s.Has("train")) RETURN_IF_ERROR(ReadTrain(s.Raw("train"), attack.train));
  return s.Finish();
}

absl::Status ReadGame(const json& j, GameConfig& game) {
  Section s(j, "game");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("batch_size", &game.batch_size));
  RETURN_IF_ERROR(s.Get("trials", &game.trials));
  RETURN_IF_ERROR(s.Get("strict", &game.strict));
  std::string adversary = "ami";
  RETURN_IF_ERROR(s.Get("adversary", &adversary));
  if (adversary == "ami") {
    game.adversary = AdversaryKind::kAmi;
  } else if (adversary == "coin-flip") {
    game.adversary = AdversaryKind::kCoinFlip;
  } else {
    return ConfigError("game.adversary", adversary);
  }
  return s.Finish();
}

absl::Status ReadMechanism(const json& j, MechanismSpec& spec) {
  Section s(j, "mechanism");
  RETURN_IF_ERROR(s.Check());
  std::string kind = "bitrand";
  RETURN_IF_ERROR(s.Get("kind", &kind));
  if (kind == "bitrand") {
    spec.config.mechanism = Mechanism::kBitRand;
  } else if (kind == "ome") {
    spec.config.mechanism = Mechanism::kOme;
  } else {
    return ConfigError("mechanism.kind", kind);
  }
  RETURN_IF_ERROR(s.Get("epsilon", &spec.config.epsilon));
  if (s.Has("alpha")) {
    double alpha = 0.0;
    RETURN_IF_ERROR(s.Get("alpha", &alpha));
    spec.config.alpha = alpha;
  }
  EncodingConfig& enc = spec.config.encoding;
  RETURN_IF_ERROR(s.Get("bits_per_feature", &enc.bits_per_feature));
  const bool has_min = s.Has("value_min");
  const bool has_max = s.Has("value_max");
  if (has_min != has_max) {
    return ConfigError("mechanism", "set both value_min and value_max or none");
  }
  RETURN_IF_ERROR(s.Get("value_min", &enc.value_min));
  RETURN_IF_ERROR(s.Get("value_max", &enc.value_max));
  spec.auto_range = !has_min;
  std::string order = "msb-first";
  RETURN_IF_ERROR(s.Get("bit_order", &order));
  if (order == "msb-first") {
    enc.bit_order = BitOrder::kMsbFirst;
  } else if (order == "lsb-first") {
    enc.bit_order = BitOrder::kLsbFirst;
  } else {
    return ConfigError("mechanism.bit_order", order);
  }
  return s.Finish();
}

absl::Status ReadCertify(const json& j, CertifySpec& spec) {
  Section s(j, "certify");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("p", &spec.config.p));
  RETURN_IF_ERROR(s.Get("q", &spec.config.q));
  RETURN_IF_ERROR(s.Get("pool_size", &spec.pool_size));
  RETURN_IF_ERROR(s.Get("delta", &spec.delta));
  RETURN_IF_ERROR(s.Get("delta_grid", &spec.delta_grid));
  RETURN_IF_ERROR(s.Get("range_inflation", &spec.config.range.inflation));
  RETURN_IF_ERROR(s.Get("range_floor", &spec.config.range.floor));
  if (s.Has("known_range")) {
    double range = 0.0;
    RETURN_IF_ERROR(s.Get("known_range", &range));
    spec.config.range.known_range = range;
  }
  return s.Finish();
}

absl::Status ReadDpsgd(const json& j, DpsgdSpec& spec) {
  Section s(j, "dpsgd");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("delta", &spec.base.delta));
  RETURN_IF_ERROR(s.Get("k", &spec.ks));
  RETURN_IF_ERROR(s.Get("epsilons", &spec.epsilons));
  RETURN_IF_ERROR(s.Get("detection_z", &spec.base.detection_z));
  RETURN_IF_ERROR(s.Get("signal", &spec.base.signal));
  RETURN_IF_ERROR(s.Get("trials", &spec.trials));
  return s.Finish();
}

bool StrictlyAscending(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (!(v[i - 1] < v[i])) return false;
  }
  return true;
}

}  // namespace

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return ConfigError("file", "malformed JSON");
  ExperimentConfig cfg;
  Section s(doc, "root");
  RETURN_IF_ERROR(s.Check());
  RETURN_IF_ERROR(s.Get("seed", &cfg.seed));
  RETURN_IF_ERROR(s.Get("output_dir", &cfg.output_dir));
  if (s.Has("distribution")) {
    RETURN_IF_ERROR(ReadDistribution(s.Raw("distribution"), cfg.distribution));
  }
  if (s.Has("game")) RETURN_IF_ERROR(ReadGame(s.Raw("game"), cfg.game));
  if (s.Has("attack")) RETURN_IF_ERROR(ReadAttack(s.Raw("attack"), cfg.game.attack));
  if (s.Has("mechanism")) {
    MechanismSpec spec;
    RETURN_IF_ERROR(ReadMechanism(s.Raw("mechanism"), spec));
    cfg.mechanism = spec;
  }
  RETURN_IF_ERROR(s.Get("epsilons", &cfg.epsilons));
  if (s.Has("certify")) RETURN_IF_ERROR(ReadCertify(s.Raw("certify"), cfg.certify));
  if (s.Has("dpsgd")) RETURN_IF_ERROR(ReadDpsgd(s.Raw("dpsgd"), cfg.dpsgd));
  RETURN_IF_ERROR(s.Finish());

  cfg.game.seed = cfg.seed;
  cfg.certify.config.seed = cfg.seed;
  if (cfg.mechanism) cfg.mechanism->config.seed = cfg.seed;
  RETURN_IF_ERROR(ValidateExperimentConfig(cfg));
  return cfg;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return ConfigError(path, text.status().message());
  return ParseExperimentConfig(*text);
}

absl::Status ValidateExperimentConfig(const ExperimentConfig& cfg) {
  const DistributionSpec& d = cfg.distribution;
  if (d.kind != DistributionSpec::Kind::kFile && d.dim < 1) {
    return ConfigError("distribution.dim", "must be >= 1");
  }
  if (d.kind == DistributionSpec::Kind::kMixture) {
    if (d.components < 1) {
      return ConfigError("distribution.components", "must be >= 1");
    }
    if (!(d.component_stddev >= 0.0) || !(d.mean_scale >= 0.0)) {
      return ConfigError("distribution", "scales must be non-negative");
    }
  }
  if (d.kind == DistributionSpec::Kind::kFile && d.path.empty()) {
    return ConfigError("distribution.path", "required for kind 'file'");
  }
  if (cfg.game.batch_size < 2) {
    return ConfigError("game.batch_size", "n must be >= 2");
  }
  if (cfg.game.trials < 1) return ConfigError("game.trials", "must be >= 1");
  absl::Status attack = ValidateAttackConfig(cfg.game.attack);
  if (!attack.ok()) return ConfigError("attack", attack.message());
  if (cfg.mechanism) {
    const LdpMechanismConfig& m = cfg.mechanism->config;
    if (!(m.epsilon > 0.0) || !std::isfinite(m.epsilon)) {
      return ConfigError("mechanism.epsilon", "must be finite and > 0");
    }
    if (m.alpha && !(*m.alpha > 0.0)) {
      return ConfigError("mechanism.alpha", "must be > 0");
    }
    const EncodingConfig& e = m.encoding;
    if (e.bits_per_feature < 1 || e.bits_per_feature > 32) {
      return ConfigError("mechanism.bits_per_feature", "must lie in [1, 32]");
    }
    if (!cfg.mechanism->auto_range && !(e.value_min < e.value_max)) {
      return ConfigError("mechanism", "value_min must be < value_max");
    }
  }
  for (double eps : cfg.epsilons) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      return ConfigError("epsilons", "entries must be finite and > 0");
    }
  }
  if (!StrictlyAscending(cfg.epsilons)) {
    return ConfigError("epsilons", "must be strictly ascending");
  }
  const CertifySpec& c = cfg.certify;
  if (c.config.p < 1 || c.config.q < 1) {
    return ConfigError("certify", "p and q must be >= 1");
  }
  if (c.pool_size < 0) return ConfigError("certify.pool_size", "negative");
  if (!(c.delta > 0.0 && c.delta < 1.0)) {
    return ConfigError("certify.delta", "must lie in (0, 1)");
  }
  if (c.delta_grid.empty() || !StrictlyAscending(c.delta_grid) ||
      !(c.delta_grid.front() > 0.0) || !(c.delta_grid.back() < 1.0)) {
    return ConfigError("certify.delta_grid",
                       "must be non-empty, strictly ascending, inside (0, 1)");
  }
  if (!(c.config.range.inflation >= 1.0) || !(c.config.range.floor > 0.0)) {
    return ConfigError("certify", "range_inflation >= 1 and range_floor > 0");
  }
  if (c.config.range.known_range && !(*c.config.range.known_range > 0.0)) {
    return ConfigError("certify.known_range", "must be > 0");
  }
  const DpsgdSpec& p = cfg.dpsgd;
  DpSgdConfig probe = p.base;
  probe.epsilon = 1.0;
  absl::Status dp = ValidateDpSgdConfig(probe);
  if (!dp.ok()) return ConfigError("dpsgd", dp.message());
  if (p.base.signal == 0.0) return ConfigError("dpsgd.signal", "must be != 0");
  if (p.trials < 1) return ConfigError("dpsgd.trials", "must be >= 1");
  for (int k : p.ks) {
    if (k < 1) return ConfigError("dpsgd.k", "entries must be >= 1");
  }
  for (double eps : p.epsilons) {
    if (!(eps > 0.0)) return ConfigError("dpsgd.epsilons", "must be > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<DataDistribution> BuildDistribution(
    const ExperimentConfig& cfg) {
  const DistributionSpec& d = cfg.distribution;
  switch (d.kind) {
    case DistributionSpec::Kind::kMixture:
      return DataDistribution::RandomMixture(
          d.dim, d.components, d.mean_scale, d.component_stddev,
          DeriveSeed(cfg.seed, SeedStream::kSynth));
    case DistributionSpec::Kind::kOneHot:
      return DataDistribution::OneHot(d.dim);
    case DistributionSpec::Kind::kFile: {
      ASSIGN_OR_RETURN(EmbeddingDataset data, LoadDataset(d.path, d.format));
      return DataDistribution::FileBacked(std::move(data));
    }
  }
  return absl::InternalError("unhandled distribution kind");
}

absl::StatusOr<LdpMechanismConfig> ResolveMechanism(
    const ExperimentConfig& cfg, const DataDistribution& dist,
    std::optional<double> epsilon) {
  if (!cfg.mechanism) return ConfigError("mechanism", "section missing");
  LdpMechanismConfig m = cfg.mechanism->config;
  if (epsilon) m.epsilon = *epsilon;
  m.encoding.features = dist.dim();
  if (cfg.mechanism->auto_range) {
    const auto [lo, hi] =
        dist.ValueRange(DeriveSeed(cfg.seed, SeedStream::kSynth, 1));
    m.encoding.value_min = lo;
    m.encoding.value_max = hi > lo ? hi : lo + 1.0;
  }
  absl::Status valid = ValidateMechanism(m);
  if (!valid.ok()) {
    return ConfigError("mechanism",
                       absl::StrCat(valid.message(), " at epsilon ", m.epsilon));
  }
  return m;
}

absl::StatusOr<std::vector<double>> ParseDoubleList(absl::string_view text) {
  std::vector<double> out;
  for (absl::string_view part : absl::StrSplit(text, ',')) {
    double v = 0.0;
    if (!absl::SimpleAtod(part, &v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot parse number '", part, "'"));
    }
    out.push_back(v);
  }
  return out;
}

absl::StatusOr<std::vector<int>> ParseIntList(absl::string_view text) {
  std::vector<int> out;
  for (absl::string_view part : absl::StrSplit(text, ',')) {
    int v = 0;
    if (!absl::SimpleAtoi(part, &v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot parse integer '", part, "'"));
    }
    out.push_back(v);
  }
  return out;
}

absl::StatusOr<std::vector<double>> ParseDeltaGrid(absl::string_view text) {
  std::vector<absl::string_view> ends = absl::StrSplit(text, ':');
  double lo = 0.0;
  double hi = 0.0;
  if (ends.size() != 2 || !absl::SimpleAtod(ends[0], &lo) ||
      !absl::SimpleAtod(ends[1], &hi)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta grid must look like 1e-8:1e-1, got '", text, "'"));
  }
  if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
    return absl::InvalidArgumentError(
        "delta grid needs 0 < low <= high < 1");
  }
  std::vector<double> grid;
  const int first = static_cast<int>(std::lround(std::log10(lo)));
  const int last = static_cast<int>(std::lround(std::log10(hi)));
  if (std::abs(std::log10(lo) - first) > 1e-9 ||
      std::abs(std::log10(hi) - last) > 1e-9) {
    return absl::InvalidArgumentError("delta grid ends must be powers of ten");
  }
  for (int e = first; e <= last; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

}  // namespace ami_lab
