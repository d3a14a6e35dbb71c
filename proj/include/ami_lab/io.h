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

// Dataset ingestion and result files.

#ifndef AMI_LAB_IO_H_
#define AMI_LAB_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "absl/types/span.h"
#include "ami_lab/certify.h"
#include "ami_lab/distribution.h"
#include "ami_lab/game.h"

namespace ami_lab {

enum class DatasetFormat { kCsv, kRawF32 };
enum class OutputFormat { kCsv, kJson };

absl::StatusOr<DatasetFormat> ParseDatasetFormat(absl::string_view name);
absl::StatusOr<OutputFormat> ParseOutputFormat(absl::string_view name);

// One row per sample. A header line is accepted when its first field is not
// numeric; only with a header can a trailing `group` column carry integer
// group ids.
absl::StatusOr<EmbeddingDataset> ParseCsvDataset(absl::string_view text);
// Header of two little-endian u64 (N, d), then N*d little-endian float32.
absl::StatusOr<EmbeddingDataset> ParseRawF32Dataset(absl::string_view bytes);
absl::StatusOr<EmbeddingDataset> LoadDataset(const std::string& path,
                                             DatasetFormat format);

std::string FormatCsvDataset(const EmbeddingDataset& dataset);
std::string FormatRawF32Dataset(const EmbeddingDataset& dataset);
absl::Status WriteDataset(const EmbeddingDataset& dataset,
                          DatasetFormat format, const std::string& path);

absl::StatusOr<std::string> ReadFile(const std::string& path);
// Writes to a sibling temp file, then renames over `path`.
absl::Status WriteFileAtomic(const std::string& path,
                             absl::string_view contents);

// Shortest decimal that parses back to the same double.
std::string FormatDouble(double v);

struct GameRow {
  double epsilon = 0.0;
  double advantage = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int64_t trials = 0;
  int64_t failures = 0;

  bool operator==(const GameRow&) const = default;
};

struct CertifyRow {
  double epsilon = 0.0;
  double delta = 0.0;
  double target_mean = 0.0;
  double target_lb = 0.0;
  double nontarget_max_mean = 0.0;
  double nontarget_ub = 0.0;
  bool certified = false;

  bool operator==(const CertifyRow&) const = default;
};

struct DpsgdRow {
  double epsilon = 0.0;
  double delta = 0.0;
  int k = 0;
  int64_t p = 0;
  double recovery_frequency = 0.0;

  bool operator==(const DpsgdRow&) const = default;
};

GameRow ToRow(const SuccessReport& report);
CertifyRow ToRow(const CertificationReport& report);

inline constexpr char kGameCsvHeader[] =
    "epsilon,advantage,tpr,tnr,ci_low,ci_high,trials,failures";
inline constexpr char kCertifyCsvHeader[] =
    "epsilon,delta,target_mean,target_lb,nontarget_max_mean,nontarget_ub,"
    "certified";
inline constexpr char kDpsgdCsvHeader[] =
    "epsilon,delta,K,P,recovery_frequency";

std::string FormatRows(absl::Span<const GameRow> rows, OutputFormat format);
std::string FormatRows(absl::Span<const CertifyRow> rows, OutputFormat format);
std::string FormatRows(absl::Span<const DpsgdRow> rows, OutputFormat format);

// JSON readers for the arrays written by FormatRows.
absl::StatusOr<std::vector<GameRow>> ParseGameRowsJson(absl::string_view text);
absl::StatusOr<std::vector<CertifyRow>> ParseCertifyRowsJson(
    absl::string_view text);
absl::StatusOr<std::vector<DpsgdRow>> ParseDpsgdRowsJson(
    absl::string_view text);

// One row per first-layer neuron: neuron,h,bias,w0..w{d-1}.
std::string FormatWeightsCsv(const ChosenNeuronParams& params);

}  // namespace ami_lab

#endif  // AMI_LAB_IO_H_
