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

#include "ami_lab/io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "ami_lab/status_macros.h"
#include "json.hpp"

namespace ami_lab {
namespace {

using nlohmann::json;

bool ParseNumber(absl::string_view field, double* out) {
  return absl::SimpleAtod(absl::StripAsciiWhitespace(field), out);
}

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

uint64_t GetU64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

json JsonNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

absl::StatusOr<double> JsonToDouble(const json& j, const char* key) {
  if (!j.contains(key)) {
    return absl::InvalidArgumentError(absl::StrCat("missing field ", key));
  }
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    double out = 0.0;
    if (absl::SimpleAtod(v.get<std::string>(), &out)) return out;
  }
  return absl::InvalidArgumentError(absl::StrCat("field ", key,
                                                 " is not a number"));
}

absl::StatusOr<int64_t> JsonToInt(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    return absl::InvalidArgumentError(
        absl::StrCat("missing or non-integer field ", key));
  }
  return j.at(key).get<int64_t>();
}

absl::StatusOr<json> ParseJsonArray(absl::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_array()) {
    return absl::InvalidArgumentError("expected a JSON array of rows");
  }
  return doc;
}

std::string DumpJson(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

absl::StatusOr<DatasetFormat> ParseDatasetFormat(absl::string_view name) {
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "raw-f32") return DatasetFormat::kRawF32;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown dataset format '", name, "'"));
}

absl::StatusOr<OutputFormat> ParseOutputFormat(absl::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown output format '", name, "'"));
}

absl::StatusOr<EmbeddingDataset> ParseCsvDataset(absl::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<int64_t> groups;
  bool has_group = false;
  int width = -1;
  int line_number = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_number;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(line, ',');
    double probe = 0.0;
    if (width < 0 && !ParseNumber(fields[0], &probe)) {
      has_group = absl::StripAsciiWhitespace(fields.back()) == "group";
      width = static_cast<int>(fields.size());
      continue;
    }
    if (width < 0) width = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != width) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": expected ", width,
                       " fields, got ", fields.size()));
    }
    const int values = has_group ? width - 1 : width;
    std::vector<double> row(values);
    for (int j = 0; j < values; ++j) {
      if (!ParseNumber(fields[j], &row[j])) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_number, ": cannot parse '", fields[j],
                         "' in column ", j));
      }
      if (!std::isfinite(row[j])) {
        return absl::DataLossError(
            absl::StrCat("non-finite value in row ", rows.size(), " (line ",
                         line_number, "), column ", j));
      }
    }
    if (has_group) {
      int64_t g = 0;
      if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(fields.back()), &g)) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_number, ": bad group id '",
                         fields.back(), "'"));
      }
      groups.push_back(g);
    }
    rows.push_back(std::move(row));
  }
  EmbeddingDataset dataset;
  const int d = width < 0 ? 0 : (has_group ? width - 1 : width);
  if (d < 1 && !rows.empty()) {
    return absl::InvalidArgumentError("rows carry no feature columns");
  }
  dataset.rows.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) dataset.rows(i, j) = rows[i][j];
  }
  dataset.groups = std::move(groups);
  return dataset;
}

absl::StatusOr<EmbeddingDataset> ParseRawF32Dataset(absl::string_view bytes) {
  if (bytes.size() < 16) {
    return absl::InvalidArgumentError("raw-f32 file shorter than its header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint64_t n = GetU64(p);
  const uint64_t d = GetU64(p + 8);
  const uint64_t limit = std::numeric_limits<int32_t>::max();
  if (n > limit || d > limit || (n > 0 && d > (bytes.size() / 4) / n + 1)) {
    return absl::InvalidArgumentError("raw-f32 header sizes are implausible");
  }
  if (bytes.size() != 16 + 4 * n * d) {
    return absl::InvalidArgumentError(
        absl::StrCat("raw-f32 payload has ", bytes.size() - 16,
                     " bytes, header promises ", 4 * n * d));
  }
  EmbeddingDataset dataset;
  dataset.rows.resize(static_cast<Eigen::Index>(n),
                      static_cast<Eigen::Index>(d));
  const unsigned char* q = p + 16;
  for (uint64_t i = 0; i < n; ++i) {
    for (uint64_t j = 0; j < d; ++j, q += 4) {
      const uint32_t u = static_cast<uint32_t>(q[0]) |
                         (static_cast<uint32_t>(q[1]) << 8) |
                         (static_cast<uint32_t>(q[2]) << 16) |
                         (static_cast<uint32_t>(q[3]) << 24);
      float f;
      std::memcpy(&f, &u, 4);
      if (!std::isfinite(f)) {
        return absl::DataLossError(
            absl::StrCat("non-finite value in row ", i, ", column ", j));
      }
      dataset.rows(i, j) = f;
    }
  }
  return dataset;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return absl::DataLossError(absl::StrCat("read failed: ", path));
  return buffer.str();
}

absl::StatusOr<EmbeddingDataset> LoadDataset(const std::string& path,
                                             DatasetFormat format) {
  ASSIGN_OR_RETURN(std::string contents, ReadFile(path));
  absl::StatusOr<EmbeddingDataset> dataset =
      format == DatasetFormat::kCsv ? ParseCsvDataset(contents)
                                    : ParseRawF32Dataset(contents);
  if (!dataset.ok()) {
    return absl::Status(dataset.status().code(),
                        absl::StrCat(path, ": ", dataset.status().message()));
  }
  return dataset;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, result.ptr);
}

std::string FormatCsvDataset(const EmbeddingDataset& dataset) {
  const bool grouped = !dataset.groups.empty();
  std::string out;
  std::vector<std::string> header;
  for (int j = 0; j < dataset.dim(); ++j) header.push_back(absl::StrCat("x", j));
  if (grouped) header.push_back("group");
  absl::StrAppend(&out, absl::StrJoin(header, ","), "\n");
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dim(); ++j) {
      if (j > 0) out.push_back(',');
      out += FormatDouble(dataset.rows(i, j));
    }
    if (grouped) absl::StrAppend(&out, ",", dataset.groups[i]);
    out.push_back('\n');
  }
  return out;
}

std::string FormatRawF32Dataset(const EmbeddingDataset& dataset) {
  std::string out;
  PutU64(out, static_cast<uint64_t>(dataset.size()));
  PutU64(out, static_cast<uint64_t>(dataset.dim()));
  out.reserve(16 + 4 * dataset.size() * dataset.dim());
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < dataset.dim(); ++j) {
      const float f = static_cast<float>(dataset.rows(i, j));
      uint32_t u;
      std::memcpy(&u, &f, 4);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>(u >> (8 * b)));
    }
  }
  return out;
}

absl::Status WriteDataset(const EmbeddingDataset& dataset,
                          DatasetFormat format, const std::string& path) {
  return WriteFileAtomic(path, format == DatasetFormat::kCsv
                                   ? FormatCsvDataset(dataset)
                                   : FormatRawF32Dataset(dataset));
}

absl::Status WriteFileAtomic(const std::string& path,
                             absl::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
      return absl::InternalError(absl::StrCat(
          "cannot create ", target.parent_path().string(), ": ", ec.message()));
    }
  }
  const std::string temp =
      absl::StrCat(path, ".tmp.", static_cast<int64_t>(::getpid()));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", temp));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::remove(temp.c_str());
      return absl::InternalError(absl::StrCat("write failed: ", temp));
    }
  }
  fs::rename(temp, target, ec);
  if (ec) {
    std::remove(temp.c_str());
    return absl::InternalError(
        absl::StrCat("cannot rename onto ", path, ": ", ec.message()));
  }
  return absl::OkStatus();
}

GameRow ToRow(const SuccessReport& report) {
  GameRow row;
  row.epsilon = report.epsilon;
  row.advantage = report.advantage;
  row.tpr = report.tpr;
  row.tnr = report.tnr;
  row.ci_low = report.advantage_ci.low;
  row.ci_high = report.advantage_ci.high;
  row.trials = report.trials;
  row.failures = report.failures;
  return row;
}

CertifyRow ToRow(const CertificationReport& report) {
  CertifyRow row;
  row.epsilon = report.epsilon;
  row.delta = report.delta;
  row.target_mean = report.target_mean;
  row.target_lb = report.lb_target;
  row.nontarget_max_mean = report.nontarget_max_mean;
  row.nontarget_ub = report.ub_nontarget;
  row.certified = report.certified;
  return row;
}

std::string FormatRows(absl::Span<const GameRow> rows, OutputFormat format) {
  if (format == OutputFormat::kJson) {
    json doc = json::array();
    for (const GameRow& r : rows) {
      json j;
      j["epsilon"] = JsonNumber(r.epsilon);
      j["advantage"] = JsonNumber(r.advantage);
      j["tpr"] = JsonNumber(r.tpr);
      j["tnr"] = JsonNumber(r.tnr);
      j["ci_low"] = JsonNumber(r.ci_low);
      j["ci_high"] = JsonNumber(r.ci_high);
      j["trials"] = r.trials;
      j["failures"] = r.failures;
      doc.push_back(std::move(j));
    }
    return DumpJson(doc);
  }
  std::string out = absl::StrCat(kGameCsvHeader, "\n");
  for (const GameRow& r : rows) {
    absl::StrAppend(&out, FormatDouble(r.epsilon), ",",
                    FormatDouble(r.advantage), ",", FormatDouble(r.tpr), ",",
                    FormatDouble(r.tnr), ",", FormatDouble(r.ci_low), ",",
                    FormatDouble(r.ci_high), ",", r.trials, ",", r.failures,
                    "\n");
  }
  return out;
}

std::string FormatRows(absl::Span<const CertifyRow> rows,
                       OutputFormat format) {
  if (format == OutputFormat::kJson) {
    json doc = json::array();
    for (const CertifyRow& r : rows) {
      json j;
      j["epsilon"] = JsonNumber(r.epsilon);
      j["delta"] = JsonNumber(r.delta);
      j["target_mean"] = JsonNumber(r.target_mean);
      j["target_lb"] = JsonNumber(r.target_lb);
      j["nontarget_max_mean"] = JsonNumber(r.nontarget_max_mean);
      j["nontarget_ub"] = JsonNumber(r.nontarget_ub);
      j["certified"] = r.certified;
      doc.push_back(std::move(j));
    }
    return DumpJson(doc);
  }
  std::string out = absl::StrCat(kCertifyCsvHeader, "\n");
  for (const CertifyRow& r : rows) {
    absl::StrAppend(&out, FormatDouble(r.epsilon), ",", FormatDouble(r.delta),
                    ",", FormatDouble(r.target_mean), ",",
                    FormatDouble(r.target_lb), ",",
                    FormatDouble(r.nontarget_max_mean), ",",
                    FormatDouble(r.nontarget_ub), ",",
                    r.certified ? "true" : "false", "\n");
  }
  return out;
}

std::string FormatRows(absl::Span<const DpsgdRow> rows, OutputFormat format) {
  if (format == OutputFormat::kJson) {
    json doc = json::array();
    for (const DpsgdRow& r : rows) {
      json j;
      j["epsilon"] = JsonNumber(r.epsilon);
      j["delta"] = JsonNumber(r.delta);
      j["K"] = r.k;
      j["P"] = r.p;
      j["recovery_frequency"] = JsonNumber(r.recovery_frequency);
      doc.push_back(std::move(j));
    }
    return DumpJson(doc);
  }
  std::string out = absl::StrCat(kDpsgdCsvHeader, "\n");
  for (const DpsgdRow& r : rows) {
    absl::StrAppend(&out, FormatDouble(r.epsilon), ",", FormatDouble(r.delta),
                    ",", r.k, ",", r.p, ",",
                    FormatDouble(r.recovery_frequency), "\n");
  }
  return out;
}

absl::StatusOr<std::vector<GameRow>> ParseGameRowsJson(absl::string_view text) {
  ASSIGN_OR_RETURN(json doc, ParseJsonArray(text));
  std::vector<GameRow> rows;
  for (const json& j : doc) {
    if (!j.is_object()) return absl::InvalidArgumentError("row is not an object");
    GameRow r;
    ASSIGN_OR_RETURN(r.epsilon, JsonToDouble(j, "epsilon"));
    ASSIGN_OR_RETURN(r.advantage, JsonToDouble(j, "advantage"));
    ASSIGN_OR_RETURN(r.tpr, JsonToDouble(j, "tpr"));
    ASSIGN_OR_RETURN(r.tnr, JsonToDouble(j, "tnr"));
    ASSIGN_OR_RETURN(r.ci_low, JsonToDouble(j, "ci_low"));
    ASSIGN_OR_RETURN(r.ci_high, JsonToDouble(j, "ci_high"));
    ASSIGN_OR_RETURN(r.trials, JsonToInt(j, "trials"));
    ASSIGN_OR_RETURN(r.failures, JsonToInt(j, "failures"));
    rows.push_back(r);
  }
  return rows;
}

absl::StatusOr<std::vector<CertifyRow>> ParseCertifyRowsJson(
    absl::string_view text) {
  ASSIGN_OR_RETURN(json doc, ParseJsonArray(text));
  std::vector<CertifyRow> rows;
  for (const json& j : doc) {
    if (!j.is_object()) return absl::InvalidArgumentError("row is not an object");
    CertifyRow r;
    ASSIGN_OR_RETURN(r.epsilon, JsonToDouble(j, "epsilon"));
    ASSIGN_OR_RETURN(r.delta, JsonToDouble(j, "delta"));
    ASSIGN_OR_RETURN(r.target_mean, JsonToDouble(j, "target_mean"));
    ASSIGN_OR_RETURN(r.target_lb, JsonToDouble(j, "target_lb"));
    ASSIGN_OR_RETURN(r.nontarget_max_mean,
                     JsonToDouble(j, "nontarget_max_mean"));
    ASSIGN_OR_RETURN(r.nontarget_ub, JsonToDouble(j, "nontarget_ub"));
    if (!j.contains("certified") || !j.at("certified").is_boolean()) {
      return absl::InvalidArgumentError("missing boolean field certified");
    }
    r.certified = j.at("certified").get<bool>();
    rows.push_back(r);
  }
  return rows;
}

absl::StatusOr<std::vector<DpsgdRow>> ParseDpsgdRowsJson(
    absl::string_view text) {
  ASSIGN_OR_RETURN(json doc, ParseJsonArray(text));
  std::vector<DpsgdRow> rows;
  for (const json& j : doc) {
    if (!j.is_object()) return absl::InvalidArgumentError("row is not an object");
    DpsgdRow r;
    ASSIGN_OR_RETURN(r.epsilon, JsonToDouble(j, "epsilon"));
    ASSIGN_OR_RETURN(r.delta, JsonToDouble(j, "delta"));
    ASSIGN_OR_RETURN(int64_t k, JsonToInt(j, "K"));
    r.k = static_cast<int>(k);
    ASSIGN_OR_RETURN(r.p, JsonToInt(j, "P"));
    ASSIGN_OR_RETURN(r.recovery_frequency,
                     JsonToDouble(j, "recovery_frequency"));
    rows.push_back(r);
  }
  return rows;
}

std::string FormatWeightsCsv(const ChosenNeuronParams& params) {
  std::string out = "neuron,h,bias";
  for (int j = 0; j < params.dim(); ++j) absl::StrAppend(&out, ",w", j);
  out.push_back('\n');
  for (int i = 0; i < params.neurons(); ++i) {
    const double bias = params.use_bias ? params.bias(i) : 0.0;
    absl::StrAppend(&out, i, ",", FormatDouble(params.h(i)), ",",
                    FormatDouble(bias));
    for (int j = 0; j < params.dim(); ++j) {
      absl::StrAppend(&out, ",", FormatDouble(params.w(i, j)));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace ami_lab
