// Copyright 2026 The mcattn Authors
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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace mcattn {

/// One measured cell. `kind` distinguishes per-trial rows ("trial"),
/// cross-trial summaries ("aggregate") and benchmark rows ("bench"); fields
/// that do not apply to a kind are zero. Every row carries enough of the
/// configuration key to rerun that cell in isolation.
struct ReportRecord {
  std::string kind = "trial";
  std::string method;
  std::size_t samples = 0;  // S or C (the x-axis of the sample grid)
  std::size_t queries = 0;  // N
  std::size_t keys = 0;     // M
  std::size_t dim = 0;      // D
  std::uint64_t seed = 0;
  std::int64_t trial = -1;  // -1 on aggregate/bench rows
  std::string status = "ok";
  double mse = 0.0;
  double mse_stderr = 0.0;        // aggregate rows
  double bias_norm = 0.0;         // aggregate: ||grand mean - oracle||_F
  double variance_trace = 0.0;    // aggregate: sum of per-entry variances
  double wall_time_s = 0.0;       // bench rows (median)
  std::uint64_t peak_alloc_bytes = 0;

  bool operator==(const ReportRecord&) const = default;
};

enum class ChartKind { None, MseVersusSamples, TimeVersusLength };

struct ExperimentReport {
  std::string artifact_version;
  std::int64_t timestamp_unix = 0;  // 0 = not stamped (deterministic output)
  nlohmann::json config;            // full study configuration echo
  ChartKind chart = ChartKind::None;
  std::vector<ReportRecord> records;
};

/// Fixed-header CSV, doubles at 17 significant digits (value-exact round
/// trips). The CSV carries the records only; config lives in the JSON form.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
std::vector<ReportRecord> read_report_csv(std::istream& in);

void write_report_json(std::ostream& out, const ExperimentReport& report);

/// Line chart of the report's aggregate MSE against the sample grid
/// (log-log, one polyline per method).
std::string render_mse_chart_svg(const ExperimentReport& report);

/// Line chart of median wall time against sequence length (log-log).
std::string render_scaling_chart_svg(const ExperimentReport& report);

enum class ReportFormat { Csv, Json, Svg };

ReportFormat parse_report_format(const std::string& name);

/// Writes `<out_dir>/<basename>.{csv,json,svg}` for the requested formats
/// and returns the paths written. An empty format list writes nothing. SVG
/// is skipped when the report declares no chart.
std::vector<std::string> emit_report(const ExperimentReport& report,
                                     const std::vector<ReportFormat>& formats,
                                     const std::string& out_dir,
                                     const std::string& basename);

/// Per-entry z-score study result (unbiasedness verification surface).
struct ZRecord {
  std::size_t query = 0;
  std::size_t dim = 0;
  double oracle = 0.0;
  double grand_mean = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
};

struct ZReport {
  std::string artifact_version;
  nlohmann::json config;
  std::string method;
  std::size_t trials = 0;
  std::vector<ZRecord> records;
  double fraction_within_4 = 0.0;
};

void write_zreport_csv(std::ostream& out, const ZReport& report);
void write_zreport_json(std::ostream& out, const ZReport& report);

std::vector<std::string> emit_zreport(const ZReport& report,
                                      const std::vector<ReportFormat>& formats,
                                      const std::string& out_dir,
                                      const std::string& basename);

/// "mcattn <version>".
std::string artifact_version_string();

}  // namespace mcattn
