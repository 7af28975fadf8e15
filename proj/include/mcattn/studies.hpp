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

#include <iosfwd>

#include "mcattn/data.hpp"
#include "mcattn/lara.hpp"
#include "mcattn/ra.hpp"
#include "mcattn/report.hpp"
#include "mcattn/rfa.hpp"

namespace mcattn {

/// Execution knobs that never influence results, only how fast they arrive.
/// Deliberately excluded from report config echoes so that worker counts
/// cannot break byte-level reproducibility.
struct StudyOptions {
  std::size_t workers = 1;
};

enum class Method { Softmax, Rfa, RaUnbiased, RaBiased, Lara };

const char* to_string(Method method);
Method parse_method(const std::string& name);  // accepts "exact" for Softmax

/// Estimator configuration shared by the studies (per-method fields are
/// ignored by the others).
struct EstimatorKnobs {
  FeatureMapKind feature_map = FeatureMapKind::PositiveScalar;
  ProposalKind proposal_kind = ProposalKind::GaussianLocal;
  WeightingConfig weighting{};
  EstimatorMode mode = EstimatorMode::Train;
  std::size_t ra_samples = 1;  // fixed sample count for the RA variants
};

/// Runs one estimator on one instance. `samples` is the S (rfa) or C (lara)
/// budget; the RA variants use knobs.ra_samples instead.
AttentionOutput run_method(Method method, const AttentionInputs& inputs,
                           std::size_t samples, const EstimatorKnobs& knobs,
                           RandomSource rng);

// ---------------------------------------------------------------------------
// Approximation error study (MSE against the exact oracle over a sample grid).

struct ApproxErrorConfig {
  DataSpec data;
  std::vector<Method> methods = {Method::Rfa, Method::RaUnbiased, Method::Lara};
  std::vector<std::size_t> sample_grid = {8, 16, 32, 64, 128};
  std::size_t trials = 20;
  EstimatorKnobs knobs{};
};

/// For every (method, grid point, trial): fresh estimator seed, MSE of the
/// estimate against softmax attention, averaged over heads. The RA variants
/// keep their fixed sample count on every grid point, so their curve is flat
/// by construction. Emits per-trial records plus one aggregate record per
/// cell (mean MSE, its standard error, bias norm, variance trace). Estimator
/// failures are recorded in the cell status, not rethrown.
ExperimentReport approx_error_study(const ApproxErrorConfig& cfg,
                                    const StudyOptions& options);

// ---------------------------------------------------------------------------
// Unbiasedness study (per-entry z-scores of the grand mean).

struct UnbiasednessConfig {
  DataSpec data;
  std::string method = "ra";  // ra | rfa | kernel-estimate | exact
  std::size_t trials = 50000;
  std::size_t samples = 1;  // per-trial sample budget for rfa / kernel-estimate
  EstimatorKnobs knobs{};
};

/// z = (grand mean - oracle) / standard error per output entry (per (q, k)
/// pair for kernel-estimate). The exact method is the control: all z are 0.
ZReport unbiasedness_study(const UnbiasednessConfig& cfg,
                           const StudyOptions& options);

// ---------------------------------------------------------------------------
// Wall-time / allocation scaling benchmark.

struct BenchConfig {
  std::vector<std::size_t> lengths = {1024, 2048, 4096};  // ascending N (= M)
  std::vector<Method> methods = {Method::Softmax, Method::Rfa, Method::RaUnbiased,
                                 Method::Lara};
  std::size_t dim = 16;
  std::size_t samples = 16;  // S for rfa, C for lara
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  EstimatorKnobs knobs{};
};

/// Median-of-`repeats` wall time and peak transient allocation per
/// (method, N), with one discarded warmup run. Out-of-memory cells are
/// recorded as skipped rather than fatal.
ExperimentReport scaling_benchmark(const BenchConfig& cfg,
                                   const StudyOptions& options);

// ---------------------------------------------------------------------------
// Self-test: the library invariant suite as a runtime check.

struct SelftestCheck {
  std::string name;
  bool passed = false;
  double metric = 0.0;  // measured deviation / statistic the check gates on
  std::string note;
};

struct SelftestReport {
  std::string artifact_version;
  std::uint64_t seed = 0;
  std::vector<SelftestCheck> checks;

  bool all_passed() const;
};

SelftestReport run_selftest(std::uint64_t seed);

void write_selftest_csv(std::ostream& out, const SelftestReport& report);
void write_selftest_json(std::ostream& out, const SelftestReport& report);

std::vector<std::string> emit_selftest(const SelftestReport& report,
                                       const std::vector<ReportFormat>& formats,
                                       const std::string& out_dir,
                                       const std::string& basename);

nlohmann::json data_spec_to_json(const DataSpec& spec);
nlohmann::json knobs_to_json(const EstimatorKnobs& knobs);

}  // namespace mcattn
