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

#include "mcattn/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <new>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mcattn/alloc_tracker.hpp"
#include "mcattn/errors.hpp"
#include "mcattn/parallel.hpp"

namespace mcattn {
namespace {

// Stream domain separating estimator randomness from data generation.
constexpr std::uint64_t kEstimatorDomain = 0x0E57;

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::uint64_t median_u64(std::vector<std::uint64_t> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::Softmax: return "softmax";
    case Method::Rfa: return "rfa";
    case Method::RaUnbiased: return "ra";
    case Method::RaBiased: return "ra-biased";
    case Method::Lara: return "lara";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "softmax" || name == "exact") return Method::Softmax;
  if (name == "rfa") return Method::Rfa;
  if (name == "ra" || name == "ra-unbiased") return Method::RaUnbiased;
  if (name == "ra-biased") return Method::RaBiased;
  if (name == "lara") return Method::Lara;
  throw std::invalid_argument("unknown method: " + name);
}

AttentionOutput run_method(Method method, const AttentionInputs& inputs,
                           std::size_t samples, const EstimatorKnobs& knobs,
                           RandomSource rng) {
  switch (method) {
    case Method::Softmax:
      return softmax_attention(inputs);
    case Method::Rfa: {
      RfaConfig cfg;
      cfg.samples = samples;
      cfg.kind = knobs.feature_map;
      cfg.rng = rng;
      return rfa_attention(inputs, cfg);
    }
    case Method::RaUnbiased:
    case Method::RaBiased: {
      RaConfig cfg;
      cfg.samples = knobs.ra_samples;
      cfg.variant =
          method == Method::RaBiased ? RaVariant::Biased : RaVariant::Unbiased;
      cfg.mode = knobs.mode;  // unbiased + eval is rejected downstream
      cfg.rng = rng;
      return ra_attention(inputs, cfg);
    }
    case Method::Lara: {
      LaraConfig cfg;
      cfg.proposals = samples;
      cfg.proposal_kind = knobs.proposal_kind;
      cfg.weighting = knobs.weighting;
      cfg.mode = knobs.mode;
      cfg.feature_map = knobs.feature_map;
      cfg.rng = rng;
      return lara_attention(inputs, cfg);
    }
  }
  throw std::invalid_argument("run_method: unknown method");
}

nlohmann::json data_spec_to_json(const DataSpec& spec) {
  nlohmann::json j{{"queries", spec.queries},
                   {"keys", spec.keys},
                   {"dim", spec.dim},
                   {"generator", to_string(spec.generator)},
                   {"scale", spec.scale},
                   {"correlation", spec.correlation},
                   {"heads", spec.heads},
                   {"seed", spec.seed},
                   {"prescale_queries", spec.prescale_queries}};
  if (spec.generator == GeneratorKind::FromFile) j["path"] = spec.path;
  return j;
}

nlohmann::json knobs_to_json(const EstimatorKnobs& knobs) {
  return nlohmann::json{
      {"feature_map", to_string(knobs.feature_map)},
      {"proposal_kind", to_string(knobs.proposal_kind)},
      {"weighting", to_string(knobs.weighting.kind)},
      {"beta", knobs.weighting.beta},
      {"mode", knobs.mode == EstimatorMode::Eval ? "eval" : "train"},
      {"ra_samples", knobs.ra_samples}};
}

// ---------------------------------------------------------------------------

ExperimentReport approx_error_study(const ApproxErrorConfig& cfg,
                                    const StudyOptions& options) {
  cfg.data.validate();
  if (cfg.trials == 0) {
    throw std::invalid_argument("approx_error_study: needs trials >= 1");
  }
  if (cfg.methods.empty() || cfg.sample_grid.empty()) {
    throw std::invalid_argument("approx_error_study: empty methods or grid");
  }

  const std::size_t heads = cfg.data.heads;
  std::vector<AttentionInputs> inputs;
  std::vector<RealMatrix> oracle;
  inputs.reserve(heads);
  oracle.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    inputs.push_back(generate_inputs(cfg.data, h));
    oracle.push_back(softmax_attention(inputs.back()).Y);
  }
  const std::size_t entries_per_head = inputs.front().queries() * inputs.front().dim();
  const std::size_t total_entries = heads * entries_per_head;

  ExperimentReport report;
  report.artifact_version = artifact_version_string();
  report.chart = ChartKind::MseVersusSamples;
  {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : cfg.methods) methods.push_back(to_string(m));
    report.config = nlohmann::json{{"study", "approx-error"},
                                   {"data", data_spec_to_json(cfg.data)},
                                   {"methods", methods},
                                   {"sample_grid", cfg.sample_grid},
                                   {"trials", cfg.trials},
                                   {"estimator", knobs_to_json(cfg.knobs)}};
  }

  const RandomSource study_rng = RandomSource(cfg.data.seed).split(kEstimatorDomain);
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    for (std::size_t gi = 0; gi < cfg.sample_grid.size(); ++gi) {
      const std::size_t grid_samples = cfg.sample_grid[gi];
      const std::size_t cell = mi * cfg.sample_grid.size() + gi;

      std::vector<std::vector<double>> estimate(cfg.trials);
      std::vector<double> trial_mse(cfg.trials, 0.0);
      std::vector<std::string> trial_status(cfg.trials, "ok");
      std::vector<std::uint64_t> trial_peak(cfg.trials, 0);

      parallel_for(cfg.trials, options.workers, [&](std::size_t t) {
        alloc_tracker::reset();
        RandomSource trial_rng = study_rng.split(cell).split(t);
        try {
          std::vector<double>& flat = estimate[t];
          flat.resize(total_entries);
          double sq_sum = 0.0;
          for (std::size_t h = 0; h < heads; ++h) {
            // One sample set per trial, shared across queries and heads.
            const AttentionOutput out =
                run_method(method, inputs[h], grid_samples, cfg.knobs, trial_rng);
            const auto& y = out.Y.data();
            const auto& o = oracle[h].data();
            for (std::size_t i = 0; i < entries_per_head; ++i) {
              flat[h * entries_per_head + i] = y[i];
              const double d = y[i] - o[i];
              sq_sum += d * d;
            }
          }
          trial_mse[t] = sq_sum / static_cast<double>(total_entries);
        } catch (const std::exception& e) {
          trial_status[t] = std::string("error:") + e.what();
          estimate[t].clear();
        }
        trial_peak[t] = alloc_tracker::peak_bytes();
      });

      for (std::size_t t = 0; t < cfg.trials; ++t) {
        ReportRecord r;
        r.kind = "trial";
        r.method = to_string(method);
        r.samples = grid_samples;
        r.queries = inputs.front().queries();
        r.keys = inputs.front().keys();
        r.dim = inputs.front().dim();
        r.seed = cfg.data.seed;
        r.trial = static_cast<std::int64_t>(t);
        r.status = trial_status[t];
        r.mse = trial_mse[t];
        r.bias_norm = std::sqrt(trial_mse[t] * static_cast<double>(total_entries));
        r.peak_alloc_bytes = trial_peak[t];
        report.records.push_back(std::move(r));
      }

      // Aggregate across the trials that succeeded.
      std::size_t ok = 0;
      double mse_sum = 0.0, mse_sq_sum = 0.0;
      std::vector<double> entry_sum(total_entries, 0.0);
      std::vector<double> entry_sq_sum(total_entries, 0.0);
      std::uint64_t peak_max = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        if (trial_status[t] != "ok") continue;
        ++ok;
        mse_sum += trial_mse[t];
        mse_sq_sum += trial_mse[t] * trial_mse[t];
        peak_max = std::max(peak_max, trial_peak[t]);
        for (std::size_t i = 0; i < total_entries; ++i) {
          entry_sum[i] += estimate[t][i];
          entry_sq_sum[i] += estimate[t][i] * estimate[t][i];
        }
      }
      ReportRecord agg;
      agg.kind = "aggregate";
      agg.method = to_string(method);
      agg.samples = grid_samples;
      agg.queries = inputs.front().queries();
      agg.keys = inputs.front().keys();
      agg.dim = inputs.front().dim();
      agg.seed = cfg.data.seed;
      agg.peak_alloc_bytes = peak_max;
      if (ok == 0) {
        agg.status = "error:all-trials-failed";
      } else {
        const double n = static_cast<double>(ok);
        agg.mse = mse_sum / n;
        if (ok > 1) {
          const double var =
              std::max(0.0, (mse_sq_sum - n * agg.mse * agg.mse) / (n - 1.0));
          agg.mse_stderr = std::sqrt(var / n);
        }
        double bias_sq = 0.0, var_trace = 0.0;
        for (std::size_t h = 0; h < heads; ++h) {
          const auto& o = oracle[h].data();
          for (std::size_t i = 0; i < entries_per_head; ++i) {
            const std::size_t idx = h * entries_per_head + i;
            const double mean = entry_sum[idx] / n;
            const double d = mean - o[i];
            bias_sq += d * d;
            if (ok > 1) {
              var_trace += std::max(
                  0.0, (entry_sq_sum[idx] - n * mean * mean) / (n - 1.0));
            }
          }
        }
        agg.bias_norm = std::sqrt(bias_sq);
        agg.variance_trace = var_trace;
      }
      report.records.push_back(std::move(agg));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

ZReport unbiasedness_study(const UnbiasednessConfig& cfg,
                           const StudyOptions& options) {
  cfg.data.validate();
  if (cfg.trials < 2) {
    throw std::invalid_argument("unbiasedness_study: needs trials >= 2");
  }
  const bool kernel = cfg.method == "kernel-estimate";
  const bool exact = cfg.method == "exact" || cfg.method == "softmax";
  Method method = Method::Softmax;
  if (!kernel) method = parse_method(cfg.method);

  const AttentionInputs inputs = generate_inputs(cfg.data, 0);
  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();

  // Oracle per entry: exact attention entries, or exp(q.k) per pair.
  std::vector<double> oracle;
  std::size_t entries = 0;
  if (kernel) {
    entries = n_queries * n_keys;
    oracle.resize(entries);
    for (std::size_t n = 0; n < n_queries; ++n) {
      for (std::size_t m = 0; m < n_keys; ++m) {
        oracle[n * n_keys + m] = std::exp(dot(inputs.Q.row(n), inputs.K.row(m)));
      }
    }
  } else {
    entries = n_queries * dim;
    oracle = softmax_attention(inputs).Y.data();
  }

  // Fixed-size trial chunks keep the reduction order independent of the
  // worker count, so outputs stay byte-identical under --workers > 1.
  // Accumulation is centered on the oracle: the control method then yields
  // exact zeros, and the z statistic avoids large-mean cancellation.
  constexpr std::size_t kChunk = 64;
  const std::size_t n_chunks = (cfg.trials + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_sum(n_chunks);
  std::vector<std::vector<double>> chunk_sq_sum(n_chunks);

  const RandomSource study_rng = RandomSource(cfg.data.seed).split(kEstimatorDomain);
  parallel_for(n_chunks, options.workers, [&](std::size_t chunk) {
    auto& sum = chunk_sum[chunk];
    auto& sq = chunk_sq_sum[chunk];
    sum.assign(entries, 0.0);
    sq.assign(entries, 0.0);
    std::vector<double> value(entries);
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(cfg.trials, begin + kChunk);
    for (std::size_t t = begin; t < end; ++t) {
      RandomSource trial_rng = study_rng.split(t);
      if (kernel) {
        for (std::size_t n = 0; n < n_queries; ++n) {
          for (std::size_t m = 0; m < n_keys; ++m) {
            const std::size_t p = n * n_keys + m;
            value[p] = kernel_estimate(cfg.knobs.feature_map, inputs.Q.row(n),
                                       inputs.K.row(m), cfg.samples,
                                       trial_rng.split(p));
          }
        }
      } else if (exact) {
        value = oracle;
      } else {
        const AttentionOutput out =
            run_method(method, inputs, cfg.samples, cfg.knobs, trial_rng);
        value = out.Y.data();
      }
      for (std::size_t i = 0; i < entries; ++i) {
        const double centered = value[i] - oracle[i];
        sum[i] += centered;
        sq[i] += centered * centered;
      }
    }
  });

  std::vector<double> total_sum(entries, 0.0);
  std::vector<double> total_sq(entries, 0.0);
  for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
    for (std::size_t i = 0; i < entries; ++i) {
      total_sum[i] += chunk_sum[chunk][i];
      total_sq[i] += chunk_sq_sum[chunk][i];
    }
  }

  ZReport report;
  report.artifact_version = artifact_version_string();
  report.method = cfg.method;
  report.trials = cfg.trials;
  report.config = nlohmann::json{{"study", "unbiasedness"},
                                 {"data", data_spec_to_json(cfg.data)},
                                 {"method", cfg.method},
                                 {"trials", cfg.trials},
                                 {"samples", cfg.samples},
                                 {"estimator", knobs_to_json(cfg.knobs)}};
  report.records.resize(entries);
  const double n = static_cast<double>(cfg.trials);
  std::size_t within = 0;
  for (std::size_t i = 0; i < entries; ++i) {
    ZRecord& r = report.records[i];
    if (kernel) {
      r.query = i / n_keys;
      r.dim = i % n_keys;  // key index for pairwise records
    } else {
      r.query = i / dim;
      r.dim = i % dim;
    }
    r.oracle = oracle[i];
    const double diff = total_sum[i] / n;  // grand mean of (estimate - oracle)
    r.grand_mean = oracle[i] + diff;
    const double var =
        std::max(0.0, (total_sq[i] - n * diff * diff) / (n - 1.0));
    r.standard_error = std::sqrt(var / n);
    if (diff == 0.0) {
      r.z = 0.0;
    } else if (r.standard_error == 0.0) {
      r.z = diff > 0.0 ? 1e300 : -1e300;  // deterministic but off-scale
    } else {
      r.z = diff / r.standard_error;
    }
    if (std::abs(r.z) <= 4.0) ++within;
  }
  report.fraction_within_4 =
      static_cast<double>(within) / static_cast<double>(entries);
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport scaling_benchmark(const BenchConfig& cfg,
                                   const StudyOptions& options) {
  (void)options;  // benchmarks run sequentially; parallel timing lies
  if (cfg.lengths.empty() || !std::is_sorted(cfg.lengths.begin(), cfg.lengths.end())) {
    throw std::invalid_argument("scaling_benchmark: lengths must be ascending");
  }
  if (cfg.repeats == 0) {
    throw std::invalid_argument("scaling_benchmark: needs repeats >= 1");
  }

  ExperimentReport report;
  report.artifact_version = artifact_version_string();
  report.chart = ChartKind::TimeVersusLength;
  {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : cfg.methods) methods.push_back(to_string(m));
    report.config = nlohmann::json{{"study", "bench"},
                                   {"lengths", cfg.lengths},
                                   {"methods", methods},
                                   {"dim", cfg.dim},
                                   {"samples", cfg.samples},
                                   {"repeats", cfg.repeats},
                                   {"seed", cfg.seed},
                                   {"estimator", knobs_to_json(cfg.knobs)}};
  }

  double sink = 0.0;  // keeps the measured calls observable
  for (std::size_t length : cfg.lengths) {
    DataSpec spec;
    spec.queries = length;
    spec.keys = length;
    spec.dim = cfg.dim;
    spec.seed = cfg.seed;
    AttentionInputs inputs = generate_inputs(spec, 0);

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const Method method = cfg.methods[mi];
      const std::size_t samples =
          (method == Method::RaUnbiased || method == Method::RaBiased)
              ? cfg.knobs.ra_samples
              : (method == Method::Softmax ? 0 : cfg.samples);
      ReportRecord r;
      r.kind = "bench";
      r.method = to_string(method);
      r.samples = samples;
      r.queries = length;
      r.keys = length;
      r.dim = cfg.dim;
      r.seed = cfg.seed;
      try {
        const RandomSource rng = RandomSource(cfg.seed)
                                     .split(kEstimatorDomain)
                                     .split(mi)
                                     .split(length);
        // Warmup run, discarded.
        sink += run_method(method, inputs, std::max<std::size_t>(samples, 1),
                           cfg.knobs, rng)
                    .Y(0, 0);
        std::vector<double> times(cfg.repeats);
        std::vector<std::uint64_t> peaks(cfg.repeats);
        for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
          alloc_tracker::reset();
          const auto start = std::chrono::steady_clock::now();
          const AttentionOutput out = run_method(
              method, inputs, std::max<std::size_t>(samples, 1), cfg.knobs,
              rng.split(rep));
          const auto stop = std::chrono::steady_clock::now();
          times[rep] = std::chrono::duration<double>(stop - start).count();
          peaks[rep] = alloc_tracker::peak_bytes();
          sink += out.Y(0, 0);
        }
        r.wall_time_s = median(times);
        r.peak_alloc_bytes = median_u64(peaks);
      } catch (const std::bad_alloc&) {
        r.status = "skipped-oom";
      } catch (const std::exception& e) {
        r.status = std::string("error:") + e.what();
      }
      report.records.push_back(std::move(r));
    }
  }
  if (!std::isfinite(sink)) {
    throw std::runtime_error("scaling_benchmark: non-finite benchmark output");
  }
  return report;
}

bool SelftestReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const SelftestCheck& c) { return c.passed; });
}

void write_selftest_csv(std::ostream& out, const SelftestReport& report) {
  out << "check,passed,metric,note\n";
  for (const auto& c : report.checks) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", c.metric);
    out << c.name << ',' << (c.passed ? "1" : "0") << ',' << buf << ',' << c.note
        << "\n";
  }
}

void write_selftest_json(std::ostream& out, const SelftestReport& report) {
  nlohmann::json doc;
  doc["artifact"] = report.artifact_version;
  doc["seed"] = report.seed;
  doc["all_passed"] = report.all_passed();
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back(nlohmann::json{{"check", c.name},
                                    {"passed", c.passed},
                                    {"metric", c.metric},
                                    {"note", c.note}});
  }
  doc["checks"] = std::move(checks);
  out << doc.dump(2) << "\n";
}

std::vector<std::string> emit_selftest(const SelftestReport& report,
                                       const std::vector<ReportFormat>& formats,
                                       const std::string& out_dir,
                                       const std::string& basename) {
  std::vector<std::string> paths;
  for (ReportFormat f : formats) {
    std::ostringstream text;
    std::string extension;
    switch (f) {
      case ReportFormat::Csv:
        write_selftest_csv(text, report);
        extension = ".csv";
        break;
      case ReportFormat::Json:
        write_selftest_json(text, report);
        extension = ".json";
        break;
      case ReportFormat::Svg:
        continue;  // no chart for the selftest
    }
    std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string path = (dir / (basename + extension)).string();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open for writing: " + path);
    file << text.str();
    paths.push_back(path);
  }
  return paths;
}

}  // namespace mcattn
