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

// Command-line surface: one-shot attention runs, the approximation-error and
// unbiasedness studies, the scaling benchmark, instance synthesis, and the
// self-test suite.
//
// Exit codes: 0 success, 1 failed checks, 2 invalid arguments, 3 numerical
// degeneracy, 4 I/O failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcattn/errors.hpp"
#include "mcattn/studies.hpp"
#include "mcattn/tensor_io.hpp"

namespace {

using namespace mcattn;

struct GlobalArgs {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::vector<std::string> formats = {"csv", "json"};
  std::string out_dir = ".";
  std::string config_path;
};

struct DataArgs {
  std::string generator = "iso";
  std::size_t queries = 196;
  std::size_t keys = 196;
  std::size_t dim = 16;
  double scale = 1.0;
  double correlation = 0.5;
  std::string path;
  std::size_t heads = 1;
  bool no_prescale = false;
};

struct EstimatorArgs {
  std::string method = "softmax";
  std::size_t samples = 64;
  std::size_t proposals = 16;
  std::string proposal_kind = "local";
  std::string weighting = "decoupled";
  double beta = 1.0;
  std::string mode = "train";
  std::string feature_map = "positive";
  std::size_t ra_samples = 1;
};

DataSpec to_data_spec(const DataArgs& args, std::uint64_t seed) {
  DataSpec spec;
  spec.generator = parse_generator_kind(args.generator);
  spec.queries = args.queries;
  spec.keys = args.keys;
  spec.dim = args.dim;
  spec.scale = args.scale;
  spec.correlation = args.correlation;
  spec.path = args.path;
  spec.heads = args.heads;
  spec.seed = seed;
  spec.prescale_queries = !args.no_prescale;
  return spec;
}

EstimatorKnobs to_knobs(const EstimatorArgs& args) {
  EstimatorKnobs knobs;
  knobs.feature_map = parse_feature_map_kind(args.feature_map);
  knobs.proposal_kind = parse_proposal_kind(args.proposal_kind);
  knobs.weighting.kind = parse_weighting_kind(args.weighting);
  knobs.weighting.beta = args.beta;
  knobs.mode = args.mode == "eval" ? EstimatorMode::Eval : EstimatorMode::Train;
  knobs.ra_samples = args.ra_samples;
  return knobs;
}

std::vector<ReportFormat> to_formats(const std::vector<std::string>& names) {
  std::vector<ReportFormat> formats;
  formats.reserve(names.size());
  for (const auto& name : names) formats.push_back(parse_report_format(name));
  return formats;
}

std::int64_t stamp_from_environment() {
  // Reports carry a timestamp only when SOURCE_DATE_EPOCH pins one; wall
  // clocks would break byte-reproducible reruns.
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    return std::strtoll(epoch, nullptr, 10);
  }
  return 0;
}

// Options from a JSON config file fill in everything the command line left
// untouched; explicit flags always win.
class JsonConfig {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    data_ = nlohmann::json::parse(in, nullptr, false);
    if (data_.is_discarded() || !data_.is_object()) {
      throw std::invalid_argument("config file is not a JSON object: " + path);
    }
  }

  template <typename T>
  void apply(const CLI::Option* opt, const std::string& key, T& target) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!data_.contains(key)) return;
    target = data_.at(key).get<T>();
  }

 private:
  nlohmann::json data_ = nlohmann::json::object();
};

void add_data_options(CLI::App* cmd, DataArgs& args,
                      std::vector<std::pair<const CLI::Option*, std::function<void(const JsonConfig&)>>>& binds) {
  auto bind = [&](CLI::Option* opt, auto& target, const std::string& key) {
    binds.emplace_back(opt, [opt, &target, key](const JsonConfig& cfg) {
      cfg.apply(opt, key, target);
    });
  };
  bind(cmd->add_option("--gen", args.generator, "data generator: iso|corr|file"),
       args.generator, "gen");
  bind(cmd->add_option("-N,--queries", args.queries, "query count N"),
       args.queries, "queries");
  bind(cmd->add_option("-M,--keys", args.keys, "key/value count M"), args.keys,
       "keys");
  bind(cmd->add_option("-D,--dim", args.dim, "head dimension D"), args.dim, "dim");
  bind(cmd->add_option("--scale", args.scale, "entry standard deviation"),
       args.scale, "scale");
  bind(cmd->add_option("--rho", args.correlation, "inter-column correlation"),
       args.correlation, "rho");
  bind(cmd->add_option("--path", args.path, "Q/K/V bundle path for --gen file"),
       args.path, "path");
  bind(cmd->add_option("--heads", args.heads, "heads (harness loop unit)"),
       args.heads, "heads");
  bind(cmd->add_flag("--no-prescale", args.no_prescale,
                     "do not fold 1/sqrt(D) into Q at ingestion"),
       args.no_prescale, "no_prescale");
}

void add_estimator_options(
    CLI::App* cmd, EstimatorArgs& args, bool with_method,
    std::vector<std::pair<const CLI::Option*, std::function<void(const JsonConfig&)>>>& binds) {
  auto bind = [&](CLI::Option* opt, auto& target, const std::string& key) {
    binds.emplace_back(opt, [opt, &target, key](const JsonConfig& cfg) {
      cfg.apply(opt, key, target);
    });
  };
  if (with_method) {
    bind(cmd->add_option("--method", args.method,
                         "softmax|rfa|ra|ra-biased|lara"),
         args.method, "method");
  }
  bind(cmd->add_option("--samples", args.samples, "sample count S (rfa/kernel)"),
       args.samples, "samples");
  bind(cmd->add_option("--proposals", args.proposals, "proposal count C (lara)"),
       args.proposals, "proposals");
  bind(cmd->add_option("--proposal-kind", args.proposal_kind,
                       "mixture|full-keys|local|key-landmark-attn"),
       args.proposal_kind, "proposal_kind");
  bind(cmd->add_option("--weighting", args.weighting,
                       "balance|coupled|decoupled"),
       args.weighting, "weighting");
  bind(cmd->add_option("--beta", args.beta, "decoupled correction strength"),
       args.beta, "beta");
  bind(cmd->add_option("--mode", args.mode, "train|eval"), args.mode, "mode");
  bind(cmd->add_option("--feature-map", args.feature_map,
                       "positive|hyperbolic|trig|shifted-cosine"),
       args.feature_map, "feature_map");
  bind(cmd->add_option("--ra-samples", args.ra_samples,
                       "fixed sample count for the ra variants"),
       args.ra_samples, "ra_samples");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Monte Carlo softmax-attention estimators and their benchmark "
               "harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too

  GlobalArgs global;
  std::vector<std::pair<const CLI::Option*, std::function<void(const JsonConfig&)>>>
      binds;
  auto bind = [&](CLI::Option* opt, auto& target, const std::string& key) {
    binds.emplace_back(opt, [opt, &target, key](const JsonConfig& cfg) {
      cfg.apply(opt, key, target);
    });
  };
  bind(app.add_option("--seed", global.seed, "top-level seed"), global.seed,
       "seed");
  bind(app.add_option("--workers", global.workers, "parallel trial workers"),
       global.workers, "workers");
  bind(app.add_option("--format", global.formats,
                      "report formats (csv, json, svg)")
           ->delimiter(','),
       global.formats, "format");
  bind(app.add_option("--out-dir", global.out_dir, "report output directory"),
       global.out_dir, "out_dir");
  app.add_option("--config", global.config_path,
                 "JSON config file (flags override it)");

  // attend ------------------------------------------------------------------
  auto* attend = app.add_subcommand("attend", "one-shot attention computation");
  DataArgs attend_data;
  EstimatorArgs attend_est;
  std::string q_path, k_path, v_path;
  std::string attend_out = "attention_out.mcattn";
  add_data_options(attend, attend_data, binds);
  add_estimator_options(attend, attend_est, true, binds);
  attend->add_option("--q", q_path, "query tensor file (overrides --gen)");
  attend->add_option("--k", k_path, "key tensor file");
  attend->add_option("--v", v_path, "value tensor file");
  bind(attend->add_option("--out", attend_out, "output tensor path"), attend_out,
       "out");

  // approx-error --------------------------------------------------------------
  auto* approx = app.add_subcommand(
      "approx-error", "MSE of the estimators against exact attention");
  DataArgs approx_data;
  EstimatorArgs approx_est;
  std::vector<std::string> approx_methods = {"rfa", "ra", "lara"};
  std::vector<std::size_t> approx_grid = {8, 16, 32, 64, 128};
  std::size_t approx_trials = 20;
  add_data_options(approx, approx_data, binds);
  add_estimator_options(approx, approx_est, false, binds);
  bind(approx->add_option("--methods", approx_methods, "estimators to compare")
           ->delimiter(','),
       approx_methods, "methods");
  bind(approx->add_option("--grid", approx_grid, "sample-count grid")
           ->delimiter(','),
       approx_grid, "grid");
  bind(approx->add_option("--trials", approx_trials, "trials per cell"),
       approx_trials, "trials");

  // unbiasedness ---------------------------------------------------------------
  auto* unbias = app.add_subcommand(
      "unbiasedness", "per-entry z-scores of the grand mean vs the oracle");
  DataArgs unbias_data;
  EstimatorArgs unbias_est;
  std::string unbias_method = "ra";
  std::size_t unbias_trials = 50'000;
  unbias_data.queries = 2;
  unbias_data.keys = 6;
  unbias_data.dim = 4;
  add_data_options(unbias, unbias_data, binds);
  add_estimator_options(unbias, unbias_est, false, binds);
  bind(unbias->add_option("--method", unbias_method,
                          "ra|rfa|kernel-estimate|exact"),
       unbias_method, "method");
  bind(unbias->add_option("--trials", unbias_trials, "independent runs"),
       unbias_trials, "trials");

  // bench -----------------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "wall-time and allocation scaling over sequence length");
  EstimatorArgs bench_est;
  std::vector<std::string> bench_methods = {"softmax", "rfa", "ra", "lara"};
  std::vector<std::size_t> bench_lengths = {1024, 2048, 4096};
  std::size_t bench_dim = 16;
  std::size_t bench_repeats = 5;
  add_estimator_options(bench, bench_est, false, binds);
  bind(bench->add_option("--methods", bench_methods, "methods to time")
           ->delimiter(','),
       bench_methods, "methods");
  bind(bench->add_option("--lengths", bench_lengths, "ascending N (= M) grid")
           ->delimiter(','),
       bench_lengths, "lengths");
  bind(bench->add_option("-D,--dim", bench_dim, "head dimension"), bench_dim,
       "dim");
  bind(bench->add_option("--repeats", bench_repeats, "timed runs per cell"),
       bench_repeats, "repeats");

  // synth ------------------------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "write the structured benchmark instance as a Q/K/V bundle");
  std::size_t synth_length = 196;
  std::size_t synth_dim = 16;
  std::string synth_out = "instance.mcattn";
  bind(synth->add_option("-N,--length", synth_length, "sequence length (N = M)"),
       synth_length, "length");
  bind(synth->add_option("-D,--dim", synth_dim, "head dimension"), synth_dim,
       "dim");
  bind(synth->add_option("--out", synth_out, "bundle output path"), synth_out,
       "out");

  // selftest ------------------------------------------------------------------
  auto* selftest =
      app.add_subcommand("selftest", "run the library invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  JsonConfig config;
  config.load(global.config_path);
  for (auto& [opt, apply] : binds) apply(config);

  const auto formats = to_formats(global.formats);
  const StudyOptions options{global.workers};

  if (attend->parsed()) {
    AttentionInputs inputs;
    if (!q_path.empty() || !k_path.empty() || !v_path.empty()) {
      if (q_path.empty() || k_path.empty() || v_path.empty()) {
        throw std::invalid_argument("attend: --q, --k, --v must come together");
      }
      inputs = AttentionInputs(read_tensor_file(q_path), read_tensor_file(k_path),
                               read_tensor_file(v_path), false);
      if (!attend_data.no_prescale) inputs = scale_queries(std::move(inputs));
    } else {
      inputs = generate_inputs(to_data_spec(attend_data, global.seed));
    }
    EstimatorKnobs knobs = to_knobs(attend_est);
    const Method method = parse_method(attend_est.method);
    const std::size_t samples =
        method == Method::Lara ? attend_est.proposals : attend_est.samples;
    const AttentionOutput out = run_method(method, inputs, samples, knobs,
                                           RandomSource(global.seed, 0xA77E));
    write_tensor_file(attend_out, out.Y);
    std::cout << "method=" << to_string(method) << " N=" << inputs.queries()
              << " M=" << inputs.keys() << " D=" << inputs.dim() << " -> "
              << attend_out << "\n";
    return 0;
  }

  if (approx->parsed()) {
    ApproxErrorConfig cfg;
    cfg.data = to_data_spec(approx_data, global.seed);
    cfg.methods.clear();
    for (const auto& name : approx_methods) cfg.methods.push_back(parse_method(name));
    cfg.sample_grid = approx_grid;
    cfg.trials = approx_trials;
    cfg.knobs = to_knobs(approx_est);
    ExperimentReport report = approx_error_study(cfg, options);
    report.timestamp_unix = stamp_from_environment();
    for (const auto& path :
         emit_report(report, formats, global.out_dir, "approx_error")) {
      std::cout << "wrote " << path << "\n";
    }
    return 0;
  }

  if (unbias->parsed()) {
    UnbiasednessConfig cfg;
    cfg.data = to_data_spec(unbias_data, global.seed);
    cfg.method = unbias_method == "ra-unbiased" ? "ra" : unbias_method;
    cfg.trials = unbias_trials;
    cfg.samples = unbias_est.samples;
    cfg.knobs = to_knobs(unbias_est);
    const ZReport report = unbiasedness_study(cfg, options);
    std::cout << "method=" << report.method << " trials=" << report.trials
              << " fraction(|z|<=4)=" << report.fraction_within_4 << "\n";
    for (const auto& path :
         emit_zreport(report, formats, global.out_dir, "unbiasedness")) {
      std::cout << "wrote " << path << "\n";
    }
    return 0;
  }

  if (bench->parsed()) {
    BenchConfig cfg;
    cfg.lengths = bench_lengths;
    cfg.methods.clear();
    for (const auto& name : bench_methods) cfg.methods.push_back(parse_method(name));
    cfg.dim = bench_dim;
    cfg.samples = bench_est.samples;
    cfg.repeats = bench_repeats;
    cfg.seed = global.seed;
    cfg.knobs = to_knobs(bench_est);
    ExperimentReport report = scaling_benchmark(cfg, options);
    report.timestamp_unix = stamp_from_environment();
    for (const auto& r : report.records) {
      std::cout << r.method << " N=" << r.queries << " time=" << r.wall_time_s
                << "s peak=" << r.peak_alloc_bytes << "B status=" << r.status
                << "\n";
    }
    for (const auto& path : emit_report(report, formats, global.out_dir, "bench")) {
      std::cout << "wrote " << path << "\n";
    }
    return 0;
  }

  if (synth->parsed()) {
    const AttentionInputs inputs =
        make_token_instance(synth_length, synth_dim, global.seed);
    write_inputs_bundle(synth_out, inputs);
    std::cout << "wrote " << synth_out << " (N=M=" << synth_length
              << ", D=" << synth_dim << ", prescaled)\n";
    return 0;
  }

  if (selftest->parsed()) {
    const SelftestReport report = run_selftest(global.seed);
    for (const auto& check : report.checks) {
      std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name
                << " (metric " << check.metric << "; " << check.note << ")\n";
    }
    emit_selftest(report, formats, global.out_dir, "selftest");
    std::cout << (report.all_passed() ? "selftest: all checks passed\n"
                                      : "selftest: FAILURES\n");
    return report.all_passed() ? 0 : 1;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const mcattn::DegeneracyError& e) {
    std::cerr << "numerical degeneracy: " << e.what() << "\n";
    return 3;
  } catch (const mcattn::OverflowError& e) {
    std::cerr << "numerical degeneracy: " << e.what() << "\n";
    return 3;
  } catch (const mcattn::IoError& e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
