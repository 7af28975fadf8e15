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

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <doctest.h>

#include "mcattn/studies.hpp"
#include "mcattn/tensor_io.hpp"
#include "test_util.hpp"

using namespace mcattn;

namespace {

std::string report_bytes(const ExperimentReport& report) {
  std::stringstream csv, json;
  write_report_csv(csv, report);
  write_report_json(json, report);
  return csv.str() + "\x01" + json.str();
}

}  // namespace

TEST_CASE("generate_inputs is reproducible and respects the scale flag") {
  DataSpec spec;
  spec.queries = 8;
  spec.keys = 9;
  spec.dim = 4;
  spec.seed = 5;
  const AttentionInputs a = generate_inputs(spec);
  const AttentionInputs b = generate_inputs(spec);
  CHECK(a.Q.data() == b.Q.data());
  CHECK(a.K.data() == b.K.data());
  CHECK(a.V.data() == b.V.data());
  CHECK(a.prescaled);

  spec.prescale_queries = false;
  const AttentionInputs raw = generate_inputs(spec);
  CHECK(!raw.prescaled);
  const double factor = 1.0 / std::sqrt(4.0);
  for (std::size_t i = 0; i < raw.Q.data().size(); ++i) {
    CHECK(a.Q.data()[i] == raw.Q.data()[i] * factor);
  }
}

TEST_CASE("file generator round trips through a bundle") {
  DataSpec spec;
  spec.queries = 6;
  spec.keys = 6;
  spec.dim = 3;
  spec.seed = 11;
  const AttentionInputs original = generate_inputs(spec);
  const auto dir = std::filesystem::temp_directory_path() / "mcattn_test_studies";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "inst.mcattn").string();
  write_inputs_bundle(path, original);

  DataSpec from_file;
  from_file.generator = GeneratorKind::FromFile;
  from_file.path = path;
  const AttentionInputs loaded = generate_inputs(from_file);
  CHECK(loaded.Q.data() == original.Q.data());
  CHECK(loaded.K.data() == original.K.data());
  CHECK(loaded.V.data() == original.V.data());
}

TEST_CASE("correlated generator hits the target inter-column correlation") {
  DataSpec spec;
  spec.queries = 100'000;
  spec.keys = 1;
  spec.dim = 4;
  spec.generator = GeneratorKind::CorrelatedGaussian;
  spec.correlation = 0.5;
  spec.seed = 3;
  spec.prescale_queries = false;
  const AttentionInputs inputs = generate_inputs(spec);
  // Sample correlation between the first two columns of Q.
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  const double n = static_cast<double>(spec.queries);
  for (std::size_t i = 0; i < spec.queries; ++i) {
    const double x = inputs.Q(i, 0), y = inputs.Q(i, 1);
    sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double corr = cov / std::sqrt(vx * vy);
  CHECK(std::abs(corr - 0.5) <= 0.02);
}

TEST_CASE("token instance has the advertised structure") {
  const AttentionInputs a = make_token_instance(64, 8, 9);
  const AttentionInputs b = make_token_instance(64, 8, 9);
  CHECK(a.Q.data() == b.Q.data());
  CHECK(a.prescaled);
  CHECK(a.queries() == 64);
  CHECK(a.keys() == 64);
  // Sharp, query-specific attention: mean top probability well above uniform.
  double top = 0.0;
  for (std::size_t n = 0; n < a.queries(); ++n) {
    const auto p = attention_probs(a, n);
    top += *std::max_element(p.weights.begin(), p.weights.end());
  }
  CHECK(top / 64.0 >= 0.2);
}

TEST_CASE("approx_error_study: exact method has zero MSE everywhere") {
  ApproxErrorConfig cfg;
  cfg.data.queries = 6;
  cfg.data.keys = 6;
  cfg.data.dim = 3;
  cfg.data.seed = 21;
  cfg.methods = {Method::Softmax};
  cfg.sample_grid = {4, 8};
  cfg.trials = 3;
  const ExperimentReport report = approx_error_study(cfg, {});
  for (const auto& r : report.records) {
    CHECK(r.status == "ok");
    CHECK(r.mse == 0.0);
  }
}

TEST_CASE("approx_error_study reruns and worker counts are byte identical") {
  ApproxErrorConfig cfg;
  cfg.data.queries = 10;
  cfg.data.keys = 10;
  cfg.data.dim = 4;
  cfg.data.seed = 33;
  cfg.methods = {Method::Rfa, Method::Lara, Method::RaUnbiased};
  cfg.sample_grid = {4, 8};
  cfg.trials = 6;
  const std::string one = report_bytes(approx_error_study(cfg, {1}));
  const std::string rerun = report_bytes(approx_error_study(cfg, {1}));
  const std::string parallel = report_bytes(approx_error_study(cfg, {4}));
  CHECK(one == rerun);
  CHECK(one == parallel);
}

TEST_CASE("approx_error_study records estimator failures per cell") {
  ApproxErrorConfig cfg;
  cfg.data.queries = 4;
  cfg.data.keys = 4;
  cfg.data.dim = 2;
  cfg.data.seed = 1;
  cfg.methods = {Method::Lara};
  cfg.sample_grid = {8};  // > min(N, M): every trial fails, study survives
  cfg.trials = 2;
  const ExperimentReport report = approx_error_study(cfg, {});
  REQUIRE(!report.records.empty());
  for (const auto& r : report.records) {
    if (r.kind == "trial") CHECK(r.status.rfind("error:", 0) == 0);
    if (r.kind == "aggregate") CHECK(r.status == "error:all-trials-failed");
  }
}

TEST_CASE("unbiasedness_study: exact control gives all-zero z") {
  UnbiasednessConfig cfg;
  cfg.data.queries = 3;
  cfg.data.keys = 4;
  cfg.data.dim = 2;
  cfg.data.seed = 8;
  cfg.method = "exact";
  cfg.trials = 10;
  const ZReport report = unbiasedness_study(cfg, {});
  CHECK(report.fraction_within_4 == 1.0);
  for (const auto& r : report.records) CHECK(r.z == 0.0);
}

TEST_CASE("unbiasedness_study: ra passes and rfa shows detectable bias") {
  UnbiasednessConfig cfg;
  cfg.data.queries = 2;
  cfg.data.keys = 6;
  cfg.data.dim = 4;
  cfg.data.seed = 17;
  cfg.data.scale = 0.6;
  cfg.trials = 20'000;
  cfg.method = "ra";
  const ZReport ra = unbiasedness_study(cfg, {4});
  CHECK(ra.fraction_within_4 >= 0.95);

  cfg.method = "rfa";
  cfg.samples = 2;  // harshly small S exposes the self-normalization bias
  const ZReport rfa = unbiasedness_study(cfg, {4});
  CHECK(rfa.fraction_within_4 < ra.fraction_within_4);
}

TEST_CASE("unbiasedness_study: kernel estimates are unbiased") {
  UnbiasednessConfig cfg;
  cfg.data.queries = 2;
  cfg.data.keys = 3;
  cfg.data.dim = 4;
  cfg.data.seed = 23;
  cfg.data.scale = 0.5;
  cfg.method = "kernel-estimate";
  cfg.samples = 4;
  cfg.trials = 5'000;
  const ZReport report = unbiasedness_study(cfg, {2});
  CHECK(report.records.size() == 6);  // N x M pairs
  CHECK(report.fraction_within_4 >= 0.95);
}

TEST_CASE("unbiasedness_study is worker-invariant") {
  UnbiasednessConfig cfg;
  cfg.data.queries = 2;
  cfg.data.keys = 4;
  cfg.data.dim = 3;
  cfg.data.seed = 29;
  cfg.method = "ra";
  cfg.trials = 500;
  const ZReport a = unbiasedness_study(cfg, {1});
  const ZReport b = unbiasedness_study(cfg, {3});
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].z == b.records[i].z);
    CHECK(a.records[i].grand_mean == b.records[i].grand_mean);
  }
}

TEST_CASE("scaling_benchmark produces ordered bench records") {
  BenchConfig cfg;
  cfg.lengths = {32, 64};
  cfg.methods = {Method::Softmax, Method::Lara};
  cfg.dim = 8;
  cfg.samples = 4;
  cfg.repeats = 3;
  const ExperimentReport report = scaling_benchmark(cfg, {});
  REQUIRE(report.records.size() == 4);
  CHECK(report.records[0].queries == 32);
  CHECK(report.records[3].queries == 64);
  for (const auto& r : report.records) {
    CHECK(r.kind == "bench");
    CHECK(r.status == "ok");
    CHECK(r.wall_time_s > 0.0);
  }
  BenchConfig bad = cfg;
  bad.lengths = {64, 32};
  CHECK_THROWS_AS(scaling_benchmark(bad, {}), std::invalid_argument);
}

TEST_CASE("selftest passes and serializes") {
  const SelftestReport report = run_selftest(0);
  for (const auto& c : report.checks) {
    INFO(c.name, ": metric = ", c.metric, " (", c.note, ")");
    CHECK(c.passed);
  }
  CHECK(report.all_passed());

  std::stringstream csv, json;
  write_selftest_csv(csv, report);
  write_selftest_json(json, report);
  CHECK(csv.str().find("check,passed,metric,note") == 0);
  CHECK(json.str().find("all_passed") != std::string::npos);

  // Same seed, same bytes.
  std::stringstream csv2;
  write_selftest_csv(csv2, run_selftest(0));
  CHECK(csv.str() == csv2.str());
}

TEST_CASE("method parsing accepts the documented aliases") {
  CHECK(parse_method("softmax") == Method::Softmax);
  CHECK(parse_method("exact") == Method::Softmax);
  CHECK(parse_method("ra") == Method::RaUnbiased);
  CHECK(parse_method("ra-unbiased") == Method::RaUnbiased);
  CHECK(parse_method("ra-biased") == Method::RaBiased);
  CHECK(parse_method("lara") == Method::Lara);
  CHECK_THROWS_AS(parse_method("nope"), std::invalid_argument);
}
