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

// The runtime invariant suite behind the `selftest` command: quick,
// deterministic versions of the properties the library guarantees.

#include <cmath>
#include <functional>

#include "mcattn/studies.hpp"

namespace mcattn {
namespace {

RealMatrix random_matrix(std::size_t rows, std::size_t cols, RandomSource rng,
                         double scale = 1.0) {
  RealMatrix out(rows, cols);
  rng.fill_standard_normal(out.data());
  for (double& v : out.data()) v *= scale;
  return out;
}

AttentionInputs random_inputs(std::size_t n, std::size_t m, std::size_t d,
                              RandomSource rng, double scale = 1.0) {
  return AttentionInputs(random_matrix(n, d, rng.split(0), scale),
                         random_matrix(m, d, rng.split(1), scale),
                         random_matrix(m, d, rng.split(2), scale));
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

struct Checker {
  SelftestReport& report;
  void operator()(const std::string& name, double metric, double bound,
                  const std::string& note) const {
    report.checks.push_back({name, metric <= bound, metric, note});
  }
  void expect(const std::string& name, bool ok, const std::string& note) const {
    report.checks.push_back({name, ok, ok ? 0.0 : 1.0, note});
  }
};

}  // namespace

SelftestReport run_selftest(std::uint64_t seed) {
  SelftestReport report;
  report.artifact_version = artifact_version_string();
  report.seed = seed;
  Checker check{report};
  RandomSource root(seed, 0x5e1f);

  // Softmax shift invariance.
  {
    RandomSource rng = root.split(1);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x = rng.standard_normal(12);
      const double shift = 3.0 * rng.next_uniform() - 1.5;
      std::vector<double> shifted = x;
      for (double& v : shifted) v += shift;
      worst = std::max(worst, max_abs_diff(stable_softmax(x).weights,
                                           stable_softmax(shifted).weights));
    }
    check("softmax-shift-invariance", worst, 1e-12, "max |softmax(x+c)-softmax(x)|");
  }

  // logsumexp against the naive form on a safe range.
  {
    RandomSource rng = root.split(2);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(10);
      for (double& v : x) v = 10.0 * rng.next_uniform() - 5.0;
      double naive = 0.0;
      for (double v : x) naive += std::exp(v);
      worst = std::max(worst, std::abs(logsumexp(x) - std::log(naive)));
    }
    check("logsumexp-naive-agreement", worst, 1e-12, "vs direct ln(sum exp)");
  }

  // Draw-sequence reproducibility.
  {
    RandomSource a(seed, 77), b(seed, 77);
    bool same = true;
    for (int i = 0; i < 256; ++i) same = same && a.next_u64() == b.next_u64();
    check.expect("rng-reproducibility", same, "same (seed,stream) replays bit-equal");
  }

  // Gaussian logpdf integrates to 1 over [-8, 8] at D = 1.
  {
    const std::size_t grid = 4001;
    const double lo = -8.0, hi = 8.0;
    const double step = (hi - lo) / static_cast<double>(grid - 1);
    double integral = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = lo + step * static_cast<double>(i);
      const double mean = 0.0;
      const double p = std::exp(
          gaussian_logpdf_identity_cov(std::span(&x, 1), std::span(&mean, 1)));
      integral += (i == 0 || i == grid - 1) ? 0.5 * p : p;
    }
    integral *= step;
    check("gaussian-logpdf-quadrature", std::abs(integral - 1.0), 1e-3,
          "trapezoid over [-8,8], D=1");
  }

  // Quick kernel unbiasedness: one pair, 1e5 samples, 4 standard errors.
  {
    RandomSource rng = root.split(3);
    std::vector<double> x = rng.standard_normal(8);
    std::vector<double> y = rng.standard_normal(8);
    for (double& v : x) v *= 0.3;
    for (double& v : y) v *= 0.3;
    const double truth = std::exp(dot(x, y));
    const KernelEstimate est = kernel_estimate_stats(
        FeatureMapKind::PositiveScalar, x, y, 100000, rng.split(9));
    const double z = std::abs(est.mean - truth) /
                     std::max(est.standard_error, 1e-300);
    check("kernel-unbiasedness-quick", z, 4.0, "|z| of positive-map estimate");
  }

  // Positive kinds stay strictly positive.
  {
    RandomSource rng = root.split(4);
    bool ok = true;
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x = rng.standard_normal(6);
      FeatureSample s = draw_feature_sample(FeatureMapKind::HyperbolicPair, 6, rng);
      const FeatureValue h = xi(FeatureMapKind::HyperbolicPair, x, s);
      const FeatureValue p = xi(FeatureMapKind::PositiveScalar, x, s);
      ok = ok && h.v[0] > 0.0 && h.v[1] > 0.0 && p.v[0] > 0.0;
    }
    check.expect("feature-map-positivity", ok, "positive kinds > 0 everywhere");
  }

  // Exact attention and RFA keep convex-hull outputs for V in [0,1].
  {
    RandomSource rng = root.split(5);
    AttentionInputs inputs = random_inputs(6, 7, 4, rng, 0.7);
    for (double& v : inputs.V.data()) v = std::abs(v) - std::floor(std::abs(v));
    double lo = 1.0, hi = 0.0;
    const AttentionOutput exact = softmax_attention(inputs);
    RfaConfig rfa_cfg;
    rfa_cfg.samples = 64;
    rfa_cfg.rng = rng.split(6);
    const AttentionOutput approx = rfa_attention(inputs, rfa_cfg);
    for (double v : exact.Y.data()) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : approx.Y.data()) { lo = std::min(lo, v); hi = std::max(hi, v); }
    check("convex-hull-outputs", std::max(0.0 - lo, hi - 1.0), 1e-12,
          "softmax+rfa rows stay inside [0,1] for V in [0,1]");
  }

  // RFA linearity in V under a fixed seed.
  {
    RandomSource rng = root.split(7);
    AttentionInputs base = random_inputs(5, 6, 3, rng, 0.8);
    RealMatrix v2 = random_matrix(6, 3, rng.split(3));
    RfaConfig cfg;
    cfg.samples = 32;
    cfg.rng = rng.split(4);
    const double a = 1.7, b = -0.6;
    AttentionInputs combined = base;
    for (std::size_t i = 0; i < combined.V.data().size(); ++i) {
      combined.V.data()[i] = a * base.V.data()[i] + b * v2.data()[i];
    }
    AttentionInputs second = base;
    second.V = v2;
    const AttentionOutput lhs = rfa_attention(combined, cfg);
    const AttentionOutput y1 = rfa_attention(base, cfg);
    const AttentionOutput y2 = rfa_attention(second, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.Y.data().size(); ++i) {
      worst = std::max(worst, std::abs(lhs.Y.data()[i] - a * y1.Y.data()[i] -
                                       b * y2.Y.data()[i]));
    }
    check("rfa-linearity-in-values", worst, 1e-10, "rfa(aV1+bV2) = a rfa(V1)+b rfa(V2)");
  }

  // The two density routes agree.
  {
    RandomSource rng = root.split(8);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      AttentionInputs inputs = random_inputs(3, 5, 4, rng.split(rep), 0.6);
      const MixtureDensity density = ra_density(inputs, 1);
      for (int probe = 0; probe < 4; ++probe) {
        std::vector<double> omega = rng.standard_normal(4);
        const double lhs = density.logpdf(omega);
        const double rhs = ra_logpdf_kernel_form(inputs, 1, omega);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      }
    }
    check("ra-density-forms-agree", worst, 1e-8, "mixture vs kernel form log-pdf");
  }

  // RA mixture density integrates to 1 at D = 1 over [-12, 12].
  {
    RandomSource rng = root.split(9);
    AttentionInputs inputs = random_inputs(2, 3, 1, rng, 0.5);
    const MixtureDensity density = ra_density(inputs, 0);
    const std::size_t grid = 6001;
    const double lo = -12.0, hi = 12.0;
    const double step = (hi - lo) / static_cast<double>(grid - 1);
    double integral = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = lo + step * static_cast<double>(i);
      const double p = std::exp(density.logpdf(std::span(&x, 1)));
      integral += (i == 0 || i == grid - 1) ? 0.5 * p : p;
    }
    integral *= step;
    check("ra-density-quadrature", std::abs(integral - 1.0), 1e-3,
          "mixture pdf integrates to 1, D=1");
  }

  // Single-key degeneracy: every estimator returns v_1.
  {
    RandomSource rng = root.split(10);
    AttentionInputs inputs = random_inputs(4, 1, 3, rng, 0.9);
    double worst = 0.0;
    auto compare = [&](const AttentionOutput& out) {
      for (std::size_t n = 0; n < inputs.queries(); ++n) {
        worst = std::max(worst, max_abs_diff(out.Y.row(n), inputs.V.row(0)));
      }
    };
    compare(softmax_attention(inputs));
    RfaConfig rfa_cfg; rfa_cfg.samples = 8; rfa_cfg.rng = rng.split(1);
    compare(rfa_attention(inputs, rfa_cfg));
    RaConfig ra_cfg; ra_cfg.rng = rng.split(2);
    compare(ra_attention(inputs, ra_cfg));
    ra_cfg.variant = RaVariant::Biased;
    compare(ra_attention(inputs, ra_cfg));
    LaraConfig lara_cfg; lara_cfg.proposals = 1; lara_cfg.rng = rng.split(3);
    compare(lara_attention(inputs, lara_cfg));
    check("single-key-exactness", worst, 1e-12, "M=1 output equals v_1");
  }

  // MIS partition of unity for all three weighting kinds.
  {
    RandomSource rng = root.split(11);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      AttentionInputs inputs = random_inputs(6, 8, 4, rng.split(rep), 0.8);
      const Landmarks landmarks = compute_landmarks(inputs, 3);
      const ProposalSet set =
          build_proposals(landmarks, inputs.K, ProposalKind::GaussianLocal);
      const QueryAffinity affinity = query_affinity(inputs.Q, landmarks);
      RandomSource probe_rng = rng.split(100 + rep);
      for (int probe = 0; probe < 5; ++probe) {
        std::vector<double> omega = probe_rng.standard_normal(4);
        for (WeightingKind kind :
             {WeightingKind::BalanceHeuristic, WeightingKind::CoupledOptimal,
              WeightingKind::DecoupledOptimal}) {
          WeightingConfig wcfg{kind, 1.0};
          const std::vector<double> alpha =
              mis_weights(wcfg, set, affinity, rep % 6, omega);
          double sum = 0.0;
          for (double a : alpha) sum += a;
          worst = std::max(worst, std::abs(sum - 1.0));
        }
      }
    }
    check("mis-partition-of-unity", worst, 1e-10, "sum_c alpha_nc(w) = 1");
  }

  // Landmark reconstruction: segment sizes recombine to the global mean.
  {
    RandomSource rng = root.split(12);
    AttentionInputs inputs = random_inputs(11, 7, 5, rng);
    const Landmarks landmarks = compute_landmarks(inputs, 4);
    std::vector<double> recombined(5, 0.0);
    for (std::size_t c = 0; c < 4; ++c) {
      const auto [b, e] = landmarks.query_segments[c];
      for (std::size_t d = 0; d < 5; ++d) {
        recombined[d] += static_cast<double>(e - b) * landmarks.query_landmarks[c][d];
      }
    }
    std::vector<double> total(5, 0.0);
    for (std::size_t n = 0; n < 11; ++n) {
      for (std::size_t d = 0; d < 5; ++d) total[d] += inputs.Q(n, d);
    }
    check("landmark-reconstruction", max_abs_diff(recombined, total), 1e-10,
          "size-weighted landmarks equal the column sums");
  }

  // Proposal densities integrate to 1 at D = 1.
  {
    RandomSource rng = root.split(13);
    AttentionInputs inputs = random_inputs(6, 6, 1, rng, 0.5);
    const Landmarks landmarks = compute_landmarks(inputs, 2);
    double worst = 0.0;
    for (ProposalKind kind :
         {ProposalKind::MixturePerSegment, ProposalKind::GaussianFullKeys,
          ProposalKind::GaussianLocal, ProposalKind::GaussianKeyLandmarkAttn}) {
      const ProposalSet set = build_proposals(landmarks, inputs.K, kind);
      const std::size_t grid = 6001;
      const double lo = -12.0, hi = 12.0;
      const double step = (hi - lo) / static_cast<double>(grid - 1);
      double integral = 0.0;
      for (std::size_t i = 0; i < grid; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double p = std::exp(proposal_logpdf(set, 0, std::span(&x, 1)));
        integral += (i == 0 || i == grid - 1) ? 0.5 * p : p;
      }
      integral *= step;
      worst = std::max(worst, std::abs(integral - 1.0));
    }
    check("proposal-quadrature", worst, 1e-3, "each proposal kind integrates to 1");
  }

  // C = 1 collapses the MIS combination to the plain aggregation.
  {
    RandomSource rng = root.split(14);
    AttentionInputs inputs = random_inputs(5, 6, 3, rng, 0.8);
    LaraConfig cfg;
    cfg.proposals = 1;
    cfg.rng = rng.split(1);
    const LaraDiagnostics diag = lara_diagnostics(inputs, cfg);
    double worst = 0.0;
    for (std::size_t n = 0; n < inputs.queries(); ++n) {
      const std::vector<double> f =
          ra_value_aggregate(inputs, n, diag.draws.front());
      worst = std::max(worst, max_abs_diff(diag.output.row(n), f));
    }
    check("lara-single-proposal", worst, 1e-12, "C=1 equals the aggregation at w_1");
  }

  // Pinned proposals + uniform weights recover shared-sample attention.
  {
    RandomSource rng = root.split(15);
    AttentionInputs inputs = random_inputs(8, 8, 4, rng, 0.7);
    LaraConfig cfg;
    cfg.proposals = 4;
    cfg.pin_proposals_to_standard_normal = true;
    cfg.constant_uniform_weights = true;
    cfg.rng = rng.split(1);
    RfaConfig rfa_cfg;
    rfa_cfg.samples = 4;
    rfa_cfg.rng = rng.split(1);
    const AttentionOutput lara = lara_attention(inputs, cfg);
    const AttentionOutput rfa = rfa_attention(inputs, rfa_cfg);
    check("lara-shared-sample-limit", max_abs_diff(lara.Y.data(), rfa.Y.data()),
          1e-10, "pinned+uniform LARA equals RFA on shared draws");
  }

  // Eval-mode determinism across seeds.
  {
    RandomSource rng = root.split(16);
    AttentionInputs inputs = random_inputs(6, 6, 4, rng, 0.8);
    LaraConfig cfg;
    cfg.proposals = 3;
    cfg.mode = EstimatorMode::Eval;
    cfg.rng = RandomSource(1);
    const AttentionOutput a = lara_attention(inputs, cfg);
    cfg.rng = RandomSource(999);
    const AttentionOutput b = lara_attention(inputs, cfg);
    RaConfig ra_cfg;
    ra_cfg.variant = RaVariant::Biased;
    ra_cfg.mode = EstimatorMode::Eval;
    ra_cfg.rng = RandomSource(5);
    const AttentionOutput c = ra_attention(inputs, ra_cfg);
    ra_cfg.rng = RandomSource(55555);
    const AttentionOutput d = ra_attention(inputs, ra_cfg);
    check.expect("eval-mode-determinism",
                 a.Y.data() == b.Y.data() && c.Y.data() == d.Y.data(),
                 "eval outputs ignore the seed");
  }

  return report;
}

}  // namespace mcattn
