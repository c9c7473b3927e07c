// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "ddpm/analysis.hpp"
#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/diffusion.hpp"
#include "ddpm/schedule.hpp"

namespace ddpm {
namespace {

using Check = std::function<std::string()>;  // empty string means pass

std::string schedule_monotone(const CheckOptions& opts) {
  for (auto kind : {ScheduleKind::kLinear, ScheduleKind::kConstant, ScheduleKind::kQuadratic}) {
    for (int T : {1, 2, 10, 1000}) {
      NoiseSchedule s = build_schedule({kind, T, 1e-4, 0.02});
      if (opts.corrupt_schedule && T == 1000) s.alpha_bar[T / 2] = s.alpha_bar[T / 2 - 1] * 1.01;
      for (int t = 1; t <= T; ++t) {
        if (!(s.alpha_bar[t] < s.alpha_bar[t - 1]) || !std::isfinite(s.alpha_bar[t])) {
          std::ostringstream m;
          m << to_string(kind) << " T=" << T << ": alpha_bar not strictly decreasing at t=" << t;
          return m.str();
        }
      }
    }
  }
  return {};
}

std::string schedule_endpoints() {
  const auto s = build_schedule({ScheduleKind::kLinear, 1000, 1e-4, 0.02});
  if (s.beta[1] != 1e-4 || s.beta[1000] != 0.02) return "linear endpoints moved";
  if (s.beta_tilde[1] != 0.0 || s.posterior_mean_coef1[1] != 1.0 || s.posterior_mean_coef2[1] != 0.0) {
    return "t=1 posterior is not a point mass";
  }
  if (!(s.alpha_bar[1000] > 1e-5 && s.alpha_bar[1000] < 1e-4)) return "alpha_bar_T out of range";
  Matrix ones(1, 4, 1.0);
  if (!(terminal_kl_bits(s, ones) <= 1e-4)) return "terminal KL above 1e-4 bits/dim";
  return {};
}

std::string posterior_identity() {
  const auto s = build_schedule({ScheduleKind::kLinear, 100, 1e-4, 0.02});
  RngStream rng(7);
  Matrix x0(4, 3), eps(4, 3);
  for (auto& v : x0.data()) v = 2.0 * rng.uniform() - 1.0;
  rng.fill_normal(eps.data());
  for (int t : {1, 2, 50, 100}) {
    const Matrix x_t = q_sample(x0, t, eps, s);
    const Matrix a = mu_from_eps(x_t, t, eps, s);
    const Matrix b = q_posterior(predict_x0_from_eps(x_t, t, eps, s), x_t, t, s).mean;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a.data()[i] - b.data()[i]) > 1e-10) return "mismatch at t=" + std::to_string(t);
    }
  }
  return {};
}

std::string decoder_normalization() {
  RngStream rng(11);
  for (int k = 0; k < 20; ++k) {
    const double mu = 3.0 * rng.uniform() - 1.5;
    const double sigma = std::exp(-6.0 + 7.0 * rng.uniform());
    double sum = 0.0;
    for (int b = 0; b < 256; ++b) sum += decoder_bin_probability(static_cast<std::uint8_t>(b), mu, sigma);
    if (std::abs(sum - 1.0) > 1e-9) return "bins sum to " + format_double(sum);
  }
  return {};
}

std::string point_mass_bound() {
  const auto s = build_schedule({ScheduleKind::kLinear, 100, 1e-4, 0.02});
  const auto oracle = OracleDenoiser::point_mass(s, {0.0, 0.0});
  DataBatch x0;
  x0.values = Matrix(8, 2, 0.0);
  const auto vb = vb_terms(x0, oracle, {ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false},
                           s, RngStream(3));
  for (int t = 2; t <= s.T; ++t) {
    if (vb.l_mid[t] > 1e-12) return "middle term nonzero at t=" + std::to_string(t);
  }
  return {};
}

std::string gradient_check() {
  MlpConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {6, 6};
  cfg.time.dim = 4;
  MlpDenoiser net(cfg);
  net.initialize(RngStream(5));
  for (double& p : net.parameters()) p *= 3.0;  // move the head away from ~0
  const auto s = build_schedule({ScheduleKind::kLinear, 20, 1e-3, 0.2});
  Matrix x0(5, 2);
  RngStream rng(9);
  for (auto& v : x0.data()) v = 2.0 * rng.uniform() - 1.0;
  const TrainingDraw draw = draw_training_noise(x0, s, rng);
  const auto base = loss_at(LossMode::kWeightedVb, SigmaMode::kFixedBeta, x0, draw, net, s);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    const double keep = net.parameters()[i];
    net.parameters()[i] = keep + h;
    const double up = loss_at(LossMode::kWeightedVb, SigmaMode::kFixedBeta, x0, draw, net, s).value;
    net.parameters()[i] = keep - h;
    const double down = loss_at(LossMode::kWeightedVb, SigmaMode::kFixedBeta, x0, draw, net, s).value;
    net.parameters()[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(base.grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - base.grad[i]) / denom);
  }
  if (worst > 1e-5) return "max relative error " + format_double(worst);
  return {};
}

std::string scale_roundtrip() {
  for (int b = 0; b < 256; ++b) {
    if (unscale(scale_to_signed(static_cast<std::uint8_t>(b))) != b) {
      return "byte " + std::to_string(b) + " does not round-trip";
    }
  }
  if (unscale(0.0) != 128) return "0.0 should map to byte 128";
  return {};
}

std::string ar_equivalence() {
  auto r = ar_equivalence_check(MaskingDiffusionInstance::uniform(2));
  if (std::abs(r.vb_bits - 2.0) > 1e-12 || std::abs(r.ar_nll_bits - 2.0) > 1e-12) {
    return "uniform D=2 should give 2 bits";
  }
  RngStream rng(13);
  for (int k = 0; k < 20; ++k) {
    const int D = 1 + static_cast<int>(rng.uniform_int(0, 3));
    r = ar_equivalence_check(MaskingDiffusionInstance::random_rational(D, rng));
    if (r.gap > 1e-9) return "gap " + format_double(r.gap);
  }
  return {};
}

std::string rng_determinism() {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    if (a.next_u64() != b.next_u64()) return "same seed diverged";
  }
  if (RngStream(42).split(1).next_u64() == RngStream(42).split(2).next_u64()) {
    return "sibling streams collide";
  }
  return {};
}

}  // namespace

std::vector<CheckResult> run_fast_checks(const CheckOptions& opts) {
  const std::vector<std::pair<std::string, Check>> checks = {
      {"schedule.alpha_bar_monotone", [&] { return schedule_monotone(opts); }},
      {"schedule.endpoints_and_terminal_kl", schedule_endpoints},
      {"core.parameterization_identity", posterior_identity},
      {"core.decoder_normalization", decoder_normalization},
      {"core.point_mass_middle_terms", point_mass_bound},
      {"denoiser.gradient_check", gradient_check},
      {"data.scale_roundtrip", scale_roundtrip},
      {"analysis.ar_equivalence", ar_equivalence},
      {"rng.determinism", rng_determinism},
  };
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : checks) {
    CheckResult r{name, false, {}};
    try {
      r.detail = fn();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ddpm
