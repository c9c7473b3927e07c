// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Reference computations used by the tests. Each one is written from the
// underlying definitions and shares no code with the library beyond the
// plain data types it is compared against.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <algorithm>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ddpm/analysis.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/schedule.hpp"

namespace oracle {

using hp = boost::multiprecision::cpp_bin_float_50;

// Betas of a schedule, evaluated in 50-digit arithmetic from the defining formulas.
inline std::vector<hp> betas_hp(const ddpm::ScheduleSpec& s) {
  std::vector<hp> b(static_cast<std::size_t>(s.T) + 1, hp(0));
  const hp lo(s.beta_start), hi(s.beta_end);
  for (int t = 1; t <= s.T; ++t) {
    const hp frac = s.T == 1 ? hp(0) : hp(t - 1) / hp(s.T - 1);
    switch (s.kind) {
      case ddpm::ScheduleKind::kLinear: b[t] = lo + frac * (hi - lo); break;
      case ddpm::ScheduleKind::kConstant: b[t] = hi; break;
      case ddpm::ScheduleKind::kQuadratic: {
        const hp r = sqrt(lo) + frac * (sqrt(hi) - sqrt(lo));
        b[t] = r * r;
        break;
      }
    }
  }
  return b;
}

inline std::vector<hp> alpha_bar_hp(const ddpm::ScheduleSpec& s) {
  const auto b = betas_hp(s);
  std::vector<hp> ab(b.size(), hp(1));
  for (std::size_t t = 1; t < b.size(); ++t) ab[t] = ab[t - 1] * (hp(1) - b[t]);
  return ab;
}

// KL(N(sqrt(a) x, 1 - a) || N(0, 1)) in nats, 50-digit arithmetic.
inline hp terminal_kl_hp(const hp& a, double x) {
  const hp xx(x);
  return (a * xx * xx + (hp(1) - a) - hp(1) - log(hp(1) - a)) / 2;
}

// Probability mass of N(mu, sigma^2) on the decoder bin of a byte level,
// by adaptive Gauss-Kronrod integration of the density.
inline double bin_probability_quadrature(int level, double mu, double sigma) {
  using ld = long double;
  const ld m = mu, s = sigma;
  // Open-ended edge bins are cut 40 sigma out; the mass beyond is < 1e-340.
  const ld lo = level == 0 ? std::min(m, -1.0L) - 40 * s : (2.0L * level - 1.0L) / 255.0L - 1.0L;
  const ld hi = level == 255 ? std::max(m, 1.0L) + 40 * s : (2.0L * level + 1.0L) / 255.0L - 1.0L;
  auto pdf = [&](ld x) {
    const ld z = (x - m) / s;
    return std::exp(-z * z / 2) / (s * std::sqrt(2 * std::numbers::pi_v<ld>));
  };
  // Split at the mean so the peak never sits inside a single panel.
  auto integrate = [&](ld a, ld b) -> ld {
    if (!(a < b)) return 0.0L;
    ld err = 0;
    return boost::math::quadrature::gauss_kronrod<ld, 61>::integrate(pdf, a, b, 12, 1e-14L, &err);
  };
  if (lo < m && m < hi) return static_cast<double>(integrate(lo, m) + integrate(m, hi));
  return static_cast<double>(integrate(lo, hi));
}

// Straight-line evaluation of the MLP from its flat parameter vector:
// input [x, sin(t w_i)..., cos(t w_i)...], SiLU hidden layers, linear output.
inline std::vector<double> mlp_forward(const ddpm::MlpConfig& cfg, std::span<const double> params,
                                       std::span<const double> x, int t) {
  std::vector<double> h(x.begin(), x.end());
  const int half = cfg.time.dim / 2;
  for (int i = 0; i < half; ++i) {
    h.push_back(std::sin(t * std::pow(cfg.time.max_period, -2.0 * i / cfg.time.dim)));
  }
  for (int i = 0; i < half; ++i) {
    h.push_back(std::cos(t * std::pow(cfg.time.max_period, -2.0 * i / cfg.time.dim)));
  }
  std::vector<int> widths(cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(static_cast<int>(cfg.data_dim));
  std::size_t off = 0;
  for (std::size_t layer = 0; layer < widths.size(); ++layer) {
    const std::size_t in = h.size(), out = static_cast<std::size_t>(widths[layer]);
    std::vector<double> next(out, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      double acc = params[off + in * out + j];
      for (std::size_t i = 0; i < in; ++i) acc += h[i] * params[off + i * out + j];
      next[j] = layer + 1 < widths.size() ? acc / (1.0 + std::exp(-acc)) : acc;
    }
    off += in * out + out;
    h = std::move(next);
  }
  return h;
}

// Textbook adaptive-moment optimizer, kept deliberately naive.
struct ReferenceAdam {
  std::vector<double> m, v;
  int k = 0;
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    if (m.empty()) m.assign(p.size(), 0.0), v.assign(p.size(), 0.0);
    ++k;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, k));
      const double vh = v[i] / (1.0 - std::pow(0.999, k));
      p[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
};

// Autoregressive negative log-likelihood in bits, coordinate D revealed
// first. Conditionals come from the instance's reverse tables, or from the
// data table by marginalization.
inline double ar_nll_bits(const ddpm::MaskingDiffusionInstance& inst) {
  const unsigned N = 1u << inst.D;
  auto marginal = [&](unsigned x, int from) {  // P(coords from..D match x)
    double p = 0.0;
    for (unsigned y = 0; y < N; ++y) {
      if ((y >> (from - 1)) == (x >> (from - 1))) p += inst.data[y];
    }
    return p;
  };
  double total = 0.0;
  for (unsigned x = 0; x < N; ++x) {
    if (inst.data[x] == 0.0) continue;
    double bits = 0.0;
    for (int i = inst.D; i >= 1; --i) {
      double p;
      if (inst.p_theta) {
        p = (*inst.p_theta)[i - 1][x >> i][(x >> (i - 1)) & 1u];
      } else {
        const double ctx = i == inst.D ? 1.0 : marginal(x, i + 1);
        p = marginal(x, i) / ctx;
      }
      bits -= std::log2(p);
    }
    total += inst.data[x] * bits;
  }
  return total;
}

inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= v > 0.0 ? v * std::log2(v) : 0.0;
  return h;
}

// Mean and standard error of a sample.
struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;
};

inline Moments moments(std::span<const double> v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  const long double mean = s / v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  Moments m;
  m.mean = static_cast<double>(mean);
  m.var = static_cast<double>(ss / (v.size() - 1));
  m.se = std::sqrt(m.var / v.size());
  return m;
}

}  // namespace oracle
