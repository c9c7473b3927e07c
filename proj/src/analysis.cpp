// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ddpm {

std::string RdCurve::to_csv() const {
  std::ostringstream out;
  out << "reverse_step,rate_bits_per_dim,distortion_rmse_0_255\n";
  for (const auto& r : rows) {
    out << r.reverse_step << ',' << format_double(r.rate) << ',' << format_double(r.distortion)
        << '\n';
  }
  return out.str();
}

std::vector<int> default_rd_times(int T) {
  std::vector<int> times;
  if (T <= 64) {
    for (int t = T; t >= 1; --t) times.push_back(t);
    return times;
  }
  const int stride = T / 10;
  for (int r = 0; r < T; r += stride) times.push_back(T - r);
  if (times.back() != 1) times.push_back(1);
  return times;
}

RdCurve rate_distortion(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                        const NoiseSchedule& sched, const RngStream& rng, const RdOptions& opts) {
  VbOptions vopts;
  vopts.samples_per_term = opts.samples_per_term;
  vopts.record_distortion = true;
  vopts.distortion_with_true_eps = opts.true_eps_estimator;
  const VbBreakdown vb = vb_terms(x0, denoiser, modes, sched, rng, vopts);

  // rate_after[t]: bits received once x_t is known.
  const int T = sched.T;
  std::vector<double> rate_after(static_cast<std::size_t>(T) + 1, 0.0);
  rate_after[T] = vb.l_T;
  for (int t = T - 1; t >= 1; --t) rate_after[t] = rate_after[t + 1] + vb.l_mid[t + 1];

  const std::vector<int> times = opts.times.empty() ? default_rd_times(T) : opts.times;
  RdCurve curve;
  curve.l_0 = vb.l_0;
  curve.total = vb.total;
  for (int t : times) {
    sched.check_step(t);
    curve.rows.push_back({T - t, rate_after[t], vb.distortion[t]});
  }
  std::stable_sort(curve.rows.begin(), curve.rows.end(),
                   [](const RdRow& a, const RdRow& b) { return a.reverse_step < b.reverse_step; });
  return curve;
}

ProgressiveFrames progressive_snapshots(const Denoiser& denoiser, std::size_t n,
                                        const ReverseModes& modes, const NoiseSchedule& sched,
                                        const RngStream& rng, std::span<const int> times) {
  SampleResult r = p_sample_loop(denoiser, n, modes, sched, rng, times);
  ProgressiveFrames out;
  for (auto& [t, frame] : r.snapshots) {
    out.times.push_back(t);
    out.frames.push_back(std::move(frame));
  }
  out.sample = std::move(r.x0);
  return out;
}

namespace {

Matrix row_matrix(std::span<const double> v) {
  return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

}  // namespace

Matrix stochastic_reconstruction(std::span<const double> x0, int t_freeze,
                                 const Denoiser& denoiser, const ReverseModes& modes,
                                 const NoiseSchedule& sched, const RngStream& rng, std::size_t k) {
  sched.check_step(t_freeze);
  RngStream enc = rng.split(0);
  Matrix eps(1, x0.size());
  enc.fill_normal(eps.row(0));
  const Matrix latent = q_sample(row_matrix(x0), t_freeze, eps, sched);
  Matrix start(k, x0.size());
  for (std::size_t i = 0; i < k; ++i) start.set_rows(i, latent);
  return decode_from(start, t_freeze, denoiser, modes, sched, rng.split(1)).x0;
}

Matrix interpolate(std::span<const double> x0, std::span<const double> x0_other, int t,
                   std::span<const double> lambdas, const Denoiser& denoiser,
                   const ReverseModes& modes, const NoiseSchedule& sched, const RngStream& rng) {
  sched.check_step(t);
  if (x0.size() != x0_other.size()) throw std::invalid_argument("interpolate: shape mismatch");
  RngStream enc = rng.split(0);
  Matrix eps(1, x0.size());
  enc.fill_normal(eps.row(0));
  const Matrix a = q_sample(row_matrix(x0), t, eps, sched);
  const Matrix b = q_sample(row_matrix(x0_other), t, eps, sched);
  const RngStream dec = rng.split(1);
  Matrix out(lambdas.size(), x0.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const double lambda = lambdas[l];
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("interpolate: lambda outside [0, 1]");
    Matrix latent(1, x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) latent(0, j) = std::lerp(a(0, j), b(0, j), lambda);
    out.set_rows(l, decode_from(latent, t, denoiser, modes, sched, dec).x0);
  }
  return out;
}

// ---------------------------------------------------------------------------

void MaskingDiffusionInstance::validate() const {
  if (D < 1 || D > kMaxMaskingDims) {
    throw std::invalid_argument("masking instance: D must be in [1, " +
                                std::to_string(kMaxMaskingDims) + "]");
  }
  if (data.size() != (1u << D)) throw std::invalid_argument("masking instance: need 2^D probabilities");
  double s = 0.0;
  for (double p : data) {
    if (!(p >= 0.0)) throw std::invalid_argument("masking instance: negative probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("masking instance: data does not sum to 1");
  if (p_theta) {
    if (p_theta->size() != static_cast<std::size_t>(D)) {
      throw std::invalid_argument("masking instance: need one table per step");
    }
    for (int t = 1; t <= D; ++t) {
      const auto& table = (*p_theta)[t - 1];
      if (table.size() != (1u << (D - t))) {
        throw std::invalid_argument("masking instance: table size mismatch at step " + std::to_string(t));
      }
      for (const auto& row : table) {
        if (row[0] < 0.0 || row[1] < 0.0 || std::abs(row[0] + row[1] - 1.0) > 1e-12) {
          throw std::invalid_argument("masking instance: conditional row does not sum to 1");
        }
      }
    }
  }
}

MaskingDiffusionInstance MaskingDiffusionInstance::uniform(int D) {
  MaskingDiffusionInstance m;
  m.D = D;
  m.data.assign(1u << D, 1.0 / static_cast<double>(1u << D));
  return m;
}

MaskingDiffusionInstance MaskingDiffusionInstance::point(int D, unsigned x) {
  MaskingDiffusionInstance m;
  m.D = D;
  m.data.assign(1u << D, 0.0);
  m.data.at(x) = 1.0;
  return m;
}

MaskingDiffusionInstance MaskingDiffusionInstance::random_rational(int D, RngStream& rng) {
  MaskingDiffusionInstance m;
  m.D = D;
  std::vector<int> w(1u << D);
  int total = 0;
  while (total == 0) {
    total = 0;
    for (int& v : w) total += (v = static_cast<int>(rng.uniform_int(0, 9)));
  }
  m.data.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m.data[i] = static_cast<double>(w[i]) / total;
  return m;
}

MaskingDiffusionInstance MaskingDiffusionInstance::random_with_model(int D, RngStream& rng) {
  MaskingDiffusionInstance m = random_rational(D, rng);
  std::vector<std::vector<std::array<double, 2>>> tables(static_cast<std::size_t>(D));
  for (int t = 1; t <= D; ++t) {
    tables[t - 1].resize(1u << (D - t));
    for (auto& row : tables[t - 1]) {
      const double p1 = 0.05 + 0.9 * rng.uniform();
      row = {1.0 - p1, p1};
    }
  }
  m.p_theta = std::move(tables);
  return m;
}

namespace {

// A diffusion state: one entry per coordinate, -1 for masked.
using State = std::vector<int>;
constexpr int kBlank = -1;

State decode_bits(unsigned x, int D) {
  State s(static_cast<std::size_t>(D));
  for (int i = 0; i < D; ++i) s[i] = static_cast<int>((x >> i) & 1u);
  return s;
}

// q(x_t | x_{t-1}): deterministic masking of coordinate t.
State mask_step(State s, int t) {
  s[t - 1] = kBlank;
  return s;
}

// Context index of the unmasked coordinates t+1..D of a state at step t.
unsigned context_of(const State& s, int t) {
  unsigned ctx = 0;
  for (std::size_t i = static_cast<std::size_t>(t); i < s.size(); ++i) {
    ctx |= static_cast<unsigned>(s[i]) << (i - t);
  }
  return ctx;
}

// p_theta(x_{t-1} | x_t): reveals coordinate t, copies everything else.
double reverse_prob(const std::vector<std::vector<std::array<double, 2>>>& tables,
                    const State& prev, const State& cur, int t) {
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (static_cast<int>(i) == t - 1) continue;
    if (prev[i] != cur[i]) return 0.0;
  }
  if (cur[t - 1] != kBlank || prev[t - 1] == kBlank) return 0.0;
  return tables[t - 1][context_of(cur, t)][prev[t - 1]];
}

// Exact marginals q(x_t) over reachable states, for t = 0..D.
std::vector<std::map<State, double>> forward_marginals(const MaskingDiffusionInstance& inst) {
  std::vector<std::map<State, double>> marg(static_cast<std::size_t>(inst.D) + 1);
  for (unsigned x = 0; x < inst.data.size(); ++x) {
    if (inst.data[x] == 0.0) continue;
    State s = decode_bits(x, inst.D);
    marg[0][s] += inst.data[x];
    for (int t = 1; t <= inst.D; ++t) {
      s = mask_step(s, t);
      marg[t][s] += inst.data[x];
    }
  }
  return marg;
}

// Optimal reverse model q(x_{t-1} | x_t) written as tables.
std::vector<std::vector<std::array<double, 2>>> fit_optimal(
    const MaskingDiffusionInstance& inst, const std::vector<std::map<State, double>>& marg) {
  std::vector<std::vector<std::array<double, 2>>> tables(static_cast<std::size_t>(inst.D));
  for (int t = 1; t <= inst.D; ++t) {
    auto& table = tables[t - 1];
    table.assign(1u << (inst.D - t), {0.5, 0.5});
    for (const auto& [cur, q_cur] : marg[t]) {
      std::array<double, 2> row{0.0, 0.0};
      for (const auto& [prev, q_prev] : marg[t - 1]) {
        if (mask_step(prev, t) == cur) row[prev[t - 1]] += q_prev / q_cur;
      }
      table[context_of(cur, t)] = row;
    }
  }
  return tables;
}

double xlog2(double p, double q) { return p > 0.0 ? p * std::log2(p / q) : 0.0; }

}  // namespace

ArCheckResult ar_equivalence_check(const MaskingDiffusionInstance& instance) {
  instance.validate();
  const int D = instance.D;
  const auto marg = forward_marginals(instance);
  const auto tables = instance.p_theta ? *instance.p_theta : fit_optimal(instance, marg);
  const State blank(static_cast<std::size_t>(D), kBlank);

  ArCheckResult r;

  // Prior term: p(x_T) is a point mass on the blank state.
  for (const auto& [s, q] : marg[D]) r.prior_kl_bits += xlog2(q, s == blank ? 1.0 : 0.0);

  // Bound by enumerating every forward trajectory.
  for (unsigned x = 0; x < instance.data.size(); ++x) {
    const double qx = instance.data[x];
    if (qx == 0.0) continue;
    std::vector<State> path{decode_bits(x, D)};
    for (int t = 1; t <= D; ++t) path.push_back(mask_step(path.back(), t));
    double nll = path[D] == blank ? 0.0 : INFINITY;  // -log2 p(x_T)
    for (int t = 1; t <= D; ++t) {
      const double q_step = mask_step(path[t - 1], t) == path[t] ? 1.0 : 0.0;
      nll -= std::log2(reverse_prob(tables, path[t - 1], path[t], t) / q_step);
    }
    r.vb_bits += qx * nll;
  }

  // Alternate form: prior KL + expected reverse KLs + data entropy.
  double reverse_kl = 0.0;
  for (int t = 1; t <= D; ++t) {
    for (const auto& [cur, q_cur] : marg[t]) {
      for (const auto& [prev, q_prev] : marg[t - 1]) {
        if (mask_step(prev, t) != cur) continue;
        const double q_cond = q_prev / q_cur;
        reverse_kl += q_cur * xlog2(q_cond, reverse_prob(tables, prev, cur, t));
      }
    }
  }
  for (double p : instance.data) r.entropy_bits -= p > 0.0 ? p * std::log2(p) : 0.0;
  r.vb_alt_bits = r.prior_kl_bits + reverse_kl + r.entropy_bits;

  // Autoregressive model over coordinates D, D-1, ..., 1. Its conditionals
  // come from the supplied reverse model, or are fitted straight from the
  // data table when none was supplied.
  auto ar_conditional = [&](unsigned x, int i) {
    const unsigned bit = (x >> (i - 1)) & 1u;
    if (instance.p_theta) return (*instance.p_theta)[i - 1][x >> i][bit];
    double joint = 0.0, context = 0.0;
    for (unsigned y = 0; y < instance.data.size(); ++y) {
      if ((y >> i) != (x >> i)) continue;
      context += instance.data[y];
      if (((y >> (i - 1)) & 1u) == bit) joint += instance.data[y];
    }
    return context > 0.0 ? joint / context : 0.5;
  };
  for (unsigned x = 0; x < instance.data.size(); ++x) {
    const double qx = instance.data[x];
    if (qx == 0.0) continue;
    double nll = 0.0;
    for (int i = D; i >= 1; --i) nll -= std::log2(ar_conditional(x, i));
    r.ar_nll_bits += qx * nll;
  }

  r.gap = std::abs(r.vb_bits - r.ar_nll_bits);
  return r;
}

}  // namespace ddpm
