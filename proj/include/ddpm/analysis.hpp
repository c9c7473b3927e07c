// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/diffusion.hpp"
#include "ddpm/rng.hpp"
#include "ddpm/schedule.hpp"

namespace ddpm {

// ---------------------------------------------------------------------------
// Progressive lossy coding

struct RdRow {
  int reverse_step = 0;      // T - t
  double rate = 0.0;         // cumulative bits/dim after receiving x_t
  double distortion = 0.0;   // RMSE of the x0 estimate from x_t, 0..255 scale
};

struct RdCurve {
  std::vector<RdRow> rows;  // ascending reverse_step
  double l_0 = 0.0;         // decoder term, bits/dim
  double total = 0.0;       // full bound the rates were accumulated from

  /// Header: reverse_step,rate_bits_per_dim,distortion_rmse_0_255
  std::string to_csv() const;
};

/// Receiver-side timesteps: every t when T <= 64, otherwise every T/10
/// reverse steps plus the last one (t = 1). Returned in descending t.
std::vector<int> default_rd_times(int T);

struct RdOptions {
  std::vector<int> times;  // empty: default_rd_times
  int samples_per_term = 1;
  bool true_eps_estimator = false;
};

/// Cumulative rate L_T + sum_{s > t} L_{s-1} after receiving x_t, with the
/// distortion of the x0 estimate from the same sampled x_t used for the
/// rate terms.
RdCurve rate_distortion(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                        const NoiseSchedule& sched, const RngStream& rng,
                        const RdOptions& opts = {});

// ---------------------------------------------------------------------------
// Sampling analyses

struct ProgressiveFrames {
  std::vector<int> times;       // descending
  std::vector<Matrix> frames;   // x0 estimate per time; t = 1 is the sample
  Matrix sample;
};

ProgressiveFrames progressive_snapshots(const Denoiser& denoiser, std::size_t n,
                                        const ReverseModes& modes, const NoiseSchedule& sched,
                                        const RngStream& rng, std::span<const int> times);

/// Diffuses x0 to x_{t_freeze} once, then decodes k independent reverse
/// chains from that shared latent. Returns k x D.
Matrix stochastic_reconstruction(std::span<const double> x0, int t_freeze,
                                 const Denoiser& denoiser, const ReverseModes& modes,
                                 const NoiseSchedule& sched, const RngStream& rng, std::size_t k);

/// Encodes both endpoints to step t with one shared noise draw, blends the
/// latents with std::lerp for every lambda, and decodes each blend with the
/// same reverse-chain stream. Returns |lambdas| x D.
Matrix interpolate(std::span<const double> x0, std::span<const double> x0_other, int t,
                   std::span<const double> lambdas, const Denoiser& denoiser,
                   const ReverseModes& modes, const NoiseSchedule& sched, const RngStream& rng);

// ---------------------------------------------------------------------------
// Masking diffusion on binary data

/// Binary data on {0,1}^D, x encoded with coordinate i (1-based) in bit i-1.
/// The forward process masks coordinate t at step t, so T = D.
struct MaskingDiffusionInstance {
  int D = 2;
  std::vector<double> data;  // 2^D probabilities
  /// Optional reverse model: p_theta[t-1][context] = {P(coord t = 0), P(coord t = 1)}
  /// given coordinates t+1..D encoded as context (coordinate t+1 in bit 0).
  /// Fitted exactly from the data when absent.
  std::optional<std::vector<std::vector<std::array<double, 2>>>> p_theta;

  void validate() const;

  static MaskingDiffusionInstance uniform(int D);
  static MaskingDiffusionInstance point(int D, unsigned x);
  /// Integer weights 0..9 normalized (at least one nonzero).
  static MaskingDiffusionInstance random_rational(int D, RngStream& rng);
  /// Random data plus a random (non-optimal) tabular reverse model.
  static MaskingDiffusionInstance random_with_model(int D, RngStream& rng);
};

struct ArCheckResult {
  double vb_bits = 0.0;      // E_q[-log p(x_T) - sum_t log p_theta / q], by trajectory enumeration
  double vb_alt_bits = 0.0;  // prior KL + sum_t E KL(q(x_{t-1}|x_t) || p_theta) + H(x0)
  double ar_nll_bits = 0.0;  // autoregressive NLL, coordinate D first
  double entropy_bits = 0.0;
  double prior_kl_bits = 0.0;
  double gap = 0.0;          // |vb - ar_nll|
};

inline constexpr int kMaxMaskingDims = 4;

ArCheckResult ar_equivalence_check(const MaskingDiffusionInstance& instance);

}  // namespace ddpm
