// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/modes.hpp"
#include "ddpm/rng.hpp"
#include "ddpm/schedule.hpp"
#include "ddpm/tensor.hpp"

namespace ddpm {

// Timesteps are 1-based everywhere in this interface.

/// One forward step: sqrt(1 - beta_t) * x_prev + sqrt(beta_t) * noise.
Matrix q_sample_step(const Matrix& x_prev, int t, const Matrix& noise, const NoiseSchedule& sched);

/// Closed-form marginal draw: sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
Matrix q_sample(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& sched);

struct GaussianMoments {
  Matrix mean;
  double var = 0.0;  // isotropic
};

/// q(x_{t-1} | x_t, x0): mean = coef1 * x0 + coef2 * x_t, var = beta_tilde_t.
GaussianMoments q_posterior(const Matrix& x0, const Matrix& x_t, int t, const NoiseSchedule& sched);

/// x0 estimate (x_t - sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_bar_t).
Matrix predict_x0_from_eps(const Matrix& x_t, int t, const Matrix& eps_hat,
                           const NoiseSchedule& sched, bool clamp = false);

/// Reverse mean from a noise prediction:
/// (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t).
Matrix mu_from_eps(const Matrix& x_t, int t, const Matrix& eps_hat, const NoiseSchedule& sched);

/// Reverse-process variance sigma_t^2 for the chosen mode (clipped beta_tilde
/// in the beta_tilde mode so t = 1 stays positive).
double reverse_variance(const NoiseSchedule& sched, int t, SigmaMode mode);

/// Reverse mean and x0 estimate implied by a raw network output.
struct ReverseMean {
  Matrix mean;
  Matrix x0_hat;
};
ReverseMean reverse_mean(const Matrix& x_t, int t, const Matrix& output, ParamMode mode,
                         bool clamp_x0, const NoiseSchedule& sched);

/// One ancestral step x_t -> x_{t-1}. Row i draws its noise from rngs[i];
/// at t = 1 no noise is added.
Matrix p_sample_step(const Matrix& x_t, int t, const Denoiser& denoiser, const ReverseModes& modes,
                     const NoiseSchedule& sched, std::span<RngStream> rngs);

struct SampleResult {
  Matrix x0;
  /// (t, x0 estimate from x_t) for each requested time, in descending t. The
  /// entry for t = 1 holds the returned sample itself.
  std::vector<std::pair<int, Matrix>> snapshots;
};

/// Runs the reverse chain from x_start at t_start down to t = 1. Row i uses
/// rng.split(i).
SampleResult decode_from(const Matrix& x_start, int t_start, const Denoiser& denoiser,
                         const ReverseModes& modes, const NoiseSchedule& sched,
                         const RngStream& rng, std::span<const int> snapshot_times = {});

/// Full ancestral sampling from x_T ~ N(0, I). Chain i draws x_T and all its
/// step noise from rng.split(i).
SampleResult p_sample_loop(const Denoiser& denoiser, std::size_t n, const ReverseModes& modes,
                           const NoiseSchedule& sched, const RngStream& rng,
                           std::span<const int> snapshot_times = {});

/// KL(N(mean1, var1) || N(mean2, var2)) per element, in nats. Both variances
/// must be positive.
double gaussian_kl(double mean1, double var1, double mean2, double var2);

/// Probability of byte level `level` under N(mu, sigma^2) with the
/// discretized bins of width 2/255 (open-ended at 0 and 255). Not floored.
double decoder_bin_probability(std::uint8_t level, double mu, double sigma);

/// Negative log-likelihood in nats of one row under the discretized decoder,
/// with each bin probability floored at 1e-12.
double decoder_nll_nats(std::span<const std::uint8_t> levels, std::span<const double> mu,
                        double sigma);

/// Mean decoder NLL in bits per dimension.
double decoder_nll(std::span<const std::uint8_t> levels, const Matrix& mu1, double sigma1);

struct VbOptions {
  /// x_t draws per (datapoint, term).
  int samples_per_term = 1;
  /// Also record the RMSE of the x0 estimate at every t (on the 0..255 scale).
  bool record_distortion = false;
  /// Use the true noise instead of the model when estimating x0 for distortion.
  bool distortion_with_true_eps = false;
};

/// Per-term variational bound in bits per dimension.
///
/// l_mid is indexed by t (size T + 1; slots 0 and 1 are zero) and holds the
/// KL(q(x_{t-1} | x_t, x0) || p(x_{t-1} | x_t)) term for t = 2..T.
struct VbBreakdown {
  double l_T = 0.0;
  std::vector<double> l_mid;
  double l_0 = 0.0;
  double total = 0.0;
  /// Standard error of total across datapoints (0 when n = 1).
  double total_se = 0.0;
  int samples_per_term = 1;
  std::optional<double> rmse_of_mu1;
  /// Indexed by t when requested; RMSE of the x0 estimate from x_t.
  std::vector<double> distortion;

  double mid_sum() const;
};

/// Rao-Blackwellized bound: closed-form KLs over x_{t-1}, Monte-Carlo over
/// x_t. Row i of x0 draws from rng.split(i). Data without discrete
/// provenance is snapped to the byte grid for the decoder term.
VbBreakdown vb_terms(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                     const NoiseSchedule& sched, const RngStream& rng, const VbOptions& opts = {});

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Plain Monte-Carlo estimate of the bound from full forward trajectories,
/// in bits per dimension. Chain j starts at row j mod n of x0 and draws from
/// rng.split(j).
McEstimate vb_naive_mc(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                       const NoiseSchedule& sched, const RngStream& rng, std::size_t n_chains);

/// Noise and timestep draws for one training batch.
struct TrainingDraw {
  std::vector<int> t;
  Matrix eps;
  Matrix x_t;
};

/// Row i draws t ~ Uniform{1..T} then eps ~ N(0, I) from rng.split(i).
TrainingDraw draw_training_noise(const Matrix& x0, const NoiseSchedule& sched, const RngStream& rng);
TrainingDraw make_training_draw(const Matrix& x0, std::vector<int> t, Matrix eps,
                                const NoiseSchedule& sched);

/// Per-step eps weight beta_t^2 / (2 sigma_t^2 alpha_t (1 - alpha_bar_t)).
double eps_loss_weight(const NoiseSchedule& sched, int t, SigmaMode mode);

/// Loss on the network output for a fixed draw, with dloss/doutput.
/// Both reductions average over batch rows and data dimensions.
///   simple:      squared error against the mode's natural target
///                (eps, posterior mean, or x0)
///   weighted_vb: ||mu_tilde - mu_theta||^2 / (2 sigma_t^2); for eps
///                prediction this is eps_loss_weight * ||eps - eps_hat||^2
/// The closure refers to x0, draw and sched; they must outlive it.
LossClosure make_loss(LossMode loss, ParamMode param, SigmaMode sigma, const Matrix& x0,
                      const TrainingDraw& draw, const NoiseSchedule& sched);

struct LossResult {
  double value = 0.0;
  /// Gradient in parameter order; empty when the denoiser has no parameters.
  std::vector<double> grad;
};

LossResult loss_at(LossMode loss, SigmaMode sigma, const Matrix& x0, const TrainingDraw& draw,
                   const Denoiser& denoiser, const NoiseSchedule& sched);
LossResult loss_simple(const Matrix& x0, const Denoiser& denoiser, const NoiseSchedule& sched,
                       const RngStream& rng);
LossResult loss_weighted(const Matrix& x0, const Denoiser& denoiser, SigmaMode sigma,
                         const NoiseSchedule& sched, const RngStream& rng);

}  // namespace ddpm
