// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/diffusion.hpp"
#include "ddpm/modes.hpp"
#include "ddpm/rng.hpp"
#include "ddpm/schedule.hpp"

namespace ddpm {

struct TrainConfig {
  MlpConfig model;
  LossMode loss_mode = LossMode::kSimple;
  SigmaMode sigma_mode = SigmaMode::kFixedBetaTilde;
  int steps = 2000;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  int eval_every = 500;  // 0 disables periodic evaluation
  int eval_samples_per_term = 1;

  void validate() const;
};

/// Thrown when the training loss stops being finite.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(int step, double loss);
  int step() const { return step_; }

 private:
  int step_;
};

/// First and second moment estimates for the adaptive update.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Bias-corrected adaptive-moment update of params in place.
void adaptive_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                     double lr);

/// ema <- decay * ema + (1 - decay) * params.
void ema_update(std::span<double> ema, std::span<const double> params, double decay);

struct TrainState {
  MlpDenoiser model;
  std::vector<double> ema;
  AdamState adam;
  int step = 0;

  static TrainState create(const TrainConfig& config);
  MlpDenoiser ema_model() const;
};

/// One draw of (t, eps) per row, one gradient, one optimizer update, one EMA
/// update. Returns the loss before the update.
double train_step(TrainState& state, const Matrix& batch, const TrainConfig& config,
                  const NoiseSchedule& sched, const RngStream& rng);

struct EvalRecord {
  int step = 0;
  double train_loss = 0.0;  // mean since the previous record
  double vb_total = 0.0;    // bits/dim on the held-out batch, EMA parameters
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EvalRecord> history;
  std::vector<double> losses;  // every step
  std::vector<double> parameters;
  std::vector<double> ema_parameters;

  /// CSV with header step,train_loss,vb_total_bits_per_dim. Wall time is
  /// left out so the file is reproducible byte for byte.
  std::string history_csv() const;
};

/// Runs config.steps training steps on minibatches drawn with replacement
/// from train_data, evaluating the EMA model on eval_data every eval_every
/// steps and after the last step.
TrainReport run_training(const TrainConfig& config, const NoiseSchedule& sched,
                         const DataBatch& train_data, const DataBatch& eval_data);

}  // namespace ddpm
