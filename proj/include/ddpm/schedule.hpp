// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ddpm/tensor.hpp"

namespace ddpm {

enum class ScheduleKind { kLinear, kConstant, kQuadratic };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kLinear;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  /// Throws std::invalid_argument unless 0 < beta_start <= beta_end < 1 and T >= 1.
  void validate() const;
};

/// Per-timestep constants of the forward process.
///
/// Storage convention: every array has T + 1 entries and is indexed directly
/// by the 1-based timestep t. Slot 0 is meaningful only for alpha_bar
/// (alpha_bar[0] == 1) and its square roots; for the other arrays it holds 0.
///
///   beta_tilde[t]         = (1 - alpha_bar[t-1]) / (1 - alpha_bar[t]) * beta[t]
///   posterior_mean_coef1  = sqrt(alpha_bar[t-1]) * beta[t] / (1 - alpha_bar[t])
///   posterior_mean_coef2  = sqrt(alpha[t]) * (1 - alpha_bar[t-1]) / (1 - alpha_bar[t])
///   beta_tilde_clipped[1] = beta_tilde[2] (beta[1] when T == 1), else beta_tilde[t]
///
/// Immutable after construction.
struct NoiseSchedule {
  ScheduleSpec spec;
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sqrt_alpha_bar;
  std::vector<double> one_minus_alpha_bar;
  std::vector<double> sqrt_one_minus_alpha_bar;
  std::vector<double> beta_tilde;
  std::vector<double> beta_tilde_clipped;
  std::vector<double> posterior_mean_coef1;
  std::vector<double> posterior_mean_coef2;

  void check_step(int t) const;
};

NoiseSchedule build_schedule(const ScheduleSpec& spec);

/// KL(q(x_T | x0) || N(0, I)) averaged over the batch, in bits per dimension.
double terminal_kl_bits(const NoiseSchedule& sched, const Matrix& x0);

/// Same quantity in nats, summed over dimensions, for one row.
double terminal_kl_nats_row(const NoiseSchedule& sched, std::span<const double> x0);

}  // namespace ddpm
