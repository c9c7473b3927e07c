// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/schedule.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ddpm {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kLinear: return "linear";
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kQuadratic: return "quadratic";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "quadratic") return ScheduleKind::kQuadratic;
  throw std::invalid_argument("unknown schedule kind: " + std::string(name));
}

void ScheduleSpec::validate() const {
  if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    std::ostringstream msg;
    msg << "schedule: need 0 < beta_start <= beta_end < 1, got beta_start=" << beta_start
        << " beta_end=" << beta_end;
    throw std::invalid_argument(msg.str());
  }
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > T) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(T) + "]");
  }
}

NoiseSchedule build_schedule(const ScheduleSpec& spec) {
  spec.validate();
  NoiseSchedule s;
  s.spec = spec;
  s.T = spec.T;
  const int T = spec.T;
  const auto n = static_cast<std::size_t>(T) + 1;
  s.beta.assign(n, 0.0);
  s.alpha.assign(n, 0.0);
  s.alpha_bar.assign(n, 0.0);
  s.sqrt_alpha_bar.assign(n, 0.0);
  s.one_minus_alpha_bar.assign(n, 0.0);
  s.sqrt_one_minus_alpha_bar.assign(n, 0.0);
  s.beta_tilde.assign(n, 0.0);
  s.beta_tilde_clipped.assign(n, 0.0);
  s.posterior_mean_coef1.assign(n, 0.0);
  s.posterior_mean_coef2.assign(n, 0.0);

  for (int t = 1; t <= T; ++t) {
    const double frac = T > 1 ? static_cast<double>(t - 1) / (T - 1) : 0.0;
    switch (spec.kind) {
      case ScheduleKind::kLinear:
        s.beta[t] = spec.beta_start + frac * (spec.beta_end - spec.beta_start);
        break;
      case ScheduleKind::kConstant:
        s.beta[t] = spec.beta_end;
        break;
      case ScheduleKind::kQuadratic: {
        const double r = std::sqrt(spec.beta_start) +
                         frac * (std::sqrt(spec.beta_end) - std::sqrt(spec.beta_start));
        s.beta[t] = r * r;
        break;
      }
    }
  }
  // Pin the endpoints so interpolation rounding never moves them.
  if (spec.kind != ScheduleKind::kConstant) {
    s.beta[1] = spec.beta_start;
    if (T > 1) s.beta[T] = spec.beta_end;
  }

  s.alpha_bar[0] = 1.0;
  s.sqrt_alpha_bar[0] = 1.0;
  // 1 - alpha_bar accumulated directly; subtracting from 1 loses digits at small t.
  auto& comp = s.one_minus_alpha_bar;
  for (int t = 1; t <= T; ++t) {
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    comp[t] = comp[t - 1] + s.alpha_bar[t - 1] * s.beta[t];
    s.sqrt_alpha_bar[t] = std::sqrt(s.alpha_bar[t]);
    s.sqrt_one_minus_alpha_bar[t] = std::sqrt(comp[t]);
  }
  for (int t = 1; t <= T; ++t) {
    const double denom = comp[t];
    const double prev_comp = comp[t - 1];
    s.beta_tilde[t] = prev_comp / denom * s.beta[t];
    s.posterior_mean_coef1[t] = std::sqrt(s.alpha_bar[t - 1]) * s.beta[t] / denom;
    s.posterior_mean_coef2[t] = std::sqrt(s.alpha[t]) * prev_comp / denom;
  }
  for (int t = 2; t <= T; ++t) s.beta_tilde_clipped[t] = s.beta_tilde[t];
  s.beta_tilde_clipped[1] = T >= 2 ? s.beta_tilde[2] : s.beta[1];
  return s;
}

double terminal_kl_nats_row(const NoiseSchedule& sched, std::span<const double> x0) {
  const double a = sched.alpha_bar[sched.T];
  // 0.5 * (a x^2 + (1 - a) - 1 - ln(1 - a)), arranged to stay accurate as a -> 0.
  const double var_part = -a - std::log1p(-a);
  double sum = 0.0;
  for (double x : x0) sum += 0.5 * (a * x * x + var_part);
  return sum;
}

double terminal_kl_bits(const NoiseSchedule& sched, const Matrix& x0) {
  if (x0.empty()) throw std::invalid_argument("terminal_kl_bits: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < x0.rows(); ++i) total += terminal_kl_nats_row(sched, x0.row(i));
  return total / (static_cast<double>(x0.rows()) * x0.cols() * std::numbers::ln2);
}

}  // namespace ddpm
