// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace ddpm {

/// What the network output means.
enum class ParamMode { kPredictEps, kPredictMu, kPredictX0 };

/// Fixed reverse-process variance: sigma_t^2 = beta_t or the clipped posterior
/// variance beta_tilde_t.
enum class SigmaMode { kFixedBeta, kFixedBetaTilde };

enum class LossMode { kSimple, kWeightedVb };

std::string_view to_string(ParamMode m);
std::string_view to_string(SigmaMode m);
std::string_view to_string(LossMode m);
ParamMode parse_param_mode(std::string_view s);
SigmaMode parse_sigma_mode(std::string_view s);
LossMode parse_loss_mode(std::string_view s);

/// Reverse-process configuration shared by sampling and bound evaluation.
struct ReverseModes {
  ParamMode param = ParamMode::kPredictEps;
  SigmaMode sigma = SigmaMode::kFixedBetaTilde;
  bool clamp_x0 = false;
};

}  // namespace ddpm
