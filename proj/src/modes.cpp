// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/modes.hpp"

#include <stdexcept>
#include <string>

namespace ddpm {

std::string_view to_string(ParamMode m) {
  switch (m) {
    case ParamMode::kPredictEps: return "predict_eps";
    case ParamMode::kPredictMu: return "predict_mu";
    case ParamMode::kPredictX0: return "predict_x0";
  }
  return "?";
}

std::string_view to_string(SigmaMode m) {
  return m == SigmaMode::kFixedBeta ? "fixed_beta" : "fixed_beta_tilde";
}

std::string_view to_string(LossMode m) {
  return m == LossMode::kSimple ? "simple" : "weighted_vb";
}

ParamMode parse_param_mode(std::string_view s) {
  if (s == "predict_eps") return ParamMode::kPredictEps;
  if (s == "predict_mu") return ParamMode::kPredictMu;
  if (s == "predict_x0") return ParamMode::kPredictX0;
  throw std::invalid_argument("unknown param mode: " + std::string(s));
}

SigmaMode parse_sigma_mode(std::string_view s) {
  if (s == "fixed_beta") return SigmaMode::kFixedBeta;
  if (s == "fixed_beta_tilde") return SigmaMode::kFixedBetaTilde;
  throw std::invalid_argument("unknown sigma mode: " + std::string(s));
}

LossMode parse_loss_mode(std::string_view s) {
  if (s == "simple") return LossMode::kSimple;
  if (s == "weighted_vb") return LossMode::kWeightedVb;
  throw std::invalid_argument("unknown loss mode: " + std::string(s));
}

}  // namespace ddpm
