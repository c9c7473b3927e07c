// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace ddpm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  /// Fault injection: perturb one alpha_bar entry before the schedule checks.
  bool corrupt_schedule = false;
};

/// Fast invariant suite over every module; each check reports independently.
std::vector<CheckResult> run_fast_checks(const CheckOptions& opts = {});

}  // namespace ddpm
