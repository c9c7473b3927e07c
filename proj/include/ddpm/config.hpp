// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ddpm/data.hpp"
#include "ddpm/modes.hpp"
#include "ddpm/schedule.hpp"
#include "ddpm/trainer.hpp"

namespace ddpm {

/// Flat key=value run configuration. Lines starting with '#' are comments.
/// Every key must be one of the known keys; values start from built-in
/// defaults, then the file, then command-line overrides.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<std::pair<std::string, std::string>>& defaults();

  void load_file(const std::filesystem::path& path);
  void parse(std::string_view text, std::string_view origin = "<text>");
  /// Accepts "key=value".
  void set_assignment(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  /// All keys in sorted order; written alongside every run's outputs.
  std::string resolved_text() const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed")); }
  std::filesystem::path out_dir() const { return get("io.out_dir"); }
  ScheduleSpec schedule() const;
  MlpConfig model(std::size_t data_dim) const;
  TrainConfig train(std::size_t data_dim) const;
  DatasetSpec dataset() const;
  /// Held-out split: same distribution, seed + 1, analysis.eval_n rows.
  DatasetSpec eval_dataset() const;
  ReverseModes reverse_modes() const;
  bool image_like() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ddpm
