// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddpm/modes.hpp"
#include "ddpm/rng.hpp"
#include "ddpm/schedule.hpp"
#include "ddpm/tensor.hpp"

namespace ddpm {

/// A reverse-process mean model evaluated on a batch of noisy rows, each at
/// its own timestep. The meaning of the output is given by param_mode().
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual ParamMode param_mode() const = 0;
  virtual std::size_t dims() const = 0;
  virtual Matrix predict(const Matrix& x_t, std::span<const int> t) const = 0;

  Matrix predict_at(const Matrix& x_t, int t) const {
    std::vector<int> ts(x_t.rows(), t);
    return predict(x_t, ts);
  }
};

struct TimeEmbeddingSpec {
  int dim = 32;
  double max_period = 10000.0;
};

/// Sinusoidal embedding: first half sin(t * f_i), second half cos(t * f_i),
/// with f_i = max_period^(-2i/dim).
std::vector<double> time_embedding(double t, const TimeEmbeddingSpec& spec);
void time_embedding(double t, const TimeEmbeddingSpec& spec, std::span<double> out);

struct MlpConfig {
  std::size_t data_dim = 2;
  std::vector<int> hidden{128, 128, 128};
  TimeEmbeddingSpec time;
  ParamMode param_mode = ParamMode::kPredictEps;

  void validate() const;
  std::size_t input_dim() const { return data_dim + static_cast<std::size_t>(time.dim); }
};

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
};

/// Receives the network output and returns the loss, writing dloss/doutput.
using LossClosure = std::function<double(const Matrix& output, Matrix& grad_output)>;

/// Fully connected network on [x_t, time_embedding(t)] with SiLU hidden
/// activations and a linear head.
///
/// Parameters live in one flat vector in declared order: for each layer, the
/// weight matrix (in x out, row-major) followed by the bias vector.
class MlpDenoiser final : public Denoiser {
 public:
  explicit MlpDenoiser(MlpConfig config);

  ParamMode param_mode() const override { return config_.param_mode; }
  std::size_t dims() const override { return config_.data_dim; }
  Matrix predict(const Matrix& x_t, std::span<const int> t) const override;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, last
  /// layer scaled by 0.1.
  void initialize(RngStream rng);

  /// Loss and its gradient with respect to parameters(), by reverse-mode
  /// accumulation through the network.
  std::pair<double, std::vector<double>> value_and_grad(const Matrix& x_t, std::span<const int> t,
                                                        const LossClosure& loss) const;

  const MlpConfig& config() const { return config_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  void set_parameters(std::span<const double> p);
  std::size_t parameter_count() const { return params_.size(); }

 private:
  Matrix build_input(const Matrix& x_t, std::span<const int> t) const;

  MlpConfig config_;
  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  std::vector<double> params_;
};

/// Exact denoisers for data distributions with closed-form posteriors.
class OracleDenoiser final : public Denoiser {
 public:
  enum class Kind { kStandardNormalData, kPointMass };

  static OracleDenoiser standard_normal(const NoiseSchedule& sched, std::size_t dims);
  static OracleDenoiser point_mass(const NoiseSchedule& sched, std::vector<double> center);

  ParamMode param_mode() const override { return ParamMode::kPredictEps; }
  std::size_t dims() const override { return dims_; }
  Matrix predict(const Matrix& x_t, std::span<const int> t) const override;

  Kind kind() const { return kind_; }

 private:
  OracleDenoiser(Kind kind, const NoiseSchedule& sched, std::size_t dims, std::vector<double> c)
      : kind_(kind), sched_(sched), dims_(dims), center_(std::move(c)) {}

  Kind kind_;
  NoiseSchedule sched_;
  std::size_t dims_;
  std::vector<double> center_;
};

/// E[eps | x_t] for the oracle's data distribution.
///   standard normal data: sqrt(1 - alpha_bar_t) * x_t
///   point mass at c:      (x_t - sqrt(alpha_bar_t) * c) / sqrt(1 - alpha_bar_t)
Matrix oracle_eval(const OracleDenoiser& oracle, const Matrix& x_t, int t);

/// Versioned parameter checkpoint.
///
/// Layout (all little-endian): magic "DDPMCKP1"; u32 version; u32 data_dim;
/// u32 time_dim; f64 max_period; u32 param_mode; u32 hidden_count; u32 width
/// per hidden layer; u32 schedule_T; u32 schedule_kind; f64 beta_start;
/// f64 beta_end; u64 parameter_count; f64 parameters in declared order.
struct Checkpoint {
  MlpConfig model;
  ScheduleSpec schedule;
  std::vector<double> parameters;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Plain-text listing of parameter tensor names and shapes.
std::string checkpoint_manifest(const Checkpoint& ckpt);

}  // namespace ddpm
