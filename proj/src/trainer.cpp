// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace ddpm {
namespace {

// Stream ids under the training seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kStepStream = 2;
constexpr std::uint64_t kEvalStream = 3;

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (steps <= 0) throw std::invalid_argument("train: steps must be > 0");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be > 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("train: learning_rate must be >= 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw std::invalid_argument("train: ema_decay must be in [0, 1)");
  }
  if (eval_every < 0) throw std::invalid_argument("train: eval_every must be >= 0");
}

InstabilityError::InstabilityError(int step, double loss)
    : std::runtime_error("training became unstable at step " + std::to_string(step) +
                         " (loss = " + std::to_string(loss) + ")"),
      step_(step) {}

void adaptive_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                     double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adaptive_update: size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

void ema_update(std::span<double> ema, std::span<const double> params, double decay) {
  if (ema.size() != params.size()) throw std::invalid_argument("ema_update: size mismatch");
  for (std::size_t i = 0; i < ema.size(); ++i) {
    ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
  }
}

TrainState TrainState::create(const TrainConfig& config) {
  config.validate();
  TrainState s{MlpDenoiser(config.model), {}, {}, 0};
  s.model.initialize(RngStream(config.seed).split(kInitStream));
  s.ema.assign(s.model.parameters().begin(), s.model.parameters().end());
  return s;
}

MlpDenoiser TrainState::ema_model() const {
  MlpDenoiser m(model.config());
  m.set_parameters(ema);
  return m;
}

double train_step(TrainState& state, const Matrix& batch, const TrainConfig& config,
                  const NoiseSchedule& sched, const RngStream& rng) {
  const TrainingDraw draw = draw_training_noise(batch, sched, rng);
  const LossResult r = loss_at(config.loss_mode, config.sigma_mode, batch, draw, state.model, sched);
  ++state.step;
  bool finite = std::isfinite(r.value);
  for (double g : r.grad) finite = finite && std::isfinite(g);
  if (!finite) throw InstabilityError(state.step, r.value);
  adaptive_update(state.model.parameters(), r.grad, state.adam, config.learning_rate);
  ema_update(state.ema, state.model.parameters(), config.ema_decay);
  return r.value;
}

std::string TrainReport::history_csv() const {
  std::ostringstream out;
  out << "step,train_loss,vb_total_bits_per_dim\n";
  for (const auto& r : history) {
    out << r.step << ',' << format_double(r.train_loss) << ',' << format_double(r.vb_total) << '\n';
  }
  return out.str();
}

TrainReport run_training(const TrainConfig& config, const NoiseSchedule& sched,
                         const DataBatch& train_data, const DataBatch& eval_data) {
  config.validate();
  if (train_data.dims() != config.model.data_dim) {
    throw std::invalid_argument("train: data dimensionality does not match model");
  }
  TrainState state = TrainState::create(config);
  const RngStream root(config.seed);
  const RngStream step_root = root.split(kStepStream);
  const ReverseModes eval_modes{config.model.param_mode, config.sigma_mode, false};
  const auto started = std::chrono::steady_clock::now();

  TrainReport report;
  report.losses.reserve(static_cast<std::size_t>(config.steps));
  double interval_loss = 0.0;
  int interval_count = 0;
  std::vector<std::size_t> rows(config.batch_size);

  auto evaluate = [&](int step) {
    EvalRecord rec;
    rec.step = step;
    rec.train_loss = interval_count > 0 ? interval_loss / interval_count : 0.0;
    VbOptions opts;
    opts.samples_per_term = config.eval_samples_per_term;
    rec.vb_total = vb_terms(eval_data, state.ema_model(), eval_modes, sched,
                            root.split(kEvalStream), opts)
                       .total;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.history.push_back(rec);
    interval_loss = 0.0;
    interval_count = 0;
  };

  for (int step = 1; step <= config.steps; ++step) {
    RngStream pick = step_root.split(static_cast<std::uint64_t>(step)).split(0);
    for (auto& r : rows) r = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(train_data.n()) - 1));
    const Matrix batch = train_data.gather(rows).values;
    const double loss = train_step(state, batch, config, sched,
                                   step_root.split(static_cast<std::uint64_t>(step)).split(1));
    report.losses.push_back(loss);
    interval_loss += loss;
    ++interval_count;
    if ((config.eval_every > 0 && step % config.eval_every == 0) || step == config.steps) {
      evaluate(step);
    }
  }
  const auto p = state.model.parameters();
  report.parameters.assign(p.begin(), p.end());
  report.ema_parameters = state.ema;
  return report;
}

}  // namespace ddpm
