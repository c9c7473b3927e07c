// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ddpm/parallel.hpp"

namespace ddpm {
namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
constexpr double kProbFloor = 1e-12;

double gaussian_log_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (d * d / var + kLog2Pi + std::log(var));
}

std::vector<RngStream> row_streams(const RngStream& rng, std::size_t begin, std::size_t end) {
  std::vector<RngStream> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(rng.split(i));
  return out;
}

Matrix draw_normals(std::span<RngStream> rngs, std::size_t dims) {
  Matrix out(rngs.size(), dims);
  for (std::size_t i = 0; i < rngs.size(); ++i) rngs[i].fill_normal(out.row(i));
  return out;
}

// Reverse chain on one chunk of rows; rngs are per row and already positioned.
SampleResult run_chain(Matrix x, int t_start, const Denoiser& denoiser, const ReverseModes& modes,
                       const NoiseSchedule& sched, std::span<RngStream> rngs,
                       std::span<const int> snapshot_times) {
  SampleResult result;
  auto wants = [&](int t) {
    return std::find(snapshot_times.begin(), snapshot_times.end(), t) != snapshot_times.end();
  };
  for (int t = t_start; t >= 1; --t) {
    const Matrix out = denoiser.predict_at(x, t);
    ReverseMean rm = reverse_mean(x, t, out, modes.param, modes.clamp_x0, sched);
    if (t > 1) {
      if (wants(t)) result.snapshots.emplace_back(t, rm.x0_hat);
      const double sigma = std::sqrt(reverse_variance(sched, t, modes.sigma));
      for (std::size_t i = 0; i < x.rows(); ++i) {
        auto m = rm.mean.row(i);
        for (double& v : m) v += sigma * rngs[i].normal();
      }
    }
    x = std::move(rm.mean);
  }
  if (wants(1)) result.snapshots.emplace_back(1, x);
  result.x0 = std::move(x);
  return result;
}

// Runs run_chain over fixed-size row chunks and stitches the results.
SampleResult chunked_chain(std::size_t n, std::size_t dims, int t_start,
                           const std::function<Matrix(std::span<RngStream>, std::size_t)>& start,
                           const Denoiser& denoiser, const ReverseModes& modes,
                           const NoiseSchedule& sched, const RngStream& rng,
                           std::span<const int> snapshot_times) {
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<SampleResult> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunkRows;
    const std::size_t end = std::min(n, begin + kChunkRows);
    auto rngs = row_streams(rng, begin, end);
    parts[c] = run_chain(start(rngs, begin), t_start, denoiser, modes, sched, rngs, snapshot_times);
  });
  SampleResult out;
  out.x0 = Matrix(n, dims);
  for (std::size_t c = 0; c < chunks; ++c) out.x0.set_rows(c * kChunkRows, parts[c].x0);
  if (chunks > 0) {
    for (std::size_t s = 0; s < parts[0].snapshots.size(); ++s) {
      Matrix frame(n, dims);
      for (std::size_t c = 0; c < chunks; ++c) {
        frame.set_rows(c * kChunkRows, parts[c].snapshots[s].second);
      }
      out.snapshots.emplace_back(parts[0].snapshots[s].first, std::move(frame));
    }
  }
  return out;
}

}  // namespace

Matrix q_sample_step(const Matrix& x_prev, int t, const Matrix& noise, const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(x_prev, noise, "q_sample_step");
  const double a = std::sqrt(sched.alpha[t]);
  const double b = std::sqrt(sched.beta[t]);
  Matrix out(x_prev.rows(), x_prev.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = a * x_prev.data()[i] + b * noise.data()[i];
  }
  return out;
}

Matrix q_sample(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(x0, eps, "q_sample");
  const double a = sched.sqrt_alpha_bar[t];
  const double b = sched.sqrt_one_minus_alpha_bar[t];
  Matrix out(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a * x0.data()[i] + b * eps.data()[i];
  return out;
}

GaussianMoments q_posterior(const Matrix& x0, const Matrix& x_t, int t, const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(x0, x_t, "q_posterior");
  const double c1 = sched.posterior_mean_coef1[t];
  const double c2 = sched.posterior_mean_coef2[t];
  GaussianMoments m{Matrix(x0.rows(), x0.cols()), sched.beta_tilde[t]};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    m.mean.data()[i] = c1 * x0.data()[i] + c2 * x_t.data()[i];
  }
  return m;
}

Matrix predict_x0_from_eps(const Matrix& x_t, int t, const Matrix& eps_hat,
                           const NoiseSchedule& sched, bool clamp) {
  sched.check_step(t);
  require_same_shape(x_t, eps_hat, "predict_x0_from_eps");
  const double sa = sched.sqrt_alpha_bar[t];
  const double s1m = sched.sqrt_one_minus_alpha_bar[t];
  Matrix out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = (x_t.data()[i] - s1m * eps_hat.data()[i]) / sa;
    if (clamp) v = std::clamp(v, -1.0, 1.0);
    out.data()[i] = v;
  }
  return out;
}

Matrix mu_from_eps(const Matrix& x_t, int t, const Matrix& eps_hat, const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(x_t, eps_hat, "mu_from_eps");
  const double k = sched.beta[t] / sched.sqrt_one_minus_alpha_bar[t];
  const double inv = 1.0 / std::sqrt(sched.alpha[t]);
  Matrix out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = (x_t.data()[i] - k * eps_hat.data()[i]) * inv;
  }
  return out;
}

double reverse_variance(const NoiseSchedule& sched, int t, SigmaMode mode) {
  sched.check_step(t);
  return mode == SigmaMode::kFixedBeta ? sched.beta[t] : sched.beta_tilde_clipped[t];
}

ReverseMean reverse_mean(const Matrix& x_t, int t, const Matrix& output, ParamMode mode,
                         bool clamp_x0, const NoiseSchedule& sched) {
  require_same_shape(x_t, output, "reverse_mean");
  switch (mode) {
    case ParamMode::kPredictEps: {
      Matrix x0_hat = predict_x0_from_eps(x_t, t, output, sched, clamp_x0);
      if (clamp_x0) {
        Matrix mean = q_posterior(x0_hat, x_t, t, sched).mean;
        return {std::move(mean), std::move(x0_hat)};
      }
      return {mu_from_eps(x_t, t, output, sched), std::move(x0_hat)};
    }
    case ParamMode::kPredictX0: {
      Matrix x0_hat = output;
      if (clamp_x0) {
        for (double& v : x0_hat.data()) v = std::clamp(v, -1.0, 1.0);
      }
      Matrix mean = q_posterior(x0_hat, x_t, t, sched).mean;
      return {std::move(mean), std::move(x0_hat)};
    }
    case ParamMode::kPredictMu: {
      const double c1 = sched.posterior_mean_coef1[t];
      const double c2 = sched.posterior_mean_coef2[t];
      Matrix x0_hat(x_t.rows(), x_t.cols());
      for (std::size_t i = 0; i < x0_hat.size(); ++i) {
        x0_hat.data()[i] = (output.data()[i] - c2 * x_t.data()[i]) / c1;
      }
      return {output, std::move(x0_hat)};
    }
  }
  throw std::logic_error("reverse_mean: unknown mode");
}

Matrix p_sample_step(const Matrix& x_t, int t, const Denoiser& denoiser, const ReverseModes& modes,
                     const NoiseSchedule& sched, std::span<RngStream> rngs) {
  if (rngs.size() != x_t.rows()) throw std::invalid_argument("p_sample_step: need one rng per row");
  const Matrix out = denoiser.predict_at(x_t, t);
  ReverseMean rm = reverse_mean(x_t, t, out, modes.param, modes.clamp_x0, sched);
  if (t > 1) {
    const double sigma = std::sqrt(reverse_variance(sched, t, modes.sigma));
    for (std::size_t i = 0; i < x_t.rows(); ++i) {
      for (double& v : rm.mean.row(i)) v += sigma * rngs[i].normal();
    }
  }
  return std::move(rm.mean);
}

SampleResult decode_from(const Matrix& x_start, int t_start, const Denoiser& denoiser,
                         const ReverseModes& modes, const NoiseSchedule& sched,
                         const RngStream& rng, std::span<const int> snapshot_times) {
  sched.check_step(t_start);
  return chunked_chain(
      x_start.rows(), x_start.cols(), t_start,
      [&](std::span<RngStream> rngs, std::size_t begin) {
        return x_start.slice_rows(begin, begin + rngs.size());
      },
      denoiser, modes, sched, rng, snapshot_times);
}

SampleResult p_sample_loop(const Denoiser& denoiser, std::size_t n, const ReverseModes& modes,
                           const NoiseSchedule& sched, const RngStream& rng,
                           std::span<const int> snapshot_times) {
  for (int t : snapshot_times) sched.check_step(t);
  const std::size_t dims = denoiser.dims();
  return chunked_chain(
      n, dims, sched.T,
      [&](std::span<RngStream> rngs, std::size_t) { return draw_normals(rngs, dims); }, denoiser,
      modes, sched, rng, snapshot_times);
}

double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) {
    throw std::invalid_argument("gaussian_kl: variances must be positive");
  }
  const double d = mean1 - mean2;
  if (var1 == var2) return 0.5 * d * d / var2;
  return 0.5 * (var1 / var2 + d * d / var2 - 1.0 + std::log(var2 / var1));
}

double decoder_bin_probability(std::uint8_t level, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("decoder: sigma must be positive");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Bin edges (2k +- 1)/255 - 1 shared exactly between neighbouring levels.
  const double lower = level == 0 ? -kInf : (2.0 * level - 1.0) / 255.0 - 1.0;
  const double upper = level == 255 ? kInf : (2.0 * level + 1.0) / 255.0 - 1.0;
  const double z_lo = (lower - mu) / sigma;
  const double z_hi = (upper - mu) / sigma;
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  // Subtract whichever tail is smaller to avoid cancellation far from mu.
  if (z_lo > 0.0) return 0.5 * (std::erfc(z_lo * kInvSqrt2) - std::erfc(z_hi * kInvSqrt2));
  return 0.5 * (std::erfc(-z_hi * kInvSqrt2) - std::erfc(-z_lo * kInvSqrt2));
}

double decoder_nll_nats(std::span<const std::uint8_t> levels, std::span<const double> mu,
                        double sigma) {
  if (levels.size() != mu.size()) throw std::invalid_argument("decoder: shape mismatch");
  double nll = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    nll -= std::log(std::max(decoder_bin_probability(levels[i], mu[i], sigma), kProbFloor));
  }
  return nll;
}

double decoder_nll(std::span<const std::uint8_t> levels, const Matrix& mu1, double sigma1) {
  if (levels.size() != mu1.size() || mu1.empty()) {
    throw std::invalid_argument("decoder_nll: shape mismatch");
  }
  const std::size_t d = mu1.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < mu1.rows(); ++i) {
    total += decoder_nll_nats(levels.subspan(i * d, d), mu1.row(i), sigma1);
  }
  return total / (static_cast<double>(mu1.size()) * kLn2);
}

double VbBreakdown::mid_sum() const {
  double s = 0.0;
  for (double v : l_mid) s += v;
  return s;
}

VbBreakdown vb_terms(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                     const NoiseSchedule& sched, const RngStream& rng, const VbOptions& opts) {
  const std::size_t n = x0.n(), d = x0.dims();
  if (n == 0 || d == 0) throw std::invalid_argument("vb_terms: empty batch");
  if (opts.samples_per_term < 1) throw std::invalid_argument("vb_terms: samples_per_term < 1");
  const int T = sched.T;
  const auto levels = x0.bytes_or_quantized();
  const double sigma1 = std::sqrt(reverse_variance(sched, 1, modes.sigma));
  const int S = opts.samples_per_term;

  struct ChunkSums {
    std::vector<double> kl;    // indexed by t
    std::vector<double> dist;  // squared x0 error, indexed by t
    double l0 = 0.0;
    double mu1_sq = 0.0;
  };
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<ChunkSums> sums(chunks);
  std::vector<double> row_total(n, 0.0);  // nats per datapoint

  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunkRows, end = std::min(n, begin + kChunkRows);
    auto rngs = row_streams(rng, begin, end);
    const Matrix xc = x0.values.slice_rows(begin, end);
    ChunkSums& cs = sums[c];
    cs.kl.assign(static_cast<std::size_t>(T) + 1, 0.0);
    cs.dist.assign(static_cast<std::size_t>(T) + 1, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int t = 1; t <= T; ++t) {
        const Matrix eps = draw_normals(rngs, d);
        const Matrix x_t = q_sample(xc, t, eps, sched);
        const Matrix out = denoiser.predict_at(x_t, t);
        const ReverseMean rm = reverse_mean(x_t, t, out, modes.param, false, sched);
        if (t == 1) {
          for (std::size_t i = 0; i < xc.rows(); ++i) {
            const double nll = decoder_nll_nats(
                std::span(levels).subspan((begin + i) * d, d), rm.mean.row(i), sigma1);
            cs.l0 += nll;
            row_total[begin + i] += nll / S;
            for (std::size_t j = 0; j < d; ++j) {
              const double e = rm.mean(i, j) - xc(i, j);
              cs.mu1_sq += e * e;
            }
          }
        } else {
          const GaussianMoments post = q_posterior(xc, x_t, t, sched);
          const double var_p = reverse_variance(sched, t, modes.sigma);
          for (std::size_t i = 0; i < xc.rows(); ++i) {
            double kl = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              kl += gaussian_kl(post.mean(i, j), post.var, rm.mean(i, j), var_p);
            }
            cs.kl[t] += kl;
            row_total[begin + i] += kl / S;
          }
        }
        if (opts.record_distortion) {
          const Matrix x0_hat = opts.distortion_with_true_eps
                                    ? predict_x0_from_eps(x_t, t, eps, sched)
                                    : rm.x0_hat;
          for (std::size_t i = 0; i < x0_hat.size(); ++i) {
            const double e = x0_hat.data()[i] - xc.data()[i];
            cs.dist[t] += e * e;
          }
        }
      }
    }
    for (std::size_t i = 0; i < xc.rows(); ++i) {
      row_total[begin + i] += terminal_kl_nats_row(sched, xc.row(i));
    }
  });

  const double per_term = static_cast<double>(n) * S * d;
  const double to_bits = 1.0 / (per_term * kLn2);
  auto reduce = [&](auto field) {
    std::vector<double> v(chunks);
    for (std::size_t c = 0; c < chunks; ++c) v[c] = field(sums[c]);
    return tree_sum(v);
  };

  VbBreakdown vb;
  vb.samples_per_term = S;
  vb.l_T = terminal_kl_bits(sched, x0.values);
  vb.l_mid.assign(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 2; t <= T; ++t) vb.l_mid[t] = reduce([t](const ChunkSums& s) { return s.kl[t]; }) * to_bits;
  vb.l_0 = reduce([](const ChunkSums& s) { return s.l0; }) * to_bits;
  vb.total = vb.l_T + vb.mid_sum() + vb.l_0;
  vb.rmse_of_mu1 = std::sqrt(reduce([](const ChunkSums& s) { return s.mu1_sq; }) / per_term) * 127.5;
  if (opts.record_distortion) {
    vb.distortion.assign(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
      vb.distortion[t] =
          std::sqrt(reduce([t](const ChunkSums& s) { return s.dist[t]; }) / per_term) * 127.5;
    }
  }
  if (n > 1) {
    const double row_scale = 1.0 / (d * kLn2);
    const double mean = tree_sum(row_total) / n;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = row_total[i] - mean;
      sq[i] = e * e;
    }
    vb.total_se = std::sqrt(tree_sum(sq) / (n - 1) / n) * row_scale;
  }
  return vb;
}

McEstimate vb_naive_mc(const DataBatch& x0, const Denoiser& denoiser, const ReverseModes& modes,
                       const NoiseSchedule& sched, const RngStream& rng, std::size_t n_chains) {
  const std::size_t n = x0.n(), d = x0.dims();
  if (n == 0 || n_chains == 0) throw std::invalid_argument("vb_naive_mc: empty input");
  const int T = sched.T;
  const auto levels = x0.bytes_or_quantized();
  std::vector<double> chain_nats(n_chains, 0.0);

  parallel_chunks(n_chains, [&](std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    auto rngs = row_streams(rng, begin, end);
    std::vector<Matrix> xs;
    xs.reserve(static_cast<std::size_t>(T) + 1);
    Matrix start(m, d);
    for (std::size_t i = 0; i < m; ++i) {
      const auto src = x0.values.row((begin + i) % n);
      std::copy(src.begin(), src.end(), start.row(i).begin());
    }
    xs.push_back(std::move(start));
    for (int t = 1; t <= T; ++t) {
      const Matrix z = draw_normals(rngs, d);
      xs.push_back(q_sample_step(xs.back(), t, z, sched));
    }
    std::vector<double> acc(m, 0.0);
    // -log p(x_T)
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < d; ++j) acc[i] -= gaussian_log_density(xs[T](i, j), 0.0, 1.0);
    }
    for (int t = T; t >= 1; --t) {
      const Matrix& x_t = xs[t];
      const Matrix& x_prev = xs[t - 1];
      const Matrix out = denoiser.predict_at(x_t, t);
      const ReverseMean rm = reverse_mean(x_t, t, out, modes.param, false, sched);
      const double var_p = reverse_variance(sched, t, modes.sigma);
      const double sa = std::sqrt(sched.alpha[t]);
      for (std::size_t i = 0; i < m; ++i) {
        double log_q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          log_q += gaussian_log_density(x_t(i, j), sa * x_prev(i, j), sched.beta[t]);
        }
        double log_p = 0.0;
        if (t > 1) {
          for (std::size_t j = 0; j < d; ++j) {
            log_p += gaussian_log_density(x_prev(i, j), rm.mean(i, j), var_p);
          }
        } else {
          const std::size_t row = (begin + i) % n;
          log_p = -decoder_nll_nats(std::span(levels).subspan(row * d, d), rm.mean.row(i),
                                    std::sqrt(var_p));
        }
        acc[i] += log_q - log_p;
      }
    }
    for (std::size_t i = 0; i < m; ++i) chain_nats[begin + i] = acc[i] / (d * kLn2);
  });

  McEstimate est;
  est.n = n_chains;
  est.mean = tree_sum(chain_nats) / static_cast<double>(n_chains);
  if (n_chains > 1) {
    std::vector<double> sq(n_chains);
    for (std::size_t i = 0; i < n_chains; ++i) {
      const double e = chain_nats[i] - est.mean;
      sq[i] = e * e;
    }
    est.se = std::sqrt(tree_sum(sq) / (n_chains - 1) / n_chains);
  }
  return est;
}

TrainingDraw make_training_draw(const Matrix& x0, std::vector<int> t, Matrix eps,
                                const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "make_training_draw");
  if (t.size() != x0.rows()) throw std::invalid_argument("make_training_draw: t size mismatch");
  TrainingDraw draw{std::move(t), std::move(eps), Matrix(x0.rows(), x0.cols())};
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    const int ti = draw.t[i];
    sched.check_step(ti);
    const double a = sched.sqrt_alpha_bar[ti], b = sched.sqrt_one_minus_alpha_bar[ti];
    for (std::size_t j = 0; j < x0.cols(); ++j) draw.x_t(i, j) = a * x0(i, j) + b * draw.eps(i, j);
  }
  return draw;
}

TrainingDraw draw_training_noise(const Matrix& x0, const NoiseSchedule& sched, const RngStream& rng) {
  std::vector<int> t(x0.rows());
  Matrix eps(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    RngStream r = rng.split(i);
    t[i] = static_cast<int>(r.uniform_int(1, sched.T));
    r.fill_normal(eps.row(i));
  }
  return make_training_draw(x0, std::move(t), std::move(eps), sched);
}

double eps_loss_weight(const NoiseSchedule& sched, int t, SigmaMode mode) {
  const double sigma2 = reverse_variance(sched, t, mode);
  const double b = sched.beta[t];
  return b * b / (2.0 * sigma2 * sched.alpha[t] * sched.one_minus_alpha_bar[t]);
}

LossClosure make_loss(LossMode loss, ParamMode param, SigmaMode sigma, const Matrix& x0,
                      const TrainingDraw& draw, const NoiseSchedule& sched) {
  return [=, &x0, &draw, &sched](const Matrix& out, Matrix& grad) -> double {
    require_same_shape(out, x0, "loss");
    const std::size_t n = out.rows(), d = out.cols();
    const double norm = 1.0 / static_cast<double>(n * d);
    grad = Matrix(n, d);
    std::vector<double> row_loss(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int t = draw.t[i];
      const double c1 = sched.posterior_mean_coef1[t];
      const double c2 = sched.posterior_mean_coef2[t];
      double acc = 0.0;
      if (param == ParamMode::kPredictEps) {
        const double w = loss == LossMode::kSimple ? 1.0 : eps_loss_weight(sched, t, sigma);
        for (std::size_t j = 0; j < d; ++j) {
          const double e = out(i, j) - draw.eps(i, j);
          acc += w * e * e;
          grad(i, j) = 2.0 * w * e * norm;
        }
      } else {
        // Target and d(mu_theta)/d(output) for the mean-space objective.
        const double slope = param == ParamMode::kPredictMu ? 1.0 : c1;
        const double inv_var =
            loss == LossMode::kSimple ? 0.0 : 1.0 / reverse_variance(sched, t, sigma);
        for (std::size_t j = 0; j < d; ++j) {
          const double mu_tilde = c1 * x0(i, j) + c2 * draw.x_t(i, j);
          if (loss == LossMode::kSimple) {
            const double target = param == ParamMode::kPredictMu ? mu_tilde : x0(i, j);
            const double e = out(i, j) - target;
            acc += e * e;
            grad(i, j) = 2.0 * e * norm;
          } else {
            const double mu = param == ParamMode::kPredictMu ? out(i, j)
                                                             : c1 * out(i, j) + c2 * draw.x_t(i, j);
            const double e = mu - mu_tilde;
            acc += 0.5 * e * e * inv_var;
            grad(i, j) = e * inv_var * slope * norm;
          }
        }
      }
      row_loss[i] = acc;
    }
    return tree_sum(row_loss) * norm;
  };
}

LossResult loss_at(LossMode loss, SigmaMode sigma, const Matrix& x0, const TrainingDraw& draw,
                   const Denoiser& denoiser, const NoiseSchedule& sched) {
  const LossClosure closure = make_loss(loss, denoiser.param_mode(), sigma, x0, draw, sched);
  if (const auto* mlp = dynamic_cast<const MlpDenoiser*>(&denoiser)) {
    auto [value, grad] = mlp->value_and_grad(draw.x_t, draw.t, closure);
    return {value, std::move(grad)};
  }
  Matrix grad_out;
  return {closure(denoiser.predict(draw.x_t, draw.t), grad_out), {}};
}

LossResult loss_simple(const Matrix& x0, const Denoiser& denoiser, const NoiseSchedule& sched,
                       const RngStream& rng) {
  const TrainingDraw draw = draw_training_noise(x0, sched, rng);
  return loss_at(LossMode::kSimple, SigmaMode::kFixedBeta, x0, draw, denoiser, sched);
}

LossResult loss_weighted(const Matrix& x0, const Denoiser& denoiser, SigmaMode sigma,
                         const NoiseSchedule& sched, const RngStream& rng) {
  const TrainingDraw draw = draw_training_noise(x0, sched, rng);
  return loss_at(LossMode::kWeightedVb, sigma, x0, draw, denoiser, sched);
}

}  // namespace ddpm
