// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Each criterion's runtime budget is part of its verdict.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ddpm/analysis.hpp"
#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/diffusion.hpp"
#include "ddpm/parallel.hpp"
#include "ddpm/schedule.hpp"
#include "ddpm/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ddpm;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, const char* spec = "%.3e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

MlpDenoiser random_mlp(std::size_t dim, std::vector<int> hidden, int time_dim, ParamMode mode,
                       std::uint64_t seed) {
  MlpConfig cfg;
  cfg.data_dim = dim;
  cfg.hidden = std::move(hidden);
  cfg.time.dim = time_dim;
  cfg.param_mode = mode;
  MlpDenoiser net(cfg);
  net.initialize(RngStream(seed));
  return net;
}

// Random discrete data with n rows of D bytes.
DataBatch random_bytes(std::size_t n, std::size_t D, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::uint8_t> bytes(n * D);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return DataBatch::from_bytes(n, D, std::move(bytes));
}

// ---------------------------------------------------------------------------

void a1(Verdict& v) {
  const ScheduleSpec spec{ScheduleKind::kLinear, 1000, 1e-4, 0.02};
  const NoiseSchedule s = build_schedule(spec);
  v.require(s.beta[1] == 1e-4, "beta_1 == 1e-4");
  v.require(s.beta[1000] == 0.02, "beta_1000 == 0.02");

  const auto ab = oracle::alpha_bar_hp(spec);
  const double rel = std::abs(static_cast<double>((oracle::hp(s.alpha_bar[1000]) - ab[1000]) / ab[1000]));
  v.require(rel < 1e-12, "alpha_bar_T vs 50-digit product");

  // Worst case within [-1, 1] is |x| = 1; include it plus random interiors.
  RngStream rng(1);
  Matrix x(64, 16);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * rng.uniform() - 1.0;
  for (std::size_t j = 0; j < x.cols(); ++j) x(0, j) = (j % 2) ? 1.0 : -1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Matrix row = x.slice_rows(i, i + 1);
    worst = std::max(worst, terminal_kl_bits(s, row));
  }
  Matrix ones(1, 8, 1.0);
  const double kl1 = terminal_kl_bits(s, ones);
  const double kl1_hp = static_cast<double>(oracle::terminal_kl_hp(ab[1000], 1.0) / log(oracle::hp(2)));
  v.require(worst <= 1e-4 && kl1 <= 1e-4, "terminal KL <= 1e-4 bits/dim");
  v.require(std::abs(kl1 - kl1_hp) <= 1e-12 * std::max(1.0, kl1_hp) + 1e-15, "terminal KL vs 50-digit oracle");
  v.detail << "alpha_bar_T=" << fmt(s.alpha_bar[1000]) << " max terminal KL=" << fmt(std::max(worst, kl1))
           << " bits/dim";
}

void a2(Verdict& v) {
  const ScheduleSpec spec{ScheduleKind::kLinear, 50, 0.002, 0.4};
  const NoiseSchedule s = build_schedule(spec);
  const std::size_t n = 200000;
  const std::vector<double> x0{0.7, -0.4};
  Matrix x(n, 2);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = x0[0], x(i, 1) = x0[1];
  const RngStream root(2);
  for (int t = 1; t <= 50; ++t) {
    Matrix noise(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      RngStream r = root.split(static_cast<std::uint64_t>(t) * n + i);
      r.fill_normal(noise.row(i));
    }
    x = q_sample_step(x, t, noise, s);
  }
  const double ab = static_cast<double>(oracle::alpha_bar_hp(spec)[50]);
  double worst_z = 0.0;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
    const auto m = oracle::moments(col);
    const double mean_true = std::sqrt(ab) * x0[j];
    const double var_true = 1.0 - ab;
    const double z_mean = std::abs(m.mean - mean_true) / std::sqrt(var_true / n);
    // SE of the sample variance for a Gaussian: var * sqrt(2 / (n - 1)).
    const double z_var = std::abs(m.var - var_true) / (var_true * std::sqrt(2.0 / (n - 1)));
    v.require(z_mean <= 4.0, "mean within 4 SE (dim " + std::to_string(j) + ")");
    v.require(z_var <= 4.0, "variance within 4 SE (dim " + std::to_string(j) + ")");
    worst_z = std::max({worst_z, z_mean, z_var});
  }
  v.detail << "n=" << n << " worst |z|=" << fmt(worst_z, "%.2f");
}

void a3(Verdict& v) {
  const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 10, 0.05, 0.5});
  const MlpDenoiser net = random_mlp(4, {16, 16}, 8, ParamMode::kPredictEps, 3);
  const DataBatch data = random_bytes(50, 4, 4);
  const ReverseModes modes{ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false};
  VbOptions opts;
  opts.samples_per_term = 400;
  const VbBreakdown vb = vb_terms(data, net, modes, s, RngStream(5), opts);
  const McEstimate mc = vb_naive_mc(data, net, modes, s, RngStream(6), 100000);
  const double se = std::hypot(vb.total_se, mc.se);
  const double diff = std::abs(vb.total - mc.mean);
  v.require(mc.n == 100000, "n = 1e5 chains");
  v.require(diff <= 3.0 * se, "|vb_terms - naive MC| <= 3 SE");
  v.detail << "vb_terms=" << fmt(vb.total, "%.5f") << " naive=" << fmt(mc.mean, "%.5f")
           << " |diff|/SE=" << fmt(diff / se, "%.2f");
}

void a4(Verdict& v) {
  const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 20, 0.01, 0.3});
  double worst = 0.0;
  std::size_t nparams = 0;
  for (auto mode : {ParamMode::kPredictEps, ParamMode::kPredictMu, ParamMode::kPredictX0}) {
    for (auto loss : {LossMode::kSimple, LossMode::kWeightedVb}) {
      for (auto sigma : {SigmaMode::kFixedBeta, SigmaMode::kFixedBetaTilde}) {
        if (loss == LossMode::kSimple && sigma == SigmaMode::kFixedBeta) continue;
        MlpDenoiser net = random_mlp(2, {8, 6}, 6, mode, 7);
        nparams = net.parameter_count();
        RngStream rng(8);
        Matrix x0(6, 2);
        for (std::size_t i = 0; i < x0.size(); ++i) x0.data()[i] = 2.0 * rng.uniform() - 1.0;
        // Cover t = 1 explicitly.
        std::vector<int> t{1, 2, 5, 11, 17, 20};
        Matrix eps(6, 2);
        rng.fill_normal(eps.data());
        const TrainingDraw draw = make_training_draw(x0, t, eps, s);
        const LossResult base = loss_at(loss, sigma, x0, draw, net, s);
        std::vector<double> p(net.parameters().begin(), net.parameters().end());
        const double h = 1e-5;
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double keep = p[k];
          p[k] = keep + h;
          net.set_parameters(p);
          const double up = loss_at(loss, sigma, x0, draw, net, s).value;
          p[k] = keep - h;
          net.set_parameters(p);
          const double down = loss_at(loss, sigma, x0, draw, net, s).value;
          p[k] = keep;
          const double fd = (up - down) / (2.0 * h);
          const double a = base.grad[k];
          const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
          worst = std::max(worst, std::abs(a - fd) / denom);
        }
        net.set_parameters(p);
      }
    }
  }
  v.require(nparams <= 200, "at most 200 parameters");
  v.require(worst <= 1e-5, "max relative error <= 1e-5");
  v.detail << "params=" << nparams << " max rel err=" << fmt(worst);
}

void a5(Verdict& v) {
  {
    const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 1000, 1e-4, 0.02});
    const std::vector<double> c{0.0, 0.0};
    const OracleDenoiser orc = OracleDenoiser::point_mass(s, c);
    DatasetSpec spec;
    spec.kind = DatasetKind::kPointMass;
    spec.center = c;
    spec.n = 16;
    const VbBreakdown vb = vb_terms(generate(spec), orc, {ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false},
                                    s, RngStream(9));
    double worst = 0.0;
    for (int t = 2; t <= s.T; ++t) worst = std::max(worst, std::abs(vb.l_mid[t]));
    v.require(worst <= 1e-12, "point-mass middle terms <= 1e-12");
    v.detail << "point-mass max |L_mid|=" << fmt(worst);
  }
  {
    const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 50, 0.002, 0.4});
    const OracleDenoiser orc = OracleDenoiser::standard_normal(s, 2);
    DatasetSpec spec;
    spec.kind = DatasetKind::kStandardNormal;
    spec.dim = 2;
    spec.n = 1000;
    spec.seed = 10;
    const DataBatch data = generate(spec);
    const ReverseModes modes{ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false};
    VbOptions opts;
    opts.samples_per_term = 200;
    const VbBreakdown vb = vb_terms(data, orc, modes, s, RngStream(11), opts);
    const McEstimate mc = vb_naive_mc(data, orc, modes, s, RngStream(12), 200000);
    const double diff = std::abs(vb.total - mc.mean);
    v.require(diff <= 0.05, "standard-normal oracle within 0.05 bits/dim of naive MC");
    v.detail << "; N(0,I) vb_terms=" << fmt(vb.total, "%.4f") << " naive=" << fmt(mc.mean, "%.4f")
             << "+-" << fmt(mc.se, "%.4f");
  }
}

void a6(Verdict& v) {
  RngStream rng(13);
  double worst_norm = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double mu = 3.0 * rng.uniform() - 1.5;
    const double sigma = std::exp(std::log(1e-3) + rng.uniform() * (std::log(2.0) - std::log(1e-3)));
    double sum = 0.0;
    for (int b = 0; b < 256; ++b) sum += decoder_bin_probability(static_cast<std::uint8_t>(b), mu, sigma);
    worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
  }
  double worst_nll = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double sigma = std::exp(std::log(2e-3) + rng.uniform() * (std::log(0.5) - std::log(2e-3)));
    const auto level = static_cast<int>(rng.uniform_int(0, 255));
    // Mean within a few sigma of the bin so the floor stays inactive.
    const double center = level / 127.5 - 1.0;
    const double mu = center + sigma * (6.0 * rng.uniform() - 3.0);
    const double p = oracle::bin_probability_quadrature(level, mu, sigma);
    const std::uint8_t b = static_cast<std::uint8_t>(level);
    Matrix m(1, 1, mu);
    const double nll = decoder_nll(std::span<const std::uint8_t>(&b, 1), m, sigma);
    worst_nll = std::max(worst_nll, std::abs(nll + std::log2(p)));
  }
  v.require(worst_norm <= 1e-9, "normalization error <= 1e-9");
  v.require(worst_nll <= 1e-8, "decoder_nll vs quadrature <= 1e-8");
  v.detail << "normalization err=" << fmt(worst_norm) << " nll err=" << fmt(worst_nll) << " bits";
}

void a7(Verdict& v) {
  const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 50, 0.002, 0.4});
  const std::vector<double> c{0.0, 0.0};
  DatasetSpec spec;
  spec.kind = DatasetKind::kPointMass;
  spec.center = c;
  spec.n = 1024;
  const DataBatch train = generate(spec);
  spec.n = 256;
  const DataBatch eval = generate(spec);
  const OracleDenoiser orc = OracleDenoiser::point_mass(s, c);

  // Fresh (t, eps) draws, uniform t, scored against the oracle.
  Matrix probe(8192, 2, 0.0);
  const TrainingDraw draw = draw_training_noise(probe, s, RngStream(14));
  const Matrix target = orc.predict(draw.x_t, draw.t);

  double totals[2] = {0.0, 0.0};
  double mse_simple = 0.0;
  for (int k = 0; k < 2; ++k) {
    TrainConfig tc;
    tc.model.data_dim = 2;
    tc.loss_mode = k == 0 ? LossMode::kSimple : LossMode::kWeightedVb;
    tc.sigma_mode = SigmaMode::kFixedBetaTilde;
    tc.steps = 2000;
    tc.seed = 15;
    tc.eval_every = 0;
    const TrainReport rep = run_training(tc, s, train, eval);
    MlpDenoiser net(tc.model);
    net.set_parameters(rep.ema_parameters);
    const ReverseModes modes{ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false};
    totals[k] = vb_terms(eval, net, modes, s, RngStream(16)).total;
    if (k == 0) {
      const Matrix out = net.predict(draw.x_t, draw.t);
      double se = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        se += (out.data()[i] - target.data()[i]) * (out.data()[i] - target.data()[i]);
      }
      mse_simple = se / out.size();
    }
  }
  v.require(mse_simple <= 0.05, "simple-loss eps-MSE vs oracle <= 0.05");
  v.require(totals[1] <= totals[0], "weighted-trained bound <= simple-trained bound");
  v.detail << "eps-MSE=" << fmt(mse_simple, "%.4f") << " bound simple=" << fmt(totals[0], "%.4f")
           << " weighted=" << fmt(totals[1], "%.4f") << " bits/dim";
}

void a8(Verdict& v) {
  const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 40, 0.002, 0.4});
  DatasetSpec spec;
  spec.kind = DatasetKind::kSprites;
  spec.n = 64;
  spec.seed = 17;
  const DataBatch data = generate(spec);
  const MlpDenoiser net = random_mlp(data.dims(), {32, 32}, 16, ParamMode::kPredictEps, 18);
  const ReverseModes modes{ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, false};
  RdOptions opts;
  opts.true_eps_estimator = true;
  const RdCurve rd = rate_distortion(data, net, modes, s, RngStream(19), opts);
  const VbBreakdown vb = vb_terms(data, net, modes, s, RngStream(19));

  bool monotone = true;
  double max_dist = 0.0;
  for (std::size_t i = 0; i < rd.rows.size(); ++i) {
    if (i > 0 && rd.rows[i].rate < rd.rows[i - 1].rate) monotone = false;
    max_dist = std::max(max_dist, rd.rows[i].distortion);
  }
  const RdRow& last = rd.rows.back();
  v.require(static_cast<int>(rd.rows.size()) == s.T, "one row per step when T <= 64");
  v.require(last.reverse_step == s.T - 1, "last row is t = 1");
  v.require(monotone, "cumulative rate non-decreasing");
  const double book = std::abs(last.rate + rd.l_0 - vb.total);
  v.require(book <= 1e-9, "rate(t=1) + L_0 == vb_terms total within 1e-9");
  // True-eps reconstruction is an exact algebraic inverse; what remains is
  // double rounding on the 0..255 scale.
  v.require(max_dist <= 1e-9, "true-eps distortion is 0");
  v.detail << "rows=" << rd.rows.size() << " |rate+L0-total|=" << fmt(book) << " max distortion="
           << fmt(max_dist);
}

void a9(Verdict& v) {
  double worst_gap = 0.0, worst_oracle = 0.0, worst_alt = 0.0;
  RngStream rng(20);
  for (int k = 0; k < 1000; ++k) {
    const int D = static_cast<int>(rng.uniform_int(1, kMaxMaskingDims));
    const MaskingDiffusionInstance inst = k % 2 ? MaskingDiffusionInstance::random_rational(D, rng)
                                                : MaskingDiffusionInstance::random_with_model(D, rng);
    const ArCheckResult r = ar_equivalence_check(inst);
    worst_gap = std::max(worst_gap, r.gap);
    worst_oracle = std::max(worst_oracle, std::abs(r.vb_bits - oracle::ar_nll_bits(inst)));
    worst_alt = std::max(worst_alt, std::abs(r.vb_alt_bits - r.vb_bits));
  }
  const ArCheckResult u = ar_equivalence_check(MaskingDiffusionInstance::uniform(2));
  v.require(worst_gap <= 1e-9, "|vb - ar_nll| <= 1e-9");
  v.require(worst_oracle <= 1e-9, "vb vs independent AR oracle <= 1e-9");
  v.require(worst_alt <= 1e-9, "alternate-form bound agrees");
  v.require(u.vb_bits == 2.0 && u.ar_nll_bits == 2.0, "uniform D=2 is exactly 2 bits");
  v.detail << "1000 instances, max gap=" << fmt(worst_gap) << " uniform D=2 vb=" << fmt(u.vb_bits, "%.17g");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& env, const std::string& args) {
  const std::string cmd = env + " '" DDPM_CLI_PATH "' " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

void a10(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / "ddpm_acceptance_a10";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "run.cfg");
    cfg << "seed = 21\nschedule.T = 30\ntrain.steps = 300\ntrain.eval_every = 100\n"
           "model.hidden = 64,64\ndata.kind = swiss_roll\ndata.n = 2048\n";
  }
  const std::vector<std::pair<std::string, std::string>> runs{
      {"DDK_THREADS=1", "a"}, {"DDK_THREADS=1", "b"}, {"DDK_THREADS=3", "c"}};
  for (const auto& [env, name] : runs) {
    const std::string out = (root / name).string();
    const std::string base = "-c '" + (root / "run.cfg").string() + "' -s io.out_dir='" + out + "'";
    const std::string ckpt = " --checkpoint '" + out + "/model.ckpt'";
    const int rc = run_cli(env, "train " + base) | run_cli(env, "evaluate " + base + ckpt) |
                   run_cli(env, "sample " + base + ckpt);
    v.require(rc == 0, "CLI run " + name + " exits 0");
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto name = entry.path().filename();
    const std::string ref = slurp(entry.path());
    for (const char* other : {"b", "c"}) {
      const fs::path p = root / other / name;
      if (name == "resolved.cfg") continue;  // differs only by out_dir
      v.require(fs::exists(p) && slurp(p) == ref, name.string() + " identical in run " + other);
    }
    ++compared;
  }
  v.require(compared >= 7, "all artifacts produced");
  v.detail << compared << " artifacts compared across 2 repeats and 1/3 workers";
  fs::remove_all(root);
}

void a11(Verdict& v) {
  const NoiseSchedule s = build_schedule({ScheduleKind::kLinear, 40, 0.002, 0.4});
  DatasetSpec spec;
  spec.kind = DatasetKind::kSprites;
  spec.n = 3;
  spec.seed = 22;
  const DataBatch data = generate(spec);
  const MlpDenoiser net = random_mlp(data.dims(), {32, 32}, 16, ParamMode::kPredictEps, 23);
  const ReverseModes modes{ParamMode::kPredictEps, SigmaMode::kFixedBetaTilde, true};
  const RngStream rng(24);
  const int t = 25;
  const std::vector<double> lambdas{0.0, 0.3, 0.5, 0.9, 1.0};
  const auto a = data.values.row(0), b = data.values.row(1), c = data.values.row(2);

  const Matrix out = interpolate(a, b, t, lambdas, net, modes, s, rng);
  // Boundary rows depend only on their own endpoint.
  const Matrix out_ac = interpolate(a, c, t, lambdas, net, modes, s, rng);
  const Matrix out_cb = interpolate(c, b, t, lambdas, net, modes, s, rng);
  v.require(out.slice_rows(0, 1) == out_ac.slice_rows(0, 1), "lambda = 0 ignores the second endpoint");
  v.require(out.slice_rows(4, 5) == out_cb.slice_rows(4, 5), "lambda = 1 ignores the first endpoint");

  // lambda = 0 is the decode of x_t alone; lambda = 1 likewise for x_t'.
  Matrix eps(1, data.dims());
  RngStream enc = rng.split(0);
  enc.fill_normal(eps.row(0));
  const Matrix lat_a = q_sample(data.values.slice_rows(0, 1), t, eps, s);
  const Matrix lat_b = q_sample(data.values.slice_rows(1, 2), t, eps, s);
  const Matrix dec_a = decode_from(lat_a, t, net, modes, s, rng.split(1)).x0;
  const Matrix dec_b = decode_from(lat_b, t, net, modes, s, rng.split(1)).x0;
  v.require(out.slice_rows(0, 1) == dec_a, "lambda = 0 equals decoding x_t");
  v.require(out.slice_rows(4, 5) == dec_b, "lambda = 1 equals decoding x_t'");

  const Matrix same = interpolate(a, a, t, lambdas, net, modes, s, rng);
  bool flat = true;
  for (std::size_t l = 1; l < lambdas.size(); ++l) flat = flat && same.slice_rows(l, l + 1) == same.slice_rows(0, 1);
  v.require(flat, "x0 == x0' gives lambda-independent output");
  v.detail << "bit-exact boundary and shared-noise identities over " << lambdas.size() << " lambdas";
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_seconds;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"A1", "schedule fidelity", 1, a1},
      {"A2", "marginal identity", 10, a2},
      {"A3", "bound equality", 60, a3},
      {"A4", "gradient correctness", 30, a4},
      {"A5", "oracle optimality", 60, a5},
      {"A6", "decoder", 10, a6},
      {"A7", "training smoke + ablation direction", 300, a7},
      {"A8", "rate-distortion accounting", 30, a8},
      {"A9", "autoregressive equivalence", 30, a9},
      {"A10", "determinism", 180, a10},
      {"A11", "interpolation identities", 30, a11},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.require(secs < c.budget_seconds, "runtime under " + fmt(c.budget_seconds, "%.0f") + " s");
    failures += v.pass ? 0 : 1;
    std::printf("%s %-4s %-36s %7.2fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
