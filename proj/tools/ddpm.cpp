// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// ddpm: command-line driver for training, sampling and bound analyses.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 training
// instability.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ddpm/analysis.hpp"
#include "ddpm/checks.hpp"
#include "ddpm/config.hpp"
#include "ddpm/data.hpp"
#include "ddpm/denoiser.hpp"
#include "ddpm/diffusion.hpp"
#include "ddpm/schedule.hpp"
#include "ddpm/trainer.hpp"

namespace fs = std::filesystem;
using namespace ddpm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUnstable = 3;

// Stream ids under the run seed, one per subcommand.
constexpr std::uint64_t kEvaluateStream = 11;
constexpr std::uint64_t kSampleStream = 12;
constexpr std::uint64_t kProgressiveStream = 13;
constexpr std::uint64_t kInterpolateStream = 14;
constexpr std::uint64_t kRdStream = 15;
constexpr std::uint64_t kReconstructStream = 16;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string checkpoint;
  bool oracle = false;
};

RunConfig resolve_config(const CommonArgs& args, bool required) {
  RunConfig cfg;
  if (args.config_path.empty()) {
    if (required) throw UsageError("--config is required");
  } else {
    if (!fs::exists(args.config_path)) throw UsageError("config file not found: " + args.config_path);
    cfg.load_file(args.config_path);
  }
  for (const auto& o : args.overrides) cfg.set_assignment(o);
  return cfg;
}

void begin_run(const RunConfig& cfg, const char* command) {
  fs::create_directories(cfg.out_dir());
  write_file_atomic(cfg.out_dir() / "resolved.cfg", cfg.resolved_text());
  std::cout << command << ": seed=" << cfg.seed() << " out_dir=" << cfg.out_dir().string() << "\n";
}

void require_same_schedule(const ScheduleSpec& a, const ScheduleSpec& b) {
  if (a.kind != b.kind || a.T != b.T || a.beta_start != b.beta_start || a.beta_end != b.beta_end) {
    std::ostringstream m;
    m << "checkpoint schedule (" << to_string(a.kind) << ", T=" << a.T << ") does not match config ("
      << to_string(b.kind) << ", T=" << b.T << ")";
    throw std::runtime_error(m.str());
  }
}

std::unique_ptr<Denoiser> load_denoiser(const CommonArgs& args, const RunConfig& cfg,
                                        const NoiseSchedule& sched, std::size_t dims) {
  if (args.oracle) {
    const DatasetSpec data = cfg.dataset();
    if (data.kind == DatasetKind::kPointMass) {
      return std::make_unique<OracleDenoiser>(OracleDenoiser::point_mass(sched, data.center));
    }
    if (data.kind == DatasetKind::kStandardNormal) {
      return std::make_unique<OracleDenoiser>(OracleDenoiser::standard_normal(sched, dims));
    }
    throw UsageError("--oracle needs data.kind point_mass or standard_normal");
  }
  if (args.checkpoint.empty()) throw UsageError("--checkpoint or --oracle is required");
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  require_same_schedule(ckpt.schedule, sched.spec);
  if (ckpt.model.data_dim != dims) {
    throw std::runtime_error("checkpoint data_dim " + std::to_string(ckpt.model.data_dim) +
                             " does not match data dimensionality " + std::to_string(dims));
  }
  auto net = std::make_unique<MlpDenoiser>(ckpt.model);
  net->set_parameters(ckpt.parameters);
  return net;
}

std::string matrix_csv(const Matrix& m, const std::string& prefix_header = "",
                       const std::vector<std::string>& prefix = {}) {
  std::ostringstream out;
  if (!prefix_header.empty()) out << prefix_header << ',';
  for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!prefix.empty()) out << prefix[i] << ',';
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

// Image grid for image-like data, CSV of coordinates otherwise.
void write_samples(const RunConfig& cfg, const Matrix& values, const std::string& stem,
                   const std::optional<ImageShape>& shape) {
  if (cfg.image_like() && shape) {
    const char* ext = shape->c == 1 ? ".pgm" : ".ppm";
    write_image_grid(cfg.out_dir() / (stem + ext), values, *shape);
  } else {
    write_file_atomic(cfg.out_dir() / (stem + ".csv"), matrix_csv(values));
  }
}

std::vector<int> snapshot_times(const RunConfig& cfg, int T) {
  std::vector<int> times = cfg.get_ints("analysis.snapshot_times");
  if (times.empty()) {
    for (int k = 0; k < 10; ++k) times.push_back(T - (k * T) / 10);
    times.push_back(1);
  }
  std::sort(times.begin(), times.end(), std::greater<>());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch train = generate(cfg.dataset());
  const DataBatch eval = generate(cfg.eval_dataset());
  const TrainConfig tc = cfg.train(train.dims());
  begin_run(cfg, "train");
  TrainReport report;
  try {
    report = run_training(tc, sched, train, eval);
  } catch (const InstabilityError& e) {
    std::cerr << "train: " << e.what() << "\n";
    return kExitUnstable;
  }
  Checkpoint ckpt{tc.model, sched.spec, report.ema_parameters};
  save_checkpoint(cfg.out_dir() / "model.ckpt", ckpt);
  write_file_atomic(cfg.out_dir() / "model.manifest.txt", checkpoint_manifest(ckpt));
  ckpt.parameters = report.parameters;
  save_checkpoint(cfg.out_dir() / "model_raw.ckpt", ckpt);
  write_file_atomic(cfg.out_dir() / "history.csv", report.history_csv());
  for (const auto& r : report.history) {
    std::fprintf(stderr, "step %d loss %.6f vb %.6f bits/dim (%.1fs)\n", r.step, r.train_loss,
                 r.vb_total, r.wall_seconds);
  }
  std::cout << "train: final vb_total_bits_per_dim=" << format_double(report.history.back().vb_total)
            << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch data = generate(cfg.eval_dataset());
  const auto model = load_denoiser(args, cfg, sched, data.dims());
  begin_run(cfg, "evaluate");
  ReverseModes modes = cfg.reverse_modes();
  modes.param = model->param_mode();
  modes.clamp_x0 = false;
  VbOptions opts;
  opts.samples_per_term = static_cast<int>(cfg.get_int("analysis.samples_per_term"));
  const VbBreakdown vb =
      vb_terms(data, *model, modes, sched, RngStream(cfg.seed()).split(kEvaluateStream), opts);
  std::ostringstream csv;
  csv << "term,t,bits_per_dim\n";
  csv << "L_T," << sched.T << ',' << format_double(vb.l_T) << '\n';
  for (int t = sched.T; t >= 2; --t) csv << "L_mid," << t << ',' << format_double(vb.l_mid[t]) << '\n';
  csv << "L_0,1," << format_double(vb.l_0) << '\n';
  csv << "total,," << format_double(vb.total) << '\n';
  write_file_atomic(cfg.out_dir() / "vb.csv", csv.str());
  std::cout << "evaluate: total_bits_per_dim=" << format_double(vb.total)
            << " se=" << format_double(vb.total_se)
            << " samples_per_term=" << vb.samples_per_term << "\n";
  if (!(vb.total >= 0.0) || !std::isfinite(vb.total)) {
    std::cerr << "evaluate: bound is not a finite non-negative number\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_sample(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch probe = generate(cfg.eval_dataset());
  const auto model = load_denoiser(args, cfg, sched, probe.dims());
  begin_run(cfg, "sample");
  ReverseModes modes = cfg.reverse_modes();
  modes.param = model->param_mode();
  const auto n = static_cast<std::size_t>(cfg.get_int("analysis.n_samples"));
  const SampleResult r =
      p_sample_loop(*model, n, modes, sched, RngStream(cfg.seed()).split(kSampleStream));
  write_samples(cfg, r.x0, "samples", probe.shape);
  std::cout << "sample: wrote " << n << " samples\n";
  return kExitOk;
}

int cmd_progressive(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch probe = generate(cfg.eval_dataset());
  const auto model = load_denoiser(args, cfg, sched, probe.dims());
  begin_run(cfg, "progressive");
  ReverseModes modes = cfg.reverse_modes();
  modes.param = model->param_mode();
  const auto n = static_cast<std::size_t>(cfg.get_int("analysis.n_samples"));
  const auto times = snapshot_times(cfg, sched.T);
  const ProgressiveFrames pf = progressive_snapshots(
      *model, n, modes, sched, RngStream(cfg.seed()).split(kProgressiveStream), times);
  std::ostringstream summary;
  summary << "t,rmse_to_final_0_255\n";
  for (std::size_t f = 0; f < pf.frames.size(); ++f) {
    write_samples(cfg, pf.frames[f], "progressive_t" + std::to_string(pf.times[f]), probe.shape);
    double sq = 0.0;
    for (std::size_t i = 0; i < pf.sample.size(); ++i) {
      const double e = pf.frames[f].data()[i] - pf.sample.data()[i];
      sq += e * e;
    }
    summary << pf.times[f] << ',' << format_double(std::sqrt(sq / pf.sample.size()) * 127.5) << '\n';
  }
  write_file_atomic(cfg.out_dir() / "progressive.csv", summary.str());
  std::cout << "progressive: wrote " << pf.frames.size() << " frames\n";
  return kExitOk;
}

int cmd_interpolate(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch data = generate(cfg.eval_dataset());
  if (data.n() < 2) throw UsageError("interpolate needs analysis.eval_n >= 2");
  const auto model = load_denoiser(args, cfg, sched, data.dims());
  begin_run(cfg, "interpolate");
  ReverseModes modes = cfg.reverse_modes();
  modes.param = model->param_mode();
  int t = static_cast<int>(cfg.get_int("analysis.interp_t"));
  if (t == 0) t = std::max(1, sched.T / 2);
  const auto lambdas = cfg.get_doubles("analysis.lambdas");
  const RngStream rng = RngStream(cfg.seed()).split(kInterpolateStream);
  const Matrix out = interpolate(data.values.row(0), data.values.row(1), t, lambdas, *model, modes,
                                 sched, rng);
  const auto k = static_cast<std::size_t>(cfg.get_int("analysis.k"));
  int t_freeze = static_cast<int>(cfg.get_int("analysis.t_freeze"));
  if (t_freeze == 0) t_freeze = t;
  const Matrix recon = stochastic_reconstruction(data.values.row(0), t_freeze, *model, modes, sched,
                                                 RngStream(cfg.seed()).split(kReconstructStream), k);
  if (cfg.image_like() && data.shape) {
    write_samples(cfg, out, "interpolation", data.shape);
  } else {
    std::vector<std::string> labels;
    for (double l : lambdas) labels.push_back(format_double(l));
    write_file_atomic(cfg.out_dir() / "interpolation.csv", matrix_csv(out, "lambda", labels));
  }
  write_samples(cfg, recon, "reconstructions", data.shape);
  std::cout << "interpolate: t=" << t << " lambdas=" << lambdas.size() << " reconstructions=" << k
            << " (t_freeze=" << t_freeze << ")\n";
  return kExitOk;
}

int cmd_rd(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, true);
  const NoiseSchedule sched = build_schedule(cfg.schedule());
  const DataBatch data = generate(cfg.eval_dataset());
  const auto model = load_denoiser(args, cfg, sched, data.dims());
  begin_run(cfg, "rd-curve");
  ReverseModes modes = cfg.reverse_modes();
  modes.param = model->param_mode();
  modes.clamp_x0 = false;
  RdOptions opts;
  opts.times = cfg.get_ints("analysis.rd_times");
  opts.samples_per_term = static_cast<int>(cfg.get_int("analysis.samples_per_term"));
  const RdCurve curve =
      rate_distortion(data, *model, modes, sched, RngStream(cfg.seed()).split(kRdStream), opts);
  write_file_atomic(cfg.out_dir() / "rd.csv", curve.to_csv());
  std::cout << "rd-curve: " << curve.rows.size() << " rows, L_0=" << format_double(curve.l_0)
            << " total=" << format_double(curve.total) << " bits/dim\n";
  return kExitOk;
}

int cmd_ar_check(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args, false);
  const int D = static_cast<int>(cfg.get_int("analysis.ar_D"));
  const std::string kind = cfg.get("analysis.ar_kind");
  RngStream rng(cfg.seed());
  MaskingDiffusionInstance inst;
  if (kind == "uniform") {
    inst = MaskingDiffusionInstance::uniform(D);
  } else if (kind == "random") {
    inst = MaskingDiffusionInstance::random_rational(D, rng);
  } else if (kind == "random_model") {
    inst = MaskingDiffusionInstance::random_with_model(D, rng);
  } else if (kind == "point") {
    inst = MaskingDiffusionInstance::point(D, 0);
  } else {
    throw UsageError("analysis.ar_kind must be uniform, random, random_model or point");
  }
  std::cout << "ar-check: seed=" << cfg.seed() << " D=" << D << " kind=" << kind << "\n";
  const ArCheckResult r = ar_equivalence_check(inst);
  char line[160];
  if (r.gap <= 1e-9) {
    std::snprintf(line, sizeof line, "vb=%.6f ar=%.6f gap<=1e-9", r.vb_bits, r.ar_nll_bits);
  } else {
    std::snprintf(line, sizeof line, "vb=%.6f ar=%.6f gap=%.3e", r.vb_bits, r.ar_nll_bits, r.gap);
  }
  std::cout << line << "\n";
  return r.gap <= 1e-9 ? kExitOk : kExitRuntime;
}

int cmd_check(bool corrupt) {
  const auto results = run_fast_checks({corrupt});
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.passed) std::cout << ": " << r.detail;
    std::cout << "\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale diffusion model laboratory"};
  app.require_subcommand(1);
  CommonArgs args;
  bool corrupt = false;

  auto add_common = [&](CLI::App* sub, bool model_input) {
    sub->add_option("-c,--config", args.config_path, "key=value run configuration file");
    sub->add_option("-s,--set", args.overrides, "override a config key (key=value); repeatable");
    if (model_input) {
      sub->add_option("--checkpoint", args.checkpoint, "parameter checkpoint");
      sub->add_flag("--oracle", args.oracle, "use the closed-form oracle denoiser for the data");
    }
  };
  auto* train = app.add_subcommand("train", "train a denoiser");
  add_common(train, false);
  auto* evaluate = app.add_subcommand("evaluate", "per-term variational bound");
  add_common(evaluate, true);
  auto* sample = app.add_subcommand("sample", "ancestral sampling");
  add_common(sample, true);
  auto* progressive = app.add_subcommand("progressive", "x0 estimates along the reverse chain");
  add_common(progressive, true);
  auto* interp = app.add_subcommand("interpolate", "latent interpolation and reconstructions");
  add_common(interp, true);
  auto* rd = app.add_subcommand("rd-curve", "rate-distortion accounting");
  add_common(rd, true);
  auto* ar = app.add_subcommand("ar-check", "masking-diffusion / autoregressive equivalence");
  add_common(ar, false);
  auto* check = app.add_subcommand("check", "fast invariant suite");
  check->add_flag("--corrupt-schedule", corrupt)->group("");  // test hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(args);
    if (*evaluate) return cmd_evaluate(args);
    if (*sample) return cmd_sample(args);
    if (*progressive) return cmd_progressive(args);
    if (*interp) return cmd_interpolate(args);
    if (*rd) return cmd_rd(args);
    if (*ar) return cmd_ar_check(args);
    if (*check) return cmd_check(corrupt);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
