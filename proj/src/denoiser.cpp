// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/denoiser.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ddpm/data.hpp"

namespace ddpm {

void time_embedding(double t, const TimeEmbeddingSpec& spec, std::span<double> out) {
  const int half = spec.dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(spec.max_period, -2.0 * i / spec.dim);
    out[i] = std::sin(t * freq);
    out[half + i] = std::cos(t * freq);
  }
}

std::vector<double> time_embedding(double t, const TimeEmbeddingSpec& spec) {
  if (spec.dim <= 0 || spec.dim % 2 != 0) {
    throw std::invalid_argument("time embedding dim must be even and positive");
  }
  std::vector<double> out(static_cast<std::size_t>(spec.dim));
  time_embedding(t, spec, out);
  return out;
}

void MlpConfig::validate() const {
  if (data_dim == 0) throw std::invalid_argument("model: data_dim must be > 0");
  if (time.dim <= 0 || time.dim % 2 != 0) {
    throw std::invalid_argument("model: time embedding dim must be even and positive");
  }
  if (!(time.max_period > 0.0)) throw std::invalid_argument("model: max_period must be > 0");
  for (int w : hidden) {
    if (w <= 0) throw std::invalid_argument("model: hidden widths must be positive");
  }
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// out = in * W + b for every row; accumulation order per element is fixed
// (bias, then k ascending) regardless of batch size.
void affine(const Matrix& in, const double* w, const double* b, Matrix& out) {
  const std::size_t n = in.rows(), k_dim = in.cols(), m = out.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    std::copy(b, b + m, o);
    const double* x = in.row(i).data();
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double a = x[k];
      const double* wk = w + k * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += a * wk[j];
    }
  }
}

}  // namespace

MlpDenoiser::MlpDenoiser(MlpConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t in = config_.input_dim();
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    layers_.push_back({in, out});
    offsets_.push_back(offset);
    offset += in * out + out;
    in = out;
  };
  for (int w : config_.hidden) add(static_cast<std::size_t>(w));
  add(config_.data_dim);
  params_.assign(offset, 0.0);
}

void MlpDenoiser::initialize(RngStream rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto [in, out] = layers_[l];
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 1 == layers_.size()) bound *= 0.1;
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < in * out; ++i) w[i] = bound * (2.0 * rng.uniform() - 1.0);
    std::fill_n(w + in * out, out, 0.0);
  }
}

void MlpDenoiser::set_parameters(std::span<const double> p) {
  if (p.size() != params_.size()) {
    throw std::invalid_argument("set_parameters: expected " + std::to_string(params_.size()) +
                                " values, got " + std::to_string(p.size()));
  }
  std::copy(p.begin(), p.end(), params_.begin());
}

Matrix MlpDenoiser::build_input(const Matrix& x_t, std::span<const int> t) const {
  if (x_t.cols() != config_.data_dim || t.size() != x_t.rows()) {
    throw std::invalid_argument("denoiser: input shape mismatch");
  }
  const std::size_t d = config_.data_dim;
  Matrix in(x_t.rows(), config_.input_dim());
  std::vector<double> emb(static_cast<std::size_t>(config_.time.dim));
  int cached_t = -1;
  for (std::size_t i = 0; i < x_t.rows(); ++i) {
    const auto src = x_t.row(i);
    auto dst = in.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    if (t[i] != cached_t) {
      time_embedding(t[i], config_.time, emb);
      cached_t = t[i];
    }
    std::copy(emb.begin(), emb.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return in;
}

Matrix MlpDenoiser::predict(const Matrix& x_t, std::span<const int> t) const {
  Matrix h = build_input(x_t, t);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto [in, out] = layers_[l];
    const double* w = params_.data() + offsets_[l];
    Matrix z(h.rows(), out);
    affine(h, w, w + in * out, z);
    if (l + 1 < layers_.size()) {
      for (double& v : z.data()) v *= sigmoid(v);
    }
    h = std::move(z);
  }
  return h;
}

std::pair<double, std::vector<double>> MlpDenoiser::value_and_grad(
    const Matrix& x_t, std::span<const int> t, const LossClosure& loss) const {
  // Forward pass keeping pre-activations and layer inputs.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  inputs.push_back(build_input(x_t, t));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto [in, out] = layers_[l];
    const double* w = params_.data() + offsets_[l];
    Matrix z(x_t.rows(), out);
    affine(inputs.back(), w, w + in * out, z);
    pre.push_back(z);
    if (l + 1 < layers_.size()) {
      for (double& v : z.data()) v *= sigmoid(v);
      inputs.push_back(std::move(z));
    } else {
      inputs.push_back(std::move(z));
    }
  }

  Matrix delta(x_t.rows(), config_.data_dim);
  const double value = loss(inputs.back(), delta);
  require_same_shape(delta, inputs.back(), "value_and_grad");

  std::vector<double> grad(params_.size(), 0.0);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto [in, out] = layers_[l];
    const Matrix& a = inputs[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double* ai = a.row(i).data();
      const double* di = delta.row(i).data();
      for (std::size_t k = 0; k < in; ++k) {
        const double av = ai[k];
        double* g = gw + k * out;
        for (std::size_t j = 0; j < out; ++j) g[j] += av * di[j];
      }
      for (std::size_t j = 0; j < out; ++j) gb[j] += di[j];
    }
    if (l == 0) break;
    // Propagate to the previous layer's pre-activation.
    const double* w = params_.data() + offsets_[l];
    const Matrix& z_prev = pre[l - 1];
    Matrix next(a.rows(), in);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double* di = delta.row(i).data();
      double* ni = next.row(i).data();
      for (std::size_t k = 0; k < in; ++k) {
        const double* wk = w + k * out;
        double s = 0.0;
        for (std::size_t j = 0; j < out; ++j) s += wk[j] * di[j];
        const double z = z_prev(i, k);
        const double sg = sigmoid(z);
        ni[k] = s * sg * (1.0 + z * (1.0 - sg));
      }
    }
    delta = std::move(next);
  }
  return {value, std::move(grad)};
}

OracleDenoiser OracleDenoiser::standard_normal(const NoiseSchedule& sched, std::size_t dims) {
  return OracleDenoiser(Kind::kStandardNormalData, sched, dims, {});
}

OracleDenoiser OracleDenoiser::point_mass(const NoiseSchedule& sched, std::vector<double> center) {
  const std::size_t d = center.size();
  if (d == 0) throw std::invalid_argument("oracle: point mass needs a center");
  return OracleDenoiser(Kind::kPointMass, sched, d, std::move(center));
}

Matrix OracleDenoiser::predict(const Matrix& x_t, std::span<const int> t) const {
  if (x_t.cols() != dims_ || t.size() != x_t.rows()) {
    throw std::invalid_argument("oracle: input shape mismatch");
  }
  Matrix out(x_t.rows(), dims_);
  for (std::size_t i = 0; i < x_t.rows(); ++i) {
    sched_.check_step(t[i]);
    const double s1m = sched_.sqrt_one_minus_alpha_bar[t[i]];
    if (kind_ == Kind::kStandardNormalData) {
      for (std::size_t j = 0; j < dims_; ++j) out(i, j) = s1m * x_t(i, j);
    } else {
      if (!(s1m > 0.0)) throw std::domain_error("point-mass oracle undefined where alpha_bar = 1");
      const double sa = sched_.sqrt_alpha_bar[t[i]];
      for (std::size_t j = 0; j < dims_; ++j) out(i, j) = (x_t(i, j) - sa * center_[j]) / s1m;
    }
  }
  return out;
}

Matrix oracle_eval(const OracleDenoiser& oracle, const Matrix& x_t, int t) {
  return oracle.predict_at(x_t, t);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string buf) : buf_(std::move(buf)) {}
  std::uint64_t uint(int bytes) {
    if (pos_ + bytes > buf_.size()) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += bytes;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error("checkpoint: truncated file");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const MlpDenoiser shape_check(ckpt.model);
  if (shape_check.parameter_count() != ckpt.parameters.size()) {
    throw std::invalid_argument("save_checkpoint: parameter count does not match model");
  }
  std::string out = "DDPMCKP1";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.data_dim));
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.time.dim));
  put_f64(out, ckpt.model.time.max_period);
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.param_mode));
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.hidden.size()));
  for (int w : ckpt.model.hidden) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(ckpt.schedule.T));
  put_u32(out, static_cast<std::uint32_t>(ckpt.schedule.kind));
  put_f64(out, ckpt.schedule.beta_start);
  put_f64(out, ckpt.schedule.beta_end);
  put_u64(out, ckpt.parameters.size());
  for (double p : ckpt.parameters) put_f64(out, p);
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  if (r.bytes(8) != "DDPMCKP1") throw std::runtime_error("checkpoint: bad magic");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(v));
  }
  Checkpoint c;
  c.model.data_dim = r.u32();
  c.model.time.dim = static_cast<int>(r.u32());
  c.model.time.max_period = r.f64();
  const auto mode = r.u32();
  if (mode > 2) throw std::runtime_error("checkpoint: bad param mode");
  c.model.param_mode = static_cast<ParamMode>(mode);
  const auto hidden = r.u32();
  if (hidden > 64) throw std::runtime_error("checkpoint: implausible layer count");
  c.model.hidden.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) c.model.hidden.push_back(static_cast<int>(r.u32()));
  c.schedule.T = static_cast<int>(r.u32());
  const auto kind = r.u32();
  if (kind > 2) throw std::runtime_error("checkpoint: bad schedule kind");
  c.schedule.kind = static_cast<ScheduleKind>(kind);
  c.schedule.beta_start = r.f64();
  c.schedule.beta_end = r.f64();
  const auto count = r.u64();
  const MlpDenoiser shape_check(c.model);
  if (count != shape_check.parameter_count()) {
    throw std::runtime_error("checkpoint: parameter count " + std::to_string(count) +
                             " does not match header shapes (" +
                             std::to_string(shape_check.parameter_count()) + ")");
  }
  c.parameters.resize(count);
  for (auto& p : c.parameters) p = r.f64();
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

std::string checkpoint_manifest(const Checkpoint& ckpt) {
  const MlpDenoiser net(ckpt.model);
  std::ostringstream out;
  out << "format DDPMCKP1 version " << kCheckpointVersion << "\n";
  out << "param_mode " << to_string(ckpt.model.param_mode) << "\n";
  out << "time_embedding dim=" << ckpt.model.time.dim
      << " max_period=" << format_double(ckpt.model.time.max_period) << "\n";
  out << "schedule " << to_string(ckpt.schedule.kind) << " T=" << ckpt.schedule.T
      << " beta_start=" << format_double(ckpt.schedule.beta_start)
      << " beta_end=" << format_double(ckpt.schedule.beta_end) << "\n";
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto [in, o] = net.layers()[l];
    out << "layer" << l << ".weight " << in << "x" << o << "\n";
    out << "layer" << l << ".bias " << o << "\n";
  }
  out << "total_parameters " << net.parameter_count() << "\n";
  return out.str();
}

}  // namespace ddpm
