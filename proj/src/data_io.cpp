// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/data.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace ddpm {

DataBatch DataBatch::from_bytes(std::size_t n, std::size_t dims, std::vector<std::uint8_t> bytes,
                                std::optional<ImageShape> shape) {
  if (bytes.size() != n * dims) throw std::invalid_argument("from_bytes: size mismatch");
  DataBatch b;
  b.values = Matrix(n, dims, scale_to_signed(bytes));
  b.shape = shape;
  b.discrete_origin = std::move(bytes);
  return b;
}

DataBatch DataBatch::gather(std::span<const std::size_t> rows) const {
  DataBatch out;
  const std::size_t d = dims();
  out.values = Matrix(rows.size(), d);
  out.shape = shape;
  if (discrete_origin) out.discrete_origin.emplace(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = values.row(rows[i]);
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
    if (discrete_origin) {
      std::copy_n(discrete_origin->begin() + rows[i] * d, d, out.discrete_origin->begin() + i * d);
    }
  }
  return out;
}

std::vector<std::uint8_t> DataBatch::bytes_or_quantized() const {
  if (discrete_origin) return *discrete_origin;
  return unscale(values.data());
}

double scale_to_signed(std::uint8_t byte) { return byte / 127.5 - 1.0; }

std::uint8_t unscale(double value) {
  const double level = std::round((value + 1.0) * 127.5);  // half away from zero
  if (!(level > 0.0)) return 0;
  if (level >= 255.0) return 255;
  return static_cast<std::uint8_t>(level);
}

std::vector<double> scale_to_signed(std::span<const std::uint8_t> bytes) {
  std::vector<double> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = scale_to_signed(bytes[i]);
  return out;
}

std::vector<std::uint8_t> unscale(std::span<const double> values) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = unscale(values[i]);
  return out;
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kPointMass: return "point_mass";
    case DatasetKind::kStandardNormal: return "standard_normal";
    case DatasetKind::kGaussianMixture: return "gaussian_mixture";
    case DatasetKind::kSwissRoll: return "swiss_roll";
    case DatasetKind::kCheckerboard: return "checkerboard";
    case DatasetKind::kSprites: return "sprites";
    case DatasetKind::kRawGrid: return "raw_grid";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::kPointMass, DatasetKind::kStandardNormal,
                 DatasetKind::kGaussianMixture, DatasetKind::kSwissRoll,
                 DatasetKind::kCheckerboard, DatasetKind::kSprites, DatasetKind::kRawGrid}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown dataset kind: " + std::string(name));
}

void DatasetSpec::validate() const {
  if (n == 0) throw std::invalid_argument("dataset: n must be > 0");
  switch (kind) {
    case DatasetKind::kPointMass:
      if (center.empty()) throw std::invalid_argument("dataset: point_mass needs a center");
      break;
    case DatasetKind::kStandardNormal:
      if (dim <= 0) throw std::invalid_argument("dataset: dim must be > 0");
      break;
    case DatasetKind::kGaussianMixture:
      if (mixture_components <= 0 || mixture_stddev <= 0.0) {
        throw std::invalid_argument("dataset: bad mixture parameters");
      }
      break;
    case DatasetKind::kSprites: {
      const auto& s = sprite_shape;
      if (s.h < 2 || s.w < 2 || s.h > 32 || s.w > 32 || (s.c != 1 && s.c != 3)) {
        throw std::invalid_argument("dataset: sprites need 2 <= h, w <= 32 and c in {1, 3}");
      }
      break;
    }
    case DatasetKind::kRawGrid:
      if (path.empty()) throw std::invalid_argument("dataset: raw_grid needs a path");
      break;
    default:
      break;
  }
}

namespace {

DataBatch make_sprites(const DatasetSpec& spec) {
  const auto& s = spec.sprite_shape;
  const std::size_t dims = static_cast<std::size_t>(s.dims());
  std::vector<std::uint8_t> bytes(spec.n * dims);
  RngStream root(spec.seed);
  for (std::size_t i = 0; i < spec.n; ++i) {
    RngStream rng = root.split(i);
    std::uint8_t* img = bytes.data() + i * dims;
    const auto background = static_cast<std::uint8_t>(rng.uniform_int(0, 40));
    std::fill_n(img, dims, background);
    const int shapes = static_cast<int>(rng.uniform_int(1, 2));
    for (int k = 0; k < shapes; ++k) {
      std::array<std::uint8_t, 3> colour{};
      for (int ch = 0; ch < s.c; ++ch) colour[ch] = static_cast<std::uint8_t>(rng.uniform_int(120, 255));
      const bool disc = rng.uniform() < 0.5;
      const int size = static_cast<int>(rng.uniform_int(2, std::max(2, std::min(s.h, s.w) / 2)));
      const int top = static_cast<int>(rng.uniform_int(0, s.h - size));
      const int left = static_cast<int>(rng.uniform_int(0, s.w - size));
      const double cy = top + (size - 1) / 2.0;
      const double cx = left + (size - 1) / 2.0;
      const double r2 = (size / 2.0) * (size / 2.0);
      for (int y = top; y < top + size; ++y) {
        for (int x = left; x < left + size; ++x) {
          if (disc && (y - cy) * (y - cy) + (x - cx) * (x - cx) > r2) continue;
          for (int ch = 0; ch < s.c; ++ch) img[(y * s.w + x) * s.c + ch] = colour[ch];
        }
      }
    }
  }
  return DataBatch::from_bytes(spec.n, dims, std::move(bytes), s);
}

}  // namespace

DataBatch generate(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind == DatasetKind::kSprites) return make_sprites(spec);
  if (spec.kind == DatasetKind::kRawGrid) {
    DataBatch b = read_raw_grid(spec.path);
    if (b.n() > spec.n) {
      std::vector<std::size_t> rows(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i) rows[i] = i;
      return b.gather(rows);
    }
    return b;
  }

  RngStream root(spec.seed);
  DataBatch b;
  switch (spec.kind) {
    case DatasetKind::kPointMass: {
      b.values = Matrix(spec.n, spec.center.size());
      for (std::size_t i = 0; i < spec.n; ++i) {
        std::copy(spec.center.begin(), spec.center.end(), b.values.row(i).begin());
      }
      break;
    }
    case DatasetKind::kStandardNormal: {
      b.values = Matrix(spec.n, static_cast<std::size_t>(spec.dim));
      for (std::size_t i = 0; i < spec.n; ++i) {
        RngStream rng = root.split(i);
        rng.fill_normal(b.values.row(i));
      }
      break;
    }
    case DatasetKind::kGaussianMixture: {
      b.values = Matrix(spec.n, 2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        RngStream rng = root.split(i);
        const auto k = rng.uniform_int(0, spec.mixture_components - 1);
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / spec.mixture_components;
        b.values(i, 0) = spec.mixture_radius * std::cos(angle) + spec.mixture_stddev * rng.normal();
        b.values(i, 1) = spec.mixture_radius * std::sin(angle) + spec.mixture_stddev * rng.normal();
      }
      break;
    }
    case DatasetKind::kSwissRoll: {
      // Classic 2-D roll, theta in [1.5pi, 4.5pi], divided by its max radius.
      constexpr double kScale = 1.0 / (4.5 * std::numbers::pi);
      b.values = Matrix(spec.n, 2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        RngStream rng = root.split(i);
        const double theta = 1.5 * std::numbers::pi * (1.0 + 2.0 * rng.uniform());
        b.values(i, 0) = (theta * std::cos(theta) + 0.3 * rng.normal()) * kScale;
        b.values(i, 1) = (theta * std::sin(theta) + 0.3 * rng.normal()) * kScale;
      }
      break;
    }
    case DatasetKind::kCheckerboard: {
      // 4x4 board on [-1, 1]^2, mass on the cells with even (row + col).
      b.values = Matrix(spec.n, 2);
      for (std::size_t i = 0; i < spec.n; ++i) {
        RngStream rng = root.split(i);
        const auto cell = rng.uniform_int(0, 7);
        const auto row = cell / 2;
        const auto col = 2 * (cell % 2) + (row % 2);
        b.values(i, 0) = -1.0 + 0.5 * (static_cast<double>(col) + rng.uniform());
        b.values(i, 1) = -1.0 + 0.5 * (static_cast<double>(row) + rng.uniform());
      }
      break;
    }
    default:
      break;
  }
  return b;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_raw_grid(const std::filesystem::path& path, const DataBatch& batch) {
  if (!batch.discrete_origin || !batch.shape) {
    throw std::invalid_argument("write_raw_grid: batch has no discrete image provenance");
  }
  const auto& s = *batch.shape;
  std::string out = "DDK1";
  put_u32(out, static_cast<std::uint32_t>(batch.n()));
  put_u32(out, static_cast<std::uint32_t>(s.h));
  put_u32(out, static_cast<std::uint32_t>(s.w));
  put_u32(out, static_cast<std::uint32_t>(s.c));
  out.append(reinterpret_cast<const char*>(batch.discrete_origin->data()),
             batch.discrete_origin->size());
  write_file_atomic(path, out);
}

DataBatch read_raw_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("raw_grid: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 20 || buf.compare(0, 4, "DDK1") != 0) {
    throw std::runtime_error("raw_grid: malformed header in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint64_t n = get_u32(p + 4);
  ImageShape shape{static_cast<int>(get_u32(p + 8)), static_cast<int>(get_u32(p + 12)),
                   static_cast<int>(get_u32(p + 16))};
  const std::uint64_t dims = static_cast<std::uint64_t>(shape.h) * shape.w * shape.c;
  if (n == 0 || dims == 0) throw std::runtime_error("raw_grid: empty header dimensions");
  if (buf.size() - 20 != n * dims) {
    throw std::runtime_error("raw_grid: payload is " + std::to_string(buf.size() - 20) +
                             " bytes, header declares " + std::to_string(n * dims));
  }
  std::vector<std::uint8_t> bytes(buf.begin() + 20, buf.end());
  return DataBatch::from_bytes(n, dims, std::move(bytes), shape);
}

void write_image_grid(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                      std::size_t n, const ImageShape& shape) {
  if (shape.c != 1 && shape.c != 3) throw std::invalid_argument("image grid: c must be 1 or 3");
  const std::size_t dims = static_cast<std::size_t>(shape.dims());
  if (n == 0 || bytes.size() != n * dims) throw std::invalid_argument("image grid: size mismatch");
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const std::size_t width = cols * shape.w;
  const std::size_t height = rows * shape.h;
  std::string out = (shape.c == 1 ? "P5\n" : "P6\n") + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + width * height * shape.c, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gy = i / cols, gx = i % cols;
    for (int y = 0; y < shape.h; ++y) {
      for (int x = 0; x < shape.w; ++x) {
        for (int ch = 0; ch < shape.c; ++ch) {
          const std::size_t py = gy * shape.h + y, px = gx * shape.w + x;
          out[header + (py * width + px) * shape.c + ch] =
              static_cast<char>(bytes[i * dims + (y * shape.w + x) * shape.c + ch]);
        }
      }
    }
  }
  write_file_atomic(path, out);
}

void write_image_grid(const std::filesystem::path& path, const Matrix& values,
                      const ImageShape& shape) {
  if (values.cols() != static_cast<std::size_t>(shape.dims())) {
    throw std::invalid_argument("image grid: values do not match image shape");
  }
  const auto bytes = unscale(values.data());
  write_image_grid(path, bytes, values.rows(), shape);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

}  // namespace ddpm
