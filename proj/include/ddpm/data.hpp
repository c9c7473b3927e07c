// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddpm/rng.hpp"
#include "ddpm/tensor.hpp"

namespace ddpm {

struct ImageShape {
  int h = 0;
  int w = 0;
  int c = 0;
  int dims() const { return h * w * c; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Samples in [-1, 1] (continuous kinds may exceed that range). When
/// discrete_origin is present it holds the bytes the values were scaled from,
/// row-major and aligned with values.
struct DataBatch {
  Matrix values;
  std::optional<ImageShape> shape;
  std::optional<std::vector<std::uint8_t>> discrete_origin;

  std::size_t n() const { return values.rows(); }
  std::size_t dims() const { return values.cols(); }

  static DataBatch from_bytes(std::size_t n, std::size_t dims, std::vector<std::uint8_t> bytes,
                              std::optional<ImageShape> shape = std::nullopt);
  /// Rows selected by index, keeping provenance.
  DataBatch gather(std::span<const std::size_t> rows) const;
  /// Discrete bytes if present, otherwise the values snapped to the byte grid.
  std::vector<std::uint8_t> bytes_or_quantized() const;
};

double scale_to_signed(std::uint8_t byte);
/// Nearest byte level: round half away from zero on (v + 1) * 127.5, then clamp.
std::uint8_t unscale(double value);
std::vector<double> scale_to_signed(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> unscale(std::span<const double> values);

enum class DatasetKind {
  kPointMass,
  kStandardNormal,
  kGaussianMixture,
  kSwissRoll,
  kCheckerboard,
  kSprites,
  kRawGrid,
};

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSwissRoll;
  std::size_t n = 1024;
  std::uint64_t seed = 0;
  std::vector<double> center{0.0, 0.0};  // point_mass
  int dim = 2;                            // standard_normal
  int mixture_components = 8;             // gaussian_mixture: ring in the plane
  double mixture_radius = 0.7;
  double mixture_stddev = 0.05;
  ImageShape sprite_shape{8, 8, 3};  // sprites
  std::filesystem::path path;        // raw_grid

  void validate() const;
};

/// Deterministic for a fixed spec (including seed). Sprites and raw grids
/// carry discrete_origin; continuous kinds do not.
DataBatch generate(const DatasetSpec& spec);

// Raw grid file: "DDK1", then n, h, w, c as little-endian uint32, then
// n*h*w*c bytes.
void write_raw_grid(const std::filesystem::path& path, const DataBatch& batch);
DataBatch read_raw_grid(const std::filesystem::path& path);

/// Tiles n images into a near-square grid (cols = ceil(sqrt(n))) and writes
/// binary PGM (c == 1) or PPM (c == 3), maxval 255.
void write_image_grid(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                      std::size_t n, const ImageShape& shape);
void write_image_grid(const std::filesystem::path& path, const Matrix& values,
                      const ImageShape& shape);

/// Writes content to path via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest representation that round-trips a double.
std::string format_double(double v);

}  // namespace ddpm
