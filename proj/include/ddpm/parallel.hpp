// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace ddpm {

/// Rows per work unit for batched evaluation. Fixed so that chunk boundaries,
/// and therefore floating-point results, never depend on the worker count.
inline constexpr std::size_t kChunkRows = 64;

/// Worker cap: set_worker_count() override, else DDK_THREADS, else hardware
/// concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);  // 0 restores the environment default

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index
/// must write only to its own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Runs body(begin, end) over fixed kChunkRows-sized row ranges.
void parallel_chunks(std::size_t rows, const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise sum in index order; result is independent of scheduling.
double tree_sum(std::span<const double> values);

}  // namespace ddpm
