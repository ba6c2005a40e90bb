#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "numarck/binning.hpp"
#include "numarck/codec.hpp"
#include "numarck/variable.hpp"

namespace numarck {

struct PipelineConfig {
  unsigned workers = 1;
  double tolerance = 1e-3;
  Strategy strategy = Strategy::top_k;
  std::optional<unsigned> bits;  // nullopt selects B automatically
  unsigned min_auto_bits = 2;
  unsigned max_auto_bits = 16;
  std::uint64_t block_bytes = kDefaultBlockBytes;
  int deflate_level = kDefaultDeflateLevel;
  unsigned kmeans_max_iter = 50;
  std::string name = "var";

  void validate() const;
};

/// Wall time per phase, in seconds.
struct PhaseTimings {
  double change_ratio = 0.0;
  double binning = 0.0;
  double assign_index = 0.0;
  double index_alignment = 0.0;
  double bits_packing = 0.0;
  double zlib = 0.0;
  double io = 0.0;
  double total = 0.0;

  double sum() const noexcept {
    return change_ratio + binning + assign_index + index_alignment + bits_packing + zlib + io;
  }
  /// One `phase=<name> seconds=<value>` record per line.
  std::string report() const;
};

struct CompressStats {
  std::uint64_t n = 0;
  unsigned bits = 0;
  std::uint32_t k = 0;
  std::uint64_t n_incompressible = 0;
  std::uint64_t valid_ratios = 0;
  std::uint64_t demoted = 0;  // within a bin but outside the bound after rounding
  std::uint64_t exchanged_elements = 0;  // indices copied between neighbours
  std::vector<SizeEstimate> size_estimates;

  double alpha() const noexcept {
    return n == 0 ? 0.0 : static_cast<double>(n_incompressible) / static_cast<double>(n);
  }
};

struct CompressResult {
  CompressedVariable variable;
  PhaseTimings timings;
  CompressStats stats;
};

/// Runs `fn(worker)` on `workers` threads and returns once all finished.
/// The first exception thrown by any worker is rethrown tagged with `phase`.
void run_phase(unsigned workers, std::string_view phase,
               const std::function<void(unsigned)>& fn);

/// Contiguous near-equal shard of [0, n) owned by `worker`.
struct Shard {
  std::uint64_t begin;
  std::uint64_t end;
};
Shard shard_of(std::uint64_t n, unsigned workers, unsigned worker) noexcept;

template <class T>
CompressResult compress_pair(const TemporalPair<T>& pair, const PipelineConfig& config);

template <class T>
struct Decompressed {
  std::vector<T> values;
  std::uint64_t blocks_touched = 0;
};

struct ElementRange {
  std::uint64_t start = 0;
  std::uint64_t count = 0;
};

/// `base_reconstructed` spans the whole variable for a full decode, or only
/// the requested range for a partial one.
template <class T>
Decompressed<T> decompress(const CompressedVariable& variable,
                           std::span<const T> base_reconstructed,
                           std::optional<ElementRange> range = std::nullopt);

template <class T>
struct CompressedSeries {
  std::vector<T> first;  // snapshot 0, stored raw
  std::vector<CompressedVariable> steps;  // snapshot i against reconstruction of i-1
  std::vector<CompressStats> stats;
};

template <class T>
CompressedSeries<T> compress_series(std::span<const std::vector<T>> snapshots,
                                    const PipelineConfig& config);

/// Reconstructs every snapshot of a series in order.
template <class T>
std::vector<std::vector<T>> decompress_series(const CompressedSeries<T>& series);

}  // namespace numarck
