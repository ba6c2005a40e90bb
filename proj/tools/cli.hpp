#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "numarck/pipeline.hpp"
#include "numarck/types.hpp"

namespace numarck::cli {

enum Exit : int {
  exit_ok = 0,
  exit_io = 1,
  exit_validation = 2,
  exit_internal = 3,
  exit_bound_violated = 4,
};

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Headerless little-endian array. Without `count` the file size must be a
/// multiple of the element size.
template <class T>
std::vector<T> read_raw(const std::filesystem::path& path,
                        std::optional<std::uint64_t> count = std::nullopt);

template <class T>
void write_raw(const std::filesystem::path& path, std::span<const T> values);

/// Worker count from NUMARCK_WORKERS if set, else `requested`, else the
/// machine's parallelism.
unsigned resolve_workers(std::optional<unsigned> requested);

struct StrategyRow {
  std::string name;
  std::uint64_t compressible = 0;
};

/// Compressible counts per binning strategy at a fixed index length, plus the
/// DP optimum ("dp") when `with_dp` is set. Rows: dp, topk, kmeans, log, equal.
std::vector<StrategyRow> compare_strategies(const ChangeRatioField& field, unsigned bits,
                                            double tolerance, bool with_dp,
                                            unsigned kmeans_max_iter = 50);

struct SweepRow {
  unsigned workers = 0;
  PhaseTimings timings;  // fastest total of the repeats
  std::uint64_t file_hash = 0;
};

template <class T>
std::vector<SweepRow> worker_sweep(const TemporalPair<T>& pair, PipelineConfig config,
                                   std::span<const unsigned> workers, unsigned repeats);

/// FNV-1a over a byte buffer.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept;

/// Coefficient of determination of the least-squares line through (x, y).
double r_squared(std::span<const double> x, std::span<const double> y);

}  // namespace numarck::cli
