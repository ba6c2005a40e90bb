#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "numarck/types.hpp"

namespace numarck {

enum class Strategy : std::uint8_t { top_k, equal_width, log_scale, kmeans };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

inline constexpr unsigned kMinIndexBits = 2;
inline constexpr unsigned kMaxIndexBits = 30;

/// Width-2E histogram anchored at the global minimum ratio. Only nonempty bins
/// are stored; ordinals of an ascending `bins` are strictly increasing.
struct Histogram {
  struct Bin {
    std::int64_t ordinal;
    std::uint64_t count;
    bool operator==(const Bin&) const = default;
  };

  double origin = 0.0;
  double width = 0.0;
  std::int64_t last_ordinal = 0;
  std::vector<Bin> bins;

  std::int64_t ordinal_of(double ratio) const noexcept;
  double center_of(std::int64_t ordinal) const noexcept {
    return origin + (static_cast<double>(ordinal) + 0.5) * width;
  }
  std::uint64_t count(std::int64_t ordinal) const noexcept;
  std::uint64_t total() const noexcept;
  /// Counts for ordinals 0..last_ordinal. Only sensible for narrow ranges.
  std::vector<std::uint64_t> dense() const;
};

/// Accumulates a histogram shard by shard. Merging is associative and
/// commutative, so the result does not depend on how elements were sharded.
class HistogramBuilder {
public:
  HistogramBuilder(double min_ratio, double max_ratio, Tolerance e);

  void add(std::span<const double> ratios, std::span<const std::uint8_t> valid);
  void merge(const HistogramBuilder& other);
  Histogram finish() const;

private:
  static constexpr std::int64_t kDenseLimit = std::int64_t{1} << 20;

  Histogram shape_;
  std::vector<std::uint64_t> dense_;
  std::vector<std::int64_t> sparse_;  // unsorted ordinals when the range is wide
};

Histogram build_histogram(const ChangeRatioField& field, Tolerance e);

struct BinModel {
  std::vector<double> centers;  // strictly increasing
  unsigned bits = kMinIndexBits;
  double tolerance = 0.0;
  Strategy strategy = Strategy::top_k;
  // top-k only: ordinals of the chosen histogram bins, ascending.
  std::vector<std::int64_t> ordinals;

  std::size_t k() const noexcept { return centers.size(); }
  std::uint32_t sentinel() const noexcept {
    return (std::uint32_t{1} << bits) - 1u;
  }
};

/// Ordinals of the `k` most populous bins (ties to the lower ordinal),
/// returned ascending.
std::vector<std::int64_t> top_k_ordinals(const Histogram& hist, std::uint64_t k);

BinModel top_k_bins(const Histogram& hist, unsigned bits);

/// Smallest and largest member ratio of each bin chosen by top_k_bins, in
/// center order. Empty for a bin with no members in the shard.
struct MemberSpans {
  std::vector<double> lo;
  std::vector<double> hi;

  void add(const Histogram& hist, const BinModel& model, std::span<const double> ratios,
           std::span<const std::uint8_t> valid);
  void merge(const MemberSpans& other);
};

/// Moves each top-k center to the midpoint of its members' span. Every member
/// stays within half the bin width of its center.
void recenter_on_members(BinModel& model, const MemberSpans& spans);

/// Number of points covered by the `k` most populous bins.
std::uint64_t top_k_coverage(const Histogram& hist, std::uint64_t k);

/// Estimated container size in bits for one index length:
///   8 * (2^B * L) + n * B + 8 * n_incompressible * L
std::uint64_t estimated_file_bits(std::uint64_t n, unsigned bits, unsigned elem_bytes,
                                  std::uint64_t n_incompressible) noexcept;

struct SizeEstimate {
  unsigned bits;
  std::uint64_t n_incompressible;
  std::uint64_t file_bits;

  double alpha(std::uint64_t n) const noexcept {
    return static_cast<double>(n_incompressible) / static_cast<double>(n);
  }
  double file_bytes() const noexcept { return static_cast<double>(file_bits) / 8.0; }
};

struct IndexLengthChoice {
  unsigned bits;
  std::vector<SizeEstimate> estimates;  // one per B in the searched range
};

IndexLengthChoice select_index_length(const Histogram& hist, std::uint64_t n,
                                      unsigned elem_bytes, unsigned min_bits = 2,
                                      unsigned max_bits = 16);

// equal_width_bins and kmeans_bins leave `tolerance` at zero; set it before
// assigning indices.
BinModel equal_width_bins(double min_ratio, double max_ratio, unsigned bits);

/// `k` equal chunks over [lo, hi]; one center when lo == hi.
std::vector<double> equal_width_centers(double lo, double hi, std::size_t k);

BinModel log_scale_bins(const ChangeRatioField& field, unsigned bits, Tolerance e);

struct KMeansResult {
  std::vector<double> centers;
  std::vector<double> sse_history;  // within-cluster SSE after each assignment step
  unsigned iterations = 0;
};

/// 1-D Lloyd iterations over ascending `sorted`, starting from ascending
/// `initial` centers. Empty clusters are dropped.
KMeansResult lloyd_1d(std::span<const double> sorted, std::vector<double> initial,
                      unsigned max_iter);

BinModel kmeans_bins(const ChangeRatioField& field, unsigned bits, unsigned max_iter = 50);

/// Maximum number of ascending `sorted` points coverable by `k` closed
/// intervals of width `width`.
std::uint64_t dp_optimal_coverage(std::span<const double> sorted, double width,
                                  std::uint64_t k);

/// Index of the nearest center within `e` of `ratio`; ties go to the lower
/// index.
std::optional<std::uint32_t> nearest_center(std::span<const double> centers,
                                            double ratio, double e) noexcept;

struct IndexAssignment {
  std::vector<std::uint32_t> indices;  // sentinel marks incompressible
  std::uint64_t n_incompressible = 0;
};

IndexAssignment compressible_mask(const ChangeRatioField& field, const BinModel& model);

}  // namespace numarck
