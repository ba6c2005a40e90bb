#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "numarck/types.hpp"

namespace numarck {

/// Ratios with a larger magnitude are treated as undefined and the element is
/// stored verbatim.
inline constexpr double kMaxChangeRatio = 1e6;

/// Relative change of one element, or false when the ratio is undefined
/// (zero base with nonzero current, non-finite operands or quotient).
template <class T>
bool change_ratio(T base, T current, double& ratio) noexcept {
  const double b = static_cast<double>(base);
  const double c = static_cast<double>(current);
  if (!std::isfinite(b) || !std::isfinite(c)) return false;
  if (b == 0.0) {
    ratio = 0.0;
    return c == 0.0;
  }
  const double r = (c - b) / b;
  if (!std::isfinite(r) || std::fabs(r) > kMaxChangeRatio) return false;
  ratio = r;
  return true;
}

/// Running min/max over a shard of change ratios.
struct RatioExtent {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t valid_count = 0;

  void merge(const RatioExtent& other) noexcept;
};

/// Fills `ratios`/`valid` for one contiguous range and returns its extent.
template <class T>
RatioExtent compute_change_ratios_into(std::span<const T> base,
                                       std::span<const T> current,
                                       std::span<double> ratios,
                                       std::span<std::uint8_t> valid);

template <class T>
ChangeRatioField compute_change_ratios(const TemporalPair<T>& pair);

/// The value a compressible element decodes to.
template <class T>
T reconstruct_value(T base_reconstructed, double center) noexcept {
  return static_cast<T>((1.0 + center) * static_cast<double>(base_reconstructed));
}

/// True when `approx` is within relative error `e` of `exact`. A zero must be
/// reproduced with its sign.
template <class T>
bool within_relative_bound(T exact, T approx, double e) noexcept {
  const double d = static_cast<double>(exact);
  const double r = static_cast<double>(approx);
  if (d == 0.0) return r == 0.0 && std::signbit(r) == std::signbit(d);
  return std::fabs(r - d) <= e * std::fabs(d);
}

inline constexpr std::uint32_t sentinel_for(unsigned bits) noexcept {
  return (std::uint32_t{1} << bits) - 1u;
}

/// Inverse of the change-ratio transform. Indices equal to `sentinel` take the
/// next value from `incompressible` in element order.
template <class T>
void reconstruct_into(std::span<const T> base_reconstructed,
                      std::span<const double> centers,
                      std::span<const std::uint32_t> indices,
                      std::uint32_t sentinel,
                      std::span<const T> incompressible,
                      std::span<T> out);

template <class T>
std::vector<T> reconstruct(std::span<const T> base_reconstructed,
                           std::span<const double> centers,
                           std::span<const std::uint32_t> indices,
                           std::uint32_t sentinel,
                           std::span<const T> incompressible);

template <class T>
VerifyReport verify(std::span<const T> original, std::span<const T> reconstructed,
                    std::uint64_t original_bytes, std::uint64_t compressed_bytes,
                    double alpha);

/// CR estimate from per-element sizes:
///   bits_per_element / (index_bits / index_deflate_ratio + alpha * bits_per_element)
double analytic_compression_ratio(double bits_per_element, double index_bits,
                                  double index_deflate_ratio, double alpha);

}  // namespace numarck
