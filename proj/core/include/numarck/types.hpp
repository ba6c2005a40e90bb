#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "numarck/error.hpp"

namespace numarck {

/// Element type of a stored variable. Values match the on-disk dtype code.
enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

constexpr std::size_t dtype_size(Dtype d) noexcept {
  return d == Dtype::f32 ? 4 : 8;
}

template <class T>
constexpr Dtype dtype_of() noexcept {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "only float and double snapshots are supported");
  return std::is_same_v<T, float> ? Dtype::f32 : Dtype::f64;
}

/// Relative error bound E.
class Tolerance {
public:
  static constexpr double kMin = 1e-10;

  explicit Tolerance(double e) : value_(e) {
    if (!std::isfinite(e) || e < kMin) {
      throw Error(ErrorCode::invalid_argument,
                  "tolerance must be finite and >= 1e-10");
    }
  }

  double value() const noexcept { return value_; }
  double bin_width() const noexcept { return 2.0 * value_; }

private:
  double value_;
};

/// Two aligned snapshots: `base` is the previous time step, `current` the one
/// being compressed.
template <class T>
struct TemporalPair {
  std::span<const T> base;
  std::span<const T> current;

  TemporalPair(std::span<const T> b, std::span<const T> c) : base(b), current(c) {
    if (b.size() != c.size()) {
      throw Error(ErrorCode::invalid_argument, "snapshot lengths differ");
    }
    if (b.empty()) {
      throw Error(ErrorCode::invalid_argument, "snapshots are empty");
    }
  }

  std::size_t size() const noexcept { return base.size(); }
  static constexpr Dtype dtype() noexcept { return dtype_of<T>(); }
};

struct ChangeRatioField {
  std::vector<double> ratios;
  std::vector<std::uint8_t> valid;  // 1 iff the ratio is usable
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t valid_count = 0;

  std::size_t size() const noexcept { return ratios.size(); }
};

struct VerifyReport {
  double cr = 0.0;
  double me = 0.0;
  double max_rel_err = 0.0;
  double alpha = 0.0;
  std::size_t n = 0;
  // Elements with a zero or non-finite original that were not reproduced
  // exactly. Their relative error is undefined and not part of me.
  std::size_t zero_denominator_mismatches = 0;
};

}  // namespace numarck
