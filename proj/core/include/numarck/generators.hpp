#pragma once

#include <cstdint>
#include <vector>

namespace numarck::synth {

/// Temporal series whose per-element change ratios follow an AR(1) process:
///   r_t = rho * r_{t-1} + spread * N(0, 1),   x_t = x_{t-1} * (1 + r_t)
/// Snapshot 0 is a smooth positive field.
template <class T>
std::vector<std::vector<T>> multiplicative_series(std::size_t n, std::size_t snapshots,
                                                  double spread, double rho,
                                                  std::uint64_t seed);

template <class T>
struct SyntheticPair {
  std::vector<T> base;
  std::vector<T> current;
  std::uint64_t planted = 0;  // elements deliberately placed outside every bin
};

/// Change ratios drawn from a fixed mixture of narrow and wide modes with
/// unequal weights. Used to compare binning strategies.
template <class T>
SyntheticPair<T> multimodal_pair(std::size_t n, std::uint64_t seed);

/// Ratios concentrated within `tolerance / 2` of a few values, plus a
/// `fraction` of elements with isolated ratios far from all of them.
template <class T>
SyntheticPair<T> planted_outlier_pair(std::size_t n, double fraction, double tolerance,
                                      std::uint64_t seed);

}  // namespace numarck::synth
