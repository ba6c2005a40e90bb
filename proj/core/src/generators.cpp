#include "numarck/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace numarck::synth {

namespace {

template <class T>
std::vector<T> smooth_field(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<T> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / 4096.0;
    x[j] = static_cast<T>(2.0 + std::sin(phase) + 0.5 * std::cos(3.1 * phase) + jitter(rng));
  }
  return x;
}

}  // namespace

template <class T>
std::vector<std::vector<T>> multiplicative_series(std::size_t n, std::size_t snapshots,
                                                  double spread, double rho,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<T>> out;
  if (snapshots == 0) return out;
  out.push_back(smooth_field<T>(n, rng));
  std::vector<double> r(n, 0.0);
  for (std::size_t t = 1; t < snapshots; ++t) {
    std::vector<T> next(n);
    for (std::size_t j = 0; j < n; ++j) {
      r[j] = rho * r[j] + spread * noise(rng);
      next[j] = static_cast<T>(static_cast<double>(out.back()[j]) * (1.0 + r[j]));
    }
    out.push_back(std::move(next));
  }
  return out;
}

template <class T>
SyntheticPair<T> multimodal_pair(std::size_t n, std::uint64_t seed) {
  struct Mode {
    double weight;
    double mean;
    double stddev;
  };
  // Narrow modes dominate; a wide low-weight component stretches the range.
  static constexpr Mode kModes[] = {
      {0.24, 0.0, 0.002},   {0.18, 0.08, 0.004}, {0.14, -0.12, 0.005},
      {0.14, 0.2, 0.006},   {0.10, -0.25, 0.008}, {0.10, 0.3, 0.01},
      {0.10, 0.0, 0.12},
  };
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const Mode& m : kModes) weights.push_back(m.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> unit(0.0, 1.0);

  SyntheticPair<T> p;
  p.base = smooth_field<T>(n, rng);
  p.current.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Mode& m = kModes[pick(rng)];
    const double r = std::clamp(m.mean + m.stddev * unit(rng), -0.9, 0.9);
    p.current[j] = static_cast<T>(static_cast<double>(p.base[j]) * (1.0 + r));
  }
  return p;
}

template <class T>
SyntheticPair<T> planted_outlier_pair(std::size_t n, double fraction, double tolerance,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> within(-tolerance / 4, tolerance / 4);
  std::uniform_int_distribution<int> level(0, 3);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SyntheticPair<T> p;
  p.base = smooth_field<T>(n, rng);
  p.current.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double r = 0.0;
    if (coin(rng) < fraction) {
      // Every outlier gets its own ratio, far from the bulk and from each
      // other, so no bin holds more than one of them.
      r = 1.0 + 16.0 * tolerance * static_cast<double>(p.planted++);
    } else {
      r = 10.0 * tolerance * level(rng) + within(rng);
    }
    p.current[j] = static_cast<T>(static_cast<double>(p.base[j]) * (1.0 + r));
  }
  return p;
}

template std::vector<std::vector<float>> multiplicative_series<float>(std::size_t, std::size_t,
                                                                      double, double,
                                                                      std::uint64_t);
template std::vector<std::vector<double>> multiplicative_series<double>(std::size_t,
                                                                        std::size_t, double,
                                                                        double, std::uint64_t);
template SyntheticPair<float> multimodal_pair<float>(std::size_t, std::uint64_t);
template SyntheticPair<double> multimodal_pair<double>(std::size_t, std::uint64_t);
template SyntheticPair<float> planted_outlier_pair<float>(std::size_t, double, double,
                                                          std::uint64_t);
template SyntheticPair<double> planted_outlier_pair<double>(std::size_t, double, double,
                                                            std::uint64_t);

}  // namespace numarck::synth
