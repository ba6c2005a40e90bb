#include "numarck/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace numarck {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::degenerate_input: return "degenerate input";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::bad_magic: return "bad magic";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::invariant_violation: return "invariant violation";
    case ErrorCode::corrupt_block: return "corrupt block";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown";
}

void RatioExtent::merge(const RatioExtent& other) noexcept {
  if (other.valid_count == 0) return;
  if (valid_count == 0) {
    *this = other;
    return;
  }
  min_ratio = std::min(min_ratio, other.min_ratio);
  max_ratio = std::max(max_ratio, other.max_ratio);
  valid_count += other.valid_count;
}

template <class T>
RatioExtent compute_change_ratios_into(std::span<const T> base,
                                       std::span<const T> current,
                                       std::span<double> ratios,
                                       std::span<std::uint8_t> valid) {
  const std::size_t n = base.size();
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double r = 0.0;
    const bool ok = change_ratio(base[j], current[j], r);
    ratios[j] = ok ? r : 0.0;
    valid[j] = ok ? 1 : 0;
    if (!ok) continue;
    if (count == 0) {
      lo = hi = r;
    } else {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    ++count;
  }
  return RatioExtent{lo, hi, count};
}

template <class T>
ChangeRatioField compute_change_ratios(const TemporalPair<T>& pair) {
  ChangeRatioField field;
  field.ratios.resize(pair.size());
  field.valid.resize(pair.size());
  const RatioExtent ext =
      compute_change_ratios_into<T>(pair.base, pair.current, field.ratios, field.valid);
  if (ext.valid_count == 0) {
    throw Error(ErrorCode::degenerate_input, "no element has a well-defined change ratio");
  }
  field.min_ratio = ext.min_ratio;
  field.max_ratio = ext.max_ratio;
  field.valid_count = ext.valid_count;
  return field;
}

template <class T>
void reconstruct_into(std::span<const T> base_reconstructed,
                      std::span<const double> centers,
                      std::span<const std::uint32_t> indices,
                      std::uint32_t sentinel,
                      std::span<const T> incompressible,
                      std::span<T> out) {
  const std::size_t n = indices.size();
  if (base_reconstructed.size() != n || out.size() != n) {
    throw Error(ErrorCode::invalid_argument, "reconstruct: length mismatch");
  }
  std::size_t next = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t id = indices[j];
    if (id == sentinel) {
      if (next == incompressible.size()) {
        throw Error(ErrorCode::corrupt_block, "incompressible values exhausted");
      }
      // memcpy keeps NaN payloads intact.
      std::memcpy(&out[j], &incompressible[next++], sizeof(T));
    } else if (id < centers.size()) {
      out[j] = reconstruct_value(base_reconstructed[j], centers[id]);
    } else {
      throw Error(ErrorCode::corrupt_block,
                  "bin index " + std::to_string(id) + " has no center");
    }
  }
  if (next != incompressible.size()) {
    throw Error(ErrorCode::corrupt_block, "unconsumed incompressible values");
  }
}

template <class T>
std::vector<T> reconstruct(std::span<const T> base_reconstructed,
                           std::span<const double> centers,
                           std::span<const std::uint32_t> indices,
                           std::uint32_t sentinel,
                           std::span<const T> incompressible) {
  std::vector<T> out(indices.size());
  reconstruct_into<T>(base_reconstructed, centers, indices, sentinel, incompressible, out);
  return out;
}

template <class T>
VerifyReport verify(std::span<const T> original, std::span<const T> reconstructed,
                    std::uint64_t original_bytes, std::uint64_t compressed_bytes,
                    double alpha) {
  if (original.size() != reconstructed.size()) {
    throw Error(ErrorCode::invalid_argument, "verify: length mismatch");
  }
  if (compressed_bytes == 0) {
    throw Error(ErrorCode::invalid_argument, "verify: compressed size is zero");
  }
  VerifyReport rep;
  rep.n = original.size();
  rep.alpha = alpha;
  rep.cr = static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes);
  double sum = 0.0;
  for (std::size_t j = 0; j < original.size(); ++j) {
    const T d = original[j];
    const T r = reconstructed[j];
    if (std::memcmp(&d, &r, sizeof(T)) == 0 || d == r) continue;
    if (d == T(0) || !std::isfinite(d)) {
      ++rep.zero_denominator_mismatches;
      continue;
    }
    const double term = std::fabs((static_cast<double>(d) - static_cast<double>(r)) /
                                  static_cast<double>(d));
    sum += term;
    rep.max_rel_err = std::max(rep.max_rel_err, term);
  }
  rep.me = rep.n == 0 ? 0.0 : sum / static_cast<double>(rep.n);
  return rep;
}

double analytic_compression_ratio(double bits_per_element, double index_bits,
                                  double index_deflate_ratio, double alpha) {
  if (!(bits_per_element > 0) || !(index_bits > 0) || !(index_deflate_ratio > 0) ||
      !(alpha >= 0 && alpha <= 1)) {
    throw Error(ErrorCode::invalid_argument, "analytic CR: parameters out of range");
  }
  return bits_per_element / (index_bits / index_deflate_ratio + alpha * bits_per_element);
}

#define NUMARCK_INSTANTIATE(T)                                                        \
  template RatioExtent compute_change_ratios_into<T>(std::span<const T>,              \
                                                     std::span<const T>,              \
                                                     std::span<double>,               \
                                                     std::span<std::uint8_t>);        \
  template ChangeRatioField compute_change_ratios<T>(const TemporalPair<T>&);         \
  template void reconstruct_into<T>(std::span<const T>, std::span<const double>,      \
                                    std::span<const std::uint32_t>, std::uint32_t,    \
                                    std::span<const T>, std::span<T>);                \
  template std::vector<T> reconstruct<T>(std::span<const T>, std::span<const double>, \
                                         std::span<const std::uint32_t>,              \
                                         std::uint32_t, std::span<const T>);          \
  template VerifyReport verify<T>(std::span<const T>, std::span<const T>,             \
                                  std::uint64_t, std::uint64_t, double);

NUMARCK_INSTANTIATE(float)
NUMARCK_INSTANTIATE(double)

#undef NUMARCK_INSTANTIATE

}  // namespace numarck
