#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numarck/types.hpp"

namespace numarck {

/// Everything about a compressed variable except the two bulk tables. This is
/// what a metadata-only read returns.
struct VariableHeader {
  std::string name;
  Dtype dtype = Dtype::f32;
  std::uint64_t n = 0;
  std::uint8_t bits = 2;
  double tolerance = 0.0;
  std::uint32_t elements_per_block = 0;
  std::uint64_t n_incompressible = 0;
  std::uint64_t index_table_len = 0;
  std::vector<double> centers;  // k values, exactly representable in dtype
  std::vector<std::uint64_t> index_offsets;
  std::vector<std::uint64_t> incompressible_prefix;

  std::uint32_t k() const noexcept { return static_cast<std::uint32_t>(centers.size()); }
  std::uint32_t nblocks() const noexcept {
    return static_cast<std::uint32_t>(index_offsets.size());
  }
  std::uint32_t sentinel() const noexcept { return (std::uint32_t{1} << bits) - 1u; }
  std::size_t elem_bytes() const noexcept { return dtype_size(dtype); }

  bool operator==(const VariableHeader&) const = default;
};

struct CompressedVariable {
  VariableHeader header;
  std::vector<std::uint8_t> index_table;         // concatenated deflated blocks
  std::vector<std::uint8_t> incompressible_table;  // raw little-endian dtype values

  bool operator==(const CompressedVariable&) const = default;
};

}  // namespace numarck
