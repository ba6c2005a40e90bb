#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "numarck/variable.hpp"

namespace numarck {

inline constexpr std::uint64_t kDefaultBlockBytes = std::uint64_t{1} << 20;
inline constexpr int kDefaultDeflateLevel = 6;

/// Partition of n B-bit indices into byte-aligned blocks of `block_bytes`
/// capacity.
struct BlockLayout {
  std::uint64_t n = 0;
  unsigned bits = 0;
  std::uint64_t elements_per_block = 0;
  std::uint64_t nblocks = 0;

  static BlockLayout make(std::uint64_t n, unsigned bits,
                          std::uint64_t block_bytes = kDefaultBlockBytes);
  static BlockLayout from_header(const VariableHeader& h);

  std::uint64_t block_begin(std::uint64_t b) const noexcept { return b * elements_per_block; }
  std::uint64_t block_end(std::uint64_t b) const noexcept {
    return std::min(n, (b + 1) * elements_per_block);
  }
  std::uint64_t block_of(std::uint64_t element) const noexcept {
    return element / elements_per_block;
  }
};

inline constexpr std::size_t packed_size(std::size_t count, unsigned bits) noexcept {
  return (count * bits + 7) / 8;
}

/// MSB-first packing of `bits`-wide values; the tail of the last byte is zero.
std::vector<std::uint8_t> pack_block(std::span<const std::uint32_t> indices, unsigned bits);

void unpack_block(std::span<const std::uint8_t> bytes, unsigned bits,
                  std::span<std::uint32_t> out);
std::vector<std::uint32_t> unpack_block(std::span<const std::uint8_t> bytes, unsigned bits,
                                        std::size_t count);

/// Raw DEFLATE stream (no zlib/gzip framing).
std::vector<std::uint8_t> compress_block(std::span<const std::uint8_t> packed,
                                         int level = kDefaultDeflateLevel);
std::vector<std::uint8_t> decompress_block(std::span<const std::uint8_t> compressed,
                                           std::size_t expected_size);

struct OffsetTables {
  std::vector<std::uint64_t> index_offsets;
  std::vector<std::uint64_t> incompressible_prefix;
};

struct EncodedBlock {
  std::vector<std::uint8_t> bytes;
  std::uint64_t n_incompressible = 0;
};

EncodedBlock encode_block(std::span<const std::uint32_t> indices, unsigned bits,
                          int level = kDefaultDeflateLevel);

struct EncodedIndexTable {
  std::vector<std::uint8_t> index_table;
  OffsetTables offsets;
  std::uint64_t n_incompressible = 0;
};

/// Concatenates blocks in ordinal order and derives both offset tables by
/// exclusive scans.
EncodedIndexTable assemble_blocks(std::span<const EncodedBlock> blocks);

EncodedIndexTable build_blocks(std::span<const std::uint32_t> indices,
                               const BlockLayout& layout,
                               int level = kDefaultDeflateLevel);

/// Read access to the bulk tables of a variable, in memory or on disk.
class BlockSource {
public:
  virtual ~BlockSource() = default;
  virtual std::vector<std::uint8_t> index_bytes(std::uint64_t offset,
                                                std::uint64_t length) const = 0;
  /// Raw bytes of incompressible values [first, first + count).
  virtual std::vector<std::uint8_t> incompressible_bytes(std::uint64_t first,
                                                         std::uint64_t count) const = 0;
};

class MemoryBlockSource final : public BlockSource {
public:
  explicit MemoryBlockSource(const CompressedVariable& v) : var_(v) {}
  std::vector<std::uint8_t> index_bytes(std::uint64_t offset,
                                        std::uint64_t length) const override;
  std::vector<std::uint8_t> incompressible_bytes(std::uint64_t first,
                                                 std::uint64_t count) const override;

private:
  const CompressedVariable& var_;
};

template <class T>
struct DecodedRange {
  std::vector<T> values;
  std::uint64_t blocks_touched = 0;
};

/// Reconstructs elements [start, start + count) decoding only the covering
/// blocks. `base_reconstructed` holds the previous snapshot for that range.
template <class T>
DecodedRange<T> decode_range(const VariableHeader& header, const BlockSource& source,
                             std::uint64_t start, std::uint64_t count,
                             std::span<const T> base_reconstructed);

template <class T>
DecodedRange<T> partial_decode(const CompressedVariable& variable, std::uint64_t start,
                               std::uint64_t count, std::span<const T> base_reconstructed) {
  return decode_range<T>(variable.header, MemoryBlockSource(variable), start, count,
                         base_reconstructed);
}

}  // namespace numarck
