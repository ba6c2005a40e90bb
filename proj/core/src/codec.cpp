#include "numarck/codec.hpp"

#include <zlib.h>

#include <cstring>
#include <limits>
#include <string>

#include "numarck/kernel.hpp"

namespace numarck {

BlockLayout BlockLayout::make(std::uint64_t n, unsigned bits, std::uint64_t block_bytes) {
  if (bits == 0 || bits > 32) {
    throw Error(ErrorCode::invalid_argument, "block layout: bad index length");
  }
  BlockLayout l;
  l.n = n;
  l.bits = bits;
  l.elements_per_block = block_bytes * 8 / bits;
  if (l.elements_per_block == 0) {
    throw Error(ErrorCode::invalid_argument, "block layout: block holds no index");
  }
  if (l.elements_per_block > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::invalid_argument, "block layout: block too large");
  }
  l.nblocks = (n + l.elements_per_block - 1) / l.elements_per_block;
  return l;
}

BlockLayout BlockLayout::from_header(const VariableHeader& h) {
  BlockLayout l;
  l.n = h.n;
  l.bits = h.bits;
  l.elements_per_block = h.elements_per_block;
  l.nblocks = h.nblocks();
  return l;
}

std::vector<std::uint8_t> pack_block(std::span<const std::uint32_t> indices, unsigned bits) {
  if (bits == 0 || bits > 32) {
    throw Error(ErrorCode::invalid_argument, "pack: bad index length");
  }
  const std::uint64_t limit = std::uint64_t{1} << bits;
  std::vector<std::uint8_t> out(packed_size(indices.size(), bits));
  std::size_t pos = 0;
  std::uint64_t acc = 0;
  unsigned pending = 0;
  for (std::uint32_t v : indices) {
    if (v >= limit) {
      throw Error(ErrorCode::out_of_range,
                  "pack: index " + std::to_string(v) + " does not fit in " +
                      std::to_string(bits) + " bits");
    }
    acc = (acc << bits) | v;
    pending += bits;
    while (pending >= 8) {
      pending -= 8;
      out[pos++] = static_cast<std::uint8_t>(acc >> pending);
    }
    acc &= (std::uint64_t{1} << pending) - 1;
  }
  if (pending > 0) out[pos] = static_cast<std::uint8_t>(acc << (8 - pending));
  return out;
}

void unpack_block(std::span<const std::uint8_t> bytes, unsigned bits,
                  std::span<std::uint32_t> out) {
  if (bits == 0 || bits > 32) {
    throw Error(ErrorCode::invalid_argument, "unpack: bad index length");
  }
  if (bytes.size() < packed_size(out.size(), bits)) {
    throw Error(ErrorCode::truncated, "unpack: buffer shorter than element count");
  }
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::size_t pos = 0;
  std::uint64_t acc = 0;
  unsigned have = 0;
  for (std::uint32_t& v : out) {
    while (have < bits) {
      acc = (acc << 8) | bytes[pos++];
      have += 8;
    }
    have -= bits;
    v = static_cast<std::uint32_t>((acc >> have) & mask);
    acc &= (std::uint64_t{1} << have) - 1;
  }
}

std::vector<std::uint32_t> unpack_block(std::span<const std::uint8_t> bytes, unsigned bits,
                                        std::size_t count) {
  std::vector<std::uint32_t> out(count);
  unpack_block(bytes, bits, out);
  return out;
}

std::vector<std::uint8_t> compress_block(std::span<const std::uint8_t> packed, int level) {
  if (level < 0 || level > 9) {
    throw Error(ErrorCode::invalid_argument, "deflate level must be in [0, 9]");
  }
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::internal, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(packed.size())));
  zs.next_in = const_cast<Bytef*>(packed.data());
  zs.avail_in = static_cast<uInt>(packed.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw Error(ErrorCode::internal, "deflate failed with code " + std::to_string(rc));
  }
  out.resize(produced);
  return out;
}

std::vector<std::uint8_t> decompress_block(std::span<const std::uint8_t> compressed,
                                           std::size_t expected_size) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) {
    throw Error(ErrorCode::internal, "inflateInit2 failed");
  }
  std::vector<std::uint8_t> out(expected_size);
  // One spare byte detects streams that inflate past the expected size.
  std::uint8_t spare = 0;
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = out.empty() ? &spare : out.data();
  zs.avail_out = out.empty() ? 1 : static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  if (rc == Z_BUF_ERROR && zs.avail_out == 0 && !out.empty()) {
    zs.next_out = &spare;
    zs.avail_out = 1;
    rc = inflate(&zs, Z_FINISH);
  }
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected_size) {
    throw Error(ErrorCode::corrupt_block, "index block does not inflate to " +
                                              std::to_string(expected_size) + " bytes");
  }
  return out;
}

EncodedBlock encode_block(std::span<const std::uint32_t> indices, unsigned bits, int level) {
  const std::uint32_t sentinel = sentinel_for(bits);
  EncodedBlock block;
  for (std::uint32_t v : indices) block.n_incompressible += v == sentinel;
  block.bytes = compress_block(pack_block(indices, bits), level);
  return block;
}

EncodedIndexTable assemble_blocks(std::span<const EncodedBlock> blocks) {
  EncodedIndexTable table;
  std::size_t total = 0;
  for (const EncodedBlock& b : blocks) total += b.bytes.size();
  table.index_table.reserve(total);
  table.offsets.index_offsets.reserve(blocks.size());
  table.offsets.incompressible_prefix.reserve(blocks.size());
  for (const EncodedBlock& b : blocks) {
    table.offsets.index_offsets.push_back(table.index_table.size());
    table.offsets.incompressible_prefix.push_back(table.n_incompressible);
    table.index_table.insert(table.index_table.end(), b.bytes.begin(), b.bytes.end());
    table.n_incompressible += b.n_incompressible;
  }
  return table;
}

EncodedIndexTable build_blocks(std::span<const std::uint32_t> indices,
                               const BlockLayout& layout, int level) {
  if (indices.size() != layout.n) {
    throw Error(ErrorCode::invalid_argument, "build_blocks: stream length differs from layout");
  }
  std::vector<EncodedBlock> blocks;
  blocks.reserve(layout.nblocks);
  for (std::uint64_t b = 0; b < layout.nblocks; ++b) {
    const auto first = static_cast<std::size_t>(layout.block_begin(b));
    const auto last = static_cast<std::size_t>(layout.block_end(b));
    blocks.push_back(encode_block(indices.subspan(first, last - first), layout.bits, level));
  }
  return assemble_blocks(blocks);
}

std::vector<std::uint8_t> MemoryBlockSource::index_bytes(std::uint64_t offset,
                                                         std::uint64_t length) const {
  if (offset + length > var_.index_table.size()) {
    throw Error(ErrorCode::truncated, "index table shorter than its offsets");
  }
  const auto* p = var_.index_table.data() + offset;
  return {p, p + length};
}

std::vector<std::uint8_t> MemoryBlockSource::incompressible_bytes(std::uint64_t first,
                                                                  std::uint64_t count) const {
  const std::size_t width = var_.header.elem_bytes();
  if ((first + count) * width > var_.incompressible_table.size()) {
    throw Error(ErrorCode::truncated, "incompressible table too short");
  }
  const auto* p = var_.incompressible_table.data() + first * width;
  return {p, p + count * width};
}

template <class T>
DecodedRange<T> decode_range(const VariableHeader& header, const BlockSource& source,
                             std::uint64_t start, std::uint64_t count,
                             std::span<const T> base_reconstructed) {
  if (header.dtype != dtype_of<T>()) {
    throw Error(ErrorCode::invalid_argument, "decode: dtype does not match variable");
  }
  if (start > header.n || count > header.n - start) {
    throw Error(ErrorCode::out_of_range, "decode: range [" + std::to_string(start) + ", +" +
                                             std::to_string(count) + ") exceeds " +
                                             std::to_string(header.n) + " elements");
  }
  if (base_reconstructed.size() != count) {
    throw Error(ErrorCode::invalid_argument, "decode: base does not cover the range");
  }
  DecodedRange<T> result;
  if (count == 0) return result;

  const BlockLayout layout = BlockLayout::from_header(header);
  const std::uint64_t first_block = layout.block_of(start);
  const std::uint64_t last_block = layout.block_of(start + count - 1);
  const auto offset_after = [&](std::uint64_t b) {
    return b + 1 < layout.nblocks ? header.index_offsets[b + 1] : header.index_table_len;
  };
  const auto prefix_after = [&](std::uint64_t b) {
    return b + 1 < layout.nblocks ? header.incompressible_prefix[b + 1]
                                  : header.n_incompressible;
  };

  const std::uint64_t window_begin = header.index_offsets[first_block];
  const std::vector<std::uint8_t> window =
      source.index_bytes(window_begin, offset_after(last_block) - window_begin);

  const std::uint64_t covered_begin = layout.block_begin(first_block);
  const std::uint64_t covered_end = layout.block_end(last_block);
  std::vector<std::uint32_t> indices(static_cast<std::size_t>(covered_end - covered_begin));
  for (std::uint64_t b = first_block; b <= last_block; ++b) {
    const std::uint64_t lo = header.index_offsets[b] - window_begin;
    const std::uint64_t hi = offset_after(b) - window_begin;
    const std::size_t elems = static_cast<std::size_t>(layout.block_end(b) - layout.block_begin(b));
    const std::vector<std::uint8_t> packed = decompress_block(
        std::span(window).subspan(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo)),
        packed_size(elems, header.bits));
    unpack_block(packed, header.bits,
                 std::span(indices).subspan(
                     static_cast<std::size_t>(layout.block_begin(b) - covered_begin), elems));
    ++result.blocks_touched;
  }

  const std::uint32_t sentinel = header.sentinel();
  const std::size_t lead = static_cast<std::size_t>(start - covered_begin);
  std::uint64_t before = 0;
  std::uint64_t inside = 0;
  std::uint64_t total = 0;
  for (std::size_t p = 0; p < indices.size(); ++p) {
    if (indices[p] != sentinel) continue;
    ++total;
    if (p < lead) {
      ++before;
    } else if (p < lead + count) {
      ++inside;
    }
  }
  const std::uint64_t prefix = header.incompressible_prefix[first_block];
  if (prefix + total != prefix_after(last_block)) {
    throw Error(ErrorCode::corrupt_block, "incompressible offset table disagrees with blocks");
  }

  const std::vector<std::uint8_t> raw = source.incompressible_bytes(prefix + before, inside);
  std::vector<T> verbatim(static_cast<std::size_t>(inside));
  if (!raw.empty()) std::memcpy(verbatim.data(), raw.data(), raw.size());

  result.values.resize(static_cast<std::size_t>(count));
  reconstruct_into<T>(base_reconstructed, header.centers,
                      std::span<const std::uint32_t>(indices).subspan(lead, static_cast<std::size_t>(count)),
                      sentinel, verbatim, result.values);
  return result;
}

template DecodedRange<float> decode_range<float>(const VariableHeader&, const BlockSource&,
                                                 std::uint64_t, std::uint64_t,
                                                 std::span<const float>);
template DecodedRange<double> decode_range<double>(const VariableHeader&, const BlockSource&,
                                                   std::uint64_t, std::uint64_t,
                                                   std::span<const double>);

}  // namespace numarck
