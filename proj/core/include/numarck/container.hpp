#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "numarck/codec.hpp"
#include "numarck/variable.hpp"

namespace numarck {

// File layout, all little-endian:
//   "NMRK" | version u16 | variable count u32
//   per variable:
//     name_len u16 | name | dtype u8 | n u64 | B u8 | k u32 | E f64 |
//     elements_per_block u32 | nblocks u32 | n_incompressible u64 |
//     index_table_len u64 | centers[k] (dtype) | index_offsets[nblocks] u64 |
//     incompressible_prefix[nblocks] u64 | index_table | incompressible_table
inline constexpr char kMagic[4] = {'N', 'M', 'R', 'K'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint64_t kFileHeaderBytes = 10;
inline constexpr std::string_view kFileExtension = ".nmk";

/// Bytes one variable occupies in a file, computed from its metadata.
std::uint64_t record_size(const VariableHeader& h) noexcept;

/// Throws invariant_violation when the header is internally inconsistent.
void validate(const VariableHeader& h);
void validate(const CompressedVariable& v);

std::vector<std::uint8_t> encode_file(std::span<const CompressedVariable> variables);
std::vector<CompressedVariable> decode_file(std::span<const std::uint8_t> bytes);

std::uint64_t write_file(const std::filesystem::path& path,
                         std::span<const CompressedVariable> variables);
std::vector<CompressedVariable> read_file(const std::filesystem::path& path);

/// Lazy reader: the constructor parses metadata only and seeks past the bulk
/// tables, which are fetched on demand.
class FileReader {
public:
  explicit FileReader(const std::filesystem::path& path);

  const std::vector<VariableHeader>& variables() const noexcept { return headers_; }
  std::size_t find(std::string_view name) const;
  std::uint64_t file_size() const noexcept { return file_size_; }

  CompressedVariable load(std::size_t i) const;
  std::unique_ptr<BlockSource> source(std::size_t i) const;

  /// Bulk-table bytes read since construction.
  std::uint64_t body_bytes_read() const noexcept { return body_bytes_read_; }

private:
  friend class FileBlockSource;

  struct Bodies {
    std::uint64_t index_table_pos;
    std::uint64_t incompressible_pos;
  };

  void read_at(std::uint64_t pos, std::span<std::uint8_t> out) const;

  std::filesystem::path path_;
  mutable std::ifstream in_;
  std::uint64_t file_size_ = 0;
  std::vector<VariableHeader> headers_;
  std::vector<Bodies> bodies_;
  mutable std::uint64_t body_bytes_read_ = 0;
};

/// Metadata listing modelled on a netCDF header dump.
std::string describe(const std::filesystem::path& path);

}  // namespace numarck
