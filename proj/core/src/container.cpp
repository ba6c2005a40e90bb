#include "numarck/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <set>
#include <sstream>

namespace numarck {

static_assert(std::endian::native == std::endian::little,
              "the container codec assumes a little-endian host");

namespace {

class ByteWriter {
public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <class T>
  void put(T v) {
    append(&v, sizeof(T));
  }

  void put_bytes(std::span<const std::uint8_t> bytes) { append(bytes.data(), bytes.size()); }

private:
  void append(const void* p, std::size_t n) {
    if (n == 0) return;
    const std::size_t at = out_.size();
    out_.resize(at + n);
    std::memcpy(out_.data() + at, p, n);
  }


  std::vector<std::uint8_t>& out_;
};

// Reads little-endian fields from a source that knows its total size.
template <class Source>
class FieldReader {
public:
  explicit FieldReader(Source& src) : src_(src) {}

  template <class T>
  T get() {
    T v;
    src_.read(reinterpret_cast<std::uint8_t*>(&v), sizeof(T));
    return v;
  }

  void get_bytes(std::span<std::uint8_t> out) { src_.read(out.data(), out.size()); }

private:
  Source& src_;
};

struct SpanSource {
  std::span<const std::uint8_t> bytes;
  std::uint64_t pos = 0;

  void read(std::uint8_t* out, std::size_t n) {
    if (bytes.size() - pos < n) throw Error(ErrorCode::truncated, "file truncated");
    std::memcpy(out, bytes.data() + pos, n);
    pos += n;
  }
  void skip(std::uint64_t n) {
    if (bytes.size() - pos < n) throw Error(ErrorCode::truncated, "file truncated");
    pos += n;
  }
};

struct StreamSource {
  std::ifstream& in;
  std::uint64_t size;
  std::uint64_t pos = 0;

  void read(std::uint8_t* out, std::size_t n) {
    if (size - pos < n) throw Error(ErrorCode::truncated, "file truncated");
    in.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(n));
    if (!in) throw Error(ErrorCode::io, "read failed");
    pos += n;
  }
  void skip(std::uint64_t n) {
    if (size - pos < n) throw Error(ErrorCode::truncated, "file truncated");
    pos += n;
    in.seekg(static_cast<std::streamoff>(pos));
  }
};

void fail(const std::string& what) { throw Error(ErrorCode::invariant_violation, what); }

template <class Source>
std::uint32_t read_file_header(Source& src) {
  FieldReader<Source> r(src);
  char magic[4];
  r.get_bytes(std::span(reinterpret_cast<std::uint8_t*>(magic), 4));
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::bad_magic, "bad magic");
  const auto version = r.template get<std::uint16_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::version_mismatch,
                "unsupported format version " + std::to_string(version));
  }
  return r.template get<std::uint32_t>();
}

// Parses everything up to (not including) the index table.
template <class Source>
VariableHeader read_variable_header(Source& src) {
  FieldReader<Source> r(src);
  VariableHeader h;
  const auto name_len = r.template get<std::uint16_t>();
  h.name.resize(name_len);
  r.get_bytes(std::span(reinterpret_cast<std::uint8_t*>(h.name.data()), name_len));
  const auto dtype = r.template get<std::uint8_t>();
  if (dtype > 1) fail("unknown dtype code " + std::to_string(dtype));
  h.dtype = static_cast<Dtype>(dtype);
  h.n = r.template get<std::uint64_t>();
  h.bits = r.template get<std::uint8_t>();
  const auto k = r.template get<std::uint32_t>();
  h.tolerance = r.template get<double>();
  h.elements_per_block = r.template get<std::uint32_t>();
  const auto nblocks = r.template get<std::uint32_t>();
  h.n_incompressible = r.template get<std::uint64_t>();
  h.index_table_len = r.template get<std::uint64_t>();

  // Bound the table sizes before allocating.
  if (h.bits < 2 || h.bits > 30) fail("index length out of range");
  if (k > (std::uint32_t{1} << h.bits) - 1) fail("more centers than usable ids");
  if (h.elements_per_block == 0) fail("zero elements per block");
  if (nblocks != (h.n + h.elements_per_block - 1) / h.elements_per_block) {
    fail("block count disagrees with n / elements_per_block");
  }

  h.centers.resize(k);
  for (double& c : h.centers) {
    c = h.dtype == Dtype::f32 ? static_cast<double>(r.template get<float>())
                              : r.template get<double>();
  }
  h.index_offsets.resize(nblocks);
  for (auto& o : h.index_offsets) o = r.template get<std::uint64_t>();
  h.incompressible_prefix.resize(nblocks);
  for (auto& p : h.incompressible_prefix) p = r.template get<std::uint64_t>();
  validate(h);
  return h;
}

void write_variable(ByteWriter& w, const CompressedVariable& v) {
  const VariableHeader& h = v.header;
  w.put(static_cast<std::uint16_t>(h.name.size()));
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(h.name.data()), h.name.size()));
  w.put(static_cast<std::uint8_t>(h.dtype));
  w.put(h.n);
  w.put(h.bits);
  w.put(h.k());
  w.put(h.tolerance);
  w.put(h.elements_per_block);
  w.put(h.nblocks());
  w.put(h.n_incompressible);
  w.put(h.index_table_len);
  for (double c : h.centers) {
    if (h.dtype == Dtype::f32) {
      w.put(static_cast<float>(c));
    } else {
      w.put(c);
    }
  }
  for (auto o : h.index_offsets) w.put(o);
  for (auto p : h.incompressible_prefix) w.put(p);
  w.put_bytes(v.index_table);
  w.put_bytes(v.incompressible_table);
}

void check_unique_names(std::span<const CompressedVariable> vars) {
  std::set<std::string_view> seen;
  for (const auto& v : vars) {
    if (!seen.insert(v.header.name).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate variable name '" + v.header.name + "'");
    }
  }
}

}  // namespace

std::uint64_t record_size(const VariableHeader& h) noexcept {
  const std::uint64_t fixed = 2 + 1 + 8 + 1 + 4 + 8 + 4 + 4 + 8 + 8;
  return fixed + h.name.size() + std::uint64_t{h.k()} * h.elem_bytes() +
         16ull * h.nblocks() + h.index_table_len + h.n_incompressible * h.elem_bytes();
}

void validate(const VariableHeader& h) {
  if (h.name.empty()) fail("empty variable name");
  if (h.name.size() > 0xFFFF) fail("variable name too long");
  if (h.n == 0) fail("variable has no elements");
  if (h.bits < 2 || h.bits > 30) fail("index length out of range");
  if (!std::isfinite(h.tolerance) || h.tolerance < Tolerance::kMin) fail("bad tolerance");
  if (h.k() > h.sentinel()) fail("more centers than usable ids");
  if (h.elements_per_block == 0) fail("zero elements per block");
  const std::uint64_t nblocks = (h.n + h.elements_per_block - 1) / h.elements_per_block;
  if (h.index_offsets.size() != nblocks || h.incompressible_prefix.size() != nblocks) {
    fail("offset tables do not match the block count");
  }
  if (h.n_incompressible > h.n) fail("more incompressible values than elements");
  for (std::size_t i = 0; i < h.centers.size(); ++i) {
    if (!std::isfinite(h.centers[i])) fail("non-finite bin center");
    if (h.dtype == Dtype::f32 &&
        static_cast<double>(static_cast<float>(h.centers[i])) != h.centers[i]) {
      fail("bin center not representable as float");
    }
    if (i > 0 && !(h.centers[i - 1] < h.centers[i])) fail("bin centers not increasing");
  }
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::uint64_t next_off =
        b + 1 < nblocks ? h.index_offsets[b + 1] : h.index_table_len;
    const std::uint64_t next_pre =
        b + 1 < nblocks ? h.incompressible_prefix[b + 1] : h.n_incompressible;
    if (b == 0 && (h.index_offsets[0] != 0 || h.incompressible_prefix[0] != 0)) {
      fail("offset tables must start at zero");
    }
    if (next_off < h.index_offsets[b]) fail("index offsets decrease");
    if (next_pre < h.incompressible_prefix[b]) fail("incompressible prefix decreases");
  }
}

void validate(const CompressedVariable& v) {
  validate(v.header);
  if (v.index_table.size() != v.header.index_table_len) fail("index table length mismatch");
  if (v.incompressible_table.size() != v.header.n_incompressible * v.header.elem_bytes()) {
    fail("incompressible table length mismatch");
  }
}

std::vector<std::uint8_t> encode_file(std::span<const CompressedVariable> variables) {
  check_unique_names(variables);
  for (const auto& v : variables) validate(v);
  std::uint64_t total = kFileHeaderBytes;
  for (const auto& v : variables) total += record_size(v.header);

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(total));
  ByteWriter w(out);
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(variables.size()));
  for (const auto& v : variables) write_variable(w, v);
  return out;
}

std::vector<CompressedVariable> decode_file(std::span<const std::uint8_t> bytes) {
  SpanSource src{bytes};
  const std::uint32_t count = read_file_header(src);
  std::vector<CompressedVariable> vars;
  for (std::uint32_t i = 0; i < count; ++i) {
    CompressedVariable v;
    v.header = read_variable_header(src);
    const std::uint64_t inc_bytes = v.header.n_incompressible * v.header.elem_bytes();
    if (bytes.size() - src.pos < v.header.index_table_len ||
        bytes.size() - src.pos - v.header.index_table_len < inc_bytes) {
      throw Error(ErrorCode::truncated, "file truncated inside variable '" + v.header.name + "'");
    }
    v.index_table.resize(static_cast<std::size_t>(v.header.index_table_len));
    src.read(v.index_table.data(), v.index_table.size());
    v.incompressible_table.resize(static_cast<std::size_t>(inc_bytes));
    src.read(v.incompressible_table.data(), v.incompressible_table.size());
    vars.push_back(std::move(v));
  }
  if (src.pos != bytes.size()) fail("trailing bytes after last variable");
  check_unique_names(vars);
  return vars;
}

std::uint64_t write_file(const std::filesystem::path& path,
                         std::span<const CompressedVariable> variables) {
  const std::vector<std::uint8_t> bytes = encode_file(variables);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write to " + path.string() + " failed");
  return bytes.size();
}

std::vector<CompressedVariable> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_file(bytes);
}

// ---------------------------------------------------------------- FileReader

class FileBlockSource final : public BlockSource {
public:
  FileBlockSource(const FileReader& reader, std::size_t i) : reader_(reader), i_(i) {}

  std::vector<std::uint8_t> index_bytes(std::uint64_t offset,
                                        std::uint64_t length) const override {
    const VariableHeader& h = reader_.headers_[i_];
    if (offset + length > h.index_table_len) {
      throw Error(ErrorCode::truncated, "index table shorter than its offsets");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(length));
    reader_.read_at(reader_.bodies_[i_].index_table_pos + offset, out);
    return out;
  }

  std::vector<std::uint8_t> incompressible_bytes(std::uint64_t first,
                                                 std::uint64_t count) const override {
    const VariableHeader& h = reader_.headers_[i_];
    if (first + count > h.n_incompressible) {
      throw Error(ErrorCode::truncated, "incompressible table too short");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(count * h.elem_bytes()));
    reader_.read_at(reader_.bodies_[i_].incompressible_pos + first * h.elem_bytes(), out);
    return out;
  }

private:
  const FileReader& reader_;
  std::size_t i_;
};

FileReader::FileReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::error_code ec;
  file_size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot stat " + path.string());

  StreamSource src{in_, file_size_};
  const std::uint32_t count = read_file_header(src);
  for (std::uint32_t i = 0; i < count; ++i) {
    VariableHeader h = read_variable_header(src);
    Bodies b{src.pos, src.pos + h.index_table_len};
    src.skip(h.index_table_len);
    src.skip(h.n_incompressible * h.elem_bytes());
    headers_.push_back(std::move(h));
    bodies_.push_back(b);
  }
  if (src.pos != file_size_) fail("trailing bytes after last variable");
  std::set<std::string_view> seen;
  for (const auto& h : headers_) {
    if (!seen.insert(h.name).second) fail("duplicate variable name '" + h.name + "'");
  }
}

std::size_t FileReader::find(std::string_view name) const {
  for (std::size_t i = 0; i < headers_.size(); ++i) {
    if (headers_[i].name == name) return i;
  }
  throw Error(ErrorCode::invalid_argument, "no variable named '" + std::string(name) + "'");
}

void FileReader::read_at(std::uint64_t pos, std::span<std::uint8_t> out) const {
  if (out.empty()) return;
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(pos));
  in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!in_) throw Error(ErrorCode::io, "read from " + path_.string() + " failed");
  body_bytes_read_ += out.size();
}

CompressedVariable FileReader::load(std::size_t i) const {
  CompressedVariable v;
  v.header = headers_.at(i);
  v.index_table.resize(static_cast<std::size_t>(v.header.index_table_len));
  read_at(bodies_[i].index_table_pos, v.index_table);
  v.incompressible_table.resize(
      static_cast<std::size_t>(v.header.n_incompressible * v.header.elem_bytes()));
  read_at(bodies_[i].incompressible_pos, v.incompressible_table);
  return v;
}

std::unique_ptr<BlockSource> FileReader::source(std::size_t i) const {
  if (i >= headers_.size()) throw Error(ErrorCode::out_of_range, "variable index out of range");
  return std::make_unique<FileBlockSource>(*this, i);
}

std::string describe(const std::filesystem::path& path) {
  const FileReader reader(path);
  std::ostringstream os;
  os << "file = " << path.string() << " ;\n";
  os << "file_bytes = " << reader.file_size() << " ;\n";
  os << reader.variables().size() << " variables\n";
  std::uint64_t raw_total = 0;
  for (const VariableHeader& h : reader.variables()) {
    const std::uint64_t raw = h.n * h.elem_bytes();
    const std::uint64_t stored = record_size(h);
    raw_total += raw;
    os << "\n" << h.name << " {\n";
    os << "  " << h.name << "_info:data_type = " << (h.dtype == Dtype::f32 ? "float" : "double")
       << " ;\n";
    os << "  " << h.name << "_info:total_data_num = " << h.n << " ;\n";
    os << "  " << h.name << "_info:bin_centers_number = " << h.k() << " ;\n";
    os << "  " << h.name << "_info:index_bits = " << unsigned{h.bits} << " ;\n";
    os << "  " << h.name << "_info:elements_per_block = " << h.elements_per_block << " ;\n";
    os << "  " << h.name << "_info:error_bound = " << std::setprecision(17) << h.tolerance
       << " ;\n";
    os << "  " << h.name << "_block_table_dim = " << h.nblocks() << " ;\n";
    os << "  " << h.name << "_index_table_dim = " << h.index_table_len << " ;\n";
    os << "  " << h.name << "_incompressible_table_dim = " << h.n_incompressible << " ;\n";
    os << "  raw_bytes = " << raw << " ;\n";
    os << "  compressed_bytes = " << stored << " ;\n";
    os << "  cr = " << std::setprecision(6)
       << static_cast<double>(raw) / static_cast<double>(stored) << " ;\n";
    os << "}\n";
  }
  if (!reader.variables().empty()) {
    os << "\nraw_bytes = " << raw_total << " ;\n";
    os << "cr = " << std::setprecision(6)
       << static_cast<double>(raw_total) / static_cast<double>(reader.file_size()) << " ;\n";
  }
  return os.str();
}

}  // namespace numarck
