#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "numarck/binning.hpp"
#include "numarck/container.hpp"
#include "numarck/generators.hpp"
#include "numarck/kernel.hpp"

namespace numarck::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

template <class T>
std::vector<T> read_raw(const fs::path& path, std::optional<std::uint64_t> count) {
  std::error_code ec;
  const std::uint64_t size = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot stat " + path.string());
  std::uint64_t n = 0;
  if (count) {
    if (*count > size / sizeof(T)) {
      throw Error(ErrorCode::invalid_argument,
                  path.string() + " holds fewer than " + std::to_string(*count) + " elements");
    }
    n = *count;
  } else {
    if (size % sizeof(T) != 0) {
      throw Error(ErrorCode::invalid_argument, path.string() + ": size " + std::to_string(size) +
                                                   " is not a multiple of " +
                                                   std::to_string(sizeof(T)));
    }
    n = size / sizeof(T);
  }
  std::vector<T> out(static_cast<std::size_t>(n));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw Error(ErrorCode::io, "read from " + path.string() + " failed");
  return out;
}

template <class T>
void write_raw(const fs::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw Error(ErrorCode::io, "write to " + path.string() + " failed");
}

template std::vector<float> read_raw<float>(const fs::path&, std::optional<std::uint64_t>);
template std::vector<double> read_raw<double>(const fs::path&, std::optional<std::uint64_t>);
template void write_raw<float>(const fs::path&, std::span<const float>);
template void write_raw<double>(const fs::path&, std::span<const double>);

unsigned resolve_workers(std::optional<unsigned> requested) {
  if (const char* env = std::getenv("NUMARCK_WORKERS"); env && *env) {
    unsigned v = 0;
    const char* end = env + std::strlen(env);
    const auto [p, ec] = std::from_chars(env, end, v);
    if (ec != std::errc{} || p != end || v == 0) {
      throw Error(ErrorCode::invalid_argument, "NUMARCK_WORKERS must be a positive integer");
    }
    return v;
  }
  if (requested) return *requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

double r_squared(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "r_squared: need two or more paired samples");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::invalid_argument, "r_squared: x is constant");
  if (syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

std::vector<StrategyRow> compare_strategies(const ChangeRatioField& field, unsigned bits,
                                            double tolerance, bool with_dp,
                                            unsigned kmeans_max_iter) {
  const Tolerance tol(tolerance);
  std::vector<StrategyRow> rows;
  if (with_dp) {
    std::vector<double> sorted;
    sorted.reserve(static_cast<std::size_t>(field.valid_count));
    for (std::size_t j = 0; j < field.size(); ++j) {
      if (field.valid[j]) sorted.push_back(field.ratios[j]);
    }
    std::sort(sorted.begin(), sorted.end());
    const std::uint64_t k = (std::uint64_t{1} << bits) - 1;
    rows.push_back({"dp", sorted.empty() ? 0 : dp_optimal_coverage(sorted, tol.bin_width(), k)});
  }
  const auto count = [&](BinModel model) {
    model.tolerance = tol.value();
    return field.size() - compressible_mask(field, model).n_incompressible;
  };
  const Histogram hist = build_histogram(field, tol);
  BinModel topk = top_k_bins(hist, bits);
  MemberSpans spans;
  spans.add(hist, topk, field.ratios, field.valid);
  recenter_on_members(topk, spans);
  rows.push_back({"topk", count(topk)});
  rows.push_back({"kmeans", count(kmeans_bins(field, bits, kmeans_max_iter))});
  rows.push_back({"log", count(log_scale_bins(field, bits, tol))});
  rows.push_back({"equal", count(equal_width_bins(field.min_ratio, field.max_ratio, bits))});
  return rows;
}

template <class T>
std::vector<SweepRow> worker_sweep(const TemporalPair<T>& pair, PipelineConfig config,
                                   std::span<const unsigned> workers, unsigned repeats) {
  std::vector<SweepRow> rows;
  for (unsigned w : workers) {
    config.workers = w;
    SweepRow row;
    row.workers = w;
    for (unsigned rep = 0; rep < std::max(1u, repeats); ++rep) {
      CompressResult r = compress_pair<T>(pair, config);
      const auto t0 = Clock::now();
      const std::vector<std::uint8_t> bytes = encode_file(std::span(&r.variable, 1));
      r.timings.io = std::chrono::duration<double>(Clock::now() - t0).count();
      r.timings.total += r.timings.io;
      const std::uint64_t h = fnv1a(bytes);
      if (rep == 0 || r.timings.total < row.timings.total) row.timings = r.timings;
      if (rep > 0 && h != row.file_hash) {
        throw Error(ErrorCode::internal, "repeated compression produced different bytes");
      }
      row.file_hash = h;
    }
    rows.push_back(row);
  }
  return rows;
}

template std::vector<SweepRow> worker_sweep<float>(const TemporalPair<float>&, PipelineConfig,
                                                   std::span<const unsigned>, unsigned);
template std::vector<SweepRow> worker_sweep<double>(const TemporalPair<double>&, PipelineConfig,
                                                    std::span<const unsigned>, unsigned);

namespace {

struct ArrayOptions {
  std::string dtype = "f32";
  std::optional<std::uint64_t> count;

  Dtype parsed() const {
    if (dtype == "f32") return Dtype::f32;
    if (dtype == "f64") return Dtype::f64;
    throw Error(ErrorCode::invalid_argument, "dtype must be f32 or f64");
  }
};

template <class Fn>
decltype(auto) dispatch(Dtype d, Fn&& fn) {
  if (d == Dtype::f32) return fn(float{});
  return fn(double{});
}

std::optional<unsigned> parse_bits(const std::string& s) {
  if (s == "auto") return std::nullopt;
  unsigned v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(ErrorCode::invalid_argument, "--bits must be 'auto' or an integer");
  }
  return v;
}

ElementRange parse_range(const std::string& s) {
  const auto colon = s.find(':');
  ElementRange r;
  const auto parse = [&](std::string_view part, std::uint64_t& v) {
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    return ec == std::errc{} && p == part.data() + part.size() && !part.empty();
  };
  if (colon == std::string::npos || !parse(std::string_view(s).substr(0, colon), r.start) ||
      !parse(std::string_view(s).substr(colon + 1), r.count)) {
    throw Error(ErrorCode::invalid_argument, "--range must be start:count");
  }
  return r;
}

std::vector<unsigned> default_worker_list() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<unsigned> w{1};
  while (w.back() * 2 <= std::max(hw, 8u)) w.push_back(w.back() * 2);
  return w;
}

std::size_t pick_variable(const FileReader& reader, const std::string& name) {
  if (reader.variables().empty()) throw Error(ErrorCode::invalid_argument, "file has no variables");
  return name.empty() ? 0 : reader.find(name);
}

struct CompressArgs {
  std::string prev;
  std::string curr;
  std::string output;
  ArrayOptions array;
  double error = 1e-3;
  std::string strategy = "topk";
  std::string bits = "auto";
  std::uint64_t block_bytes = kDefaultBlockBytes;
  std::optional<unsigned> workers;
  int deflate_level = kDefaultDeflateLevel;
  std::string name = "var";
};

int cmd_compress(const CompressArgs& a, std::ostream& out) {
  PipelineConfig cfg;
  cfg.tolerance = a.error;
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw Error(ErrorCode::invalid_argument, "unknown strategy '" + a.strategy + "'");
  cfg.strategy = *strategy;
  cfg.bits = parse_bits(a.bits);
  cfg.block_bytes = a.block_bytes;
  cfg.workers = resolve_workers(a.workers);
  cfg.deflate_level = a.deflate_level;
  cfg.name = a.name;
  cfg.validate();

  dispatch(a.array.parsed(), [&](auto tag) {
    using T = decltype(tag);
    const std::vector<T> prev = read_raw<T>(a.prev, a.array.count);
    const std::vector<T> curr = read_raw<T>(a.curr, a.array.count);
    CompressResult r = compress_pair<T>(TemporalPair<T>(prev, curr), cfg);
    const auto t0 = Clock::now();
    const std::uint64_t bytes = write_file(a.output, std::span(&r.variable, 1));
    r.timings.io = std::chrono::duration<double>(Clock::now() - t0).count();
    r.timings.total += r.timings.io;
    const std::uint64_t raw = curr.size() * sizeof(T);
    out << "n=" << r.stats.n << "\n"
        << "dtype=" << a.array.dtype << "\n"
        << "workers=" << cfg.workers << "\n"
        << "strategy=" << to_string(cfg.strategy) << "\n"
        << "bits=" << r.stats.bits << "\n"
        << "k=" << r.stats.k << "\n"
        << "n_incompressible=" << r.stats.n_incompressible << "\n"
        << "alpha=" << r.stats.alpha() << "\n"
        << "nblocks=" << r.variable.header.nblocks() << "\n"
        << "raw_bytes=" << raw << "\n"
        << "file_bytes=" << bytes << "\n"
        << "cr=" << static_cast<double>(raw) / static_cast<double>(bytes) << "\n"
        << r.timings.report();
  });
  return exit_ok;
}

struct DecompressArgs {
  std::string input;
  std::string prev;
  std::string output;
  std::optional<std::uint64_t> count;
  std::string range;
  std::string name;
};

int cmd_decompress(const DecompressArgs& a, std::ostream& out) {
  FileReader reader(a.input);
  const std::size_t i = pick_variable(reader, a.name);
  const VariableHeader& h = reader.variables()[i];
  const ElementRange range = a.range.empty() ? ElementRange{0, h.n} : parse_range(a.range);
  if (range.start > h.n || range.count > h.n - range.start) {
    throw Error(ErrorCode::out_of_range, "range exceeds the variable's " + std::to_string(h.n) +
                                             " elements");
  }
  dispatch(h.dtype, [&](auto tag) {
    using T = decltype(tag);
    const std::vector<T> prev = read_raw<T>(a.prev, a.count);
    std::span<const T> base(prev);
    if (base.size() == h.n) {
      base = base.subspan(static_cast<std::size_t>(range.start),
                          static_cast<std::size_t>(range.count));
    } else if (base.size() != range.count) {
      throw Error(ErrorCode::invalid_argument,
                  "previous snapshot must hold n or range-count elements");
    }
    const auto src = reader.source(i);
    const DecodedRange<T> d = decode_range<T>(h, *src, range.start, range.count, base);
    write_raw<T>(a.output, d.values);
    out << "name=" << h.name << "\n"
        << "start=" << range.start << "\n"
        << "count=" << range.count << "\n"
        << "blocks_touched=" << d.blocks_touched << "\n"
        << "nblocks=" << h.nblocks() << "\n"
        << "body_bytes_read=" << reader.body_bytes_read() << "\n";
  });
  return exit_ok;
}

struct VerifyArgs {
  std::string original;
  std::string reconstructed;
  std::string nmk;
  std::optional<std::uint64_t> count;
  std::string name;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  FileReader reader(a.nmk);
  const VariableHeader& h = reader.variables()[pick_variable(reader, a.name)];
  return dispatch(h.dtype, [&](auto tag) {
    using T = decltype(tag);
    const std::vector<T> orig = read_raw<T>(a.original, a.count);
    const std::vector<T> recon = read_raw<T>(a.reconstructed, a.count);
    const double alpha =
        h.n == 0 ? 0.0 : static_cast<double>(h.n_incompressible) / static_cast<double>(h.n);
    const VerifyReport rep =
        verify<T>(orig, recon, orig.size() * sizeof(T), reader.file_size(), alpha);
    const bool pass = rep.max_rel_err <= h.tolerance && rep.zero_denominator_mismatches == 0;
    out << std::setprecision(10) << "n=" << rep.n << "\n"
        << "cr=" << rep.cr << "\n"
        << "me=" << rep.me << "\n"
        << "max_rel_err=" << rep.max_rel_err << "\n"
        << "alpha=" << rep.alpha << "\n"
        << "zero_denominator_mismatches=" << rep.zero_denominator_mismatches << "\n"
        << "error_bound=" << h.tolerance << "\n"
        << "status=" << (pass ? "pass" : "fail") << "\n";
    return pass ? exit_ok : exit_bound_violated;
  });
}

struct BenchArgs {
  std::string prev;
  std::string curr;
  ArrayOptions array;
  double mib = 64.0;
  std::vector<unsigned> workers;
  unsigned repeats = 3;
  double error = 1e-3;
  std::string bits = "auto";
  std::uint64_t block_bytes = kDefaultBlockBytes;
  unsigned strategy_bits = 6;
  std::uint64_t strategy_n = 100000;
  std::uint64_t dp_max = 200000;
  std::uint64_t seed = 1;
};

template <class T>
void bench_sweep(const TemporalPair<T>& pair, const BenchArgs& a, std::ostream& out) {
  PipelineConfig cfg;
  cfg.tolerance = a.error;
  cfg.bits = parse_bits(a.bits);
  cfg.block_bytes = a.block_bytes;
  const std::vector<unsigned> workers = a.workers.empty() ? default_worker_list() : a.workers;
  const std::vector<SweepRow> rows = worker_sweep<T>(pair, cfg, workers, a.repeats);
  const double mib = static_cast<double>(pair.size() * sizeof(T)) / (1024.0 * 1024.0);

  out << "table=phase_timings\n";
  for (const SweepRow& r : rows) {
    std::istringstream lines(r.timings.report());
    for (std::string line; std::getline(lines, line);) {
      out << "workers=" << r.workers << " " << line << "\n";
    }
  }
  out << "table=speedup\n" << std::fixed << std::setprecision(4);
  const SweepRow& one = rows.front();
  bool identical = true;
  for (const SweepRow& r : rows) {
    identical = identical && r.file_hash == one.file_hash;
    const double compute = r.timings.total - r.timings.io;
    out << "workers=" << r.workers << " total_seconds=" << r.timings.total
        << " throughput_mib_s=" << mib / r.timings.total
        << " speedup=" << one.timings.total / r.timings.total
        << " speedup_excl_io=" << (one.timings.total - one.timings.io) / compute
        << " file_hash=" << std::hex << r.file_hash << std::dec << "\n";
  }
  out << "deterministic=" << (identical ? "yes" : "no") << "\n";
  out.unsetf(std::ios::floatfield);
}

void bench_strategies(const ChangeRatioField& field, const BenchArgs& a, std::ostream& out) {
  const bool with_dp = field.valid_count <= a.dp_max;
  out << "table=strategies bits=" << a.strategy_bits << " n=" << field.size()
      << " valid=" << field.valid_count << "\n";
  for (const StrategyRow& r : compare_strategies(field, a.strategy_bits, a.error, with_dp)) {
    out << "strategy=" << r.name << " compressible=" << r.compressible << " fraction="
        << static_cast<double>(r.compressible) / static_cast<double>(field.size()) << "\n";
  }
  if (!with_dp) out << "strategy=dp skipped=valid_count_above_dp_max\n";
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.strategy_bits < kMinIndexBits || a.strategy_bits > 20) {
    throw Error(ErrorCode::invalid_argument, "--strategy-bits must be in [2, 20]");
  }
  if (!a.prev.empty() || !a.curr.empty()) {
    if (a.prev.empty() || a.curr.empty()) {
      throw Error(ErrorCode::invalid_argument, "bench needs both --prev and --curr");
    }
    dispatch(a.array.parsed(), [&](auto tag) {
      using T = decltype(tag);
      const std::vector<T> prev = read_raw<T>(a.prev, a.array.count);
      const std::vector<T> curr = read_raw<T>(a.curr, a.array.count);
      const TemporalPair<T> pair(prev, curr);
      out << "input=files n=" << pair.size() << "\n";
      bench_sweep<T>(pair, a, out);
      bench_strategies(compute_change_ratios<T>(pair), a, out);
    });
    return exit_ok;
  }
  if (!(a.mib > 0.0)) throw Error(ErrorCode::invalid_argument, "--mib must be positive");
  const auto n = static_cast<std::size_t>(a.mib * 1024.0 * 1024.0 / sizeof(float));
  const auto series = synth::multiplicative_series<float>(n, 2, 0.01, 0.0, a.seed);
  out << "input=synthetic n=" << n << " mib=" << a.mib << "\n";
  bench_sweep<float>(TemporalPair<float>(series[0], series[1]), a, out);
  const auto mm = synth::multimodal_pair<double>(static_cast<std::size_t>(a.strategy_n), a.seed);
  bench_strategies(compute_change_ratios<double>(TemporalPair<double>(mm.base, mm.current)), a,
                   out);
  return exit_ok;
}

struct AnalyticArgs {
  double bits_per_element = 32;
  double index_bits = 12;
  double deflate_ratio = 2.2;
  double alpha = 0.02;
};

int cmd_analytic(const AnalyticArgs& a, std::ostream& out) {
  const double cr =
      analytic_compression_ratio(a.bits_per_element, a.index_bits, a.deflate_ratio, a.alpha);
  out << std::setprecision(12) << "bits_per_element=" << a.bits_per_element << "\n"
      << "index_bits=" << a.index_bits << "\n"
      << "index_deflate_ratio=" << a.deflate_ratio << "\n"
      << "alpha=" << a.alpha << "\n"
      << "cr=" << cr << "\n";
  return exit_ok;
}

struct DescribeArgs {
  std::string input;
};

struct GenerateArgs {
  std::string kind = "series";
  std::string prefix;
  ArrayOptions array;
  std::uint64_t n = 1 << 20;
  std::uint64_t snapshots = 2;
  double spread = 0.01;
  double rho = 0.8;
  double fraction = 0.01;
  double error = 1e-3;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  dispatch(a.array.parsed(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<std::vector<T>> snaps;
    const auto n = static_cast<std::size_t>(a.n);
    if (a.kind == "series") {
      snaps = synth::multiplicative_series<T>(n, static_cast<std::size_t>(a.snapshots), a.spread,
                                              a.rho, a.seed);
    } else if (a.kind == "multimodal" || a.kind == "outliers") {
      synth::SyntheticPair<T> p = a.kind == "multimodal"
                                      ? synth::multimodal_pair<T>(n, a.seed)
                                      : synth::planted_outlier_pair<T>(n, a.fraction, a.error,
                                                                       a.seed);
      snaps.push_back(std::move(p.base));
      snaps.push_back(std::move(p.current));
    } else {
      throw Error(ErrorCode::invalid_argument, "unknown generator '" + a.kind + "'");
    }
    for (std::size_t t = 0; t < snaps.size(); ++t) {
      const std::string path = a.prefix + "_" + std::to_string(t) + ".raw";
      write_raw<T>(path, snaps[t]);
      out << "file=" << path << " n=" << snaps[t].size() << "\n";
    }
  });
  return exit_ok;
}

int exit_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::io: return exit_io;
    case ErrorCode::internal: return exit_internal;
    default: return exit_validation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Error-bounded temporal compression of floating-point arrays", "numarck"};
  app.require_subcommand(1);

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "Compress CURR against PREV into an .nmk file");
  compress->add_option("prev", ca.prev, "Previous snapshot (raw little-endian)")->required();
  compress->add_option("curr", ca.curr, "Current snapshot (raw little-endian)")->required();
  compress->add_option("-o,--output", ca.output, "Output .nmk path")->required();
  compress->add_option("--dtype", ca.array.dtype, "f32 or f64")->capture_default_str();
  compress->add_option("--count", ca.array.count, "Elements to read (default: whole file)");
  compress->add_option("--error", ca.error, "Relative error bound")->capture_default_str();
  compress->add_option("--strategy", ca.strategy, "topk, equal, log or kmeans")
      ->capture_default_str();
  compress->add_option("--bits", ca.bits, "Index length, or auto")->capture_default_str();
  compress->add_option("--block-bytes", ca.block_bytes, "Uncompressed index block size")
      ->capture_default_str();
  compress->add_option("--workers", ca.workers, "Worker threads (NUMARCK_WORKERS overrides)");
  compress->add_option("--deflate-level", ca.deflate_level)->capture_default_str();
  compress->add_option("--name", ca.name, "Variable name")->capture_default_str();

  DecompressArgs da;
  auto* decompress = app.add_subcommand("decompress", "Reconstruct a snapshot or a range of it");
  decompress->add_option("input", da.input, ".nmk file")->required();
  decompress->add_option("--prev", da.prev, "Reconstructed previous snapshot")->required();
  decompress->add_option("-o,--output", da.output, "Output raw path")->required();
  decompress->add_option("--count", da.count, "Elements to read from --prev");
  decompress->add_option("--range", da.range, "start:count");
  decompress->add_option("--name", da.name, "Variable name (default: first)");

  DescribeArgs sa;
  auto* describe_cmd = app.add_subcommand("describe", "Print the metadata of an .nmk file");
  describe_cmd->add_option("input", sa.input)->required();

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Check a reconstruction against the original");
  verify_cmd->add_option("original", va.original)->required();
  verify_cmd->add_option("reconstructed", va.reconstructed)->required();
  verify_cmd->add_option("nmk", va.nmk, "File the reconstruction came from")->required();
  verify_cmd->add_option("--count", va.count);
  verify_cmd->add_option("--name", va.name, "Variable name (default: first)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Worker sweep and binning strategy comparison");
  bench->add_option("--prev", ba.prev, "Previous snapshot (default: synthetic)");
  bench->add_option("--curr", ba.curr, "Current snapshot");
  bench->add_option("--dtype", ba.array.dtype)->capture_default_str();
  bench->add_option("--count", ba.array.count);
  bench->add_option("--mib", ba.mib, "Synthetic input size")->capture_default_str();
  bench->add_option("--workers", ba.workers, "Worker counts to sweep")->delimiter(',');
  bench->add_option("--repeats", ba.repeats)->capture_default_str();
  bench->add_option("--error", ba.error)->capture_default_str();
  bench->add_option("--bits", ba.bits)->capture_default_str();
  bench->add_option("--block-bytes", ba.block_bytes)->capture_default_str();
  bench->add_option("--strategy-bits", ba.strategy_bits)->capture_default_str();
  bench->add_option("--strategy-n", ba.strategy_n, "Synthetic elements for the strategy table")
      ->capture_default_str();
  bench->add_option("--dp-max", ba.dp_max, "Largest valid count the DP column is run on")
      ->capture_default_str();
  bench->add_option("--seed", ba.seed)->capture_default_str();

  AnalyticArgs aa;
  auto* analytic = app.add_subcommand("analytic-cr", "CR estimate from per-element sizes");
  analytic->add_option("--bits-per-element", aa.bits_per_element)->capture_default_str();
  analytic->add_option("--index-bits", aa.index_bits)->capture_default_str();
  analytic->add_option("--deflate-ratio", aa.deflate_ratio)->capture_default_str();
  analytic->add_option("--alpha", aa.alpha)->capture_default_str();

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Write synthetic raw snapshots");
  generate->add_option("kind", ga.kind, "series, multimodal or outliers")->required();
  generate->add_option("prefix", ga.prefix, "Output files are <prefix>_<t>.raw")->required();
  generate->add_option("--dtype", ga.array.dtype)->capture_default_str();
  generate->add_option("--n", ga.n)->capture_default_str();
  generate->add_option("--snapshots", ga.snapshots)->capture_default_str();
  generate->add_option("--spread", ga.spread)->capture_default_str();
  generate->add_option("--rho", ga.rho)->capture_default_str();
  generate->add_option("--fraction", ga.fraction)->capture_default_str();
  generate->add_option("--error", ga.error)->capture_default_str();
  generate->add_option("--seed", ga.seed)->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_ok : exit_validation;
  }

  try {
    if (compress->parsed()) return cmd_compress(ca, out);
    if (decompress->parsed()) return cmd_decompress(da, out);
    if (describe_cmd->parsed()) {
      out << describe(sa.input);
      return exit_ok;
    }
    if (verify_cmd->parsed()) return cmd_verify(va, out);
    if (bench->parsed()) return cmd_bench(ba, out);
    if (analytic->parsed()) return cmd_analytic(aa, out);
    if (generate->parsed()) return cmd_generate(ga, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return exit_internal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_internal;
  }
  return exit_internal;
}

}  // namespace numarck::cli
