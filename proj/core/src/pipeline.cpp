#include "numarck/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "numarck/kernel.hpp"

namespace numarck {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr unsigned kMaxDictionaryBits = 20;

}  // namespace

void PipelineConfig::validate() const {
  if (workers == 0) throw Error(ErrorCode::invalid_argument, "workers must be >= 1");
  (void)Tolerance(tolerance);
  if (block_bytes < 4096) throw Error(ErrorCode::invalid_argument, "block_bytes must be >= 4096");
  if (deflate_level < 0 || deflate_level > 9) {
    throw Error(ErrorCode::invalid_argument, "deflate level must be in [0, 9]");
  }
  if (bits) {
    const unsigned cap = strategy == Strategy::top_k ? kMaxIndexBits : kMaxDictionaryBits;
    if (*bits < kMinIndexBits || *bits > cap) {
      throw Error(ErrorCode::invalid_argument,
                  "index length must be in [2, " + std::to_string(cap) + "] for strategy " +
                      std::string(to_string(strategy)));
    }
  } else if (min_auto_bits < kMinIndexBits || max_auto_bits > kMaxIndexBits ||
             min_auto_bits > max_auto_bits) {
    throw Error(ErrorCode::invalid_argument, "bad automatic index length range");
  }
  if (name.empty() || name.size() > 0xFFFF) {
    throw Error(ErrorCode::invalid_argument, "variable name must be 1..65535 bytes");
  }
}

std::string PhaseTimings::report() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  const std::pair<const char*, double> rows[] = {
      {"change_ratio", change_ratio}, {"binning", binning},     {"assign_index", assign_index},
      {"index_alignment", index_alignment}, {"bits_packing", bits_packing}, {"zlib", zlib},
      {"io", io},                     {"total", total},
  };
  for (const auto& [name, secs] : rows) os << "phase=" << name << " seconds=" << secs << "\n";
  return os.str();
}

void run_phase(unsigned workers, std::string_view phase,
               const std::function<void(unsigned)>& fn) {
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers > 0 ? workers - 1 : 0);
    for (unsigned w = 1; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          fn(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    try {
      fn(0);
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      throw Error(err.code(), std::string(phase) + ": " + err.what());
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::internal, std::string(phase) + ": " + ex.what());
    }
  }
}

Shard shard_of(std::uint64_t n, unsigned workers, unsigned worker) noexcept {
  const std::uint64_t base = n / workers;
  const std::uint64_t extra = n % workers;
  const std::uint64_t begin = worker * base + std::min<std::uint64_t>(worker, extra);
  return {begin, begin + base + (worker < extra ? 1 : 0)};
}

template <class T>
CompressResult compress_pair(const TemporalPair<T>& pair, const PipelineConfig& config) {
  config.validate();
  const Tolerance tol(config.tolerance);
  const auto t_start = Clock::now();
  const std::uint64_t n = pair.size();
  const unsigned workers = config.workers;

  CompressResult result;
  PhaseTimings& tm = result.timings;
  CompressStats& stats = result.stats;
  stats.n = n;

  std::vector<Shard> shards(workers);
  for (unsigned w = 0; w < workers; ++w) shards[w] = shard_of(n, workers, w);

  // Change ratios per shard, then a global min/max reduction.
  auto t0 = Clock::now();
  ChangeRatioField field;
  field.ratios.resize(n);
  field.valid.resize(n);
  std::vector<RatioExtent> extents(workers);
  run_phase(workers, "change_ratio", [&](unsigned w) {
    const Shard s = shards[w];
    const std::size_t len = static_cast<std::size_t>(s.end - s.begin);
    const std::size_t off = static_cast<std::size_t>(s.begin);
    extents[w] = compute_change_ratios_into<T>(
        pair.base.subspan(off, len), pair.current.subspan(off, len),
        std::span(field.ratios).subspan(off, len), std::span(field.valid).subspan(off, len));
  });
  RatioExtent global;
  for (const RatioExtent& e : extents) global.merge(e);
  field.min_ratio = global.min_ratio;
  field.max_ratio = global.max_ratio;
  field.valid_count = global.valid_count;
  stats.valid_ratios = global.valid_count;
  tm.change_ratio = seconds_since(t0);

  // Local histograms reduced into one global histogram; every global decision
  // below is taken once from reduced data.
  t0 = Clock::now();
  BinModel model;
  model.bits = config.bits.value_or(kMinIndexBits);
  if (field.valid_count > 0) {
    const bool need_hist = !config.bits || config.strategy == Strategy::top_k;
    Histogram hist;
    if (need_hist) {
      std::vector<HistogramBuilder> local(
          workers, HistogramBuilder(field.min_ratio, field.max_ratio, tol));
      run_phase(workers, "binning", [&](unsigned w) {
        const Shard s = shards[w];
        const std::size_t len = static_cast<std::size_t>(s.end - s.begin);
        const std::size_t off = static_cast<std::size_t>(s.begin);
        local[w].add(std::span<const double>(field.ratios).subspan(off, len),
                     std::span<const std::uint8_t>(field.valid).subspan(off, len));
      });
      for (unsigned w = 1; w < workers; ++w) local[0].merge(local[w]);
      hist = local[0].finish();
    }
    unsigned bits = 0;
    if (config.bits) {
      bits = *config.bits;
    } else {
      IndexLengthChoice choice = select_index_length(
          hist, n, static_cast<unsigned>(sizeof(T)), config.min_auto_bits, config.max_auto_bits);
      bits = choice.bits;
      stats.size_estimates = std::move(choice.estimates);
    }
    switch (config.strategy) {
      case Strategy::top_k: {
        model = top_k_bins(hist, bits);
        std::vector<MemberSpans> spans(workers);
        run_phase(workers, "binning", [&](unsigned w) {
          const Shard s = shards[w];
          const std::size_t len = static_cast<std::size_t>(s.end - s.begin);
          const std::size_t off = static_cast<std::size_t>(s.begin);
          spans[w].add(hist, model, std::span<const double>(field.ratios).subspan(off, len),
                       std::span<const std::uint8_t>(field.valid).subspan(off, len));
        });
        for (unsigned w = 1; w < workers; ++w) spans[0].merge(spans[w]);
        if (spans[0].lo.empty()) spans[0].add(hist, model, {}, {});
        recenter_on_members(model, spans[0]);
        break;
      }
      case Strategy::equal_width:
        model = equal_width_bins(field.min_ratio, field.max_ratio, bits);
        break;
      case Strategy::log_scale: model = log_scale_bins(field, bits, tol); break;
      case Strategy::kmeans: model = kmeans_bins(field, bits, config.kmeans_max_iter); break;
    }
    // Centers are stored in the variable's own precision.
    for (double& c : model.centers) c = static_cast<double>(static_cast<T>(c));
    model.centers.erase(std::unique(model.centers.begin(), model.centers.end()),
                        model.centers.end());
  }
  model.tolerance = tol.value();
  const unsigned bits = model.bits;
  const std::uint32_t sentinel = model.sentinel();
  tm.binning = seconds_since(t0);

  // Index assignment. A candidate is kept only if its decoded value meets the
  // bound against the original element.
  t0 = Clock::now();
  std::vector<std::vector<std::uint32_t>> local_indices(workers);
  std::vector<std::vector<T>> local_verbatim(workers);
  std::vector<std::uint64_t> local_demoted(workers, 0);
  run_phase(workers, "assign_index", [&](unsigned w) {
    const Shard s = shards[w];
    auto& idx = local_indices[w];
    auto& verbatim = local_verbatim[w];
    idx.resize(static_cast<std::size_t>(s.end - s.begin));
    std::uint64_t demoted = 0;
    for (std::uint64_t j = s.begin; j < s.end; ++j) {
      std::optional<std::uint32_t> id;
      if (field.valid[j]) {
        id = nearest_center(model.centers, field.ratios[j], model.tolerance);
        if (id && !within_relative_bound(
                      pair.current[j],
                      reconstruct_value(pair.base[j], model.centers[*id]), model.tolerance)) {
          id.reset();
          ++demoted;
        }
      }
      if (id) {
        idx[j - s.begin] = *id;
      } else {
        idx[j - s.begin] = sentinel;
        verbatim.push_back(pair.current[j]);
      }
    }
    local_demoted[w] = demoted;
  });
  for (std::uint64_t d : local_demoted) stats.demoted += d;
  tm.assign_index = seconds_since(t0);

  // Block alignment: shard starts come from an exclusive scan of shard sizes;
  // a block belongs to the worker holding its first element and the owner
  // pulls the block's tail from the neighbours to its right.
  t0 = Clock::now();
  const BlockLayout layout = BlockLayout::make(n, bits, config.block_bytes);
  std::vector<std::uint64_t> shard_start(workers + 1, 0);
  for (unsigned w = 0; w < workers; ++w) {
    shard_start[w + 1] = shard_start[w] + local_indices[w].size();
  }
  const auto owner_of_element = [&](std::uint64_t e) {
    const auto it = std::upper_bound(shard_start.begin(), shard_start.end(), e);
    return static_cast<unsigned>(it - shard_start.begin() - 1);
  };
  std::vector<std::uint64_t> first_owned(workers, 0);
  std::vector<std::uint64_t> end_owned(workers, 0);
  {
    std::uint64_t b = 0;
    for (unsigned w = 0; w < workers; ++w) {
      first_owned[w] = b;
      while (b < layout.nblocks && owner_of_element(layout.block_begin(b)) == w) ++b;
      end_owned[w] = b;
    }
  }
  std::vector<std::vector<std::uint32_t>> owned(workers);
  std::vector<std::uint64_t> exchanged(workers, 0);
  run_phase(workers, "index_alignment", [&](unsigned w) {
    if (first_owned[w] == end_owned[w]) return;
    const std::uint64_t lo = layout.block_begin(first_owned[w]);
    const std::uint64_t hi = layout.block_end(end_owned[w] - 1);
    auto& buf = owned[w];
    buf.resize(static_cast<std::size_t>(hi - lo));
    for (unsigned src = w; src < workers && shard_start[src] < hi; ++src) {
      const std::uint64_t from = std::max(lo, shard_start[src]);
      const std::uint64_t to = std::min(hi, shard_start[src + 1]);
      if (from >= to) continue;
      const auto& part = local_indices[src];
      std::copy(part.begin() + static_cast<std::ptrdiff_t>(from - shard_start[src]),
                part.begin() + static_cast<std::ptrdiff_t>(to - shard_start[src]),
                buf.begin() + static_cast<std::ptrdiff_t>(from - lo));
      if (src != w) exchanged[w] += to - from;
    }
  });
  for (std::uint64_t x : exchanged) stats.exchanged_elements += x;
  tm.index_alignment = seconds_since(t0);

  // Owners pack and deflate their blocks independently.
  t0 = Clock::now();
  std::vector<std::vector<std::uint8_t>> packed(layout.nblocks);
  std::vector<EncodedBlock> encoded(layout.nblocks);
  run_phase(workers, "bits_packing", [&](unsigned w) {
    if (first_owned[w] == end_owned[w]) return;
    const std::uint64_t lo = layout.block_begin(first_owned[w]);
    for (std::uint64_t b = first_owned[w]; b < end_owned[w]; ++b) {
      const auto first = static_cast<std::size_t>(layout.block_begin(b) - lo);
      const auto len = static_cast<std::size_t>(layout.block_end(b) - layout.block_begin(b));
      const auto block = std::span<const std::uint32_t>(owned[w]).subspan(first, len);
      for (std::uint32_t v : block) encoded[b].n_incompressible += v == sentinel;
      packed[b] = pack_block(block, bits);
    }
  });
  tm.bits_packing = seconds_since(t0);

  t0 = Clock::now();
  run_phase(workers, "zlib", [&](unsigned w) {
    for (std::uint64_t b = first_owned[w]; b < end_owned[w]; ++b) {
      encoded[b].bytes = compress_block(packed[b], config.deflate_level);
      std::vector<std::uint8_t>().swap(packed[b]);
    }
  });

  EncodedIndexTable table = assemble_blocks(encoded);
  CompressedVariable& var = result.variable;
  VariableHeader& h = var.header;
  h.name = config.name;
  h.dtype = dtype_of<T>();
  h.n = n;
  h.bits = static_cast<std::uint8_t>(bits);
  h.tolerance = tol.value();
  h.elements_per_block = static_cast<std::uint32_t>(layout.elements_per_block);
  h.n_incompressible = table.n_incompressible;
  h.index_table_len = table.index_table.size();
  h.centers = model.centers;
  h.index_offsets = std::move(table.offsets.index_offsets);
  h.incompressible_prefix = std::move(table.offsets.incompressible_prefix);
  var.index_table = std::move(table.index_table);
  var.incompressible_table.resize(static_cast<std::size_t>(h.n_incompressible * sizeof(T)));
  std::size_t pos = 0;
  for (const auto& part : local_verbatim) {
    if (part.empty()) continue;
    std::memcpy(var.incompressible_table.data() + pos, part.data(), part.size() * sizeof(T));
    pos += part.size() * sizeof(T);
  }
  if (pos != var.incompressible_table.size()) {
    throw Error(ErrorCode::internal, "incompressible gather does not match block counts");
  }
  tm.zlib = seconds_since(t0);

  stats.bits = bits;
  stats.k = h.k();
  stats.n_incompressible = h.n_incompressible;
  tm.total = seconds_since(t_start);
  return result;
}

template <class T>
Decompressed<T> decompress(const CompressedVariable& variable,
                           std::span<const T> base_reconstructed,
                           std::optional<ElementRange> range) {
  const std::uint64_t n = variable.header.n;
  const ElementRange r = range.value_or(ElementRange{0, n});
  std::span<const T> base = base_reconstructed;
  if (base.size() == n && r.count != n) {
    if (r.start > n || r.count > n - r.start) {
      throw Error(ErrorCode::out_of_range, "decompress: range exceeds variable");
    }
    base = base.subspan(static_cast<std::size_t>(r.start), static_cast<std::size_t>(r.count));
  }
  DecodedRange<T> d = partial_decode<T>(variable, r.start, r.count, base);
  return {std::move(d.values), d.blocks_touched};
}

template <class T>
CompressedSeries<T> compress_series(std::span<const std::vector<T>> snapshots,
                                    const PipelineConfig& config) {
  if (snapshots.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "a series needs at least two snapshots");
  }
  for (const auto& s : snapshots) {
    if (s.size() != snapshots[0].size()) {
      throw Error(ErrorCode::invalid_argument, "snapshot lengths differ");
    }
  }
  CompressedSeries<T> series;
  series.first = snapshots[0];
  std::vector<T> previous = snapshots[0];
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    PipelineConfig step = config;
    step.name = config.name + "_" + std::to_string(i);
    CompressResult r = compress_pair<T>(TemporalPair<T>(previous, snapshots[i]), step);
    previous = decompress<T>(r.variable, previous).values;
    series.steps.push_back(std::move(r.variable));
    series.stats.push_back(std::move(r.stats));
  }
  return series;
}

template <class T>
std::vector<std::vector<T>> decompress_series(const CompressedSeries<T>& series) {
  std::vector<std::vector<T>> out;
  out.push_back(series.first);
  for (const CompressedVariable& v : series.steps) {
    out.push_back(decompress<T>(v, out.back()).values);
  }
  return out;
}

#define NUMARCK_INSTANTIATE(T)                                                              \
  template CompressResult compress_pair<T>(const TemporalPair<T>&, const PipelineConfig&);  \
  template Decompressed<T> decompress<T>(const CompressedVariable&, std::span<const T>,     \
                                         std::optional<ElementRange>);                      \
  template CompressedSeries<T> compress_series<T>(std::span<const std::vector<T>>,          \
                                                  const PipelineConfig&);                   \
  template std::vector<std::vector<T>> decompress_series<T>(const CompressedSeries<T>&);

NUMARCK_INSTANTIATE(float)
NUMARCK_INSTANTIATE(double)

#undef NUMARCK_INSTANTIATE

}  // namespace numarck
