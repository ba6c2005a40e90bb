#include "numarck/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace numarck {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::top_k: return "topk";
    case Strategy::equal_width: return "equal";
    case Strategy::log_scale: return "log";
    case Strategy::kmeans: return "kmeans";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  if (name == "topk") return Strategy::top_k;
  if (name == "equal") return Strategy::equal_width;
  if (name == "log") return Strategy::log_scale;
  if (name == "kmeans") return Strategy::kmeans;
  return std::nullopt;
}

namespace {

void check_bits(unsigned bits) {
  if (bits < kMinIndexBits || bits > kMaxIndexBits) {
    throw Error(ErrorCode::invalid_argument, "index length must be in [2, 30]");
  }
}

std::uint64_t usable_ids(unsigned bits) noexcept {
  return (std::uint64_t{1} << bits) - 1u;
}

// Rounding can merge neighbouring centers when the ratio magnitude dwarfs the
// bin width.
void drop_duplicates(std::vector<double>& centers) {
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
}

}  // namespace

// ---------------------------------------------------------------- histogram

std::int64_t Histogram::ordinal_of(double ratio) const noexcept {
  const double m = std::floor((ratio - origin) / width);
  if (!(m > 0.0)) return 0;
  if (m >= static_cast<double>(last_ordinal)) return last_ordinal;
  return static_cast<std::int64_t>(m);
}

std::uint64_t Histogram::count(std::int64_t ordinal) const noexcept {
  auto it = std::lower_bound(bins.begin(), bins.end(), ordinal,
                             [](const Bin& b, std::int64_t m) { return b.ordinal < m; });
  return (it != bins.end() && it->ordinal == ordinal) ? it->count : 0;
}

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t t = 0;
  for (const Bin& b : bins) t += b.count;
  return t;
}

std::vector<std::uint64_t> Histogram::dense() const {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(last_ordinal) + 1, 0);
  for (const Bin& b : bins) out[static_cast<std::size_t>(b.ordinal)] = b.count;
  return out;
}

HistogramBuilder::HistogramBuilder(double min_ratio, double max_ratio, Tolerance e) {
  if (!std::isfinite(min_ratio) || !std::isfinite(max_ratio) || max_ratio < min_ratio) {
    throw Error(ErrorCode::invalid_argument, "histogram: bad ratio range");
  }
  shape_.origin = min_ratio;
  shape_.width = e.bin_width();
  shape_.last_ordinal = 0;
  const double span = std::floor((max_ratio - min_ratio) / shape_.width);
  if (span >= 9.0e18) {
    throw Error(ErrorCode::invalid_argument, "histogram: ratio range too wide for tolerance");
  }
  shape_.last_ordinal = static_cast<std::int64_t>(span);
  if (shape_.last_ordinal < kDenseLimit) {
    dense_.assign(static_cast<std::size_t>(shape_.last_ordinal) + 1, 0);
  }
}

void HistogramBuilder::add(std::span<const double> ratios,
                           std::span<const std::uint8_t> valid) {
  const std::size_t n = ratios.size();
  if (!dense_.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      if (valid[j]) ++dense_[static_cast<std::size_t>(shape_.ordinal_of(ratios[j]))];
    }
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (valid[j]) sparse_.push_back(shape_.ordinal_of(ratios[j]));
  }
}

void HistogramBuilder::merge(const HistogramBuilder& other) {
  if (other.shape_.origin != shape_.origin || other.shape_.width != shape_.width ||
      other.shape_.last_ordinal != shape_.last_ordinal) {
    throw Error(ErrorCode::internal, "histogram: merging incompatible shards");
  }
  if (!dense_.empty()) {
    for (std::size_t m = 0; m < dense_.size(); ++m) dense_[m] += other.dense_[m];
  } else {
    sparse_.insert(sparse_.end(), other.sparse_.begin(), other.sparse_.end());
  }
}

Histogram HistogramBuilder::finish() const {
  Histogram h = shape_;
  if (!dense_.empty()) {
    for (std::size_t m = 0; m < dense_.size(); ++m) {
      if (dense_[m] != 0) h.bins.push_back({static_cast<std::int64_t>(m), dense_[m]});
    }
    return h;
  }
  std::unordered_map<std::int64_t, std::uint64_t> counts;
  for (std::int64_t m : sparse_) ++counts[m];
  h.bins.reserve(counts.size());
  for (const auto& [m, c] : counts) h.bins.push_back({m, c});
  std::sort(h.bins.begin(), h.bins.end(),
            [](const Histogram::Bin& a, const Histogram::Bin& b) { return a.ordinal < b.ordinal; });
  return h;
}

Histogram build_histogram(const ChangeRatioField& field, Tolerance e) {
  if (field.valid_count == 0) {
    throw Error(ErrorCode::degenerate_input, "histogram: no valid change ratios");
  }
  HistogramBuilder builder(field.min_ratio, field.max_ratio, e);
  builder.add(field.ratios, field.valid);
  return builder.finish();
}

// --------------------------------------------------------------------- top-k

namespace {

// Bins ordered by popularity, ties to the lower ordinal.
std::vector<Histogram::Bin> most_populous(const Histogram& hist, std::uint64_t k) {
  std::vector<Histogram::Bin> bins = hist.bins;
  const auto more_popular = [](const Histogram::Bin& a, const Histogram::Bin& b) {
    return a.count != b.count ? a.count > b.count : a.ordinal < b.ordinal;
  };
  const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(k, bins.size()));
  std::partial_sort(bins.begin(), bins.begin() + static_cast<std::ptrdiff_t>(take), bins.end(),
                    more_popular);
  bins.resize(take);
  return bins;
}

}  // namespace

std::vector<std::int64_t> top_k_ordinals(const Histogram& hist, std::uint64_t k) {
  std::vector<std::int64_t> out;
  for (const Histogram::Bin& b : most_populous(hist, k)) out.push_back(b.ordinal);
  std::sort(out.begin(), out.end());
  return out;
}

BinModel top_k_bins(const Histogram& hist, unsigned bits) {
  check_bits(bits);
  if (hist.bins.empty()) {
    throw Error(ErrorCode::degenerate_input, "top-k: empty histogram");
  }
  BinModel model;
  model.bits = bits;
  model.tolerance = hist.width / 2.0;
  model.strategy = Strategy::top_k;
  for (std::int64_t m : top_k_ordinals(hist, usable_ids(bits))) {
    const double c = hist.center_of(m);
    if (!model.centers.empty() && c <= model.centers.back()) continue;
    model.centers.push_back(c);
    model.ordinals.push_back(m);
  }
  return model;
}

std::uint64_t top_k_coverage(const Histogram& hist, std::uint64_t k) {
  std::uint64_t covered = 0;
  for (const Histogram::Bin& b : most_populous(hist, k)) covered += b.count;
  return covered;
}

void MemberSpans::add(const Histogram& hist, const BinModel& model,
                      std::span<const double> ratios, std::span<const std::uint8_t> valid) {
  const std::size_t k = model.ordinals.size();
  if (lo.size() != k) {
    lo.assign(k, std::numeric_limits<double>::infinity());
    hi.assign(k, -std::numeric_limits<double>::infinity());
  }
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    if (!valid[j]) continue;
    const std::int64_t m = hist.ordinal_of(ratios[j]);
    const auto it = std::lower_bound(model.ordinals.begin(), model.ordinals.end(), m);
    if (it == model.ordinals.end() || *it != m) continue;
    const auto b = static_cast<std::size_t>(it - model.ordinals.begin());
    lo[b] = std::min(lo[b], ratios[j]);
    hi[b] = std::max(hi[b], ratios[j]);
  }
}

void MemberSpans::merge(const MemberSpans& other) {
  if (other.lo.empty()) return;
  if (lo.empty()) {
    *this = other;
    return;
  }
  if (lo.size() != other.lo.size()) {
    throw Error(ErrorCode::internal, "member spans: merging different models");
  }
  for (std::size_t b = 0; b < lo.size(); ++b) {
    lo[b] = std::min(lo[b], other.lo[b]);
    hi[b] = std::max(hi[b], other.hi[b]);
  }
}

void recenter_on_members(BinModel& model, const MemberSpans& spans) {
  if (spans.lo.size() != model.centers.size()) {
    throw Error(ErrorCode::internal, "member spans do not match the model");
  }
  for (std::size_t b = 0; b < model.centers.size(); ++b) {
    if (spans.lo[b] <= spans.hi[b]) model.centers[b] = spans.lo[b] + (spans.hi[b] - spans.lo[b]) / 2;
  }
}

BinModel equal_width_bins(double min_ratio, double max_ratio, unsigned bits) {
  check_bits(bits);
  BinModel model;
  model.bits = bits;
  model.strategy = Strategy::equal_width;
  model.centers = equal_width_centers(min_ratio, max_ratio, usable_ids(bits));
  return model;
}

std::uint64_t estimated_file_bits(std::uint64_t n, unsigned bits, unsigned elem_bytes,
                                  std::uint64_t n_incompressible) noexcept {
  const std::uint64_t center_table = (std::uint64_t{1} << bits) * elem_bytes * 8u;
  const std::uint64_t index_table = n * bits;
  const std::uint64_t verbatim = n_incompressible * elem_bytes * 8u;
  return center_table + index_table + verbatim;
}

IndexLengthChoice select_index_length(const Histogram& hist, std::uint64_t n,
                                      unsigned elem_bytes, unsigned min_bits,
                                      unsigned max_bits) {
  check_bits(min_bits);
  check_bits(max_bits);
  if (min_bits > max_bits) {
    throw Error(ErrorCode::invalid_argument, "index length range is empty");
  }
  if (elem_bytes != 4 && elem_bytes != 8) {
    throw Error(ErrorCode::invalid_argument, "element size must be 4 or 8 bytes");
  }
  if (hist.bins.empty()) {
    throw Error(ErrorCode::degenerate_input, "index length: empty histogram");
  }
  if (n < hist.total()) {
    throw Error(ErrorCode::invalid_argument, "index length: n below histogram total");
  }

  std::vector<std::uint64_t> counts;
  counts.reserve(hist.bins.size());
  for (const Histogram::Bin& b : hist.bins) counts.push_back(b.count);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::vector<std::uint64_t> covered(counts.size() + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), covered.begin() + 1);

  IndexLengthChoice choice{min_bits, {}};
  for (unsigned b = min_bits; b <= max_bits; ++b) {
    const std::uint64_t k = std::min<std::uint64_t>(usable_ids(b), counts.size());
    const std::uint64_t n_inc = n - covered[static_cast<std::size_t>(k)];
    choice.estimates.push_back({b, n_inc, estimated_file_bits(n, b, elem_bytes, n_inc)});
  }
  const auto best = std::min_element(
      choice.estimates.begin(), choice.estimates.end(),
      [](const SizeEstimate& a, const SizeEstimate& b) { return a.file_bits < b.file_bits; });
  choice.bits = best->bits;
  return choice;
}

// --------------------------------------------------------------- equal width

std::vector<double> equal_width_centers(double lo, double hi, std::size_t k) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw Error(ErrorCode::invalid_argument, "equal-width: bad range");
  }
  if (k == 0) throw Error(ErrorCode::invalid_argument, "equal-width: zero bins");
  if (hi == lo) return {lo};
  const double step = (hi - lo) / static_cast<double>(k);
  std::vector<double> centers(k);
  for (std::size_t i = 0; i < k; ++i) {
    centers[i] = lo + (static_cast<double>(i) + 0.5) * step;
  }
  drop_duplicates(centers);
  return centers;
}

// ----------------------------------------------------------------- log scale

namespace {

struct SignPopulation {
  std::uint64_t count = 0;
  double min_mag = 0.0;
  double max_mag = 0.0;

  void add(double mag) {
    if (count == 0) {
      min_mag = max_mag = mag;
    } else {
      min_mag = std::min(min_mag, mag);
      max_mag = std::max(max_mag, mag);
    }
    ++count;
  }
};

void log_centers(const SignPopulation& pop, std::uint64_t k, double sign,
                 std::vector<double>& out) {
  if (pop.count == 0 || k == 0) return;
  if (pop.min_mag == pop.max_mag) {
    out.push_back(sign * pop.min_mag);
    return;
  }
  const double lo = std::log10(pop.min_mag);
  const double hi = std::log10(pop.max_mag);
  const double step = (hi - lo) / static_cast<double>(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    out.push_back(sign * std::pow(10.0, lo + (static_cast<double>(i) + 0.5) * step));
  }
}

}  // namespace

BinModel log_scale_bins(const ChangeRatioField& field, unsigned bits, Tolerance e) {
  check_bits(bits);
  if (field.valid_count == 0) {
    throw Error(ErrorCode::degenerate_input, "log-scale: no valid change ratios");
  }
  const double eps = e.value();
  bool has_zero = false;
  SignPopulation pos;
  SignPopulation neg;
  for (std::size_t j = 0; j < field.size(); ++j) {
    if (!field.valid[j]) continue;
    const double r = field.ratios[j];
    if (std::fabs(r) <= eps) {
      has_zero = true;
    } else if (r > 0) {
      pos.add(r);
    } else {
      neg.add(-r);
    }
  }

  // Slots for the two signs, split by population. Exact ties leave a slot
  // unused so that negating the input negates the model.
  const std::uint64_t budget = usable_ids(bits) - (has_zero ? 1 : 0);
  std::uint64_t k_pos = 0;
  std::uint64_t k_neg = 0;
  const std::uint64_t signed_total = pos.count + neg.count;
  if (signed_total > 0) {
    const long double share_pos =
        static_cast<long double>(budget) * pos.count / signed_total;
    const long double share_neg =
        static_cast<long double>(budget) * neg.count / signed_total;
    k_pos = static_cast<std::uint64_t>(share_pos);
    k_neg = static_cast<std::uint64_t>(share_neg);
    const long double frac_pos = share_pos - k_pos;
    const long double frac_neg = share_neg - k_neg;
    const std::uint64_t left = budget - k_pos - k_neg;
    if (left >= 2 && frac_pos == frac_neg) {
      ++k_pos;
      ++k_neg;
    } else if (left >= 1 && frac_pos > frac_neg) {
      ++k_pos;
    } else if (left >= 1 && frac_neg > frac_pos) {
      ++k_neg;
    }
    if (pos.count > 0 && k_pos == 0) {
      k_pos = 1;
      if (k_pos + k_neg > budget) --k_neg;
    }
    if (neg.count > 0 && k_neg == 0) {
      k_neg = 1;
      if (k_pos + k_neg > budget) --k_pos;
    }
  }

  BinModel model;
  model.bits = bits;
  model.tolerance = eps;
  model.strategy = Strategy::log_scale;
  log_centers(neg, k_neg, -1.0, model.centers);
  if (has_zero) model.centers.push_back(0.0);
  log_centers(pos, k_pos, 1.0, model.centers);
  std::sort(model.centers.begin(), model.centers.end());
  drop_duplicates(model.centers);
  return model;
}

// -------------------------------------------------------------------- kmeans

KMeansResult lloyd_1d(std::span<const double> sorted, std::vector<double> centers,
                      unsigned max_iter) {
  if (sorted.empty()) throw Error(ErrorCode::degenerate_input, "k-means: no points");
  if (centers.empty()) throw Error(ErrorCode::invalid_argument, "k-means: no centers");
  std::sort(centers.begin(), centers.end());
  drop_duplicates(centers);

  const std::size_t n = sorted.size();
  KMeansResult result;
  std::vector<std::size_t> bounds;  // cluster i covers [bounds[i], bounds[i+1])
  std::vector<std::size_t> previous;

  for (;;) {
    // Assignment: with sorted points and centers every cluster is a
    // contiguous run; a point moves to the next center only when strictly
    // closer to it.
    bounds.assign(1, 0);
    for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
      const double a = centers[i];
      const double b = centers[i + 1];
      auto first = sorted.begin() + static_cast<std::ptrdiff_t>(bounds.back());
      auto it = std::partition_point(first, sorted.end(),
                                     [a, b](double x) { return !(x - a > b - x); });
      bounds.push_back(static_cast<std::size_t>(it - sorted.begin()));
    }
    bounds.push_back(n);

    double sse = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      for (std::size_t p = bounds[i]; p < bounds[i + 1]; ++p) {
        const double d = sorted[p] - centers[i];
        sse += d * d;
      }
    }
    result.sse_history.push_back(sse);

    if (bounds == previous || result.iterations >= max_iter) break;
    previous = bounds;
    ++result.iterations;

    std::vector<double> next;
    next.reserve(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const std::size_t lo = bounds[i];
      const std::size_t hi = bounds[i + 1];
      if (lo == hi) continue;
      double sum = 0.0;
      for (std::size_t p = lo; p < hi; ++p) sum += sorted[p];
      next.push_back(sum / static_cast<double>(hi - lo));
    }
    drop_duplicates(next);
    centers = std::move(next);
  }

  // Report only centers that own at least one point.
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (bounds[i] != bounds[i + 1]) result.centers.push_back(centers[i]);
  }
  return result;
}

BinModel kmeans_bins(const ChangeRatioField& field, unsigned bits, unsigned max_iter) {
  check_bits(bits);
  if (field.valid_count == 0) {
    throw Error(ErrorCode::degenerate_input, "k-means: no valid change ratios");
  }
  std::vector<double> points;
  points.reserve(field.valid_count);
  for (std::size_t j = 0; j < field.size(); ++j) {
    if (field.valid[j]) points.push_back(field.ratios[j]);
  }
  std::sort(points.begin(), points.end());

  std::uint64_t distinct = 1;
  for (std::size_t p = 1; p < points.size(); ++p) distinct += points[p] != points[p - 1];
  const std::uint64_t k = std::min(usable_ids(bits), distinct);

  BinModel model;
  model.bits = bits;
  model.strategy = Strategy::kmeans;
  model.centers =
      lloyd_1d(points, equal_width_centers(points.front(), points.back(), k), max_iter).centers;
  return model;
}

// ------------------------------------------------------------- DP optimality

std::uint64_t dp_optimal_coverage(std::span<const double> sorted, double width,
                                  std::uint64_t k) {
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw Error(ErrorCode::invalid_argument, "dp coverage: input must be sorted ascending");
  }
  if (!(width >= 0.0) || k == 0) {
    throw Error(ErrorCode::invalid_argument, "dp coverage: need width >= 0 and k >= 1");
  }
  const std::size_t n = sorted.size();
  if (n == 0) return 0;
  const std::size_t kk = static_cast<std::size_t>(std::min<std::uint64_t>(k, n));

  // cover[i]: points in [x_i, x_i + width].
  std::vector<std::size_t> cover(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto end = std::upper_bound(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                                      sorted.end(), sorted[i] + width);
    cover[i] = static_cast<std::size_t>(end - sorted.begin()) - i;
  }

  // opt[i][j]: most points among i..n-1 coverable with j intervals.
  const std::size_t stride = kk + 1;
  std::vector<std::uint32_t> opt((n + 1) * stride, 0);
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t jump = i + cover[i];
    for (std::size_t j = 1; j <= kk; ++j) {
      const std::uint32_t skip = opt[(i + 1) * stride + j];
      const std::uint32_t take =
          opt[jump * stride + j - 1] + static_cast<std::uint32_t>(cover[i]);
      opt[i * stride + j] = std::max(skip, take);
    }
  }
  return opt[kk];
}

// ---------------------------------------------------------------- assignment

std::optional<std::uint32_t> nearest_center(std::span<const double> centers,
                                            double ratio, double e) noexcept {
  if (centers.empty()) return std::nullopt;
  const auto it = std::lower_bound(centers.begin(), centers.end(), ratio);
  std::size_t best = static_cast<std::size_t>(it - centers.begin());
  if (best == centers.size()) {
    best = centers.size() - 1;
  } else if (best > 0 &&
             ratio - centers[best - 1] <= centers[best] - ratio) {
    --best;
  }
  // Bin edges and centers carry rounding error; a point on an edge is exactly e away.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                       (std::fabs(ratio) + std::fabs(centers[best]));
  if (std::fabs(ratio - centers[best]) <= e + slack) return static_cast<std::uint32_t>(best);
  return std::nullopt;
}

IndexAssignment compressible_mask(const ChangeRatioField& field, const BinModel& model) {
  IndexAssignment out;
  out.indices.resize(field.size());
  const std::uint32_t sentinel = model.sentinel();
  for (std::size_t j = 0; j < field.size(); ++j) {
    std::optional<std::uint32_t> id;
    if (field.valid[j]) id = nearest_center(model.centers, field.ratios[j], model.tolerance);
    if (id) {
      out.indices[j] = *id;
    } else {
      out.indices[j] = sentinel;
      ++out.n_incompressible;
    }
  }
  return out;
}

}  // namespace numarck
