#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "numarck/binning.hpp"
#include "numarck/kernel.hpp"
#include "unit/test_util.hpp"

namespace numarck {
namespace {

using testing::exhaustive_coverage;
using testing::field_of;

Histogram histogram_from_counts(const std::vector<std::uint64_t>& counts, double width = 0.1) {
  Histogram h;
  h.origin = 0.0;
  h.width = width;
  h.last_ordinal = static_cast<std::int64_t>(counts.size()) - 1;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m]) h.bins.push_back({static_cast<std::int64_t>(m), counts[m]});
  }
  return h;
}

// ----------------------------------------------------------------- histogram

TEST(Histogram, FloorMapping) {
  const Histogram h = build_histogram(field_of({0.0, 0.1, 0.1}), Tolerance(0.05));
  EXPECT_EQ(h.dense(), (std::vector<std::uint64_t>{1, 2}));
  EXPECT_DOUBLE_EQ(h.width, 0.1);
  EXPECT_EQ(h.origin, 0.0);
}

TEST(Histogram, SingleRatio) {
  const Histogram h = build_histogram(field_of({0.37}), Tolerance(1e-3));
  ASSERT_EQ(h.bins.size(), 1u);
  EXPECT_EQ(h.bins[0].count, 1u);
  EXPECT_EQ(h.bins[0].ordinal, 0);
}

TEST(Histogram, UniformMatchesLinearRecount) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(20000);
  for (double& x : r) x = u(rng);
  const ChangeRatioField f = field_of(r);
  const Histogram h = build_histogram(f, Tolerance(0.05));
  const std::vector<std::uint64_t> dense = h.dense();
  EXPECT_EQ(dense.size(), 10u);
  EXPECT_EQ(h.total(), r.size());

  // Independent recount: scan each bin's half-open interval.
  for (std::size_t m = 0; m < dense.size(); ++m) {
    const double lo = f.min_ratio + static_cast<double>(m) * 0.1;
    const double hi = f.min_ratio + static_cast<double>(m + 1) * 0.1;
    std::uint64_t c = 0;
    for (double x : r) {
      const bool last = m + 1 == dense.size();
      if (x >= lo && (x < hi || (last && x <= f.max_ratio))) ++c;
    }
    EXPECT_EQ(dense[m], c) << "bin " << m;
  }
}

TEST(Histogram, IgnoresInvalidEntries) {
  ChangeRatioField f = field_of({0.0, 5.0, 0.01});
  f.valid[1] = 0;
  f.valid_count = 2;
  f.max_ratio = 0.01;
  const Histogram h = build_histogram(f, Tolerance(1e-3));
  EXPECT_EQ(h.total(), 2u);
}

TEST(Histogram, NoValidEntries) {
  ChangeRatioField f = field_of({1.0});
  f.valid[0] = 0;
  f.valid_count = 0;
  EXPECT_THROW(build_histogram(f, Tolerance(1e-3)), Error);
}

TEST(Histogram, ShardMergeEqualsWholeProperty) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r(1 + rng() % 5000);
    for (double& x : r) x = g(rng);
    // Wide ratio spans exercise the sparse path.
    if (trial % 3 == 0) r[0] = 900.0;
    const ChangeRatioField f = field_of(r);
    const Tolerance e(trial % 2 ? 1e-3 : 1e-5);
    const Histogram whole = build_histogram(f, e);
    EXPECT_EQ(whole.total(), r.size());
    for (unsigned shards : {2u, 3u, 7u}) {
      std::vector<HistogramBuilder> parts(shards, HistogramBuilder(f.min_ratio, f.max_ratio, e));
      for (unsigned s = 0; s < shards; ++s) {
        const std::size_t lo = r.size() * s / shards;
        const std::size_t hi = r.size() * (s + 1) / shards;
        parts[s].add(std::span(f.ratios).subspan(lo, hi - lo),
                     std::span(f.valid).subspan(lo, hi - lo));
      }
      // Merge in reverse to exercise commutativity.
      for (unsigned s = shards - 1; s > 0; --s) parts[0].merge(parts[s]);
      EXPECT_EQ(parts[0].finish().bins, whole.bins);
    }
  }
}

// --------------------------------------------------------------------- top-k

TEST(TopK, PicksMostPopulous) {
  const Histogram h = histogram_from_counts({5, 1, 7});
  EXPECT_EQ(top_k_ordinals(h, 2), (std::vector<std::int64_t>{0, 2}));
  EXPECT_EQ(top_k_coverage(h, 2), 12u);
}

TEST(TopK, TiesGoToLowerOrdinal) {
  const Histogram h = histogram_from_counts({3, 3});
  EXPECT_EQ(top_k_ordinals(h, 1), (std::vector<std::int64_t>{0}));
}

TEST(TopK, CentersAreBinMidpoints) {
  const Histogram h = histogram_from_counts({5, 1, 7, 0, 2});
  const BinModel m = top_k_bins(h, 2);
  ASSERT_EQ(m.k(), 3u);
  EXPECT_EQ(m.ordinals, (std::vector<std::int64_t>{0, 2, 4}));
  EXPECT_DOUBLE_EQ(m.centers[0], 0.05);
  EXPECT_DOUBLE_EQ(m.centers[1], 0.25);
  EXPECT_DOUBLE_EQ(m.centers[2], 0.45);
  EXPECT_EQ(m.sentinel(), 3u);
}

TEST(TopK, FewerNonemptyBinsThanIds) {
  const Histogram h = histogram_from_counts({4, 0, 1});
  const BinModel m = top_k_bins(h, 8);
  EXPECT_EQ(m.k(), 2u);
}

TEST(TopK, DensestClustersWin) {
  // Three dense clusters and scattered singletons, width 2E bins.
  std::vector<double> r;
  for (int i = 0; i < 40; ++i) r.push_back(0.0101 + 1e-5 * i);
  for (int i = 0; i < 30; ++i) r.push_back(-0.0203 + 1e-5 * i);
  for (int i = 0; i < 20; ++i) r.push_back(0.0507 + 1e-5 * i);
  for (int i = 0; i < 10; ++i) r.push_back(-0.5 + 0.07 * i);
  const ChangeRatioField f = field_of(r);
  const Tolerance e(1e-3);
  const BinModel m = top_k_bins(build_histogram(f, e), 2);
  ASSERT_EQ(m.k(), 3u);
  const IndexAssignment a = compressible_mask(f, m);
  EXPECT_EQ(a.n_incompressible, 10u);
}

TEST(TopK, ShiftEquivarianceProperty) {
  // Dyadic values keep every operation exact.
  std::mt19937_64 rng(9);
  const Tolerance e(std::ldexp(1.0, -10));
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> r(50 + rng() % 400);
    for (double& x : r) x = std::ldexp(static_cast<double>(rng() % 4096) - 2048.0, -12);
    const double shift = std::ldexp(static_cast<double>(rng() % 64) - 32.0, -4);
    std::vector<double> shifted = r;
    for (double& x : shifted) x += shift;
    const Histogram h0 = build_histogram(field_of(r), e);
    const Histogram h1 = build_histogram(field_of(shifted), e);
    EXPECT_EQ(h0.bins, h1.bins);
    const unsigned bits = 2 + trial % 4;
    const BinModel m0 = top_k_bins(h0, bits);
    const BinModel m1 = top_k_bins(h1, bits);
    EXPECT_EQ(m0.ordinals, m1.ordinals);
    ASSERT_EQ(m0.k(), m1.k());
    for (std::size_t i = 0; i < m0.k(); ++i) EXPECT_EQ(m1.centers[i], m0.centers[i] + shift);
    EXPECT_EQ(select_index_length(h0, r.size(), 4).bits,
              select_index_length(h1, r.size(), 4).bits);
  }
}

// --------------------------------------------------------- index-length model

TEST(IndexLength, SingleBinPrefersSmallestB) {
  const Histogram h = histogram_from_counts({1000});
  const IndexLengthChoice c = select_index_length(h, 1000, 4);
  EXPECT_EQ(c.bits, 2u);
  ASSERT_EQ(c.estimates.size(), 15u);
  EXPECT_EQ(c.estimates[0].file_bits, 266u * 8u);
  EXPECT_EQ(c.estimates[0].n_incompressible, 0u);
  for (std::size_t i = 1; i < c.estimates.size(); ++i) {
    EXPECT_GT(c.estimates[i].file_bits, c.estimates[i - 1].file_bits);
  }
}

TEST(IndexLength, SixBlockArithmetic) {
  // 8192*4 + 3758400*13/8 + 92236*4 = 32768 + 6107400 + 368944
  const std::uint64_t bits = estimated_file_bits(3758400, 13, 4, 92236);
  EXPECT_EQ(bits % 8, 0u);
  EXPECT_EQ(bits / 8, 6509112u);
}

TEST(IndexLength, AlphaNonIncreasingProperty) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::uint64_t> counts(1 + rng() % 3000);
    for (auto& c : counts) c = rng() % 4 == 0 ? 0 : rng() % 100;
    counts[0] += 1;
    const Histogram h = histogram_from_counts(counts);
    const std::uint64_t n = h.total() + rng() % 50;
    const IndexLengthChoice c = select_index_length(h, n, 4, 2, 16);
    for (std::size_t i = 1; i < c.estimates.size(); ++i) {
      EXPECT_LE(c.estimates[i].n_incompressible, c.estimates[i - 1].n_incompressible);
    }
  }
}

TEST(IndexLength, ArgminMatchesLinearScanOracle) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::uint64_t> counts(1 + rng() % 20000);
    std::geometric_distribution<int> g(0.01);
    for (auto& c : counts) c = static_cast<std::uint64_t>(g(rng));
    counts[0] += 1;
    const Histogram h = histogram_from_counts(counts);
    const std::uint64_t n = h.total();
    const unsigned L = (t % 2) ? 4 : 8;

    // Oracle: recompute the size model from raw counts in exact rational form.
    std::vector<std::uint64_t> sorted = counts;
    std::sort(sorted.rbegin(), sorted.rend());
    unsigned best_b = 0;
    std::uint64_t best_size8 = ~0ull;
    for (unsigned b = 2; b <= 16; ++b) {
      std::uint64_t covered = 0;
      for (std::size_t i = 0; i < sorted.size() && i < (1u << b) - 1; ++i) covered += sorted[i];
      const std::uint64_t size8 = 8 * (std::uint64_t{1} << b) * L + n * b + 8 * (n - covered) * L;
      if (size8 < best_size8) {
        best_size8 = size8;
        best_b = b;
      }
    }
    const IndexLengthChoice c = select_index_length(h, n, L);
    EXPECT_EQ(c.bits, best_b);
    EXPECT_EQ(c.estimates[c.bits - 2].file_bits, best_size8);
  }
}

TEST(IndexLength, RangeValidation) {
  const Histogram h = histogram_from_counts({3});
  EXPECT_THROW(select_index_length(h, 3, 4, 1, 16), Error);
  EXPECT_THROW(select_index_length(h, 3, 4, 8, 4), Error);
  EXPECT_THROW(select_index_length(h, 3, 2), Error);
  EXPECT_EQ(select_index_length(h, 3, 4, 5, 5).bits, 5u);
}

// --------------------------------------------------------------- equal width

TEST(EqualWidth, Examples) {
  EXPECT_EQ(equal_width_bins(0.0, 3.0, 2).centers, (std::vector<double>{0.5, 1.5, 2.5}));
  const BinModel m = equal_width_bins(-1.0, 1.0, 2);
  ASSERT_EQ(m.k(), 3u);
  EXPECT_NEAR(m.centers[0], -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.centers[1], 0.0, 1e-15);
  EXPECT_NEAR(m.centers[2], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(equal_width_bins(0.4, 0.4, 5).centers, (std::vector<double>{0.4}));
}

TEST(EqualWidth, ArithmeticProgressionProperty) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    const BinModel m = equal_width_bins(a, b, 2 + t % 8);
    const double step = (b - a) / static_cast<double>(m.k());
    for (std::size_t i = 1; i < m.k(); ++i) {
      EXPECT_NEAR(m.centers[i] - m.centers[i - 1], step, 1e-12);
    }
  }
}

TEST(EqualWidth, RejectsNonFinite) {
  EXPECT_THROW(equal_width_bins(0.0, std::nan(""), 2), Error);
  EXPECT_THROW(equal_width_bins(1.0, 0.0, 2), Error);
}

// ----------------------------------------------------------------- log scale

TEST(LogScale, SmallRatiosShareZeroCenter) {
  const BinModel m = log_scale_bins(field_of({1e-4, 5e-4, 9e-4, 1e-3}), 3, Tolerance(1e-3));
  EXPECT_EQ(m.centers, (std::vector<double>{0.0}));
}

TEST(LogScale, EqualLogSpacing) {
  const BinModel m = log_scale_bins(field_of({1e-3, 1e-2, 1e-1}), 2, Tolerance(1e-4));
  ASSERT_EQ(m.k(), 3u);
  // log10 range [-3, -1] split into three: midpoints -8/3, -2, -4/3.
  EXPECT_NEAR(std::log10(m.centers[0]), -8.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::log10(m.centers[1]), -2.0, 1e-12);
  EXPECT_NEAR(std::log10(m.centers[2]), -4.0 / 3.0, 1e-12);
}

TEST(LogScale, NegationSymmetryProperty) {
  std::mt19937_64 rng(41);
  std::lognormal_distribution<double> mag(-4.0, 1.5);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> r(1 + rng() % 300);
    for (double& x : r) x = (rng() % 3 == 0 ? -1.0 : 1.0) * mag(rng) * (rng() % 5 == 0 ? 0 : 1);
    std::vector<double> neg = r;
    for (double& x : neg) x = -x;
    const unsigned bits = 2 + t % 6;
    const BinModel a = log_scale_bins(field_of(r), bits, Tolerance(1e-3));
    const BinModel b = log_scale_bins(field_of(neg), bits, Tolerance(1e-3));
    ASSERT_EQ(a.k(), b.k());
    EXPECT_LE(a.k(), (1u << bits) - 1);
    for (std::size_t i = 0; i < a.k(); ++i) EXPECT_EQ(a.centers[i], -b.centers[a.k() - 1 - i]);
  }
}

TEST(LogScale, ConstantRatioBetweenPositiveCenters) {
  std::vector<double> r;
  for (int i = 0; i < 200; ++i) r.push_back(std::pow(10.0, -3.0 + 3.0 * i / 199.0));
  const BinModel m = log_scale_bins(field_of(r), 4, Tolerance(1e-4));
  ASSERT_EQ(m.k(), 15u);
  const double q = m.centers[1] / m.centers[0];
  for (std::size_t i = 2; i < m.k(); ++i) EXPECT_NEAR(m.centers[i] / m.centers[i - 1], q, 1e-9);
}

TEST(LogScale, BothSignsAndZeroAllocated) {
  std::vector<double> r;
  for (int i = 0; i < 300; ++i) r.push_back(0.01 * (1 + i % 10));
  for (int i = 0; i < 100; ++i) r.push_back(-0.02 * (1 + i % 10));
  for (int i = 0; i < 50; ++i) r.push_back(0.0);
  const BinModel m = log_scale_bins(field_of(r), 3, Tolerance(1e-3));
  // Seven ids: the zero center plus six shared 3:1 between the signs.
  const auto pos = std::count_if(m.centers.begin(), m.centers.end(), [](double c) { return c > 0; });
  const auto neg = std::count_if(m.centers.begin(), m.centers.end(), [](double c) { return c < 0; });
  EXPECT_EQ(std::count(m.centers.begin(), m.centers.end(), 0.0), 1);
  EXPECT_GE(neg, 1);
  EXPECT_GT(pos, neg);
  EXPECT_LE(m.k(), 7u);
}

// -------------------------------------------------------------------- kmeans

TEST(KMeans, SeparatedClusters) {
  const std::vector<double> pts{0, 0, 0, 10, 10};
  const KMeansResult r = lloyd_1d(pts, equal_width_centers(0, 10, 2), 50);
  EXPECT_EQ(r.centers, (std::vector<double>{0.0, 10.0}));
}

TEST(KMeans, SingleDistinctValue) {
  const BinModel m = kmeans_bins(field_of({0.25, 0.25, 0.25}), 6);
  EXPECT_EQ(m.centers, (std::vector<double>{0.25}));
}

TEST(KMeans, OneClusterIsMean) {
  const std::vector<double> pts{1.0, 2.0, 6.0};
  const KMeansResult r = lloyd_1d(pts, {0.0}, 50);
  ASSERT_EQ(r.centers.size(), 1u);
  EXPECT_DOUBLE_EQ(r.centers[0], 3.0);
}

TEST(KMeans, SseNonIncreasingProperty) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> pts(10 + rng() % 2000);
    for (double& x : pts) x = g(rng) * (1 + rng() % 3) + static_cast<double>(rng() % 5);
    std::sort(pts.begin(), pts.end());
    const std::size_t k = 1 + rng() % 31;
    const KMeansResult r = lloyd_1d(pts, equal_width_centers(pts.front(), pts.back(), k), 50);
    for (std::size_t i = 1; i < r.sse_history.size(); ++i) {
      EXPECT_LE(r.sse_history[i], r.sse_history[i - 1] * (1 + 1e-12));
    }
    EXPECT_TRUE(std::is_sorted(r.centers.begin(), r.centers.end()));
    EXPECT_LE(r.centers.size(), k);
  }
}

TEST(KMeans, StopsAtMaxIter) {
  std::vector<double> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(std::pow(1.01, i));
  const KMeansResult r = lloyd_1d(pts, equal_width_centers(pts.front(), pts.back(), 8), 2);
  EXPECT_LE(r.iterations, 2u);
}

TEST(KMeans, EmptyInput) {
  ChangeRatioField f;
  EXPECT_THROW(kmeans_bins(f, 3), Error);
}

// ------------------------------------------------------------ DP optimality

TEST(DpCoverage, Examples) {
  const std::vector<double> pts{0, 1, 2};
  EXPECT_EQ(dp_optimal_coverage(pts, 1.0, 1), 2u);
  EXPECT_EQ(exhaustive_coverage(pts, 1.0, 1), 2u);
  EXPECT_EQ(dp_optimal_coverage(pts, 1.0, 2), 3u);
  EXPECT_EQ(dp_optimal_coverage(pts, 0.1, 3), 3u);
  EXPECT_EQ(dp_optimal_coverage(pts, 0.1, 50), 3u);
}

TEST(DpCoverage, RejectsUnsorted) {
  const std::vector<double> pts{1, 0};
  EXPECT_THROW(dp_optimal_coverage(pts, 1.0, 1), Error);
}

TEST(DpCoverage, MatchesExhaustiveSearchProperty) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> pts(1 + rng() % 12);
    for (double& x : pts) x = static_cast<double>(rng() % 40) * 0.25;
    std::sort(pts.begin(), pts.end());
    const double w = 0.25 * static_cast<double>(rng() % 8);
    const std::size_t k = 1 + rng() % 3;
    EXPECT_EQ(dp_optimal_coverage(pts, w, k), exhaustive_coverage(pts, w, k));
  }
}

TEST(DpCoverage, DominatesTopKProperty) {
  std::mt19937_64 rng(67);
  std::normal_distribution<double> g(0.0, 0.01);
  const Tolerance e(1e-3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> r(1 + rng() % 200);
    for (double& x : r) x = g(rng);
    const std::uint64_t k = 1 + rng() % 8;
    const Histogram h = build_histogram(field_of(r), e);
    std::sort(r.begin(), r.end());
    EXPECT_LE(top_k_coverage(h, k), dp_optimal_coverage(r, e.bin_width(), k));
  }
}

// ---------------------------------------------------------------- assignment

TEST(CompressibleMask, Examples) {
  BinModel m;
  m.bits = 2;
  m.tolerance = 0.001;
  m.centers = {0.1};
  ChangeRatioField f = field_of({0.10, 0.2, 0.1});
  f.valid[2] = 0;
  const IndexAssignment a = compressible_mask(f, m);
  EXPECT_EQ(a.indices, (std::vector<std::uint32_t>{0, 3, 3}));
  EXPECT_EQ(a.n_incompressible, 2u);
}

TEST(TopK, ConstantRatioOnBinEdgeIsCovered) {
  const ChangeRatioField f = field_of(std::vector<double>(100, 0.25));
  const BinModel m = top_k_bins(build_histogram(f, Tolerance(1e-3)), 2);
  ASSERT_EQ(m.k(), 1u);
  EXPECT_EQ(compressible_mask(f, m).n_incompressible, 0u);
}

TEST(NearestCenter, TieGoesToLowerIndex) {
  const std::vector<double> c{0.0, 1.0};
  EXPECT_EQ(nearest_center(c, 0.5, 0.5), 0u);
  EXPECT_EQ(nearest_center(c, 0.75, 0.5), 1u);
  EXPECT_EQ(nearest_center(c, 2.0, 0.5), std::nullopt);
  EXPECT_EQ(nearest_center(c, -0.5, 0.5), 0u);
}

TEST(NearestCenter, MatchesLinearScanProperty) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> c(1 + rng() % 20);
    for (double& x : c) x = u(rng);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    const double r = u(rng);
    const double e = 0.05;
    std::optional<std::uint32_t> best;
    double best_d = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d = std::fabs(r - c[i]);
      if (!best || d < best_d) {
        best = static_cast<std::uint32_t>(i);
        best_d = d;
      }
    }
    if (best_d > e) best.reset();
    EXPECT_EQ(nearest_center(c, r, e), best);
  }
}

TEST(Strategy, NamesRoundTrip) {
  for (Strategy s : {Strategy::top_k, Strategy::equal_width, Strategy::log_scale, Strategy::kmeans}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_EQ(parse_strategy("dp"), std::nullopt);
}

}  // namespace
}  // namespace numarck
