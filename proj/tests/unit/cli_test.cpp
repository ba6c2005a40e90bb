#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "numarck/generators.hpp"

namespace numarck::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;

  std::map<std::string, std::string> fields() const {
    std::map<std::string, std::string> m;
    std::istringstream lines(out);
    for (std::string line; std::getline(lines, line);) {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.find(' ') == std::string::npos) {
        m[line.substr(0, eq)] = line.substr(eq + 1);
      }
    }
    return m;
  }
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "numarck");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    unsetenv("NUMARCK_WORKERS");
    dir_ = fs::temp_directory_path() /
           ("numarck_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
    const auto p = synth::multimodal_pair<float>(50000, 3);
    base_ = p.base;
    cur_ = p.current;
    write_raw<float>(path("prev.raw"), base_);
    write_raw<float>(path("curr.raw"), cur_);
  }
  void TearDown() override {
    unsetenv("NUMARCK_WORKERS");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  Result compress(std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"compress", path("prev.raw"), path("curr.raw"), "-o",
                                  path("out.nmk"), "--block-bytes", "4096", "--workers", "2"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }

  fs::path dir_;
  std::vector<float> base_;
  std::vector<float> cur_;
};

TEST_F(CliTest, CompressWritesFileAndReport) {
  const Result r = compress();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("out.nmk")));
  const auto f = r.fields();
  EXPECT_EQ(f.at("n"), "50000");
  EXPECT_EQ(f.at("workers"), "2");
  EXPECT_EQ(std::stoull(f.at("file_bytes")), fs::file_size(path("out.nmk")));
  for (const char* key : {"bits", "alpha", "cr", "k"}) EXPECT_TRUE(f.count(key)) << key;
  EXPECT_NE(r.out.find("phase=zlib seconds="), std::string::npos);
  EXPECT_NE(r.out.find("phase=io seconds="), std::string::npos);
}

TEST_F(CliTest, CompressIsIdempotent) {
  ASSERT_EQ(compress().code, 0);
  fs::rename(path("out.nmk"), path("first.nmk"));
  setenv("NUMARCK_WORKERS", "3", 1);
  ASSERT_EQ(compress().code, 0);
  std::ifstream a(path("first.nmk"), std::ios::binary);
  std::ifstream b(path("out.nmk"), std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
            std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_F(CliTest, WorkersEnvironmentOverride) {
  setenv("NUMARCK_WORKERS", "5", 1);
  EXPECT_EQ(compress().fields().at("workers"), "5");
  setenv("NUMARCK_WORKERS", "zero", 1);
  EXPECT_EQ(compress().code, exit_validation);
}

TEST_F(CliTest, FullDecompressVerifies) {
  ASSERT_EQ(compress().code, 0);
  const Result d = run_cli({"decompress", path("out.nmk"), "--prev", path("prev.raw"), "-o",
                            path("full.raw")});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(d.fields().at("blocks_touched"), d.fields().at("nblocks"));
  const Result v = run_cli({"verify", path("curr.raw"), path("full.raw"), path("out.nmk")});
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_EQ(v.fields().at("status"), "pass");
  EXPECT_LE(std::stod(v.fields().at("max_rel_err")), 1e-3);
}

TEST_F(CliTest, RangeIsSliceOfFull) {
  ASSERT_EQ(compress().code, 0);
  ASSERT_EQ(run_cli({"decompress", path("out.nmk"), "--prev", path("prev.raw"), "-o",
                     path("full.raw")}).code, 0);
  const Result d = run_cli({"decompress", path("out.nmk"), "--prev", path("prev.raw"), "-o",
                            path("part.raw"), "--range", "12345:6789"});
  ASSERT_EQ(d.code, 0) << d.err;
  const auto full = read_raw<float>(path("full.raw"));
  const auto part = read_raw<float>(path("part.raw"));
  ASSERT_EQ(part.size(), 6789u);
  EXPECT_EQ(std::memcmp(part.data(), full.data() + 12345, part.size() * 4), 0);
  EXPECT_LT(std::stoull(d.fields().at("blocks_touched")), std::stoull(d.fields().at("nblocks")));
}

TEST_F(CliTest, VerifyIdentityAndPerturbation) {
  ASSERT_EQ(compress().code, 0);
  const Result same = run_cli({"verify", path("curr.raw"), path("curr.raw"), path("out.nmk")});
  EXPECT_EQ(same.code, 0);
  EXPECT_EQ(std::stod(same.fields().at("me")), 0.0);

  std::vector<float> bad = cur_;
  std::size_t j = 0;
  while (bad[j] == 0.0f) ++j;
  bad[j] = static_cast<float>(static_cast<double>(bad[j]) * (1.0 + 2e-3));
  write_raw<float>(path("bad.raw"), bad);
  const Result v = run_cli({"verify", path("curr.raw"), path("bad.raw"), path("out.nmk")});
  EXPECT_EQ(v.code, exit_bound_violated);
  EXPECT_EQ(v.fields().at("status"), "fail");
}

TEST_F(CliTest, ExitCodes) {
  write_raw<float>(path("short.raw"), std::span(base_).subspan(0, 10));
  EXPECT_EQ(run_cli({"compress", path("prev.raw"), path("short.raw"), "-o", path("x.nmk")}).code,
            exit_validation);
  EXPECT_EQ(run_cli({"compress", path("missing.raw"), path("curr.raw"), "-o", path("x.nmk")}).code,
            exit_io);
  EXPECT_EQ(compress({"--strategy", "median"}).code, exit_validation);
  EXPECT_EQ(compress({"--bits", "x"}).code, exit_validation);
  EXPECT_EQ(run_cli({"frobnicate"}).code, exit_validation);
  ASSERT_EQ(compress().code, 0);
  EXPECT_EQ(run_cli({"decompress", path("out.nmk"), "--prev", path("prev.raw"), "-o",
                     path("p.raw"), "--range", "49990:11"}).code,
            exit_validation);
  std::ofstream(path("junk.nmk")) << "not a container";
  EXPECT_EQ(run_cli({"describe", path("junk.nmk")}).code, exit_validation);
  EXPECT_EQ(run_cli({"describe", path("nope.nmk")}).code, exit_io);
}

TEST_F(CliTest, OddSizedRawFileRejected) {
  std::ofstream(path("odd.raw"), std::ios::binary) << "abcde";
  EXPECT_EQ(run_cli({"compress", path("odd.raw"), path("odd.raw"), "-o", path("x.nmk")}).code,
            exit_validation);
  EXPECT_EQ(run_cli({"compress", path("odd.raw"), path("odd.raw"), "-o", path("x.nmk"),
                     "--count", "1"}).code,
            exit_ok);
}

TEST_F(CliTest, DescribeListsVariable) {
  ASSERT_EQ(compress({"--name", "UU"}).code, 0);
  const Result d = run_cli({"describe", path("out.nmk")});
  ASSERT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("UU_info:total_data_num = 50000"), std::string::npos);
}

TEST_F(CliTest, AnalyticCr) {
  const Result r = run_cli({"analytic-cr"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.fields().at("cr")), 32.0 / (12.0 / 2.2 + 0.02 * 32.0), 1e-9);
  const Result f64 = run_cli({"analytic-cr", "--bits-per-element", "64", "--alpha", "0"});
  EXPECT_NEAR(std::stod(f64.fields().at("cr")), 64.0 * 2.2 / 12.0, 1e-9);
  EXPECT_EQ(run_cli({"analytic-cr", "--alpha", "2"}).code, exit_validation);
}

TEST_F(CliTest, BenchReportsTables) {
  const Result r = run_cli({"bench", "--mib", "1", "--workers", "1,2", "--repeats", "1",
                            "--strategy-n", "5000", "--block-bytes", "65536"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("workers=2 phase=binning seconds="), std::string::npos);
  EXPECT_NE(r.out.find("deterministic=yes"), std::string::npos);
  EXPECT_NE(r.out.find("strategy=dp compressible="), std::string::npos);
}

TEST_F(CliTest, GenerateWritesSnapshots) {
  const Result r = run_cli({"generate", "series", path("s"), "--n", "1000", "--snapshots", "3",
                            "--dtype", "f64"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(fs::file_size(path("s_" + std::to_string(t) + ".raw")), 8000u);
  }
}

TEST(CliHelpers, RSquaredOfLineIsOne) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  EXPECT_DOUBLE_EQ(r_squared(x, y), 1.0);
  const std::vector<double> z{1, 0, 1, 0};
  EXPECT_NEAR(r_squared(x, z), 0.2, 1e-12);
}

TEST(CliHelpers, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a({}), 0xcbf29ce484222325ull);
  const std::uint8_t a[] = {'a'};
  EXPECT_EQ(fnv1a(a), 0xaf63dc4c8601ec8cull);
}

}  // namespace
}  // namespace numarck::cli
