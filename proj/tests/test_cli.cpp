#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "experiment.hpp"

using namespace gcsim;
using namespace gcsim::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("gcsim_test_" + std::to_string(std::hash<std::string>{}(
                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

 private:
  fs::path path_;
};

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kValid =
    "experiment = gc_vs_sigma\n"
    "seed = 1\n"
    "d = 8\n"
    "sigma_range = 0.1 10 30\n"
    "method = exhaustive\n"
    "m = 200\n";

}  // namespace

TEST(Config, ValidConfigHasNoDiagnostics) {
  TempDir tmp;
  EXPECT_TRUE(validate_config(tmp.write("ok.conf", kValid)).empty());
}

TEST(Config, EmptySigmaListIsOneDiagnostic) {
  TempDir tmp;
  const auto diags = validate_config(tmp.write("a.conf",
                                               "experiment = gc_vs_sigma\nseed = 1\nd = 8\nsigma =\nm = 10\n"));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].line, 4);
  EXPECT_NE(diags[0].message.find("sigma"), std::string::npos);
}

TEST(Config, KGreaterThanDIsOneDiagnostic) {
  TempDir tmp;
  const auto diags =
      validate_config(tmp.write("a.conf", "experiment = gc_vs_sigma\nseed = 1\nd = 6\nk = 7\nsigma = 1\nm = 10\n"));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].line, 4);
}

TEST(Config, CollectsEveryViolationWithLines) {
  TempDir tmp;
  const auto diags = validate_config(tmp.write("a.conf",
                                               "# comment\n"
                                               "experiment = nope\n"
                                               "d = 8\n"
                                               "sigma = abc\n"
                                               "bogus = 3\n"
                                               "m = 1\n"
                                               "just text\n"));
  // unknown experiment, missing seed, bad number, empty sigma, unknown key, m < 2, syntax
  EXPECT_EQ(diags.size(), 7u);
  std::vector<int> lines;
  for (const auto& d : diags) lines.push_back(d.line);
  EXPECT_TRUE(std::is_sorted(lines.begin(), lines.end()));
  EXPECT_EQ(lines.front(), 0);  // missing seed
}

TEST(Config, CapacityDiagnosticNamesSpace) {
  TempDir tmp;
  const auto diags = validate_config(
      tmp.write("a.conf", "experiment = gc_vs_d\nseed = 1\nd = 60\nk = 20\nsigma = 1\nmethod = exhaustive\n"));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("d=60, k=20"), std::string::npos);
}

TEST(Config, CrossFieldChecks) {
  TempDir tmp;
  const auto diags = validate_config(tmp.write(
      "a.conf", "experiment = gc_vs_sigma\nseed = 1\nd = 8\nsigma = 1\nmethod = importance\ncost = l1\ncrn = crn1\n"));
  // importance without k, L1 with CRN-1
  EXPECT_EQ(diags.size(), 2u);
}

TEST(Config, UnreadableFileThrows) {
  EXPECT_THROW(validate_config("/nonexistent/gcsim.conf"), std::system_error);
}

TEST(Config, LoadThrowsWithDiagnostics) {
  TempDir tmp;
  const auto path = tmp.write("a.conf", "experiment = gc_vs_sigma\nd = 8\nsigma = 1\n");
  try {
    load_config(path);
    FAIL();
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.diagnostics().size(), 1u);
    EXPECT_NE(format_diagnostic(e.path(), e.diagnostics()[0]).find(":0: missing required key 'seed'"),
              std::string::npos);
  }
}

TEST(Config, DefaultGridsAndMu0) {
  TempDir tmp;
  auto c = load_config(tmp.write("a.conf", kValid));
  EXPECT_EQ(c.beta_grid().size(), 100u);
  EXPECT_EQ(c.beta_grid()[99], 20.0);
  EXPECT_EQ(c.sigma.size(), 30u);
  EXPECT_DOUBLE_EQ(c.sigma.back(), 10.0);
  const auto p = make_params(c, sweep_points(c)[0]);
  EXPECT_EQ(p.mu0().to_string(), "10101010");
  EXPECT_FALSE(p.is_sparse());

  auto s = load_config(tmp.write("b.conf", "experiment = ic_vs_beta\nseed = 2\nd = 10\nk = 4\nsigma = 1\n"));
  EXPECT_EQ(s.beta_grid().size(), 20u);
  EXPECT_EQ(s.beta_grid()[19], 10.0);
  EXPECT_EQ(make_params(s, sweep_points(s)[0]).mu0().to_string(), "1111000000");

  auto cc = load_config(tmp.write("c.conf", "experiment = cost_comparison\nseed = 2\nd_range = 10 30 10\nk = 4\n"
                                            "sigma = 4\nmethod = importance\n"));
  EXPECT_EQ(cc.beta_grid()[99], 30.0);
  EXPECT_EQ(cc.d, (std::vector<std::size_t>{10, 20, 30}));
  EXPECT_EQ(cc.costs.size(), 2u);
}

TEST(Csv, HeaderAndFormatting) {
  EXPECT_EQ(kCsvHeader, "experiment,d,k,sigma,n,method,r,m,crn,beta,value,stderr");
  CsvRow row;
  row.experiment = "gc_vs_sigma";
  row.d = 8;
  row.sigma = 0.1;
  row.n = 100;
  row.method = "exhaustive";
  row.m = 200;
  row.crn = "crn3";
  row.beta = 20.0;
  row.value = 1.0 / 3.0;
  EXPECT_EQ(to_csv(row), "gc_vs_sigma,8,,0.10000000000000001,100,exhaustive,,200,crn3,20,0.33333333333333331,");
}

TEST(Run, RowCountsMatchSweepProduct) {
  TempDir tmp;
  const auto c = load_config(tmp.write("a.conf",
                                       "experiment = gc_vs_sigma\nseed = 4\nd = 6\nk = 2\nk = 3\nsigma = 0.5\n"
                                       "sigma = 2\nsigma = 4\nmethod = exhaustive\nmethod = importance\nr = 20\nm = 5\n"
                                       "beta_count = 7\n"));
  EXPECT_EQ(run_rows(c, 1).size(), 2u * 3u * 2u);

  const auto ic = load_config(tmp.write("b.conf", "experiment = ic_vs_beta\nseed = 4\nd = 6\nk = 2\nsigma = 1\n"
                                                  "sigma = 2\nm = 5\nbeta_count = 7\n"));
  EXPECT_EQ(run_rows(ic, 1).size(), 2u * 7u);

  const auto gm = load_config(tmp.write("c.conf", "experiment = gibbs_marginals\nseed = 4\nd = 6\nsigma = 1\nm = 4\n"
                                                  "beta_count = 5\n"));
  const auto rows = run_rows(gm, 1);
  EXPECT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[3].experiment, "gibbs_marginals/j3");
}

TEST(Run, WritesCsvAndManifestAndReproduces) {
  TempDir tmp;
  auto c = load_config(tmp.write("a.conf",
                                 "experiment = gc_vs_sigma\nseed = 77\nd = 6\nsigma = 0.5\nsigma = 3\nm = 10\n"
                                 "beta_count = 9\noutput = run\n"));
  const auto first = run_experiment(c, tmp.path() / "one");
  c.workers = 3;
  const auto second = run_experiment(c, tmp.path() / "two");
  const auto a = read_lines(first.csv_path), b = read_lines(second.csv_path);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], kCsvHeader);
  EXPECT_EQ(a, b);
  const auto man = read_lines(first.manifest_path);
  EXPECT_NE(std::find(man.begin(), man.end(), "master_seed: 77"), man.end());
  bool has_point_seed = false;
  for (const auto& l : man) has_point_seed |= l.find("seed=") != std::string::npos;
  EXPECT_TRUE(has_point_seed);
  const auto fields = split_csv(a[1]);
  ASSERT_EQ(fields.size(), 12u);
  EXPECT_EQ(fields[0], "gc_vs_sigma");
  EXPECT_EQ(fields[1], "6");
  EXPECT_EQ(fields[2], "");
  EXPECT_EQ(fields[8], "crn3");
}

TEST(Run, MethodsAtOnePointShareNoise) {
  TempDir tmp;
  const auto c = load_config(tmp.write("a.conf", "experiment = gc_vs_sigma\nseed = 3\nd = 8\nk = 3\nsigma = 1\n"
                                                 "method = exhaustive\nmethod = importance\nr = 100000\nm = 4\n"
                                                 "beta = 0.5\nbeta = 1\n"));
  const auto rows = run_rows(c, 1);
  ASSERT_EQ(rows.size(), 2u);
  // a large importance sample on identical noise recovers the exhaustive value
  EXPECT_NEAR(rows[0].value, rows[1].value, 0.02);
}

TEST(Run, CorrelatedWithOracle) {
  TempDir tmp;
  const auto c = load_config(tmp.write("a.conf", "experiment = correlated_elogz\nseed = 3\nd = 8\nk = 3\nsigma = 2\n"
                                                 "beta = 1\nm = 20\np = 1\ninner = enumerate\noracle = true\n"));
  const auto rows = run_rows(c, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].experiment, "correlated_elogz/oracle");
  EXPECT_NEAR(rows[0].value, rows[1].value, 1e-9 * std::abs(rows[1].value));
}

TEST(Run, ShippedConfigsValidate) {
  for (const auto& e : fs::directory_iterator(fs::path(GCSIM_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".conf") continue;
    const auto diags = validate_config(e.path().string());
    EXPECT_TRUE(diags.empty()) << e.path() << ": " << (diags.empty() ? "" : diags[0].message);
  }
}
