#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "turtle/data.hpp"

using namespace turtle;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    path = (fs::temp_directory_path() /
            ("turtle_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++) + ".csv")).string();
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
  static int counter;
};
int TempFile::counter = 0;

int distinct(const std::vector<int>& v) {
  return static_cast<int>(std::set<int>(v.begin(), v.end()).size());
}

} // namespace

TEST_CASE("gu6 generator shape and balance") {
  LabeledDataset ds = gen_gu6(5);
  CHECK(ds.X.rows() == 1150);
  CHECK(ds.X.cols() == 2);
  CHECK(distinct(ds.labels) == 6);
  for (int j = 0; j < 6; ++j) {
    int count = 0;
    for (int l : ds.labels) count += l == j;
    CHECK(std::abs(count / 1150.0 - 1.0 / 6) < 0.05);
  }
  LabeledDataset again = gen_gu6(5);
  CHECK((ds.X - again.X).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(ds.labels == again.labels);
  LabeledDataset other = gen_gu6(6);
  CHECK((ds.X - other.X).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("mixg generator labelings") {
  LabeledDataset ds = gen_mixg(9);
  CHECK(ds.X.rows() == 210);
  CHECK(distinct(ds.alt_labels) == 4); // generative
  CHECK(distinct(ds.labels) == 3);     // intuitive
  // the intuitive labeling merges generative components 0 and 1
  for (int i = 0; i < 210; ++i) {
    if (ds.alt_labels[i] <= 1) CHECK(ds.labels[i] == 0);
  }
}

TEST_CASE("cross generator labelings") {
  LabeledDataset ds = gen_cross(9);
  CHECK(ds.X.rows() == 600);
  CHECK(distinct(ds.alt_labels) == 6);
  CHECK(distinct(ds.labels) == 4);
}

TEST_CASE("outlier generator counts and nearest-center labeling") {
  LabeledDataset ds = gen_outlier(3);
  CHECK(ds.X.rows() == 350);
  CHECK(distinct(ds.labels) == 3);
  Mat centers(3, 2);
  centers << 0, 0, 6, 0, 3, 5.2;
  for (int i = 300; i < 350; ++i) {
    CHECK(ds.alt_labels[i] == 3);
    int nearest = 0;
    double best = 1e18;
    for (int j = 0; j < 3; ++j) {
      double d = (ds.X.row(i) - centers.row(j)).squaredNorm();
      if (d < best) { best = d; nearest = j; }
    }
    CHECK(ds.labels[i] == nearest);
  }
}

TEST_CASE("fig1 generator") {
  LabeledDataset ds = gen_fig1(2);
  CHECK(ds.X.rows() == 800);
  CHECK(distinct(ds.alt_labels) == 4);
  CHECK(distinct(ds.labels) == 3);
  CHECK_THROWS_AS(generate("nope", 1), std::invalid_argument);
}

TEST_CASE("load_csv plain values") {
  TempFile f("1,2\n3,4\n5,6\n");
  LabeledDataset ds = load_csv(f.path, false, std::nullopt, false);
  REQUIRE(ds.X.rows() == 3);
  REQUIRE(ds.X.cols() == 2);
  CHECK(ds.X(0, 0) == 1.0);
  CHECK(ds.X(2, 1) == 6.0);
  CHECK(ds.labels.empty());
}

TEST_CASE("load_csv standardizes columns") {
  TempFile f("1,2\n3,4\n5,6\n");
  LabeledDataset ds = load_csv(f.path, false, std::nullopt, true);
  for (int d = 0; d < 2; ++d) {
    CHECK(std::abs(ds.X.col(d).mean()) < 1e-12);
    double var = ds.X.col(d).squaredNorm() / 2; // ddof = 1
    CHECK(std::abs(var - 1.0) < 1e-12);
  }
  // the stored transform inverts back to the original units
  Mat orig = ds.standardizer.invert(ds.X);
  CHECK(orig(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(orig(2, 1) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("load_csv errors name the offending line") {
  TempFile bad("a,2\n3,4\n");
  try {
    load_csv(bad.path, false, std::nullopt, false);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  TempFile ragged("1,2\n3,4,5\n");
  CHECK_THROWS_AS(load_csv(ragged.path, false, std::nullopt, false), ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", false, std::nullopt, false),
                  ParseError);
}

TEST_CASE("load_csv extracts the label column") {
  TempFile f("x1,x2,label\n1,2,0\n3,4,1\n5,6,1\n");
  CHECK(csv_has_header(f.path));
  LabeledDataset ds = load_csv(f.path, true, 2, false);
  REQUIRE(ds.X.cols() == 2);
  CHECK(ds.labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("dataset CSV round trip preserves 17 significant digits") {
  LabeledDataset ds = gen_mixg(31);
  TempFile f("");
  write_dataset_csv(f.path, ds);
  CHECK(csv_has_header(f.path));
  LabeledDataset back = load_csv(f.path, true, 2, false);
  REQUIRE(back.X.rows() == ds.X.rows());
  CHECK((back.X - ds.X).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("posteriors CSV round trip") {
  Mat P(2, 3);
  P << 0.25, 0.5, 0.25, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  TempFile f("");
  write_posteriors_csv(f.path, P);
  LabeledDataset back = load_csv(f.path, true, std::nullopt, false);
  CHECK((back.X - P).lpNorm<Eigen::Infinity>() == 0.0);
}
