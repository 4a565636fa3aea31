#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "rgeom/io.hpp"
#include "rgeom/rng.hpp"

namespace fs = std::filesystem;
using rgeom::Matrix;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "rgeom");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = rgeom::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Matrix read_csv(const fs::path& p, bool header) {
  std::ifstream f(p);
  if (header) {
    std::string line;
    std::getline(f, line);
  }
  return rgeom::io::read_matrix_csv(f);
}

std::map<std::string, std::string> read_keys(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rgeom_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Y = A X for random A (5 x 2), X (2 x 20): a linear-kernel model recovers
  // the row space of X.
  Matrix write_linear_dataset() const {
    rgeom::Rng rng(42);
    Matrix A(5, 2), X(2, 20);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    std::ofstream f(path("linear.csv"));
    rgeom::io::write_matrix_csv(f, A * X);
    return X;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthDataShapeAndDeterminism) {
  const auto a = run({"synth-data", "--size", "8", "--n-rotations", "12", "--out", path("a")});
  ASSERT_EQ(a.code, 0) << a.err;
  const Matrix Y = read_csv(dir_ / "a" / "data.csv", false);
  EXPECT_EQ(Y.rows(), 64);
  EXPECT_EQ(Y.cols(), 12);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "image.pgm"));
  EXPECT_EQ(read_keys(dir_ / "a" / "manifest.txt")["N"], "12");
  run({"synth-data", "--size", "8", "--n-rotations", "12", "--threads", "3", "--out", path("b")});
  for (const char* f : {"data.csv", "image.pgm", "manifest.txt"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  run({"synth-data", "--size", "8", "--n-rotations", "12", "--seed", "1", "--out", path("c")});
  EXPECT_NE(slurp(dir_ / "a" / "data.csv"), slurp(dir_ / "c" / "data.csv"));
}

TEST_F(Cli, SynthDataFromPgm) {
  run({"synth-data", "--size", "9", "--n-rotations", "4", "--out", path("a")});
  const auto b = run({"synth-data", "--image", path("a/image.pgm"), "--n-rotations", "4", "--out", path("b")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_csv(dir_ / "b" / "data.csv", false).rows(), 81);
  std::ofstream(path("bad.pgm")) << "P5\n3 3\n255\n\x01";
  const auto c = run({"synth-data", "--image", path("bad.pgm"), "--out", path("c")});
  EXPECT_EQ(c.code, 2);
  EXPECT_NE(c.err.find("at byte"), std::string::npos);
}

TEST_F(Cli, InputErrorsAndTagFormat) {
  const auto a = run({"synth-data", "--n-rotations", "1", "--out", path("a")});
  EXPECT_EQ(a.code, 2);
  EXPECT_EQ(a.err.rfind("rgeom-error kind=input message=\"", 0), 0u) << a.err;
  EXPECT_EQ(std::count(a.err.begin(), a.err.end(), '\n'), 1);

  EXPECT_EQ(run({"no-such-command"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fit"}).code, 2);
  EXPECT_EQ(run({"balanced", "--family", "cauchy", "--out", path("b")}).code, 2);
  EXPECT_EQ(run({"decay", "--model", path("missing.txt")}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, FitRejectsLatentDimAboveDataRank) {
  run({"synth-data", "--size", "8", "--n-rotations", "12", "--out", path("d")});
  const auto r = run({"fit", "--data", path("d/data.csv"), "--latent-dim", "20", "--out", path("f")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("rgeom-error kind=input", 0), 0u);
}

TEST_F(Cli, LinearFitGeodesicAndDecay) {
  const Matrix X = write_linear_dataset();
  const std::vector<std::string> fit{"fit", "--data", path("linear.csv"), "--kernel", "linear",
                                     "--latent-dim", "2"};
  auto args = fit;
  args.insert(args.end(), {"--out", path("m1")});
  const auto f1 = run(args);
  ASSERT_EQ(f1.code, 0) << f1.err << f1.out;
  EXPECT_NE(f1.out.find("log_likelihood="), std::string::npos);
  args = fit;
  args.insert(args.end(), {"--out", path("m2"), "--threads", "2"});
  run(args);
  EXPECT_EQ(slurp(dir_ / "m1" / "model.txt"), slurp(dir_ / "m2" / "model.txt"));

  const auto model = rgeom::io::load_model(path("m1/model.txt"));
  EXPECT_LE(oracle::max_principal_angle(model.X.transpose(), X.transpose()), 1e-3);

  const auto g = run({"geodesic", "--model", path("m1/model.txt"), "--out", path("g")});
  ASSERT_EQ(g.code, 0) << g.err;
  const Matrix curve = read_csv(dir_ / "g" / "geodesic.csv", true);
  const Eigen::Vector2d a = curve.row(0).tail(2).transpose();
  const Eigen::Vector2d u = (curve.row(curve.rows() - 1).tail(2).transpose() - a).normalized();
  double dev = 0.0;
  for (Eigen::Index k = 0; k < curve.rows(); ++k) {
    const Eigen::Vector2d r = curve.row(k).tail(2).transpose() - a;
    dev = std::max(dev, (r - r.dot(u) * u).norm());
  }
  EXPECT_LE(dev, 1e-6);
  EXPECT_EQ(read_keys(dir_ / "g" / "geodesic_report.txt")["converged"], "1");

  const auto same = run({"geodesic", "--model", path("m1/model.txt"), "--from", "3", "--to", "3",
                         "--out", path("s")});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_EQ(read_csv(dir_ / "s" / "geodesic.csv", true).rows(), 1);
  EXPECT_EQ(std::stod(read_keys(dir_ / "s" / "geodesic_report.txt")["length"]), 0.0);

  // Mean-only surrogate: L_n and l_n coincide.
  const auto d = run({"decay", "--model", path("m1/model.txt"), "--n-grid", "1,2,5", "--samples", "64",
                      "--variance-scale", "0", "--out", path("d")});
  ASSERT_EQ(d.code, 0) << d.err;
  const Matrix rows = read_csv(dir_ / "d" / "decay.csv", true);
  ASSERT_EQ(rows.rows(), 3);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    EXPECT_LE(std::abs(rows(i, 4)), 4 * rows(i, 3) / rows(i, 1) + 1e-15);
    EXPECT_EQ(rows(i, 7), 0.0);
  }
  EXPECT_EQ(run({"decay", "--model", path("m1/model.txt"), "--n-grid", "1,6", "--out", path("e")}).code, 2);
}

TEST_F(Cli, DecayIsThreadIndependent) {
  write_linear_dataset();
  run({"fit", "--data", path("linear.csv"), "--kernel", "linear", "--latent-dim", "2", "--out", path("m")});
  for (const char* t : {"1", "4"}) {
    const auto r = run({"decay", "--model", path("m/model.txt"), "--n-grid", "1,3,5", "--samples", "200",
                        "--threads", t, "--out", path(std::string("d") + t)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir_ / "d1" / "decay.csv"), slurp(dir_ / "d4" / "decay.csv"));
  EXPECT_EQ(slurp(dir_ / "d1" / "decay_summary.txt"), slurp(dir_ / "d4" / "decay_summary.txt"));
}

TEST_F(Cli, GeodesicNonConvergenceKeepsPartialCurve) {
  run({"synth-data", "--size", "8", "--n-rotations", "16", "--out", path("d")});
  const auto f = run({"fit", "--data", path("d/data.csv"), "--latent-dim", "2", "--max-iters", "30",
                      "--out", path("m")});
  ASSERT_TRUE(f.code == 0 || f.code == 4) << f.err;
  ASSERT_TRUE(fs::exists(dir_ / "m" / "model.txt"));
  const auto g = run({"geodesic", "--model", path("m/model.txt"), "--from", "0", "--to", "5",
                      "--max-iters", "1", "--out", path("g")});
  EXPECT_EQ(g.code, 4);
  EXPECT_EQ(g.err.rfind("rgeom-error kind=not_converged", 0), 0u) << g.err;
  EXPECT_EQ(read_csv(dir_ / "g" / "geodesic.csv", true).rows(), 65);
  EXPECT_EQ(read_keys(dir_ / "g" / "geodesic_report.txt")["converged"], "0");
}

TEST_F(Cli, BalancedFamilies) {
  ASSERT_EQ(run({"balanced", "--family", "deterministic", "--samples", "10", "--out", path("d")}).code, 0);
  const Matrix det = read_csv(dir_ / "d" / "balanced.csv", true);
  EXPECT_EQ(det.rows(), 7);
  for (Eigen::Index i = 0; i < det.rows(); ++i) EXPECT_LE(det(i, 7), 1e-12);

  ASSERT_EQ(run({"balanced", "--family", "gaussian", "--samples", "2000", "--out", path("g")}).code, 0);
  const Matrix g = read_csv(dir_ / "g" / "balanced.csv", true);
  EXPECT_LE(g.col(7).maxCoeff() / g.col(7).minCoeff(), 2.0);

  ASSERT_EQ(run({"balanced", "--family", "uniform", "--n-grid", "100,300,1000", "--out", path("u")}).code, 0);
  const Matrix u = read_csv(dir_ / "u" / "balanced.csv", true);
  for (Eigen::Index i = 0; i < u.rows(); ++i) EXPECT_NEAR(u(i, 3), u(i, 5), 4 * u(i, 4)) << u(i, 0);
}

TEST_F(Cli, ConfigFilePrecedence) {
  std::ofstream(path("run.ini")) << "seed=3\n[balanced]\nfamily=uniform\nsamples=50\nn-grid=10,20\n";
  ASSERT_EQ(run({"--config", path("run.ini"), "balanced", "--samples", "80", "--out", path("a")}).code, 0);
  ASSERT_EQ(run({"--seed", "3", "balanced", "--family", "uniform", "--samples", "80", "--n-grid", "10,20",
                 "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "balanced.csv"), slurp(dir_ / "b" / "balanced.csv"));
  ASSERT_EQ(run({"--seed", "3", "balanced", "--family", "uniform", "--samples", "50", "--n-grid", "10,20",
                 "--out", path("c")}).code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "balanced.csv"), slurp(dir_ / "c" / "balanced.csv"));

  std::ofstream(path("bad.ini")) << "[balanced]\nno_such_key=1\n";
  EXPECT_EQ(run({"--config", path("bad.ini"), "balanced", "--out", path("d")}).code, 2);
}

TEST_F(Cli, Swirl) {
  const auto r = run({"swirl", "--samples", "40", "--out", path("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Matrix pts = read_csv(dir_ / "s" / "swirl_points.csv", true);
  ASSERT_EQ(pts.rows(), 40);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    EXPECT_NEAR(pts.row(i).head(2).norm(), pts.row(i).tail(2).norm(), 1e-12);
  EXPECT_EQ(read_csv(dir_ / "s" / "swirl_distances.csv", true).rows(), 40 * 39 / 2);
  EXPECT_LE(std::stod(read_keys(dir_ / "s" / "swirl_summary.txt")["max_norm_change"]), 1e-12);
}
