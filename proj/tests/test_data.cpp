#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "rgeom/data.hpp"
#include "rgeom/error.hpp"

using namespace rgeom;

namespace {

constexpr double kPi = std::numbers::pi;

ImageGrid ramp(int size) {
  ImageGrid img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(x, y) = (x + 3.0 * y + 1.0) / (4.0 * size);
  return img;
}

// Broad off-center blobs, several pixels wide: content bilinear
// interpolation resolves. `mirror` makes it symmetric under y -> s-1-y.
ImageGrid smooth_image(int size, bool mirror) {
  ImageGrid img(size, size);
  const double c = 0.5 * (size - 1.0);
  const double s = size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const auto blob = [&](double cx, double cy, double w) {
        return std::exp(-0.5 * (std::pow(x - cx, 2) + std::pow(y - cy, 2)) / (w * w));
      };
      double v = blob(c + 0.2 * s, c + 0.05 * s, 0.1 * s) + 0.6 * blob(c - 0.1 * s, c + 0.15 * s, 0.08 * s);
      if (mirror) v += blob(c + 0.2 * s, c - 0.05 * s, 0.1 * s) + 0.6 * blob(c - 0.1 * s, c - 0.15 * s, 0.08 * s);
      img.at(x, y) = v;
    }
  return img;
}

double max_abs_diff(const ImageGrid& a, const ImageGrid& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) d = std::max(d, std::abs(a.pixels[i] - b.pixels[i]));
  return d;
}

double rel_l2(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

std::string pgm_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_pgm(in);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Data, RotationByPiIsPointReflection) {
  for (int size : {7, 9, 8}) {
    const auto img = ramp(size);
    const auto r = rotate_image(img, kPi);
    ImageGrid want(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) want.at(x, y) = img.at(size - 1 - x, size - 1 - y);
    EXPECT_LE(max_abs_diff(r, want), 1e-12) << size;
  }
}

TEST(Data, RotationByHalfPiIsTranspose) {
  for (int size : {7, 9}) {
    const auto img = ramp(size);
    const auto r = rotate_image(img, 0.5 * kPi);
    ImageGrid want(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) want.at(x, y) = img.at(y, size - 1 - x);
    EXPECT_LE(max_abs_diff(r, want), 1e-12) << size;
  }
}

TEST(Data, IdentityRotation) {
  const auto img = synth_image(16, 3);
  EXPECT_EQ(rotate_image(img, 0.0).pixels, img.pixels);
}

TEST(Data, QuarterTurnDataset) {
  const auto img = ramp(9);
  const auto data = make_rotation_dataset(img, 4);
  ASSERT_EQ(data.Y.rows(), 81);
  ASSERT_EQ(data.Y.cols(), 4);
  EXPECT_EQ(data.Y.col(0), flatten(img));
  // k quarter turns: (x, y) reads (y, s-1-x) once per turn.
  ImageGrid cur = img;
  for (int k = 1; k < 4; ++k) {
    ImageGrid next(9, 9);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) next.at(x, y) = cur.at(y, 8 - x);
    cur = next;
    EXPECT_LE((data.Y.col(k) - flatten(cur)).cwiseAbs().maxCoeff(), 1e-12) << k;
  }
}

TEST(Data, RotationComposition) {
  const auto img = smooth_image(32, false);
  for (const auto& [a, b] : {std::pair{0.3, 0.4}, {0.1, 1.0}, {1.2, 1.0}, {-0.5, 2.0}}) {
    const auto two = rotate_image(rotate_image(img, a), b);
    const auto one = rotate_image(img, a + b);
    EXPECT_LE(rel_l2(flatten(two), flatten(one)), 0.02) << a << " " << b;
  }
}

TEST(Data, RotationDatasetPeriodicity) {
  // For an image symmetric about the horizontal midline, rotating by -theta
  // is the mirror of rotating by theta.
  const int size = 33;
  const auto data = make_rotation_dataset(smooth_image(size, true), 12);
  for (int k = 1; k < 12; ++k) {
    Vector mirrored(size * size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) mirrored[y * size + x] = data.Y((size - 1 - y) * size + x, k);
    EXPECT_LE(rel_l2(data.Y.col(12 - k), mirrored), 0.02) << k;
  }
}

TEST(Data, SynthImageProperties) {
  const auto a = synth_image(32, 0);
  const auto b = synth_image(32, 0);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_NE(a.pixels, synth_image(32, 1).pixels);
  for (double v : a.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(rel_l2(flatten(rotate_image(a, 0.5 * kPi)), flatten(a)), 0.05);
  EXPECT_THROW(synth_image(7, 0), InputError);
}

TEST(Data, RotationDatasetNormsNearlyConstant) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto data = make_rotation_dataset(synth_image(32, seed), 100);
    const Vector norms = data.Y.colwise().norm().transpose();
    EXPECT_LE(norms.maxCoeff() / norms.minCoeff() - 1.0, 0.10) << seed;
  }
}

TEST(Data, RotationDatasetRejectsBadInput) {
  EXPECT_THROW(make_rotation_dataset(ramp(8), 1), InputError);
  EXPECT_THROW(make_rotation_dataset(ImageGrid(4, 5), 3), InputError);
  EXPECT_THROW(rotate_image(ImageGrid(4, 5), 0.1), InputError);
}

TEST(Data, PgmRoundTrip) {
  ImageGrid img(5, 3);
  for (int i = 0; i < 15; ++i) img.pixels[i] = (17.0 * i) / 255.0;
  for (bool binary : {true, false}) {
    std::stringstream buf;
    write_pgm(buf, img, binary);
    const auto back = read_pgm(buf);
    ASSERT_EQ(back.width, 5);
    ASSERT_EQ(back.height, 3);
    for (int i = 0; i < 15; ++i) EXPECT_NEAR(back.pixels[i], img.pixels[i], 1e-15) << binary;
  }
}

TEST(Data, PgmCommentsAndWideSamples) {
  std::string bytes = "P5\n# comment\n2 1\n# another\n1000\n";
  bytes += std::string{'\x01', '\xf4', '\x03', '\xe8'};
  std::istringstream in(bytes);
  const auto img = read_pgm(in);
  EXPECT_DOUBLE_EQ(img.pixels[0], 0.5);
  EXPECT_DOUBLE_EQ(img.pixels[1], 1.0);
}

TEST(Data, PgmErrorsReportByteOffset) {
  EXPECT_NE(pgm_error("P6\n1 1\n255\n\x01").find("magic"), std::string::npos);
  EXPECT_NE(pgm_error("P6\n1 1\n255\n\x01").find("at byte 2"), std::string::npos);
  const auto truncated = pgm_error("P5\n2 2\n255\n\x01\x02");
  EXPECT_NE(truncated.find("truncated"), std::string::npos);
  EXPECT_NE(truncated.find("at byte 13"), std::string::npos);
  EXPECT_NE(pgm_error("P2\n1 1\n10\n11\n").find("exceeds maxval"), std::string::npos);
  EXPECT_NE(pgm_error("P2\n0 1\n10\n").find("empty"), std::string::npos);
  EXPECT_NE(pgm_error("P2\nx").find("expected width"), std::string::npos);
  EXPECT_THROW(read_pgm_file("/nonexistent/image.pgm"), InputError);
}
