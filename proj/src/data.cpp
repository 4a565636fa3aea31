#include "rgeom/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "rgeom/error.hpp"
#include "rgeom/rng.hpp"

namespace rgeom {

ImageGrid synth_image(int size, std::uint64_t seed) {
  detail::require(size >= 8, "synth_image: size must be >= 8");
  Rng rng(seed, 0x1a6e);
  const double s = static_cast<double>(size);
  const double c = 0.5 * (s - 1.0);

  struct Blob {
    double cx, cy, sx, sy, cos_a, sin_a, amp;
  };
  const int count = 3 + static_cast<int>(std::floor(3.0 * rng.uniform()));
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  std::vector<Blob> blobs;
  for (int i = 0; i < count; ++i) {
    // Angles spread around the center so content reaches every image band.
    const double radius = (0.26 + 0.12 * rng.uniform()) * s;
    const double phi = phase + 2.0 * std::numbers::pi * (i + 0.6 * rng.uniform()) / count;
    const double orient = std::numbers::pi * rng.uniform();
    Blob b{};
    b.cx = c + radius * std::cos(phi);
    b.cy = c + radius * std::sin(phi);
    b.sx = (0.08 + 0.08 * rng.uniform()) * s;
    b.sy = (0.035 + 0.035 * rng.uniform()) * s;
    b.cos_a = std::cos(orient);
    b.sin_a = std::sin(orient);
    b.amp = 0.5 + 0.5 * rng.uniform();
    blobs.push_back(b);
  }

  // Radial taper: 1 inside 0.46 s, cosine down to 0 at 0.56 s.
  const double inner = 0.46 * s;
  const double outer = 0.56 * s;
  ImageGrid img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = 0.0;
      for (const auto& b : blobs) {
        const double dx = x - b.cx;
        const double dy = y - b.cy;
        const double u = (b.cos_a * dx + b.sin_a * dy) / b.sx;
        const double w = (-b.sin_a * dx + b.cos_a * dy) / b.sy;
        v += b.amp * std::exp(-0.5 * (u * u + w * w));
      }
      const double r = std::hypot(x - c, y - c);
      double taper = 1.0;
      if (r >= outer) taper = 0.0;
      else if (r > inner) taper = 0.5 * (1.0 + std::cos(std::numbers::pi * (r - inner) / (outer - inner)));
      img.at(x, y) = std::clamp(v * taper, 0.0, 1.0);
    }
  }
  return img;
}

ImageGrid rotate_image(const ImageGrid& img, double angle) {
  detail::require(img.width >= 1 && img.square(), "rotate_image: image must be square");
  const int size = img.width;
  const double c = 0.5 * (size - 1.0);
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  const auto sample = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= size || y >= size) ? 0.0 : img.at(x, y);
  };

  ImageGrid out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - c;
      const double dy = y - c;
      // Inverse map: output pixel reads the source rotated by -angle.
      const double sx = c + cs * dx + sn * dy;
      const double sy = c - sn * dx + cs * dy;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      out.at(x, y) = (1.0 - ay) * ((1.0 - ax) * sample(x0, y0) + ax * sample(x0 + 1, y0)) +
                     ay * ((1.0 - ax) * sample(x0, y0 + 1) + ax * sample(x0 + 1, y0 + 1));
    }
  }
  return out;
}

Vector flatten(const ImageGrid& img) {
  return Eigen::Map<const Vector>(img.pixels.data(), static_cast<Eigen::Index>(img.pixels.size()));
}

Dataset make_rotation_dataset(const ImageGrid& img, int n) {
  detail::require(n >= 2, "make_rotation_dataset: need at least 2 rotations");
  detail::require(img.square(), "make_rotation_dataset: image must be square");
  Dataset data;
  data.Y.resize(static_cast<Eigen::Index>(img.pixels.size()), n);
  data.Y.col(0) = flatten(img);
  for (int k = 1; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n;
    data.Y.col(k) = flatten(rotate_image(img, angle));
  }
  return data;
}

// --- PGM ---------------------------------------------------------------------

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::istream& in) : in_(in) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("pgm: " + what + " at byte " + std::to_string(offset_));
  }

  int get() {
    const int c = in_.get();
    if (c != std::char_traits<char>::eof()) ++offset_;
    return c;
  }

  void skip_space_and_comments() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        while (true) {
          const int d = get();
          if (d == '\n' || d == std::char_traits<char>::eof()) break;
        }
      } else if (c != std::char_traits<char>::eof() && std::isspace(c)) {
        get();
      } else {
        return;
      }
    }
  }

  long read_int(const char* what) {
    skip_space_and_comments();
    long v = 0;
    int digits = 0;
    while (std::isdigit(in_.peek())) {
      v = v * 10 + (get() - '0');
      if (v > 1'000'000'000) fail(std::string("value too large for ") + what);
      ++digits;
    }
    if (digits == 0) fail(std::string("expected ") + what);
    return v;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

ImageGrid read_pgm(std::istream& in) {
  PgmReader r(in);
  const int p = r.get();
  const int kind = r.get();
  if (p != 'P' || (kind != '5' && kind != '2')) r.fail("bad magic (expected P5 or P2)");
  const long width = r.read_int("width");
  const long height = r.read_int("height");
  const long maxval = r.read_int("maxval");
  if (width < 1 || height < 1) r.fail("empty image");
  if (width * height > 64L * 1024 * 1024) r.fail("image too large");
  if (maxval < 1 || maxval > 65535) r.fail("maxval out of range");

  ImageGrid img(static_cast<int>(width), static_cast<int>(height));
  if (kind == '5') {
    const int c = r.get();
    if (c == std::char_traits<char>::eof() || !std::isspace(c)) r.fail("missing separator before raster");
    const bool wide = maxval > 255;
    for (auto& px : img.pixels) {
      long v = r.get();
      if (v == std::char_traits<char>::eof()) r.fail("truncated raster");
      if (wide) {
        const int lo = r.get();
        if (lo == std::char_traits<char>::eof()) r.fail("truncated raster");
        v = (v << 8) | lo;
      }
      if (v > maxval) r.fail("sample exceeds maxval");
      px = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (auto& px : img.pixels) {
      const long v = r.read_int("sample");
      if (v > maxval) r.fail("sample exceeds maxval");
      px = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

ImageGrid read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("pgm: cannot open '" + path + "'");
  return read_pgm(in);
}

void write_pgm(std::ostream& out, const ImageGrid& img, bool binary) {
  out << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n255\n";
  int col = 0;
  for (double v : img.pixels) {
    const auto q = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
    if (binary) {
      out.put(static_cast<char>(static_cast<unsigned char>(q)));
    } else {
      out << q << (++col % img.width == 0 ? "\n" : " ");
    }
  }
}

}  // namespace rgeom
