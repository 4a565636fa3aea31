#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgeom/gp.hpp"

namespace rgeom {

/// Grayscale image, row-major, intensities in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageGrid() = default;
  ImageGrid(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool square() const { return width == height; }
};

/// Deterministic sum of 3-5 anisotropic Gaussian blobs placed off-center,
/// radially tapered so rotations keep nearly all mass inside the frame.
ImageGrid synth_image(int size, std::uint64_t seed);

/// Rotation about the image center (pixel-center convention) with bilinear
/// interpolation; samples falling outside the image read as 0.
ImageGrid rotate_image(const ImageGrid& img, double angle);

/// Column k is the row-major flattening of the rotation by 2 pi k / N.
Dataset make_rotation_dataset(const ImageGrid& img, int n);

Vector flatten(const ImageGrid& img);

/// Binary (P5) or ASCII (P2) graymap. Values are divided by maxval.
ImageGrid read_pgm(std::istream& in);
ImageGrid read_pgm_file(const std::string& path);
/// Writes maxval 255 with round-half-up of 255 * intensity.
void write_pgm(std::ostream& out, const ImageGrid& img, bool binary = true);

}  // namespace rgeom
