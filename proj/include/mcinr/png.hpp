#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mcinr/types.hpp"

namespace mcinr {

/// 8-bit grayscale raster, row-major.
struct GrayImage
{
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t &operator()(Index r, Index c) { return pixels[static_cast<std::size_t>(r * width + c)]; }
  std::uint8_t operator()(Index r, Index c) const { return pixels[static_cast<std::size_t>(r * width + c)]; }
};

void write_png(std::filesystem::path const &path, GrayImage const &image);
GrayImage read_png(std::filesystem::path const &path);

/// Grid of tiles, tiles[row][col] with values in [0, 1] (clipped), separated by gap pixels of `background`.
/// Every tile must have the same shape.
GrayImage montage(std::vector<std::vector<RealPlane<double>>> const &tiles, Index gap = 2, std::uint8_t background = 0);

RealPlane<double> to_real(MaskPlane const &mask);

} // namespace mcinr
