#include "mcinr/png.hpp"

#include <algorithm>
#include <cmath>

#include <png.h>

namespace mcinr {

void write_png(std::filesystem::path const &path, GrayImage const &image)
{
  require(image.height > 0 && image.width > 0, ErrorCode::validation, "png image must be nonempty");
  require(static_cast<Index>(image.pixels.size()) == image.height * image.width, ErrorCode::shape,
          "png pixel buffer does not match its size");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  int const ok = png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr);
  std::string const msg = png.message;
  png_image_free(&png);
  require(ok != 0, ErrorCode::io, "cannot write " + path.string() + ": " + msg);
}

GrayImage read_png(std::filesystem::path const &path)
{
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  require(png_image_begin_read_from_file(&png, path.c_str()) != 0, ErrorCode::io,
          "cannot read " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_GRAY;
  GrayImage out;
  out.width = png.width;
  out.height = png.height;
  out.pixels.resize(PNG_IMAGE_SIZE(png));
  int const ok = png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr);
  std::string const msg = png.message;
  png_image_free(&png);
  require(ok != 0, ErrorCode::io, "cannot decode " + path.string() + ": " + msg);
  return out;
}

GrayImage montage(std::vector<std::vector<RealPlane<double>>> const &tiles, Index gap, std::uint8_t background)
{
  require(!tiles.empty() && !tiles.front().empty(), ErrorCode::validation, "montage needs at least one tile");
  Index const th = tiles.front().front().rows();
  Index const tw = tiles.front().front().cols();
  Index cols = 0;
  for (auto const &row : tiles) { cols = std::max<Index>(cols, static_cast<Index>(row.size())); }
  Index const rows = static_cast<Index>(tiles.size());

  GrayImage img;
  img.height = rows * th + (rows - 1) * gap;
  img.width = cols * tw + (cols - 1) * gap;
  img.pixels.assign(static_cast<std::size_t>(img.height * img.width), background);
  for (Index r = 0; r < rows; ++r) {
    auto const &row = tiles[static_cast<std::size_t>(r)];
    for (Index c = 0; c < static_cast<Index>(row.size()); ++c) {
      auto const &t = row[static_cast<std::size_t>(c)];
      require(t.rows() == th && t.cols() == tw, ErrorCode::shape, "montage tiles must share shape");
      for (Index i = 0; i < th; ++i) {
        for (Index j = 0; j < tw; ++j) {
          double const v = std::clamp(std::isfinite(t(i, j)) ? t(i, j) : 0.0, 0.0, 1.0);
          img(r * (th + gap) + i, c * (tw + gap) + j) = static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
      }
    }
  }
  return img;
}

RealPlane<double> to_real(MaskPlane const &mask) { return mask.cast<double>(); }

} // namespace mcinr
