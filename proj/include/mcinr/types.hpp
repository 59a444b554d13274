#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mcinr {

using Index = Eigen::Index;

template <class Scalar_>
using Complex = std::complex<Scalar_>;

/// One 2D plane in (y, z) order, row-major so that z is the fastest axis.
template <class Scalar_>
using Plane = Eigen::Array<Complex<Scalar_>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar_>
using RealPlane = Eigen::Array<Scalar_, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MaskPlane = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelPlane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar_>
using mat_type = Eigen::Matrix<Scalar_, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar_>
using vec_type = Eigen::Matrix<Scalar_, Eigen::Dynamic, 1>;

struct Grid
{
  Index ny = 0;
  Index nz = 0;

  Index voxels() const { return ny * nz; }
  bool operator==(Grid const &) const = default;
};

enum class ErrorCode
{
  validation,
  shape,
  domain,
  calibration,
  degenerate,
  io,
  bad_magic,
  unsupported_version,
  truncated,
  dtype_mismatch,
  crc,
  divergence,
  missing_cache,
};

inline std::string_view to_string(ErrorCode code)
{
  switch (code) {
  case ErrorCode::validation: return "validation";
  case ErrorCode::shape: return "shape";
  case ErrorCode::domain: return "domain";
  case ErrorCode::calibration: return "calibration";
  case ErrorCode::degenerate: return "degenerate";
  case ErrorCode::io: return "io";
  case ErrorCode::bad_magic: return "bad_magic";
  case ErrorCode::unsupported_version: return "unsupported_version";
  case ErrorCode::truncated: return "truncated";
  case ErrorCode::dtype_mismatch: return "dtype_mismatch";
  case ErrorCode::crc: return "crc";
  case ErrorCode::divergence: return "divergence";
  case ErrorCode::missing_cache: return "missing_cache";
  }
  return "unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, std::string const &what)
    : std::runtime_error(what)
    , code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, std::string const &what)
{
  if (!condition) { throw Error(code, what); }
}

/// N complex images of one slice, all on the same grid.
template <class Scalar_>
struct ContrastStack
{
  std::vector<Plane<Scalar_>> images;

  ContrastStack() = default;
  ContrastStack(Index contrasts, Grid grid)
    : images(static_cast<std::size_t>(contrasts), Plane<Scalar_>::Zero(grid.ny, grid.nz))
  {
  }

  Index contrasts() const { return static_cast<Index>(images.size()); }
  Grid grid() const { return images.empty() ? Grid{} : Grid{images.front().rows(), images.front().cols()}; }

  Plane<Scalar_> &operator[](Index n) { return images[static_cast<std::size_t>(n)]; }
  Plane<Scalar_> const &operator[](Index n) const { return images[static_cast<std::size_t>(n)]; }

  template <class Other_>
  ContrastStack<Other_> cast() const
  {
    ContrastStack<Other_> out;
    out.images.reserve(images.size());
    for (auto const &im : images) { out.images.push_back(im.template cast<Complex<Other_>>()); }
    return out;
  }
};

/// Complex receive-coil sensitivity profiles, one plane per coil.
template <class Scalar_>
struct CoilMaps
{
  std::vector<Plane<Scalar_>> maps;

  Index coils() const { return static_cast<Index>(maps.size()); }
  Grid grid() const { return maps.empty() ? Grid{} : Grid{maps.front().rows(), maps.front().cols()}; }
  Plane<Scalar_> const &operator[](Index c) const { return maps[static_cast<std::size_t>(c)]; }

  template <class Other_>
  CoilMaps<Other_> cast() const
  {
    CoilMaps<Other_> out;
    for (auto const &m : maps) { out.maps.push_back(m.template cast<Complex<Other_>>()); }
    return out;
  }
};

/// Per-coil, per-contrast k-space planes stored coil-major: plane(c, n) = planes[c * N + n].
template <class Scalar_>
struct KSpace
{
  Index coils = 0;
  Index contrasts = 0;
  std::vector<Plane<Scalar_>> planes;

  KSpace() = default;
  KSpace(Index c, Index n, Grid grid)
    : coils(c)
    , contrasts(n)
    , planes(static_cast<std::size_t>(c * n), Plane<Scalar_>::Zero(grid.ny, grid.nz))
  {
  }

  Grid grid() const { return planes.empty() ? Grid{} : Grid{planes.front().rows(), planes.front().cols()}; }
  Plane<Scalar_> &operator()(Index c, Index n) { return planes[static_cast<std::size_t>(c * contrasts + n)]; }
  Plane<Scalar_> const &operator()(Index c, Index n) const { return planes[static_cast<std::size_t>(c * contrasts + n)]; }
};

} // namespace mcinr
