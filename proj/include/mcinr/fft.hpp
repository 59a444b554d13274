#pragma once

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "mcinr/types.hpp"

namespace mcinr {

namespace detail {

// Eigen::FFT caches kissfft plans in a mutable map, so each thread keeps its own.
template <class Scalar_>
Eigen::FFT<Scalar_> &fft_engine()
{
  thread_local Eigen::FFT<Scalar_> engine = [] {
    Eigen::FFT<Scalar_> e;
    e.SetFlag(Eigen::FFT<Scalar_>::Unscaled);
    return e;
  }();
  return engine;
}

/// Centered, orthonormal 1D transform of n strided samples, in place.
/// DC sits at index n/2 on both sides (numpy fftshift convention).
template <class Scalar_>
void fft1c_strided(Complex<Scalar_> *data, Index n, Index stride, bool inverse,
                   std::vector<Complex<Scalar_>> &in, std::vector<Complex<Scalar_>> &out)
{
  if (n <= 1) { return; }
  in.resize(static_cast<std::size_t>(n));
  out.resize(static_cast<std::size_t>(n));
  Index const half = n / 2;
  for (Index k = 0; k < n; ++k) { in[static_cast<std::size_t>(k)] = data[((k + half) % n) * stride]; }
  auto &engine = fft_engine<Scalar_>();
  if (inverse) {
    engine.inv(out.data(), in.data(), n);
  } else {
    engine.fwd(out.data(), in.data(), n);
  }
  Scalar_ const scale = Scalar_(1) / std::sqrt(static_cast<Scalar_>(n));
  for (Index i = 0; i < n; ++i) { data[i * stride] = out[static_cast<std::size_t>((i + n - half) % n)] * scale; }
}

template <class Scalar_>
Plane<Scalar_> fft2c_impl(Plane<Scalar_> const &x, bool inverse)
{
  Plane<Scalar_> y = x;
  std::vector<Complex<Scalar_>> in, out;
  Index const ny = y.rows();
  Index const nz = y.cols();
  if (ny == 0 || nz == 0) { return y; }
  for (Index i = 0; i < ny; ++i) { fft1c_strided<Scalar_>(y.data() + i * nz, nz, 1, inverse, in, out); }
  for (Index j = 0; j < nz; ++j) { fft1c_strided<Scalar_>(y.data() + j, ny, nz, inverse, in, out); }
  return y;
}

} // namespace detail

/// Centered orthonormal 2D DFT, exp(-i 2 pi k n / N) kernel.
template <class Scalar_>
Plane<Scalar_> fft2c(Plane<Scalar_> const &img)
{
  return detail::fft2c_impl<Scalar_>(img, false);
}

template <class Scalar_>
Plane<Scalar_> ifft2c(Plane<Scalar_> const &ksp)
{
  return detail::fft2c_impl<Scalar_>(ksp, true);
}

} // namespace mcinr
