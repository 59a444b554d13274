#pragma once

#include <cmath>
#include <numbers>

#include "mcinr/operators.hpp"
#include "mcinr/rng.hpp"
#include "mcinr/sampling.hpp"
#include "mcinr/types.hpp"

namespace mcinr::test {

inline Plane<double> random_plane(Grid g, Rng &rng)
{
  Plane<double> p(g.ny, g.nz);
  for (Index k = 0; k < p.size(); ++k) { p.data()[k] = {rng.normal(), rng.normal()}; }
  return p;
}

inline ContrastStack<double> random_stack(Index N, Grid g, Rng &rng)
{
  ContrastStack<double> s;
  for (Index n = 0; n < N; ++n) { s.images.push_back(random_plane(g, rng)); }
  return s;
}

inline CoilMaps<double> random_coils(Index C, Grid g, Rng &rng)
{
  CoilMaps<double> c;
  for (Index k = 0; k < C; ++k) { c.maps.push_back(random_plane(g, rng)); }
  return c;
}

inline MaskSet random_masks(Index N, Grid g, double fraction, Rng &rng)
{
  MaskSet m;
  for (Index n = 0; n < N; ++n) {
    SamplingMask s;
    s.bits = MaskPlane(g.ny, g.nz);
    for (Index k = 0; k < s.bits.size(); ++k) { s.bits.data()[k] = rng.uniform() < fraction; }
    s.contrast = n;
    m.masks.push_back(std::move(s));
  }
  return m;
}

inline KSpace<double> random_kspace(Index C, Index N, Grid g, Rng &rng, MaskSet const *masks = nullptr)
{
  KSpace<double> k(C, N, g);
  for (Index c = 0; c < C; ++c) {
    for (Index n = 0; n < N; ++n) {
      k(c, n) = random_plane(g, rng);
      if (masks) { k(c, n) = (*masks)[n].select(k(c, n), Complex<double>(0)); }
    }
  }
  return k;
}

/// Direct O(V^2) centered orthonormal DFT: index i holds position/frequency i - n/2.
inline Plane<double> naive_dft2c(Plane<double> const &x, bool inverse = false)
{
  Index const ny = x.rows(), nz = x.cols();
  double const sign = inverse ? 1.0 : -1.0;
  Plane<double> out = Plane<double>::Zero(ny, nz);
  for (Index ky = 0; ky < ny; ++ky) {
    for (Index kz = 0; kz < nz; ++kz) {
      Complex<double> acc = 0.0;
      for (Index y = 0; y < ny; ++y) {
        for (Index z = 0; z < nz; ++z) {
          double const phase = 2.0 * std::numbers::pi *
                               (static_cast<double>((ky - ny / 2) * (y - ny / 2)) / static_cast<double>(ny) +
                                static_cast<double>((kz - nz / 2) * (z - nz / 2)) / static_cast<double>(nz));
          acc += x(y, z) * std::polar(1.0, sign * phase);
        }
      }
      out(ky, kz) = acc / std::sqrt(static_cast<double>(ny * nz));
    }
  }
  return out;
}

inline double rel_error(Plane<double> const &a, Plane<double> const &b)
{
  double const scale = std::max(std::sqrt(b.abs2().sum()), 1e-300);
  return std::sqrt((a - b).abs2().sum()) / scale;
}

inline Complex<double> inner(ContrastStack<double> const &a, ContrastStack<double> const &b)
{
  Complex<double> s = 0.0;
  for (Index n = 0; n < a.contrasts(); ++n) { s += (a[n].conjugate() * b[n]).sum(); }
  return s;
}

inline Complex<double> inner(KSpace<double> const &a, KSpace<double> const &b)
{
  Complex<double> s = 0.0;
  for (std::size_t k = 0; k < a.planes.size(); ++k) { s += (a.planes[k].conjugate() * b.planes[k]).sum(); }
  return s;
}

} // namespace mcinr::test
