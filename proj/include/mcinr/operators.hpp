#pragma once

#include <cmath>
#include <string>

#include "mcinr/fft.hpp"
#include "mcinr/sampling.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

/// W(ky, kz) = sqrt(ky^2 + kz^2) + 1 on integer frequencies centered like fft2c.
template <class Scalar_ = double>
RealPlane<Scalar_> distance_weights(Grid grid)
{
  RealPlane<Scalar_> w(grid.ny, grid.nz);
  for (Index i = 0; i < grid.ny; ++i) {
    double const ky = static_cast<double>(centered_frequency(i, grid.ny));
    for (Index j = 0; j < grid.nz; ++j) {
      double const kz = static_cast<double>(centered_frequency(j, grid.nz));
      w(i, j) = static_cast<Scalar_>(std::sqrt(ky * ky + kz * kz) + 1.0);
    }
  }
  return w;
}

namespace detail {

template <class Scalar_>
void check_model_shapes(Grid grid, Index contrasts, CoilMaps<Scalar_> const &coils, MaskSet const &masks)
{
  require(coils.coils() >= 1, ErrorCode::shape, "need at least one coil map");
  require(coils.grid() == grid, ErrorCode::shape, "coil maps do not match image grid");
  require(masks.grid() == grid, ErrorCode::shape, "masks do not match image grid");
  require(masks.contrasts() == contrasts, ErrorCode::shape,
          "mask count " + std::to_string(masks.contrasts()) + " != contrasts " + std::to_string(contrasts));
}

template <class Scalar_>
void check_kspace_shapes(KSpace<Scalar_> const &ksp, CoilMaps<Scalar_> const &coils, MaskSet const &masks)
{
  require(ksp.coils == coils.coils(), ErrorCode::shape, "k-space coil count does not match coil maps");
  check_model_shapes(ksp.grid(), ksp.contrasts, coils, masks);
}

} // namespace detail

/// D_cn = M_n F (S_c d_n), noise excluded.
template <class Scalar_>
KSpace<Scalar_> forward_model(ContrastStack<Scalar_> const &d, CoilMaps<Scalar_> const &coils, MaskSet const &masks)
{
  require(d.contrasts() >= 1, ErrorCode::shape, "image stack is empty");
  detail::check_model_shapes(d.grid(), d.contrasts(), coils, masks);
  KSpace<Scalar_> out(coils.coils(), d.contrasts(), d.grid());
  for (Index c = 0; c < coils.coils(); ++c) {
    for (Index n = 0; n < d.contrasts(); ++n) {
      out(c, n) = masks[n].select(fft2c<Scalar_>(coils[c] * d[n]), Complex<Scalar_>(0));
    }
  }
  return out;
}

/// d_n = sum_c conj(S_c) ifft2c(M_n D_cn). Zero-filled reconstruction when masks undersample.
template <class Scalar_>
ContrastStack<Scalar_> adjoint_model(KSpace<Scalar_> const &ksp, CoilMaps<Scalar_> const &coils, MaskSet const &masks)
{
  detail::check_kspace_shapes(ksp, coils, masks);
  ContrastStack<Scalar_> out(ksp.contrasts, ksp.grid());
  for (Index c = 0; c < ksp.coils; ++c) {
    for (Index n = 0; n < ksp.contrasts; ++n) {
      Plane<Scalar_> const masked = masks[n].select(ksp(c, n), Complex<Scalar_>(0));
      out[n] += coils[c].conjugate() * ifft2c<Scalar_>(masked);
    }
  }
  return out;
}

template <class Scalar_>
struct LossAndGradient
{
  double loss = 0.0;
  ContrastStack<Scalar_> gradient;
};

/// Weighted data-consistency loss and, optionally, its image gradient, sharing one forward pass.
///
/// The gradient is returned as dL/dRe(d) + i dL/dIm(d), which equals 2 dL/dconj(d)
/// in Wirtinger notation: 2 sum_c conj(S_c) ifft2c(W^2 M_n (M_n F S_c d_n - D_cn)).
template <class Scalar_>
LossAndGradient<Scalar_> weighted_loss_and_gradient(ContrastStack<Scalar_> const &d, CoilMaps<Scalar_> const &coils,
                                                    MaskSet const &masks, KSpace<Scalar_> const &data,
                                                    RealPlane<Scalar_> const &weights, bool with_gradient = true)
{
  detail::check_kspace_shapes(data, coils, masks);
  require(d.contrasts() == data.contrasts && d.grid() == data.grid(), ErrorCode::shape,
          "image stack does not match k-space data");
  require(weights.rows() == d.grid().ny && weights.cols() == d.grid().nz, ErrorCode::shape,
          "distance weights do not match grid");

  LossAndGradient<Scalar_> out;
  if (with_gradient) { out.gradient = ContrastStack<Scalar_>(d.contrasts(), d.grid()); }
  RealPlane<Scalar_> const w2 = weights.square();
  for (Index c = 0; c < data.coils; ++c) {
    for (Index n = 0; n < d.contrasts(); ++n) {
      Plane<Scalar_> const residual =
        masks[n].select(fft2c<Scalar_>(coils[c] * d[n]) - data(c, n), Complex<Scalar_>(0));
      Plane<Scalar_> const weighted = residual * w2.template cast<Complex<Scalar_>>();
      out.loss += (weighted.real().template cast<double>() * residual.real().template cast<double>() +
                   weighted.imag().template cast<double>() * residual.imag().template cast<double>())
                    .sum();
      if (with_gradient) { out.gradient[n] += Scalar_(2) * coils[c].conjugate() * ifft2c<Scalar_>(weighted); }
    }
  }
  return out;
}

template <class Scalar_>
double weighted_loss(ContrastStack<Scalar_> const &d, CoilMaps<Scalar_> const &coils, MaskSet const &masks,
                     KSpace<Scalar_> const &data, RealPlane<Scalar_> const &weights)
{
  return weighted_loss_and_gradient(d, coils, masks, data, weights, false).loss;
}

template <class Scalar_>
ContrastStack<Scalar_> loss_grad_images(ContrastStack<Scalar_> const &d, CoilMaps<Scalar_> const &coils,
                                        MaskSet const &masks, KSpace<Scalar_> const &data,
                                        RealPlane<Scalar_> const &weights)
{
  return weighted_loss_and_gradient(d, coils, masks, data, weights, true).gradient;
}

/// Largest sample magnitude over every coil and contrast.
template <class Scalar_>
double max_magnitude(KSpace<Scalar_> const &ksp)
{
  double m = 0.0;
  for (auto const &p : ksp.planes) {
    if (p.size() > 0) { m = std::max(m, static_cast<double>(p.abs().maxCoeff())); }
  }
  return m;
}

} // namespace mcinr
