#pragma once

#include <cmath>
#include <vector>

#include "mcinr/types.hpp"

namespace mcinr {

struct AdamConfig
{
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-15;
};

template <class Scalar_>
struct AdamMoments
{
  Eigen::Array<Scalar_, Eigen::Dynamic, 1> m, v;

  explicit AdamMoments(Index size = 0)
    : m(Eigen::Array<Scalar_, Eigen::Dynamic, 1>::Zero(size))
    , v(Eigen::Array<Scalar_, Eigen::Dynamic, 1>::Zero(size))
  {
  }
};

/// One bias-corrected Adam update of a contiguous parameter block. t counts from 1.
template <class Scalar_>
void adam_step(Scalar_ *params, Scalar_ const *grads, AdamMoments<Scalar_> &mom, AdamConfig const &cfg, long t)
{
  Index const n = mom.m.size();
  Eigen::Map<Eigen::Array<Scalar_, Eigen::Dynamic, 1>> p(params, n);
  Eigen::Map<Eigen::Array<Scalar_, Eigen::Dynamic, 1> const> g(grads, n);
  auto const b1 = static_cast<Scalar_>(cfg.beta1);
  auto const b2 = static_cast<Scalar_>(cfg.beta2);
  mom.m = b1 * mom.m + (Scalar_(1) - b1) * g;
  mom.v = b2 * mom.v + (Scalar_(1) - b2) * g.square();
  auto const c1 = static_cast<Scalar_>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  auto const c2 = static_cast<Scalar_>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  p -= static_cast<Scalar_>(cfg.lr) * (mom.m / c1) / ((mom.v / c2).sqrt() + static_cast<Scalar_>(cfg.eps));
}

} // namespace mcinr
