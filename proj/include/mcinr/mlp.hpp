#pragma once

#include <cmath>

#include "mcinr/rng.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

/// Two ReLU hidden layers and a linear head producing 2N real channels,
/// where channels (2k, 2k + 1) are the real and imaginary part of contrast k.
template <class Scalar_>
struct MlpParams
{
  mat_type<Scalar_> w0, w1, w2;
  vec_type<Scalar_> b0, b1, b2;

  Index inputs() const { return w0.cols(); }
  Index hidden() const { return w0.rows(); }
  Index outputs() const { return w2.rows(); }

  static MlpParams zeros(Index inputs, Index hidden, Index outputs)
  {
    MlpParams p;
    p.w0 = mat_type<Scalar_>::Zero(hidden, inputs);
    p.w1 = mat_type<Scalar_>::Zero(hidden, hidden);
    p.w2 = mat_type<Scalar_>::Zero(outputs, hidden);
    p.b0 = vec_type<Scalar_>::Zero(hidden);
    p.b1 = vec_type<Scalar_>::Zero(hidden);
    p.b2 = vec_type<Scalar_>::Zero(outputs);
    return p;
  }

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static MlpParams random(Index inputs, Index hidden, Index outputs, Rng &rng)
  {
    MlpParams p = zeros(inputs, hidden, outputs);
    auto fill = [&rng](auto &m, Index fan_in) {
      double const bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Index k = 0; k < m.size(); ++k) { m.data()[k] = static_cast<Scalar_>(rng.uniform(-bound, bound)); }
    };
    fill(p.w0, inputs);
    fill(p.b0, inputs);
    fill(p.w1, hidden);
    fill(p.b1, hidden);
    fill(p.w2, hidden);
    fill(p.b2, hidden);
    return p;
  }

  template <class Other_>
  MlpParams<Other_> cast() const
  {
    MlpParams<Other_> p;
    p.w0 = w0.template cast<Other_>();
    p.w1 = w1.template cast<Other_>();
    p.w2 = w2.template cast<Other_>();
    p.b0 = b0.template cast<Other_>();
    p.b1 = b1.template cast<Other_>();
    p.b2 = b2.template cast<Other_>();
    return p;
  }
};

template <class Scalar_>
struct MlpCache
{
  mat_type<Scalar_> input, h1, h2;
  bool valid = false;
};

/// Column-per-sample forward pass; fills cache when given.
template <class Scalar_>
mat_type<Scalar_> mlp_forward(mat_type<Scalar_> const &features, MlpParams<Scalar_> const &p,
                              MlpCache<Scalar_> *cache = nullptr)
{
  require(features.rows() == p.inputs(), ErrorCode::shape,
          "feature width " + std::to_string(features.rows()) + " != MLP input width " + std::to_string(p.inputs()));
  mat_type<Scalar_> h1 = ((p.w0 * features).colwise() + p.b0).cwiseMax(Scalar_(0));
  mat_type<Scalar_> h2 = ((p.w1 * h1).colwise() + p.b1).cwiseMax(Scalar_(0));
  mat_type<Scalar_> out = (p.w2 * h2).colwise() + p.b2;
  if (cache) {
    cache->input = features;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
    cache->valid = true;
  }
  return out;
}

template <class Scalar_>
struct MlpGradients
{
  MlpParams<Scalar_> params;
  mat_type<Scalar_> features;
};

/// Reverse pass given dL/d(output channels).
template <class Scalar_>
MlpGradients<Scalar_> mlp_backward(MlpCache<Scalar_> const &cache, MlpParams<Scalar_> const &p,
                                   mat_type<Scalar_> const &upstream)
{
  require(cache.valid, ErrorCode::missing_cache, "mlp_backward called without cached forward activations");
  require(upstream.rows() == p.outputs() && upstream.cols() == cache.input.cols(), ErrorCode::shape,
          "upstream gradient shape does not match MLP output");
  MlpGradients<Scalar_> g;
  g.params.w2.noalias() = upstream * cache.h2.transpose();
  g.params.b2 = upstream.rowwise().sum();
  mat_type<Scalar_> d2 = (p.w2.transpose() * upstream).cwiseProduct((cache.h2.array() > Scalar_(0)).template cast<Scalar_>().matrix());
  g.params.w1.noalias() = d2 * cache.h1.transpose();
  g.params.b1 = d2.rowwise().sum();
  mat_type<Scalar_> d1 = (p.w1.transpose() * d2).cwiseProduct((cache.h1.array() > Scalar_(0)).template cast<Scalar_>().matrix());
  g.params.w0.noalias() = d1 * cache.input.transpose();
  g.params.b0 = d1.rowwise().sum();
  g.features.noalias() = p.w0.transpose() * d1;
  return g;
}

/// Maps dL/dconj(out_k) to gradients on the channel pair (2k, 2k + 1): 2 Re and 2 Im.
template <class Scalar_, class ComplexScalar_>
mat_type<Scalar_> wirtinger_to_channels(Eigen::Matrix<Complex<ComplexScalar_>, Eigen::Dynamic, Eigen::Dynamic> const &upstream)
{
  mat_type<Scalar_> out(2 * upstream.rows(), upstream.cols());
  for (Index b = 0; b < upstream.cols(); ++b) {
    for (Index k = 0; k < upstream.rows(); ++k) {
      out(2 * k, b) = static_cast<Scalar_>(2 * upstream(k, b).real());
      out(2 * k + 1, b) = static_cast<Scalar_>(2 * upstream(k, b).imag());
    }
  }
  return out;
}

} // namespace mcinr
