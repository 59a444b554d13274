#pragma once

#include <vector>

#include "mcinr/container.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

/// Row-major complex array of any rank.
struct ComplexArray
{
  std::vector<Index> dims;
  std::vector<Complex<double>> data;

  Index elements() const;
  void validate() const;
};

/// Centered orthonormal inverse 1D DFT along axis 0 (kx -> x). Trailing axes
/// are untouched, so slice s of the result is result[s, ...].
ComplexArray decouple_readout(ComplexArray const &kspace);

/// Inverse of decouple_readout: forward 1D DFT along axis 0 (x -> kx).
ComplexArray recompose_readout(ComplexArray const &hybrid);

/// (S, C, N, Vy, Vz) hybrid data split into per-slice k-space.
std::vector<KSpace<double>> split_slices(ComplexArray const &hybrid);
ComplexArray join_slices(std::vector<KSpace<double>> const &slices);

ComplexArray array_from_container(ArrayContainer const &c);
ArrayContainer to_container(ComplexArray const &a, DType dtype = DType::complex64);

} // namespace mcinr
