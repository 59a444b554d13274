#pragma once

#include <cstdint>
#include <vector>

#include "mcinr/types.hpp"

namespace mcinr {

/// Binary k-space sampling pattern for one contrast. Index (i, j) holds the
/// frequency (i - ny/2, j - nz/2), the same centering fft2c produces.
struct SamplingMask
{
  MaskPlane bits;
  Index contrast = 0;
  std::uint64_t seed = 0;
  double center_radius = 0.0;
  double target_R = 1.0;
  double r0 = 0.0;    // calibrated base spacing; 0 for a full mask
  double alpha = 0.0; // radius growth used for the fill

  Grid grid() const { return {bits.rows(), bits.cols()}; }
};

struct MaskSet
{
  std::vector<SamplingMask> masks;

  Index contrasts() const { return static_cast<Index>(masks.size()); }
  Grid grid() const { return masks.empty() ? Grid{} : masks.front().grid(); }
  MaskPlane const &operator[](Index n) const { return masks[static_cast<std::size_t>(n)].bits; }

  /// Logical OR of every mask in the set.
  MaskPlane coverage() const;

  static MaskSet full(Grid grid, Index contrasts);
};

struct PoissonOptions
{
  double alpha = 2.5;          // radius growth from center to corner
  int max_iterations = 40;     // bisection steps on r0
  double tolerance = 0.10;     // accepted relative deviation of achieved R
  double early_stop = 0.01;    // bisection stops once this close
};

/// Centered integer frequency of row/column index i on an axis of length n.
inline Index centered_frequency(Index i, Index n) { return i - n / 2; }

/// Calibration disk radius: 8 index units at 160 samples, scaled with the smaller grid dimension.
double default_center_radius(Grid grid);

/// Local minimum distance r(k) = r0 * (1 + alpha * |k| / |k|_max).
double poisson_radius(double r0, double alpha, double k_norm, double k_max);

/// One dart-throwing pass at fixed r0 (no calibration). Deterministic given seed.
MaskPlane poisson_disk_fill(Grid grid, double r0, double alpha, double center_radius, std::uint64_t seed);

SamplingMask vd_poisson_mask(Grid grid, double target_R, double center_radius, std::uint64_t seed,
                             PoissonOptions const &opts = {});

MaskSet complementary_mask_set(Grid grid, double target_R, double center_radius, Index contrasts,
                               std::uint64_t base_seed, PoissonOptions const &opts = {});

double acceleration_of(MaskPlane const &mask);

} // namespace mcinr
