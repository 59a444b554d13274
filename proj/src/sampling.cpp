#include "mcinr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcinr/rng.hpp"

namespace mcinr {

namespace {

double max_frequency_norm(Grid grid)
{
  double const ky = static_cast<double>(grid.ny / 2);
  double const kz = static_cast<double>(grid.nz / 2);
  return std::max(std::sqrt(ky * ky + kz * kz), 1.0);
}

double frequency_norm(Index i, Index j, Grid grid)
{
  double const ky = static_cast<double>(centered_frequency(i, grid.ny));
  double const kz = static_cast<double>(centered_frequency(j, grid.nz));
  return std::sqrt(ky * ky + kz * kz);
}

MaskPlane center_disk(Grid grid, double center_radius)
{
  MaskPlane disk(grid.ny, grid.nz);
  for (Index i = 0; i < grid.ny; ++i) {
    for (Index j = 0; j < grid.nz; ++j) { disk(i, j) = frequency_norm(i, j, grid) <= center_radius; }
  }
  return disk;
}

} // namespace

MaskPlane MaskSet::coverage() const
{
  require(!masks.empty(), ErrorCode::validation, "coverage of an empty mask set");
  MaskPlane acc = masks.front().bits;
  for (auto const &m : masks) { acc = acc || m.bits; }
  return acc;
}

MaskSet MaskSet::full(Grid grid, Index contrasts)
{
  MaskSet set;
  for (Index n = 0; n < contrasts; ++n) {
    set.masks.push_back({MaskPlane::Constant(grid.ny, grid.nz, true), n, 0, 0.0, 1.0});
  }
  return set;
}

double default_center_radius(Grid grid)
{
  return 8.0 * static_cast<double>(std::min(grid.ny, grid.nz)) / 160.0;
}

double poisson_radius(double r0, double alpha, double k_norm, double k_max)
{
  return r0 * (1.0 + alpha * k_norm / k_max);
}

MaskPlane poisson_disk_fill(Grid grid, double r0, double alpha, double center_radius, std::uint64_t seed)
{
  double const k_max = max_frequency_norm(grid);
  RealPlane<double> radius(grid.ny, grid.nz);
  for (Index i = 0; i < grid.ny; ++i) {
    for (Index j = 0; j < grid.nz; ++j) { radius(i, j) = poisson_radius(r0, alpha, frequency_norm(i, j, grid), k_max); }
  }

  MaskPlane const center = center_disk(grid, center_radius);
  MaskPlane mask = MaskPlane::Constant(grid.ny, grid.nz, false);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(grid.voxels()));
  for (Index p = 0; p < grid.voxels(); ++p) {
    if (!center(p / grid.nz, p % grid.nz)) { order.push_back(p); }
  }
  // Fisher-Yates on the raw stream for cross-platform reproducibility.
  Rng rng(seed);
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[rng.below(k)]);
  }

  for (Index const p : order) {
    Index const i = p / grid.nz;
    Index const j = p % grid.nz;
    double const rp = radius(i, j);
    Index const w = static_cast<Index>(std::ceil(rp));
    bool ok = true;
    for (Index a = std::max<Index>(0, i - w); ok && a <= std::min(grid.ny - 1, i + w); ++a) {
      for (Index b = std::max<Index>(0, j - w); b <= std::min(grid.nz - 1, j + w); ++b) {
        if (!mask(a, b)) { continue; }
        double const dy = static_cast<double>(a - i);
        double const dz = static_cast<double>(b - j);
        double const limit = std::min(rp, radius(a, b));
        if (dy * dy + dz * dz < limit * limit) {
          ok = false;
          break;
        }
      }
    }
    if (ok) { mask(i, j) = true; }
  }
  return mask || center;
}

double acceleration_of(MaskPlane const &mask)
{
  Index const sampled = mask.count();
  require(sampled > 0, ErrorCode::degenerate, "acceleration of a mask with no sampled points");
  return static_cast<double>(mask.size()) / static_cast<double>(sampled);
}

SamplingMask vd_poisson_mask(Grid grid, double target_R, double center_radius, std::uint64_t seed,
                             PoissonOptions const &opts)
{
  require(grid.ny >= 1 && grid.nz >= 1, ErrorCode::validation, "mask grid must be nonempty");
  require(std::isfinite(target_R) && target_R >= 1.0, ErrorCode::validation, "target R must be >= 1");
  require(center_radius >= 0.0 && center_radius < 0.5 * static_cast<double>(std::min(grid.ny, grid.nz)),
          ErrorCode::validation, "center radius must be in [0, min(grid)/2)");

  SamplingMask out;
  out.seed = seed;
  out.center_radius = center_radius;
  out.target_R = target_R;
  if (target_R == 1.0) {
    out.bits = MaskPlane::Constant(grid.ny, grid.nz, true);
    return out;
  }

  auto const relative_miss = [&](MaskPlane const &m) { return std::abs(acceleration_of(m) - target_R) / target_R; };

  double lo = 0.0;
  double hi = static_cast<double>(std::max(grid.ny, grid.nz));
  MaskPlane const sparsest = poisson_disk_fill(grid, hi, opts.alpha, center_radius, seed);
  double const r_max = acceleration_of(sparsest);
  if (r_max < target_R * (1.0 - opts.tolerance)) {
    std::ostringstream msg;
    msg << "cannot reach R=" << target_R << " on " << grid.ny << "x" << grid.nz << " with center radius "
        << center_radius << "; achievable R range is [1, " << r_max << "]";
    throw Error(ErrorCode::calibration, msg.str());
  }

  MaskPlane best = sparsest;
  double best_r0 = hi;
  double best_miss = relative_miss(sparsest);
  for (int it = 0; it < opts.max_iterations && best_miss > opts.early_stop; ++it) {
    double const mid = 0.5 * (lo + hi);
    MaskPlane candidate = poisson_disk_fill(grid, mid, opts.alpha, center_radius, seed);
    double const r = acceleration_of(candidate);
    double const miss = relative_miss(candidate);
    if (miss < best_miss) {
      best_miss = miss;
      best = candidate;
      best_r0 = mid;
    }
    (r < target_R ? lo : hi) = mid;
  }
  if (best_miss > opts.tolerance) {
    std::ostringstream msg;
    msg << "calibration for R=" << target_R << " ended " << best_miss * 100.0 << "% off target; achievable R range is [1, "
        << r_max << "]";
    throw Error(ErrorCode::calibration, msg.str());
  }
  out.bits = std::move(best);
  out.r0 = best_r0;
  out.alpha = opts.alpha;
  return out;
}

MaskSet complementary_mask_set(Grid grid, double target_R, double center_radius, Index contrasts,
                               std::uint64_t base_seed, PoissonOptions const &opts)
{
  require(contrasts >= 1, ErrorCode::validation, "mask set needs at least one contrast");
  MaskSet set;
  set.masks.reserve(static_cast<std::size_t>(contrasts));
  for (Index n = 0; n < contrasts; ++n) {
    SamplingMask m = vd_poisson_mask(grid, target_R, center_radius, base_seed + static_cast<std::uint64_t>(n), opts);
    m.contrast = n;
    set.masks.push_back(std::move(m));
  }
  return set;
}

} // namespace mcinr
