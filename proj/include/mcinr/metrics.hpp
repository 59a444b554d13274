#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcinr/types.hpp"

namespace mcinr {

/// Magnitude images of one slice after normalization, values in [0, 1].
using MagnitudeStack = std::vector<RealPlane<double>>;

struct PercentileWindow
{
  double lo = 0.0;
  double hi = 1.0;
};

MagnitudeStack magnitude(ContrastStack<double> const &stack);

/// Linear-interpolated percentile (numpy "linear" rule) of values, p in [0, 100].
double percentile(std::vector<double> values, double p);

/// One (lo, hi) pair from the magnitudes of all masked voxels of every contrast of every stack.
/// masks holds one plane per stack or a single plane shared by all.
PercentileWindow pooled_window(std::vector<ContrastStack<double>> const &stacks, std::vector<MaskPlane> const &masks,
                               double p_lo, double p_hi);

/// Maps every stack's magnitudes by (x - lo) / (hi - lo), clipped to [0, 1], using the pooled window.
std::vector<MagnitudeStack> joint_percentile_normalize(std::vector<ContrastStack<double>> const &stacks,
                                                       std::vector<MaskPlane> const &masks, double p_lo, double p_hi,
                                                       PercentileWindow *window = nullptr);

std::vector<MagnitudeStack> apply_window(std::vector<ContrastStack<double>> const &stacks, PercentileWindow window);

/// 10 log10(1 / MSE) over masked voxels; std::nullopt when the images are identical there.
std::optional<double> psnr(RealPlane<double> const &ref, RealPlane<double> const &test, MaskPlane const &mask);

struct SsimOptions
{
  Index window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean local SSIM over window centers that lie in the mask. Windows are
/// Gaussian weighted and must fit entirely inside the image.
double ssim(RealPlane<double> const &ref, RealPlane<double> const &test, MaskPlane const &mask,
            SsimOptions const &opts = {});

struct ContrastMetric
{
  Index slice = 0;
  Index contrast = 0;
  double ssim = 0.0;
  std::optional<double> psnr;
};

struct Summary
{
  double mean = 0.0;
  double std = 0.0;
};

struct MetricReport
{
  std::vector<ContrastMetric> entries;

  Summary ssim_all() const;       // over every (slice, contrast)
  Summary ssim_by_slice() const;  // over per-slice means
  Summary ssim_by_contrast() const;
  /// nullopt when every pair was identical; identical pairs are otherwise skipped.
  std::optional<Summary> psnr_all() const;
  std::optional<Summary> psnr_by_slice() const;
  std::optional<Summary> psnr_by_contrast() const;
  Index identical_count() const;

  double ssim_of_contrast(Index contrast) const;
  std::optional<double> psnr_of_contrast(Index contrast) const;

  /// Machine-parsable key=value lines.
  std::string to_text() const;
};

struct MetricOptions
{
  double p_lo = 1.0;
  double p_hi = 99.0;
  SsimOptions ssim;
};

/// Normalizes reference and test volumes separately (each pooled over all its
/// contrasts and slices), then scores every slice/contrast inside the eval masks.
MetricReport evaluate(std::vector<ContrastStack<double>> const &ref, std::vector<ContrastStack<double>> const &test,
                      std::vector<MaskPlane> const &masks, MetricOptions const &opts = {});

struct TableCell
{
  std::string method;
  std::string condition;
  MetricReport report;
};

/// Method x condition grid of "mean +- std" SSIM and PSNR values.
std::string format_table(std::vector<TableCell> const &cells);

} // namespace mcinr
