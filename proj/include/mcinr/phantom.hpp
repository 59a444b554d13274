#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "mcinr/sampling.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

enum class Tissue : std::uint8_t
{
  background = 0,
  wm = 1,
  gm = 2,
  csf = 3,
};

struct TissueClass
{
  Tissue label = Tissue::background;
  double t1 = 0.0; // ms
  double m0 = 0.0;
};

/// Ellipse in normalized in-plane coordinates [-1, 1]^2. The through-plane
/// center/semi-axis turn it into an ellipsoid when a slice is cut with slice_at().
struct Ellipse
{
  double cy = 0.0;
  double cz = 0.0;
  double ay = 1.0;
  double az = 1.0;
  double rotation_deg = 0.0;
  Tissue label = Tissue::background;
  double cx = 0.0;
  double ax = std::numeric_limits<double>::infinity();
};

struct PhantomSpec
{
  Grid grid{64, 64};
  std::vector<Ellipse> ellipses;
  std::map<Tissue, TissueClass> tissues;
  std::vector<double> ti; // ms, strictly increasing

  Index contrasts() const { return static_cast<Index>(ti.size()); }
  void validate() const;
};

/// TI_n = first + n * spacing, n = 0..count-1.
std::vector<double> ti_schedule(Index count = 10, double first = 26.0, double spacing = 249.05);

std::map<Tissue, TissueClass> default_tissues();

/// Axial brain-like slice: scalp CSF, cortex, white matter, ventricles, deep grey nuclei.
PhantomSpec default_brain_spec(Grid grid = {64, 64});

/// 2D cross-section of the ellipsoid stack at through-plane position x.
PhantomSpec slice_at(PhantomSpec const &spec, double x);

/// Voxel center in normalized coordinates.
inline double normalized_coordinate(Index i, Index n) { return 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n) - 1.0; }

bool inside(Ellipse const &e, double y, double z);

LabelPlane render_tissue_map(PhantomSpec const &spec);
MaskPlane support_mask(PhantomSpec const &spec);

/// Signed ideal inversion recovery m0 * (1 - 2 exp(-ti / t1)).
Complex<double> ir_signal(double m0, double t1, double ti);

ContrastStack<double> synthesize_contrasts(PhantomSpec const &spec);

CoilMaps<double> make_coil_maps(Grid grid, Index coils, double smoothness, std::uint64_t seed);

/// Adds i.i.d. complex Gaussian noise (variance sigma^2, split evenly between
/// real and imaginary parts) at sampled locations only.
KSpace<double> add_noise(KSpace<double> const &kspace, MaskSet const &masks, double sigma, std::uint64_t seed);

} // namespace mcinr
