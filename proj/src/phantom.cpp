#include "mcinr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mcinr/rng.hpp"

namespace mcinr {

void PhantomSpec::validate() const
{
  require(grid.ny >= 8 && grid.nz >= 8, ErrorCode::validation,
          "phantom grid must be at least 8x8, got " + std::to_string(grid.ny) + "x" + std::to_string(grid.nz));
  require(!ti.empty(), ErrorCode::validation, "phantom needs at least one inversion time");
  for (std::size_t n = 0; n < ti.size(); ++n) {
    require(std::isfinite(ti[n]) && ti[n] >= 0.0, ErrorCode::validation, "inversion times must be finite and >= 0");
    if (n > 0) { require(ti[n] > ti[n - 1], ErrorCode::validation, "inversion times must be strictly increasing"); }
  }
  for (auto const &[label, tc] : tissues) {
    require(tc.m0 >= 0.0, ErrorCode::validation, "tissue m0 must be >= 0");
    if (label == Tissue::background) {
      require(tc.m0 == 0.0, ErrorCode::validation, "background tissue must have m0 = 0");
    } else {
      require(tc.t1 > 0.0, ErrorCode::validation, "tissue t1 must be > 0");
    }
  }
  for (auto const &e : ellipses) {
    require(e.ay > 0.0 && e.az > 0.0 && e.ax > 0.0, ErrorCode::validation, "ellipse semi-axes must be > 0");
    require(e.label == Tissue::background || tissues.contains(e.label), ErrorCode::validation,
            "ellipse label " + std::to_string(static_cast<int>(e.label)) + " missing from tissue table");
  }
}

std::vector<double> ti_schedule(Index count, double first, double spacing)
{
  std::vector<double> ti(static_cast<std::size_t>(count));
  for (Index n = 0; n < count; ++n) { ti[static_cast<std::size_t>(n)] = first + static_cast<double>(n) * spacing; }
  return ti;
}

std::map<Tissue, TissueClass> default_tissues()
{
  return {
    {Tissue::wm, {Tissue::wm, 850.0, 0.69}},
    {Tissue::gm, {Tissue::gm, 1350.0, 0.80}},
    {Tissue::csf, {Tissue::csf, 4200.0, 1.00}},
  };
}

PhantomSpec default_brain_spec(Grid grid)
{
  PhantomSpec spec;
  spec.grid = grid;
  spec.tissues = default_tissues();
  spec.ti = ti_schedule();
  // clang-format off
  spec.ellipses = {
    //  cy     cz     ay     az    rot   label          cx    ax
    { 0.00,  0.00,  0.88,  0.72,   0.0, Tissue::csf,  0.00, 1.00},
    { 0.00,  0.00,  0.83,  0.67,   0.0, Tissue::gm,   0.00, 0.95},
    { 0.02,  0.00,  0.68,  0.53,   0.0, Tissue::wm,   0.00, 0.85},
    // sulci
    { 0.55,  0.28,  0.20,  0.05,  40.0, Tissue::gm,   0.05, 0.60},
    { 0.52, -0.30,  0.18,  0.05, -35.0, Tissue::gm,  -0.05, 0.60},
    {-0.58,  0.22,  0.17,  0.05, -30.0, Tissue::gm,   0.00, 0.55},
    {-0.55, -0.26,  0.17,  0.05,  35.0, Tissue::gm,   0.10, 0.55},
    { 0.02,  0.50,  0.05,  0.14,   0.0, Tissue::gm,  -0.10, 0.50},
    { 0.02, -0.50,  0.05,  0.14,   0.0, Tissue::gm,   0.10, 0.50},
    {-0.62,  0.00,  0.24,  0.05,  90.0, Tissue::csf,  0.00, 0.70},
    // deep grey nuclei
    { 0.06,  0.23,  0.17,  0.09,  15.0, Tissue::gm,   0.05, 0.35},
    { 0.06, -0.23,  0.17,  0.09, -15.0, Tissue::gm,   0.05, 0.35},
    // lateral ventricles
    {-0.08,  0.09,  0.32,  0.06,  -8.0, Tissue::csf,  0.10, 0.40},
    {-0.08, -0.09,  0.32,  0.06,   8.0, Tissue::csf,  0.10, 0.40},
  };
  // clang-format on
  return spec;
}

PhantomSpec slice_at(PhantomSpec const &spec, double x)
{
  PhantomSpec out = spec;
  out.ellipses.clear();
  for (auto const &e : spec.ellipses) {
    if (std::isinf(e.ax)) {
      out.ellipses.push_back(e);
      continue;
    }
    double const u = (x - e.cx) / e.ax;
    if (std::abs(u) >= 1.0) { continue; }
    double const scale = std::sqrt(1.0 - u * u);
    Ellipse cut = e;
    cut.ay *= scale;
    cut.az *= scale;
    cut.ax = std::numeric_limits<double>::infinity();
    out.ellipses.push_back(cut);
  }
  return out;
}

bool inside(Ellipse const &e, double y, double z)
{
  double const theta = e.rotation_deg * std::numbers::pi / 180.0;
  double const c = std::cos(theta);
  double const s = std::sin(theta);
  double const dy = y - e.cy;
  double const dz = z - e.cz;
  double const u = (c * dy + s * dz) / e.ay;
  double const v = (-s * dy + c * dz) / e.az;
  return u * u + v * v <= 1.0;
}

LabelPlane render_tissue_map(PhantomSpec const &spec)
{
  spec.validate();
  Index const ny = spec.grid.ny;
  Index const nz = spec.grid.nz;
  LabelPlane labels = LabelPlane::Zero(ny, nz);
  for (auto const &e : spec.ellipses) {
    // Conservative voxel bounding box of the rotated ellipse.
    double const r = std::max(e.ay, e.az);
    auto const lo = [](double c, double rr, Index n) {
      return std::clamp<Index>(static_cast<Index>(std::floor((c - rr + 1.0) * 0.5 * static_cast<double>(n))) - 1, 0, n - 1);
    };
    auto const hi = [](double c, double rr, Index n) {
      return std::clamp<Index>(static_cast<Index>(std::ceil((c + rr + 1.0) * 0.5 * static_cast<double>(n))) + 1, 0, n - 1);
    };
    for (Index i = lo(e.cy, r, ny); i <= hi(e.cy, r, ny); ++i) {
      double const y = normalized_coordinate(i, ny);
      for (Index j = lo(e.cz, r, nz); j <= hi(e.cz, r, nz); ++j) {
        if (inside(e, y, normalized_coordinate(j, nz))) { labels(i, j) = static_cast<std::uint8_t>(e.label); }
      }
    }
  }
  return labels;
}

MaskPlane support_mask(PhantomSpec const &spec)
{
  LabelPlane const labels = render_tissue_map(spec);
  MaskPlane support(labels.rows(), labels.cols());
  for (Index i = 0; i < labels.rows(); ++i) {
    for (Index j = 0; j < labels.cols(); ++j) {
      auto const it = spec.tissues.find(static_cast<Tissue>(labels(i, j)));
      support(i, j) = it != spec.tissues.end() && it->second.m0 > 0.0;
    }
  }
  return support;
}

Complex<double> ir_signal(double m0, double t1, double ti)
{
  require(t1 > 0.0, ErrorCode::domain, "ir_signal: t1 must be > 0, got " + std::to_string(t1));
  require(ti >= 0.0, ErrorCode::domain, "ir_signal: ti must be >= 0, got " + std::to_string(ti));
  return {m0 * (1.0 - 2.0 * std::exp(-ti / t1)), 0.0};
}

ContrastStack<double> synthesize_contrasts(PhantomSpec const &spec)
{
  LabelPlane const labels = render_tissue_map(spec);
  ContrastStack<double> stack(spec.contrasts(), spec.grid);
  for (auto const &[label, tc] : spec.tissues) {
    if (tc.m0 == 0.0) { continue; }
    auto const where = labels == static_cast<std::uint8_t>(label);
    for (Index n = 0; n < spec.contrasts(); ++n) {
      Complex<double> const value = ir_signal(tc.m0, tc.t1, spec.ti[static_cast<std::size_t>(n)]);
      stack[n] = where.select(Plane<double>::Constant(spec.grid.ny, spec.grid.nz, value), stack[n]);
    }
  }
  return stack;
}

CoilMaps<double> make_coil_maps(Grid grid, Index coils, double smoothness, std::uint64_t seed)
{
  require(coils >= 1, ErrorCode::validation, "coil count must be >= 1");
  require(smoothness > 0.0, ErrorCode::validation, "coil smoothness must be > 0");
  require(grid.ny >= 1 && grid.nz >= 1, ErrorCode::validation, "coil grid must be nonempty");

  Rng rng(seed);
  double const offset = rng.uniform(0.0, 2.0 * std::numbers::pi / static_cast<double>(coils));
  CoilMaps<double> out;
  RealPlane<double> sos = RealPlane<double>::Zero(grid.ny, grid.nz);
  for (Index c = 0; c < coils; ++c) {
    double const phi = offset + 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils);
    double const scale = 1.0 / std::max(std::abs(std::cos(phi)), std::abs(std::sin(phi)));
    double const py = std::cos(phi) * scale;
    double const pz = std::sin(phi) * scale;
    double const gy = rng.uniform(-0.5, 0.5) * std::numbers::pi;
    double const gz = rng.uniform(-0.5, 0.5) * std::numbers::pi;
    double const phase0 = rng.uniform(-std::numbers::pi, std::numbers::pi);

    Plane<double> map(grid.ny, grid.nz);
    for (Index i = 0; i < grid.ny; ++i) {
      double const y = normalized_coordinate(i, grid.ny);
      for (Index j = 0; j < grid.nz; ++j) {
        double const z = normalized_coordinate(j, grid.nz);
        double const d2 = (y - py) * (y - py) + (z - pz) * (z - pz);
        double const mag = std::exp(-d2 / (2.0 * smoothness * smoothness));
        map(i, j) = std::polar(mag, phase0 + gy * y + gz * z);
      }
    }
    sos += map.abs2();
    out.maps.push_back(std::move(map));
  }
  RealPlane<double> const inv = sos.sqrt().inverse();
  for (auto &map : out.maps) { map *= inv.cast<Complex<double>>(); }
  return out;
}

KSpace<double> add_noise(KSpace<double> const &kspace, MaskSet const &masks, double sigma, std::uint64_t seed)
{
  require(sigma >= 0.0, ErrorCode::validation, "noise sigma must be >= 0");
  require(masks.contrasts() == kspace.contrasts && masks.grid() == kspace.grid(), ErrorCode::shape,
          "add_noise: mask set does not match k-space shape");
  KSpace<double> out = kspace;
  if (sigma == 0.0) { return out; }
  Rng rng(seed);
  double const s = sigma / std::numbers::sqrt2;
  for (Index c = 0; c < kspace.coils; ++c) {
    for (Index n = 0; n < kspace.contrasts; ++n) {
      auto &plane = out(c, n);
      auto const &m = masks[n];
      for (Index i = 0; i < plane.rows(); ++i) {
        for (Index j = 0; j < plane.cols(); ++j) {
          if (!m(i, j)) { continue; }
          double const re = rng.normal();
          double const im = rng.normal();
          plane(i, j) += Complex<double>(s * re, s * im);
        }
      }
    }
  }
  return out;
}

} // namespace mcinr
