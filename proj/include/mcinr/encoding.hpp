#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mcinr/rng.hpp"
#include "mcinr/types.hpp"

namespace mcinr {

/// Multiresolution hash-grid layout. Level l has resolution
/// floor(base * growth^l) cells per axis, growth = (finest / base)^(1 / (levels - 1)).
struct HashGridConfig
{
  int levels = 3;
  int features = 2;
  std::uint32_t table_size = 1u << 16;
  int base_resolution = 16;
  int finest_resolution = 64;

  void validate() const
  {
    require(levels >= 1, ErrorCode::validation, "hash grid needs at least one level");
    require(features >= 1, ErrorCode::validation, "hash grid needs at least one feature per level");
    require(table_size >= 1 && (table_size & (table_size - 1)) == 0, ErrorCode::validation,
            "hash table size must be a power of two");
    require(base_resolution >= 1 && base_resolution <= finest_resolution, ErrorCode::validation,
            "hash grid needs 1 <= base resolution <= finest resolution");
  }

  double growth() const
  {
    if (levels == 1) { return 1.0; }
    return std::exp((std::log(static_cast<double>(finest_resolution)) - std::log(static_cast<double>(base_resolution))) /
                    static_cast<double>(levels - 1));
  }

  Index resolution(int level) const
  {
    double const r = static_cast<double>(base_resolution) * std::pow(growth(), level);
    return std::max<Index>(1, static_cast<Index>(std::floor(r + 1e-9)));
  }

  /// Vertices per axis.
  Index side(int level) const { return resolution(level) + 1; }

  bool dense(int level) const
  {
    Index const s = side(level);
    return s * s <= static_cast<Index>(table_size);
  }

  Index output_width() const { return static_cast<Index>(levels) * features; }

  /// Defaults scaled to the image: finest level at the larger grid dimension.
  /// Finer levels let the head fit k-space noise once it is weighted by distance.
  static HashGridConfig for_grid(Grid grid)
  {
    HashGridConfig cfg;
    cfg.finest_resolution = static_cast<int>(std::max(grid.ny, grid.nz));
    cfg.base_resolution = std::min(cfg.base_resolution, cfg.finest_resolution);
    return cfg;
  }
};

/// Row-major index on levels whose vertex grid fits the table, spatial hash otherwise.
inline std::uint32_t hash_index(int level, std::uint32_t iy, std::uint32_t iz, HashGridConfig const &cfg)
{
  if (cfg.dense(level)) { return static_cast<std::uint32_t>(iy * static_cast<std::uint32_t>(cfg.side(level)) + iz); }
  std::uint32_t const h = (iy * 1u) ^ (iz * 2654435761u);
  return h & (cfg.table_size - 1u);
}

template <class Scalar_>
using FeatureTable = Eigen::Matrix<Scalar_, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar_>
struct HashGridTables
{
  HashGridConfig config;
  std::vector<FeatureTable<Scalar_>> levels; // each table_size x features

  static HashGridTables zeros(HashGridConfig const &cfg)
  {
    cfg.validate();
    HashGridTables t;
    t.config = cfg;
    for (int l = 0; l < cfg.levels; ++l) { t.levels.push_back(FeatureTable<Scalar_>::Zero(cfg.table_size, cfg.features)); }
    return t;
  }

  /// Uniform in [-1e-4, 1e-4].
  static HashGridTables random(HashGridConfig const &cfg, Rng &rng)
  {
    HashGridTables t = zeros(cfg);
    for (auto &table : t.levels) {
      for (Index k = 0; k < table.size(); ++k) { table.data()[k] = static_cast<Scalar_>(rng.uniform(-1e-4, 1e-4)); }
    }
    return t;
  }

  template <class Other_>
  HashGridTables<Other_> cast() const
  {
    HashGridTables<Other_> t;
    t.config = config;
    for (auto const &table : levels) { t.levels.push_back(table.template cast<Other_>()); }
    return t;
  }
};

/// Touched vertices and bilinear weights of one coordinate at one level.
struct CornerSet
{
  std::array<std::uint32_t, 4> index{};
  std::array<double, 4> weight{};
};

namespace detail {

inline CornerSet corners(double y, double z, int level, HashGridConfig const &cfg)
{
  Index const res = cfg.resolution(level);
  double const py = y * static_cast<double>(res);
  double const pz = z * static_cast<double>(res);
  Index const iy = std::min<Index>(static_cast<Index>(std::floor(py)), res - 1);
  Index const iz = std::min<Index>(static_cast<Index>(std::floor(pz)), res - 1);
  double const ty = py - static_cast<double>(iy);
  double const tz = pz - static_cast<double>(iz);
  auto const uy = static_cast<std::uint32_t>(iy);
  auto const uz = static_cast<std::uint32_t>(iz);
  CornerSet cs;
  cs.index = {hash_index(level, uy, uz, cfg), hash_index(level, uy + 1, uz, cfg), hash_index(level, uy, uz + 1, cfg),
              hash_index(level, uy + 1, uz + 1, cfg)};
  cs.weight = {(1.0 - ty) * (1.0 - tz), ty * (1.0 - tz), (1.0 - ty) * tz, ty * tz};
  return cs;
}

inline bool clamp_unit(double &v)
{
  if (v >= 0.0 && v <= 1.0) { return false; }
  v = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  return true;
}

} // namespace detail

/// Feature vector of length levels * features for a coordinate in [0, 1]^2.
/// Out-of-range coordinates are clamped; *clamped reports it when provided.
template <class Scalar_>
vec_type<Scalar_> encode(Eigen::Vector2d coord, HashGridTables<Scalar_> const &tables, bool *clamped = nullptr)
{
  auto const &cfg = tables.config;
  bool const c0 = detail::clamp_unit(coord[0]);
  bool const c1 = detail::clamp_unit(coord[1]);
  if (clamped) { *clamped = c0 || c1; }
  vec_type<Scalar_> out = vec_type<Scalar_>::Zero(cfg.output_width());
  for (int l = 0; l < cfg.levels; ++l) {
    CornerSet const cs = detail::corners(coord[0], coord[1], l, cfg);
    for (int k = 0; k < 4; ++k) {
      out.segment(l * cfg.features, cfg.features) +=
        static_cast<Scalar_>(cs.weight[k]) * tables.levels[l].row(cs.index[k]).transpose();
    }
  }
  return out;
}

struct TableContribution
{
  int level = 0;
  std::uint32_t index = 0;
  int feature = 0;
  double value = 0.0;
};

/// Table-gradient contributions of one coordinate: 4 corners x levels x features entries.
template <class Scalar_>
std::vector<TableContribution> encode_backward(Eigen::Vector2d coord, vec_type<Scalar_> const &upstream,
                                               HashGridTables<Scalar_> const &tables)
{
  auto const &cfg = tables.config;
  require(upstream.size() == cfg.output_width(), ErrorCode::shape, "upstream gradient width does not match encoding");
  detail::clamp_unit(coord[0]);
  detail::clamp_unit(coord[1]);
  std::vector<TableContribution> out;
  out.reserve(static_cast<std::size_t>(4 * cfg.output_width()));
  for (int l = 0; l < cfg.levels; ++l) {
    CornerSet const cs = detail::corners(coord[0], coord[1], l, cfg);
    for (int k = 0; k < 4; ++k) {
      for (int f = 0; f < cfg.features; ++f) {
        out.push_back({l, cs.index[k], f, cs.weight[k] * static_cast<double>(upstream[l * cfg.features + f])});
      }
    }
  }
  return out;
}

/// Precomputed corners for a fixed batch of coordinates (the voxel centers of a slice).
struct EncodingPlan
{
  HashGridConfig config;
  Index batch = 0;
  std::vector<CornerSet> corners; // level-major: corners[l * batch + b]

  EncodingPlan() = default;
  EncodingPlan(HashGridConfig const &cfg, std::vector<Eigen::Vector2d> const &coords)
    : config(cfg)
    , batch(static_cast<Index>(coords.size()))
  {
    cfg.validate();
    corners.reserve(static_cast<std::size_t>(cfg.levels) * coords.size());
    for (int l = 0; l < cfg.levels; ++l) {
      for (auto c : coords) {
        detail::clamp_unit(c[0]);
        detail::clamp_unit(c[1]);
        corners.push_back(detail::corners(c[0], c[1], l, cfg));
      }
    }
  }

  CornerSet const &at(int level, Index b) const { return corners[static_cast<std::size_t>(level * batch + b)]; }
};

/// Voxel centers ((i + 0.5) / ny, (j + 0.5) / nz), row-major over the grid.
inline std::vector<Eigen::Vector2d> voxel_coordinates(Grid grid)
{
  std::vector<Eigen::Vector2d> coords;
  coords.reserve(static_cast<std::size_t>(grid.voxels()));
  for (Index i = 0; i < grid.ny; ++i) {
    for (Index j = 0; j < grid.nz; ++j) {
      coords.emplace_back((static_cast<double>(i) + 0.5) / static_cast<double>(grid.ny),
                          (static_cast<double>(j) + 0.5) / static_cast<double>(grid.nz));
    }
  }
  return coords;
}

/// Features for the whole batch, one column per coordinate.
template <class Scalar_>
mat_type<Scalar_> encode_batch(EncodingPlan const &plan, HashGridTables<Scalar_> const &tables)
{
  auto const &cfg = plan.config;
  Index const F = cfg.features;
  mat_type<Scalar_> out = mat_type<Scalar_>::Zero(cfg.output_width(), plan.batch);
  for (int l = 0; l < cfg.levels; ++l) {
    auto const &table = tables.levels[l];
    for (Index b = 0; b < plan.batch; ++b) {
      CornerSet const &cs = plan.at(l, b);
      for (int k = 0; k < 4; ++k) {
        Scalar_ const w = static_cast<Scalar_>(cs.weight[k]);
        Scalar_ const *row = table.data() + static_cast<Index>(cs.index[k]) * F;
        for (Index f = 0; f < F; ++f) { out(l * F + f, b) += w * row[f]; }
      }
    }
  }
  return out;
}

/// Scatter-adds dL/dfeatures into table gradients in fixed (level, batch, corner) order.
template <class Scalar_>
void encode_batch_backward(EncodingPlan const &plan, mat_type<Scalar_> const &upstream, HashGridTables<Scalar_> &grads)
{
  auto const &cfg = plan.config;
  require(upstream.rows() == cfg.output_width() && upstream.cols() == plan.batch, ErrorCode::shape,
          "upstream feature gradient has wrong shape");
  Index const F = cfg.features;
  for (int l = 0; l < cfg.levels; ++l) {
    auto &table = grads.levels[l];
    for (Index b = 0; b < plan.batch; ++b) {
      CornerSet const &cs = plan.at(l, b);
      for (int k = 0; k < 4; ++k) {
        Scalar_ const w = static_cast<Scalar_>(cs.weight[k]);
        Scalar_ *row = table.data() + static_cast<Index>(cs.index[k]) * F;
        for (Index f = 0; f < F; ++f) { row[f] += w * upstream(l * F + f, b); }
      }
    }
  }
}

} // namespace mcinr
