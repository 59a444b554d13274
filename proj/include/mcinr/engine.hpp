#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcinr/adam.hpp"
#include "mcinr/encoding.hpp"
#include "mcinr/mlp.hpp"
#include "mcinr/operators.hpp"

namespace mcinr {

/// G_theta: hash-grid features followed by the MLP head, one complex value per contrast.
template <class Scalar_>
struct InrModel
{
  HashGridTables<Scalar_> tables;
  MlpParams<Scalar_> mlp;

  Index contrasts() const { return mlp.outputs() / 2; }

  static InrModel random(HashGridConfig const &hash, Index contrasts, Index hidden, std::uint64_t seed)
  {
    require(contrasts >= 1, ErrorCode::validation, "model needs at least one contrast");
    require(hidden >= 1, ErrorCode::validation, "model needs at least one hidden unit");
    Rng rng(seed);
    InrModel m;
    m.tables = HashGridTables<Scalar_>::random(hash, rng);
    m.mlp = MlpParams<Scalar_>::random(hash.output_width(), hidden, 2 * contrasts, rng);
    return m;
  }

  static InrModel zeros(HashGridConfig const &hash, Index contrasts, Index hidden)
  {
    InrModel m;
    m.tables = HashGridTables<Scalar_>::zeros(hash);
    m.mlp = MlpParams<Scalar_>::zeros(hash.output_width(), hidden, 2 * contrasts);
    return m;
  }

  /// Visits every trainable block as (pointer, size) in a fixed order.
  template <class Fn_>
  void for_each_block(Fn_ &&fn)
  {
    for (auto &t : tables.levels) { fn(t.data(), t.size()); }
    fn(mlp.w0.data(), mlp.w0.size());
    fn(mlp.b0.data(), mlp.b0.size());
    fn(mlp.w1.data(), mlp.w1.size());
    fn(mlp.b1.data(), mlp.b1.size());
    fn(mlp.w2.data(), mlp.w2.size());
    fn(mlp.b2.data(), mlp.b2.size());
  }

  Index parameter_count()
  {
    Index n = 0;
    for_each_block([&n](Scalar_ *, Index size) { n += size; });
    return n;
  }

  template <class Other_>
  InrModel<Other_> cast() const
  {
    return {tables.template cast<Other_>(), mlp.template cast<Other_>()};
  }
};

/// Reinterprets the 2N x B head output as N complex planes on the grid.
template <class Scalar_>
ContrastStack<double> channels_to_stack(mat_type<Scalar_> const &out, Grid grid)
{
  require(out.rows() % 2 == 0 && out.cols() == grid.voxels(), ErrorCode::shape, "head output does not match grid");
  Index const N = out.rows() / 2;
  ContrastStack<double> stack(N, grid);
  for (Index n = 0; n < N; ++n) {
    for (Index b = 0; b < grid.voxels(); ++b) {
      stack[n](b / grid.nz, b % grid.nz) = {static_cast<double>(out(2 * n, b)), static_cast<double>(out(2 * n + 1, b))};
    }
  }
  return stack;
}

/// encode + mlp_forward at every voxel center.
template <class Scalar_>
ContrastStack<double> evaluate_image(InrModel<Scalar_> const &model, Grid grid)
{
  EncodingPlan const plan(model.tables.config, voxel_coordinates(grid));
  return channels_to_stack<Scalar_>(mlp_forward<Scalar_>(encode_batch(plan, model.tables), model.mlp), grid);
}

template <class Scalar_>
struct ModelGradients
{
  double loss = 0.0;
  ContrastStack<double> image;
  InrModel<Scalar_> grads;
};

/// Weighted data-consistency loss of the model's image and its gradient with
/// respect to every trainable parameter.
template <class Scalar_>
ModelGradients<Scalar_> loss_and_model_gradients(InrModel<Scalar_> const &model, EncodingPlan const &plan,
                                                 KSpace<double> const &data, CoilMaps<double> const &coils,
                                                 MaskSet const &masks, RealPlane<double> const &weights)
{
  Grid const grid = data.grid();
  require(plan.batch == grid.voxels(), ErrorCode::shape, "encoding plan does not cover the grid");
  require(model.contrasts() == data.contrasts, ErrorCode::shape, "model contrast count does not match data");

  mat_type<Scalar_> const features = encode_batch(plan, model.tables);
  MlpCache<Scalar_> cache;
  mat_type<Scalar_> const out = mlp_forward(features, model.mlp, &cache);

  ModelGradients<Scalar_> r;
  r.image = channels_to_stack<Scalar_>(out, grid);
  auto lg = weighted_loss_and_gradient<double>(r.image, coils, masks, data, weights, true);
  r.loss = lg.loss;

  // lg.gradient holds 2 dL/dconj(d); the head wants dL/dconj(out).
  Index const N = data.contrasts;
  Eigen::Matrix<Complex<double>, Eigen::Dynamic, Eigen::Dynamic> upstream(N, grid.voxels());
  for (Index n = 0; n < N; ++n) {
    for (Index b = 0; b < grid.voxels(); ++b) { upstream(n, b) = 0.5 * lg.gradient[n](b / grid.nz, b % grid.nz); }
  }
  MlpGradients<Scalar_> mg = mlp_backward(cache, model.mlp, wirtinger_to_channels<Scalar_>(upstream));
  r.grads.mlp = std::move(mg.params);
  r.grads.tables = HashGridTables<Scalar_>::zeros(model.tables.config);
  encode_batch_backward(plan, mg.features, r.grads.tables);
  return r;
}

struct EpochLog
{
  Index slice = 0;
  int attempt = 0;
  int epoch = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

enum class DataScaling
{
  none,
  kspace_max,   // divide by the largest |D|
  zero_filled,  // divide by the largest |adjoint(D)|
};

struct TrainConfig
{
  int epochs = 400;
  double lr_tables = 1e-3;
  double lr_mlp = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-15;
  std::uint64_t seed = 0;
  Index hidden = 64;
  std::optional<HashGridConfig> hash; // HashGridConfig::for_grid when unset
  DataScaling scaling = DataScaling::zero_filled;
  int max_restarts = 1;
  std::function<void(EpochLog const &)> on_epoch;

  void validate() const
  {
    require(epochs >= 1, ErrorCode::validation, "epochs must be >= 1");
    require(lr_tables > 0.0 && lr_mlp > 0.0, ErrorCode::validation, "learning rates must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::validation,
            "Adam betas must be in [0, 1)");
    require(eps >= 0.0, ErrorCode::validation, "Adam epsilon must be >= 0");
    require(hidden >= 1, ErrorCode::validation, "hidden width must be >= 1");
    if (hash) { hash->validate(); }
  }

  HashGridConfig hash_for(Grid grid) const { return hash ? *hash : HashGridConfig::for_grid(grid); }
};

template <class Scalar_>
struct SliceResult
{
  ContrastStack<double> images;
  std::vector<double> loss_history;
  double scale = 1.0;
  int restarts = 0;
  InrModel<Scalar_> model;
};

namespace detail {

inline double data_scale(KSpace<double> const &data, CoilMaps<double> const &coils, MaskSet const &masks,
                         DataScaling scaling)
{
  double s = 1.0;
  switch (scaling) {
  case DataScaling::none: break;
  case DataScaling::kspace_max: s = max_magnitude(data); break;
  case DataScaling::zero_filled: {
    auto const zf = adjoint_model(data, coils, masks);
    s = 0.0;
    for (auto const &im : zf.images) { s = std::max(s, im.abs().maxCoeff()); }
    break;
  }
  }
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

} // namespace detail

/// Trains one model on one slice. The image of the final epoch is the reconstruction.
template <class Scalar_ = float>
SliceResult<Scalar_> reconstruct_slice(KSpace<double> const &data, CoilMaps<double> const &coils, MaskSet const &masks,
                                       RealPlane<double> const &weights, TrainConfig const &cfg, Index slice = 0)
{
  cfg.validate();
  detail::check_kspace_shapes(data, coils, masks);
  Grid const grid = data.grid();
  HashGridConfig const hash = cfg.hash_for(grid);
  EncodingPlan const plan(hash, voxel_coordinates(grid));

  double const scale = detail::data_scale(data, coils, masks, cfg.scaling);
  KSpace<double> scaled = data;
  for (auto &p : scaled.planes) { p /= scale; }

  double lr_factor = 1.0;
  for (int attempt = 0;; ++attempt) {
    SliceResult<Scalar_> result;
    result.scale = scale;
    result.restarts = attempt;
    result.model = InrModel<Scalar_>::random(hash, data.contrasts, cfg.hidden, cfg.seed);

    std::vector<AdamMoments<Scalar_>> moments;
    result.model.for_each_block([&moments](Scalar_ *, Index size) { moments.emplace_back(size); });
    AdamConfig const table_opt{cfg.lr_tables * lr_factor, cfg.beta1, cfg.beta2, cfg.eps};
    AdamConfig const mlp_opt{cfg.lr_mlp * lr_factor, cfg.beta1, cfg.beta2, cfg.eps};
    std::size_t const table_blocks = result.model.tables.levels.size();

    auto const t0 = std::chrono::steady_clock::now();
    bool diverged = false;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto step = loss_and_model_gradients(result.model, plan, scaled, coils, masks, weights);
      if (!std::isfinite(step.loss)) {
        diverged = true;
        break;
      }
      result.loss_history.push_back(step.loss);
      if (cfg.on_epoch) {
        double const ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        cfg.on_epoch(EpochLog{slice, attempt, epoch, step.loss, ms});
      }
      if (epoch + 1 == cfg.epochs) {
        result.images = std::move(step.image);
        break;
      }
      std::vector<Scalar_ const *> grad_blocks;
      step.grads.for_each_block([&grad_blocks](Scalar_ *p, Index) { grad_blocks.push_back(p); });
      std::size_t k = 0;
      result.model.for_each_block([&](Scalar_ *p, Index) {
        adam_step(p, grad_blocks[k], moments[k], k < table_blocks ? table_opt : mlp_opt, epoch + 1);
        ++k;
      });
    }

    if (!diverged) {
      for (auto &im : result.images.images) { im *= scale; }
      return result;
    }
    if (attempt >= cfg.max_restarts) {
      std::ostringstream msg;
      msg << "training diverged on slice " << slice << " at epoch " << result.loss_history.size() << " (attempt "
          << attempt + 1 << ", lr scale " << lr_factor << ", last finite loss "
          << (result.loss_history.empty() ? std::nan("") : result.loss_history.back()) << ")";
      throw Error(ErrorCode::divergence, msg.str());
    }
    lr_factor *= 0.1;
  }
}

template <class Scalar_>
struct VolumeResult
{
  std::vector<std::optional<SliceResult<Scalar_>>> slices;
  std::vector<std::string> errors; // empty string when the slice succeeded

  bool ok() const
  {
    for (auto const &e : errors) {
      if (!e.empty()) { return false; }
    }
    return true;
  }
};

/// Independent reconstruct_slice per slice, all with the same cfg (and seed),
/// so results do not depend on scheduling or worker count.
/// coils holds either one map set shared by all slices or one per slice.
template <class Scalar_ = float>
VolumeResult<Scalar_> reconstruct_volume(std::vector<KSpace<double>> const &slices,
                                         std::vector<CoilMaps<double>> const &coils, MaskSet const &masks,
                                         RealPlane<double> const &weights, TrainConfig const &cfg, int workers = 1,
                                         std::vector<Index> const &order = {})
{
  require(!coils.empty() && (coils.size() == 1 || coils.size() == slices.size()), ErrorCode::shape,
          "need one coil map set or one per slice");
  std::vector<Index> schedule = order;
  if (schedule.empty()) {
    for (Index s = 0; s < static_cast<Index>(slices.size()); ++s) { schedule.push_back(s); }
  }
  require(schedule.size() == slices.size(), ErrorCode::validation, "slice order must list every slice once");

  VolumeResult<Scalar_> out;
  out.slices.resize(slices.size());
  out.errors.resize(slices.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < schedule.size(); k = next++) {
      auto const s = static_cast<std::size_t>(schedule[k]);
      try {
        out.slices[s] = reconstruct_slice<Scalar_>(slices[s], coils.size() == 1 ? coils[0] : coils[s], masks, weights,
                                                   cfg, static_cast<Index>(s));
      } catch (std::exception const &e) {
        out.errors[s] = e.what();
      }
    }
  };
  int const n = std::max(1, std::min<int>(workers, static_cast<int>(slices.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) { pool.emplace_back(work); }
  work();
  for (auto &t : pool) { t.join(); }
  return out;
}

} // namespace mcinr
