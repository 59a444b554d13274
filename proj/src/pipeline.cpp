#include "mcinr/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>

#include "mcinr/operators.hpp"
#include "mcinr/png.hpp"

namespace mcinr {

namespace fs = std::filesystem;

std::vector<ContrastStack<double>> render_volume(PhantomSpec const &spec, std::vector<double> const &slices,
                                                 std::vector<MaskPlane> *support)
{
  require(!slices.empty(), ErrorCode::validation, "volume needs at least one slice");
  std::vector<ContrastStack<double>> out;
  if (support) { support->clear(); }
  for (double x : slices) {
    PhantomSpec const cut = slice_at(spec, x);
    out.push_back(synthesize_contrasts(cut));
    if (support) { support->push_back(support_mask(cut)); }
  }
  return out;
}

MaskSet make_masks(Grid grid, Index contrasts, double R, double center_radius, std::uint64_t seed)
{
  if (R == 1.0) { return MaskSet::full(grid, contrasts); }
  return complementary_mask_set(grid, R, center_radius, contrasts, seed);
}

std::vector<KSpace<double>> simulate_kspace(std::vector<ContrastStack<double>> const &truth,
                                            CoilMaps<double> const &coils, MaskSet const &masks, double relative,
                                            std::uint64_t seed, double *sigma)
{
  require(relative >= 0.0, ErrorCode::validation, "relative noise level must be >= 0");
  std::vector<KSpace<double>> clean;
  double peak = 0.0;
  for (auto const &stack : truth) {
    clean.push_back(forward_model(stack, coils, masks));
    peak = std::max(peak, max_magnitude(clean.back()));
  }
  double const s = relative * peak;
  if (sigma) { *sigma = s; }
  std::vector<KSpace<double>> out;
  for (std::size_t k = 0; k < clean.size(); ++k) { out.push_back(add_noise(clean[k], masks, s, seed + k)); }
  return out;
}

Study simulate_study(PipelineConfig const &cfg)
{
  cfg.validate();
  Study st;
  st.truth = render_volume(cfg.phantom, cfg.slices, &st.support);
  Grid const grid = cfg.phantom.grid;
  st.coils = make_coil_maps(grid, cfg.coils, cfg.coil_smoothness, cfg.coil_seed_value());
  st.masks = make_masks(grid, cfg.phantom.contrasts(), cfg.R, cfg.center_radius_value(), cfg.mask_seed_value());
  st.kspace = simulate_kspace(st.truth, st.coils, st.masks, cfg.noise_relative, cfg.noise_seed_value(), &st.sigma);
  return st;
}

std::vector<ContrastStack<double>> zero_filled(std::vector<KSpace<double>> const &kspace,
                                               CoilMaps<double> const &coils, MaskSet const &masks)
{
  std::vector<ContrastStack<double>> out;
  for (auto const &k : kspace) { out.push_back(adjoint_model(k, coils, masks)); }
  return out;
}

std::string format_epoch_log(EpochLog const &e)
{
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch slice=%ld attempt=%d epoch=%d loss=%.9e wall_ms=%.1f", static_cast<long>(e.slice),
                e.attempt, e.epoch, e.loss, e.wall_ms);
  return buf;
}

std::function<void(EpochLog const &)> epoch_logger(LogSink sink, int every, int epochs)
{
  if (!sink || every <= 0) { return {}; }
  auto mutex = std::make_shared<std::mutex>();
  return [sink = std::move(sink), every, epochs, mutex](EpochLog const &e) {
    if (e.epoch % every != 0 && e.epoch + 1 != epochs) { return; }
    std::string const line = format_epoch_log(e);
    std::lock_guard lock(*mutex);
    sink(line);
  };
}

InrRun run_inr(std::vector<KSpace<double>> const &kspace, CoilMaps<double> const &coils, MaskSet const &masks,
               TrainConfig cfg, std::uint64_t seed, int workers, LogSink sink, int log_every)
{
  require(!kspace.empty(), ErrorCode::validation, "no k-space slices to reconstruct");
  cfg.seed = seed;
  cfg.on_epoch = epoch_logger(std::move(sink), log_every, cfg.epochs);
  auto const W = distance_weights(kspace.front().grid());
  auto vol = reconstruct_volume<float>(kspace, {coils}, masks, W, cfg, workers);
  for (std::size_t s = 0; s < vol.errors.size(); ++s) {
    if (!vol.errors[s].empty()) { throw Error(ErrorCode::divergence, "slice " + std::to_string(s) + ": " + vol.errors[s]); }
  }
  InrRun run;
  for (auto &r : vol.slices) {
    run.images.push_back(std::move(r->images));
    run.loss.push_back(std::move(r->loss_history));
    run.models.push_back(std::move(r->model));
    run.scales.push_back(r->scale);
  }
  return run;
}

ArrayContainer loss_container(std::vector<std::vector<double>> const &loss)
{
  std::size_t const epochs = loss.empty() ? 0 : loss.front().size();
  std::vector<float> flat;
  for (auto const &l : loss) {
    require(l.size() == epochs, ErrorCode::shape, "loss traces differ in length");
    for (double v : l) { flat.push_back(static_cast<float>(v)); }
  }
  return pack_float32({static_cast<std::uint32_t>(loss.size()), static_cast<std::uint32_t>(epochs)}, flat);
}

void save_checkpoint(fs::path const &path, InrModel<float> const &model, double scale, Index slice)
{
  InrModel<float> copy = model;
  std::vector<float> flat;
  copy.for_each_block([&flat](float *p, Index n) { flat.insert(flat.end(), p, p + n); });
  write_container(path, pack_float32({static_cast<std::uint32_t>(flat.size())}, flat));

  json meta = {{"slice", slice},
               {"scale", scale},
               {"contrasts", model.contrasts()},
               {"hidden", model.mlp.w0.rows()},
               {"hash", to_json(model.tables.config)},
               {"parameters", flat.size()}};
  std::ofstream f(path.string() + ".json");
  require(static_cast<bool>(f), ErrorCode::io, "cannot write " + path.string() + ".json");
  f << meta.dump(2) << "\n";
}

InrModel<float> load_checkpoint(fs::path const &path, double *scale)
{
  json const meta = load_json(path.string() + ".json");
  HashGridConfig const hash = parse_hash_config(meta.at("hash"));
  InrModel<float> model = InrModel<float>::zeros(hash, meta.at("contrasts").get<Index>(), meta.at("hidden").get<Index>());
  auto const flat = unpack_float32(read_container(path));
  require(static_cast<Index>(flat.size()) == model.parameter_count(), ErrorCode::shape,
          "checkpoint holds " + std::to_string(flat.size()) + " parameters, layout needs " +
            std::to_string(model.parameter_count()));
  std::size_t k = 0;
  model.for_each_block([&](float *p, Index n) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), n, p);
    k += static_cast<std::size_t>(n);
  });
  if (scale) { *scale = meta.at("scale").get<double>(); }
  return model;
}

void export_montages(std::vector<std::vector<ContrastStack<double>>> const &volumes, std::vector<MaskPlane> const &masks,
                     double p_lo, double p_hi, fs::path const &dir, std::string const &prefix)
{
  require(!volumes.empty() && !volumes.front().empty(), ErrorCode::validation, "nothing to export");
  std::size_t const S = volumes.front().size();
  Grid const grid = volumes.front().front().grid();
  std::vector<ContrastStack<double>> pooled;
  std::vector<MaskPlane> pooled_masks;
  for (auto const &vol : volumes) {
    require(vol.size() == S, ErrorCode::shape, "exported volumes differ in slice count");
    for (std::size_t s = 0; s < S; ++s) {
      pooled.push_back(vol[s]);
      if (masks.empty()) {
        pooled_masks.push_back(MaskPlane::Constant(grid.ny, grid.nz, true));
      } else {
        pooled_masks.push_back(masks.size() == 1 ? masks.front() : masks.at(s));
      }
    }
  }
  auto const window = pooled_window(pooled, pooled_masks, p_lo, p_hi);
  auto const scaled = apply_window(pooled, window);
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<std::vector<RealPlane<double>>> tiles;
    for (std::size_t v = 0; v < volumes.size(); ++v) { tiles.push_back(scaled[v * S + s]); }
    write_png(dir / (prefix + "_slice" + std::to_string(s) + ".png"), montage(tiles));
  }
}

void export_mask_png(MaskSet const &masks, fs::path const &path)
{
  std::vector<RealPlane<double>> row;
  for (auto const &m : masks.masks) { row.push_back(to_real(m.bits)); }
  row.push_back(to_real(masks.coverage()));
  write_png(path, montage({row}, 2, 128));
}

namespace {

void write_text(fs::path const &path, std::string const &text)
{
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::io, "cannot write " + path.string());
  f << text;
}

std::string condition_label(double R)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "R=%g", R);
  return buf;
}

} // namespace

PipelineOutcome run_pipeline(PipelineConfig const &cfg, LogSink sink)
{
  Study const st = simulate_study(cfg);
  fs::create_directories(cfg.output);
  PipelineOutcome out;
  auto save = [&](std::string const &name, ArrayContainer const &c) {
    write_container(cfg.output / name, c);
    out.files.push_back(cfg.output / name);
  };

  write_text(cfg.output / "config.json", to_json(cfg).dump(2) + "\n");
  save("truth.mcir", to_container(st.truth, DType::complex128));
  save("support.mcir", planes_to_container(st.support));
  save("coils.mcir", to_container(st.coils, DType::complex128));
  save("masks.mcir", to_container(st.masks));
  save("kspace.mcir", to_container(st.kspace, DType::complex128));
  export_mask_png(st.masks, cfg.output / "masks.png");

  // Reconstructions are scored as stored, so reports can be reproduced from the files.
  ArrayContainer const zf_file = to_container(zero_filled(st.kspace, st.coils, st.masks));
  save("recon_zf.mcir", zf_file);
  auto const zf = stacks_from_container(zf_file);

  if (sink) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "simulate slices=%zu contrasts=%ld coils=%ld R=%g sigma=%.6e", st.truth.size(),
                  static_cast<long>(cfg.phantom.contrasts()), static_cast<long>(cfg.coils), cfg.R, st.sigma);
    sink(buf);
  }
  InrRun const inr = run_inr(st.kspace, st.coils, st.masks, cfg.train, cfg.model_seed_value(), cfg.workers, sink,
                             cfg.log_every);
  ArrayContainer const inr_file = to_container(inr.images);
  save("recon_inr.mcir", inr_file);
  auto const inr_images = stacks_from_container(inr_file);
  save("loss.mcir", loss_container(inr.loss));
  for (std::size_t s = 0; s < inr.models.size(); ++s) {
    fs::path const p = cfg.output / ("model_slice" + std::to_string(s) + ".mcir");
    save_checkpoint(p, inr.models[s], inr.scales[s], static_cast<Index>(s));
    out.files.push_back(p);
  }

  out.zero_filled = evaluate(st.truth, zf, st.support, cfg.metrics);
  out.inr = evaluate(st.truth, inr_images, st.support, cfg.metrics);
  std::string const cond = condition_label(cfg.R);
  out.table = format_table({{"zero-filled", cond, out.zero_filled}, {"INR", cond, out.inr}});
  write_text(cfg.output / "report_inr.txt", out.inr.to_text());
  write_text(cfg.output / "report_zf.txt", out.zero_filled.to_text());
  write_text(cfg.output / "table.txt", out.table);
  export_montages({st.truth, zf, inr_images}, st.support, cfg.metrics.p_lo, cfg.metrics.p_hi, cfg.output, "montage");
  return out;
}

} // namespace mcinr
