// mcinr: phantom, masks, simulation, reconstruction and evaluation from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mcinr/config.hpp"
#include "mcinr/container.hpp"
#include "mcinr/operators.hpp"
#include "mcinr/pipeline.hpp"
#include "mcinr/readout.hpp"

namespace fs = std::filesystem;
using namespace mcinr;

namespace {

std::string escape(std::string s)
{
  std::string out;
  for (char c : s) {
    if (c == '\n' || c == '\r') {
      out += ' ';
    } else if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else {
      out += c;
    }
  }
  return out;
}

int report_error(std::string_view code, std::string const &message)
{
  std::cerr << "error code=" << code << " message=\"" << escape(message) << "\"\n";
  return code == "usage" ? 2 : 1;
}

/// Options shared by the subcommands that read a pipeline config.
struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> R;
  std::optional<int> workers;
  std::string out;

  PipelineConfig resolve() const
  {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : load_pipeline_config(config);
    if (seed) { cfg.seed = *seed; }
    if (R) { cfg.R = *R; }
    if (char const *env = std::getenv("MCINR_WORKERS"); env && *env) {
      try {
        cfg.workers = std::stoi(env);
      } catch (std::exception const &) {
        throw Error(ErrorCode::validation, std::string("MCINR_WORKERS is not an integer: ") + env);
      }
    }
    if (workers) { cfg.workers = *workers; }
    if (!out.empty()) { cfg.output = out; }
    cfg.validate();
    return cfg;
  }
};

void add_config(CLI::App *app, Common &c)
{
  app->add_option("--config", c.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory");
}

void wrote(fs::path const &p) { std::cout << "wrote path=" << p.string() << "\n"; }

fs::path out_dir(PipelineConfig const &cfg)
{
  fs::create_directories(cfg.output);
  return cfg.output;
}

std::vector<KSpace<double>> load_kspace(std::string const &path, bool kx)
{
  ArrayContainer const c = read_container(path);
  if (!kx) { return kspace_from_container(c); }
  return split_slices(decouple_readout(array_from_container(c)));
}

LogSink stderr_sink()
{
  return [](std::string const &line) { std::cerr << line << "\n"; };
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Multi-contrast MRI reconstruction with hash-grid implicit neural representations"};
  app.require_subcommand(1);

  // phantom
  Common phantom_opts;
  auto *phantom = app.add_subcommand("phantom", "render ground-truth contrast images and support");
  add_config(phantom, phantom_opts);

  // mask
  Common mask_opts;
  std::optional<double> center_radius;
  auto *mask = app.add_subcommand("mask", "generate complementary variable-density Poisson disk masks");
  add_config(mask, mask_opts);
  mask->add_option("--seed", mask_opts.seed, "master seed");
  mask->add_option("--R", mask_opts.R, "acceleration factor");
  mask->add_option("--center-radius", center_radius, "fully sampled center radius in samples");

  // simulate
  Common sim_opts;
  std::string sim_truth, sim_masks;
  std::optional<double> sim_sigma;
  bool sim_kx = false;
  auto *simulate = app.add_subcommand("simulate", "coil maps and noisy undersampled k-space from truth and masks");
  add_config(simulate, sim_opts);
  simulate->add_option("--seed", sim_opts.seed, "master seed");
  simulate->add_option("--truth", sim_truth, "truth image container")->required()->check(CLI::ExistingFile);
  simulate->add_option("--masks", sim_masks, "mask container")->required()->check(CLI::ExistingFile);
  simulate->add_option("--sigma", sim_sigma, "noise sigma relative to the largest clean k-space magnitude");
  simulate->add_flag("--kx", sim_kx, "write 3D k-space with kx as the first axis instead of decoupled slices");

  // recon-inr / recon-zf
  Common inr_opts, zf_opts;
  std::string inr_kspace, inr_coils, inr_masks, zf_kspace, zf_coils, zf_masks;
  bool inr_kx = false, zf_kx = false;
  std::optional<int> log_every;
  auto *recon_inr = app.add_subcommand("recon-inr", "hash-grid INR reconstruction, one model per slice");
  add_config(recon_inr, inr_opts);
  recon_inr->add_option("--seed", inr_opts.seed, "master seed");
  recon_inr->add_option("--workers", inr_opts.workers, "parallel slices (default: MCINR_WORKERS or config)");
  recon_inr->add_option("--log-every", log_every, "epoch log interval, 0 disables");
  auto *recon_zf = app.add_subcommand("recon-zf", "zero-filled adjoint reconstruction");
  add_config(recon_zf, zf_opts);
  for (auto [cmd, k, c, m, kx] : {std::tuple{recon_inr, &inr_kspace, &inr_coils, &inr_masks, &inr_kx},
                                  std::tuple{recon_zf, &zf_kspace, &zf_coils, &zf_masks, &zf_kx}}) {
    cmd->add_option("--kspace", *k, "k-space container")->required()->check(CLI::ExistingFile);
    cmd->add_option("--coils", *c, "coil map container")->required()->check(CLI::ExistingFile);
    cmd->add_option("--masks", *m, "mask container")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--kx", *kx, "input is 3D k-space with kx first; decouple slices before reconstruction");
  }

  // metrics
  std::string met_ref, met_test, met_mask, met_out;
  double met_lo = 1.0, met_hi = 99.0;
  auto *metrics = app.add_subcommand("metrics", "SSIM/PSNR of a test volume against a reference");
  metrics->add_option("ref", met_ref, "reference image container")->required()->check(CLI::ExistingFile);
  metrics->add_option("test", met_test, "test image container")->required()->check(CLI::ExistingFile);
  metrics->add_option("--mask", met_mask, "evaluation mask container (default: every voxel)")->check(CLI::ExistingFile);
  metrics->add_option("--p-lo", met_lo, "lower normalization percentile");
  metrics->add_option("--p-hi", met_hi, "upper normalization percentile");
  metrics->add_option("--out", met_out, "also write the report to this file");

  // export-png
  std::vector<std::string> png_inputs;
  std::string png_mask, png_out = ".", png_prefix = "montage";
  double png_lo = 1.0, png_hi = 99.0;
  auto *export_png = app.add_subcommand("export-png", "per-slice montages, one row per input, one column per contrast");
  export_png->add_option("inputs", png_inputs, "image containers")->required()->check(CLI::ExistingFile);
  export_png->add_option("--mask", png_mask, "mask container for the display window")->check(CLI::ExistingFile);
  export_png->add_option("--out", png_out, "output directory");
  export_png->add_option("--prefix", png_prefix, "file name prefix");
  export_png->add_option("--p-lo", png_lo, "lower window percentile");
  export_png->add_option("--p-hi", png_hi, "upper window percentile");

  // pipeline
  Common pipe_opts;
  auto *pipeline = app.add_subcommand("pipeline", "phantom, masks, simulation, both reconstructions and metrics");
  add_config(pipeline, pipe_opts);
  pipeline->add_option("--seed", pipe_opts.seed, "master seed");
  pipeline->add_option("--R", pipe_opts.R, "acceleration factor");
  pipeline->add_option("--workers", pipe_opts.workers, "parallel slices (default: MCINR_WORKERS or config)");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    return report_error("usage", e.what());
  }

  try {
    if (*phantom) {
      auto const cfg = phantom_opts.resolve();
      std::vector<MaskPlane> support;
      auto const truth = render_volume(cfg.phantom, cfg.slices, &support);
      fs::path const dir = out_dir(cfg);
      write_container(dir / "truth.mcir", to_container(truth, DType::complex128));
      write_container(dir / "support.mcir", planes_to_container(support));
      wrote(dir / "truth.mcir");
      wrote(dir / "support.mcir");
    } else if (*mask) {
      auto cfg = mask_opts.resolve();
      if (center_radius) { cfg.center_radius = center_radius; }
      cfg.validate();
      auto const masks =
        make_masks(cfg.phantom.grid, cfg.phantom.contrasts(), cfg.R, cfg.center_radius_value(), cfg.mask_seed_value());
      fs::path const dir = out_dir(cfg);
      write_container(dir / "masks.mcir", to_container(masks));
      export_mask_png(masks, dir / "masks.png");
      for (Index n = 0; n < masks.contrasts(); ++n) {
        std::cout << "mask contrast=" << n << " R=" << acceleration_of(masks[n]) << "\n";
      }
      wrote(dir / "masks.mcir");
      wrote(dir / "masks.png");
    } else if (*simulate) {
      auto cfg = sim_opts.resolve();
      if (sim_sigma) { cfg.noise_relative = *sim_sigma; }
      cfg.validate();
      auto const truth = stacks_from_container(read_container(sim_truth));
      auto const masks = masks_from_container(read_container(sim_masks));
      auto const coils = make_coil_maps(truth.front().grid(), cfg.coils, cfg.coil_smoothness, cfg.coil_seed_value());
      double sigma = 0.0;
      auto const ksp = simulate_kspace(truth, coils, masks, cfg.noise_relative, cfg.noise_seed_value(), &sigma);
      fs::path const dir = out_dir(cfg);
      write_container(dir / "coils.mcir", to_container(coils, DType::complex128));
      if (sim_kx) {
        write_container(dir / "kspace.mcir", to_container(recompose_readout(join_slices(ksp)), DType::complex128));
      } else {
        write_container(dir / "kspace.mcir", to_container(ksp, DType::complex128));
      }
      std::cout << "simulate slices=" << ksp.size() << " sigma=" << sigma << "\n";
      wrote(dir / "coils.mcir");
      wrote(dir / "kspace.mcir");
    } else if (*recon_inr) {
      auto const cfg = inr_opts.resolve();
      auto const ksp = load_kspace(inr_kspace, inr_kx);
      auto const coils = coils_from_container(read_container(inr_coils));
      auto const masks = masks_from_container(read_container(inr_masks));
      auto const run = run_inr(ksp, coils, masks, cfg.train, cfg.model_seed_value(), cfg.workers, stderr_sink(),
                               log_every.value_or(cfg.log_every));
      fs::path const dir = out_dir(cfg);
      write_container(dir / "recon_inr.mcir", to_container(run.images));
      write_container(dir / "loss.mcir", loss_container(run.loss));
      wrote(dir / "recon_inr.mcir");
      wrote(dir / "loss.mcir");
      for (std::size_t s = 0; s < run.models.size(); ++s) {
        fs::path const p = dir / ("model_slice" + std::to_string(s) + ".mcir");
        save_checkpoint(p, run.models[s], run.scales[s], static_cast<Index>(s));
        wrote(p);
      }
    } else if (*recon_zf) {
      auto const cfg = zf_opts.resolve();
      auto const ksp = load_kspace(zf_kspace, zf_kx);
      auto const coils = coils_from_container(read_container(zf_coils));
      auto const masks = masks_from_container(read_container(zf_masks));
      fs::path const dir = out_dir(cfg);
      write_container(dir / "recon_zf.mcir", to_container(zero_filled(ksp, coils, masks)));
      wrote(dir / "recon_zf.mcir");
    } else if (*metrics) {
      auto const ref = stacks_from_container(read_container(met_ref));
      auto const test = stacks_from_container(read_container(met_test));
      std::vector<MaskPlane> masks;
      if (met_mask.empty()) {
        Grid const g = ref.front().grid();
        masks.push_back(MaskPlane::Constant(g.ny, g.nz, true));
      } else {
        masks = planes_from_container(read_container(met_mask));
      }
      MetricOptions opts;
      opts.p_lo = met_lo;
      opts.p_hi = met_hi;
      std::string const text = evaluate(ref, test, masks, opts).to_text();
      std::cout << text;
      if (!met_out.empty()) {
        std::ofstream f(met_out);
        require(static_cast<bool>(f << text), ErrorCode::io, "cannot write " + met_out);
      }
    } else if (*export_png) {
      std::vector<std::vector<ContrastStack<double>>> volumes;
      for (auto const &p : png_inputs) { volumes.push_back(stacks_from_container(read_container(p))); }
      std::vector<MaskPlane> masks;
      if (!png_mask.empty()) { masks = planes_from_container(read_container(png_mask)); }
      fs::create_directories(png_out);
      export_montages(volumes, masks, png_lo, png_hi, png_out, png_prefix);
      for (std::size_t s = 0; s < volumes.front().size(); ++s) {
        wrote(fs::path(png_out) / (png_prefix + "_slice" + std::to_string(s) + ".png"));
      }
    } else if (*pipeline) {
      auto const cfg = pipe_opts.resolve();
      auto const outcome = run_pipeline(cfg, stderr_sink());
      std::cout << outcome.table;
      std::cout << "zero_filled " << outcome.zero_filled.to_text().substr(outcome.zero_filled.to_text().rfind("aggregate"));
      std::cout << "inr " << outcome.inr.to_text().substr(outcome.inr.to_text().rfind("aggregate"));
      for (auto const &f : outcome.files) { wrote(f); }
    }
  } catch (Error const &e) {
    return report_error(to_string(e.code()), e.what());
  } catch (std::exception const &e) {
    return report_error("internal", e.what());
  }
  return 0;
}
