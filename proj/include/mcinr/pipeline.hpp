#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mcinr/config.hpp"
#include "mcinr/container.hpp"
#include "mcinr/engine.hpp"
#include "mcinr/metrics.hpp"

namespace mcinr {

/// Ground truth and simulated acquisition for every configured slice.
struct Study
{
  std::vector<ContrastStack<double>> truth;
  std::vector<MaskPlane> support;
  CoilMaps<double> coils;
  MaskSet masks;
  std::vector<KSpace<double>> kspace;
  double sigma = 0.0;
};

/// One phantom cross-section per position: stacks and their support masks.
std::vector<ContrastStack<double>> render_volume(PhantomSpec const &spec, std::vector<double> const &slices,
                                                 std::vector<MaskPlane> *support = nullptr);

MaskSet make_masks(Grid grid, Index contrasts, double R, double center_radius, std::uint64_t seed);

/// Noisy k-space per slice. sigma = relative * largest clean |D| over all slices;
/// slice s uses noise seed + s.
std::vector<KSpace<double>> simulate_kspace(std::vector<ContrastStack<double>> const &truth,
                                            CoilMaps<double> const &coils, MaskSet const &masks, double relative,
                                            std::uint64_t seed, double *sigma = nullptr);

Study simulate_study(PipelineConfig const &cfg);

std::vector<ContrastStack<double>> zero_filled(std::vector<KSpace<double>> const &kspace,
                                               CoilMaps<double> const &coils, MaskSet const &masks);

/// "epoch slice=.. attempt=.. epoch=.. loss=.. wall_ms=.." with the loss in full precision.
std::string format_epoch_log(EpochLog const &e);

/// Sink receives one formatted line at a time, already serialized across workers.
using LogSink = std::function<void(std::string const &)>;

/// Calls sink every `every` epochs (and on the first and last epoch); every = 0 disables logging.
std::function<void(EpochLog const &)> epoch_logger(LogSink sink, int every, int epochs);

struct InrRun
{
  std::vector<ContrastStack<double>> images;
  std::vector<std::vector<double>> loss; // per slice
  std::vector<InrModel<float>> models;
  std::vector<double> scales;
};

/// reconstruct_volume with training seed `seed` for every slice; throws on the first failed slice.
InrRun run_inr(std::vector<KSpace<double>> const &kspace, CoilMaps<double> const &coils, MaskSet const &masks,
               TrainConfig cfg, std::uint64_t seed, int workers, LogSink sink = {}, int log_every = 0);

/// Loss traces as float32 (S, epochs).
ArrayContainer loss_container(std::vector<std::vector<double>> const &loss);

/// Flat float32 parameter vector in for_each_block order plus a JSON sidecar
/// (path with ".json" appended) holding the layout and data scale.
void save_checkpoint(std::filesystem::path const &path, InrModel<float> const &model, double scale, Index slice);
InrModel<float> load_checkpoint(std::filesystem::path const &path, double *scale = nullptr);

/// Per-slice montages, rows = stacks[k], columns = contrasts, windowed by one pooled percentile window.
void export_montages(std::vector<std::vector<ContrastStack<double>>> const &volumes, std::vector<MaskPlane> const &masks,
                     double p_lo, double p_hi, std::filesystem::path const &dir, std::string const &prefix);

/// Masks side by side, coverage union last.
void export_mask_png(MaskSet const &masks, std::filesystem::path const &path);

struct PipelineOutcome
{
  MetricReport inr;
  MetricReport zero_filled;
  std::string table;
  std::vector<std::filesystem::path> files;
};

/// phantom -> masks -> simulate -> zero-filled and INR recon -> metrics -> containers and PNGs under cfg.output.
PipelineOutcome run_pipeline(PipelineConfig const &cfg, LogSink sink = {});

} // namespace mcinr
