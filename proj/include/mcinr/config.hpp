#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcinr/engine.hpp"
#include "mcinr/metrics.hpp"
#include "mcinr/phantom.hpp"

namespace mcinr {

using json = nlohmann::json;

/// Everything a pipeline run depends on. Stage seeds left unset derive from `seed`:
/// coils seed + 1, masks seed + 100, noise seed + 7 (+ slice), model seed (+ slice).
struct PipelineConfig
{
  PhantomSpec phantom = default_brain_spec();
  std::vector<double> slices{0.0}; // through-plane positions in [-1, 1]

  Index coils = 4;
  double coil_smoothness = 0.6;

  double R = 8.0;
  std::optional<double> center_radius; // default_center_radius(grid) when unset

  double noise_relative = 0.005; // sigma as a fraction of the largest clean k-space magnitude

  TrainConfig train;
  int log_every = 50;
  MetricOptions metrics;

  std::uint64_t seed = 0;
  std::optional<std::uint64_t> coil_seed, mask_seed, noise_seed, model_seed;

  int workers = 1;
  std::filesystem::path output = "out";

  std::uint64_t coil_seed_value() const { return coil_seed.value_or(seed + 1); }
  std::uint64_t mask_seed_value() const { return mask_seed.value_or(seed + 100); }
  std::uint64_t noise_seed_value() const { return noise_seed.value_or(seed + 7); }
  std::uint64_t model_seed_value() const { return model_seed.value_or(seed); }
  double center_radius_value() const { return center_radius.value_or(default_center_radius(phantom.grid)); }

  void validate() const;
};

/// Throws ErrorCode::validation naming the offending key on unknown keys or bad values.
PhantomSpec parse_phantom_spec(json const &j, std::filesystem::path const &base_dir = {});
TrainConfig parse_train_config(json const &j, TrainConfig base = {});
HashGridConfig parse_hash_config(json const &j, HashGridConfig base = {});
PipelineConfig parse_pipeline_config(json const &j, std::filesystem::path const &base_dir = {});

json load_json(std::filesystem::path const &path);
PhantomSpec load_phantom_spec(std::filesystem::path const &path);
PipelineConfig load_pipeline_config(std::filesystem::path const &path);

json to_json(PhantomSpec const &spec);
json to_json(TrainConfig const &cfg);
json to_json(HashGridConfig const &cfg);
/// Fully resolved config; parse_pipeline_config(to_json(c)) reproduces c.
json to_json(PipelineConfig const &cfg);

std::string_view to_string(Tissue t);
std::string_view to_string(DataScaling s);

} // namespace mcinr
