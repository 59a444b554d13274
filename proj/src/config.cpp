#include "mcinr/config.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>

namespace mcinr {

namespace {

/// Typed access to one JSON object that rejects keys nobody asked for.
class Fields
{
public:
  Fields(json const &j, std::string path)
    : j_(j)
    , path_(std::move(path))
  {
    require(j.is_object(), ErrorCode::validation, path_ + " must be an object");
  }

  bool has(std::string const &key)
  {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  json const &raw(std::string const &key)
  {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(std::string const &key) const { return path_ + "." + key; }

  template <class T_>
  std::optional<T_> get(std::string const &key)
  {
    if (!has(key)) { return std::nullopt; }
    json const &v = j_.at(key);
    if constexpr (std::is_same_v<T_, std::uint64_t>) {
      require(v.is_number_unsigned(), ErrorCode::validation, where(key) + " must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T_>) {
      require(v.is_number_integer(), ErrorCode::validation, where(key) + " must be an integer");
    } else if constexpr (std::is_floating_point_v<T_>) {
      require(v.is_number(), ErrorCode::validation, where(key) + " must be a number");
    } else if constexpr (std::is_same_v<T_, std::string>) {
      require(v.is_string(), ErrorCode::validation, where(key) + " must be a string");
    }
    try {
      return v.get<T_>();
    } catch (json::exception const &e) {
      throw Error(ErrorCode::validation, where(key) + ": " + e.what());
    }
  }

  template <class T_>
  void read(std::string const &key, T_ &target)
  {
    if (auto v = get<T_>(key)) { target = *v; }
  }

  void finish() const
  {
    for (auto const &[key, value] : j_.items()) {
      require(seen_.contains(key), ErrorCode::validation, "unknown key " + path_ + "." + key);
    }
  }

private:
  json const &j_;
  std::string path_;
  std::set<std::string> seen_;
};

Tissue parse_tissue(std::string const &name, std::string const &where)
{
  if (name == "background") { return Tissue::background; }
  if (name == "wm") { return Tissue::wm; }
  if (name == "gm") { return Tissue::gm; }
  if (name == "csf") { return Tissue::csf; }
  throw Error(ErrorCode::validation, where + ": unknown tissue '" + name + "' (background|wm|gm|csf)");
}

DataScaling parse_scaling(std::string const &name)
{
  if (name == "none") { return DataScaling::none; }
  if (name == "kspace_max") { return DataScaling::kspace_max; }
  if (name == "zero_filled") { return DataScaling::zero_filled; }
  throw Error(ErrorCode::validation, "train.scaling: unknown value '" + name + "' (none|kspace_max|zero_filled)");
}

std::pair<double, double> pair_of(json const &v, std::string const &where)
{
  require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(), ErrorCode::validation,
          where + " must be a pair of numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

Grid parse_grid(json const &v)
{
  require(v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer() &&
            v[0].get<Index>() > 0 && v[1].get<Index>() > 0,
          ErrorCode::validation, "phantom.grid must be [ny, nz] positive integers");
  return {v[0].get<Index>(), v[1].get<Index>()};
}

} // namespace

std::string_view to_string(Tissue t)
{
  switch (t) {
  case Tissue::background: return "background";
  case Tissue::wm: return "wm";
  case Tissue::gm: return "gm";
  case Tissue::csf: return "csf";
  }
  return "unknown";
}

std::string_view to_string(DataScaling s)
{
  switch (s) {
  case DataScaling::none: return "none";
  case DataScaling::kspace_max: return "kspace_max";
  case DataScaling::zero_filled: return "zero_filled";
  }
  return "unknown";
}

json load_json(std::filesystem::path const &path)
{
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::io, "cannot open " + path.string());
  try {
    return json::parse(f, nullptr, true, true);
  } catch (json::exception const &e) {
    throw Error(ErrorCode::validation, path.string() + ": " + e.what());
  }
}

PhantomSpec parse_phantom_spec(json const &j, std::filesystem::path const &base_dir)
{
  if (j.is_string()) { return load_phantom_spec(base_dir / j.get<std::string>()); }
  Fields f(j, "phantom");
  Grid grid{64, 64};
  if (f.has("grid")) { grid = parse_grid(f.raw("grid")); }

  std::string preset = "brain";
  f.read("preset", preset);
  PhantomSpec spec;
  if (preset == "brain") {
    spec = default_brain_spec(grid);
  } else if (preset == "empty") {
    spec.grid = grid;
    spec.tissues = default_tissues();
    spec.ti = ti_schedule();
  } else {
    throw Error(ErrorCode::validation, "phantom.preset: unknown value '" + preset + "' (brain|empty)");
  }

  if (f.has("ellipses")) {
    json const &list = f.raw("ellipses");
    require(list.is_array(), ErrorCode::validation, "phantom.ellipses must be an array");
    spec.ellipses.clear();
    for (std::size_t k = 0; k < list.size(); ++k) {
      Fields e(list[k], "phantom.ellipses[" + std::to_string(k) + "]");
      Ellipse el;
      require(e.has("center") && e.has("axes") && e.has("tissue"), ErrorCode::validation,
              "phantom.ellipses[" + std::to_string(k) + "] needs center, axes and tissue");
      std::tie(el.cy, el.cz) = pair_of(e.raw("center"), e.where("center"));
      std::tie(el.ay, el.az) = pair_of(e.raw("axes"), e.where("axes"));
      e.read("rotation", el.rotation_deg);
      el.label = parse_tissue(*e.get<std::string>("tissue"), e.where("tissue"));
      e.read("x_center", el.cx);
      e.read("x_axis", el.ax);
      e.finish();
      spec.ellipses.push_back(el);
    }
  }

  if (f.has("tissues")) {
    json const &t = f.raw("tissues");
    require(t.is_object(), ErrorCode::validation, "phantom.tissues must be an object");
    for (auto const &[name, value] : t.items()) {
      Tissue const label = parse_tissue(name, "phantom.tissues");
      Fields tf(value, "phantom.tissues." + name);
      TissueClass tc = spec.tissues.contains(label) ? spec.tissues.at(label) : TissueClass{label, 0.0, 0.0};
      tf.read("t1", tc.t1);
      tf.read("m0", tc.m0);
      tf.finish();
      spec.tissues[label] = tc;
    }
  }

  if (f.has("ti")) {
    json const &t = f.raw("ti");
    if (t.is_array()) {
      spec.ti.clear();
      for (auto const &v : t) {
        require(v.is_number(), ErrorCode::validation, "phantom.ti entries must be numbers");
        spec.ti.push_back(v.get<double>());
      }
    } else {
      Fields tf(t, "phantom.ti");
      Index count = 10;
      double first = 26.0, spacing = 249.05;
      tf.read("count", count);
      tf.read("first", first);
      tf.read("spacing", spacing);
      tf.finish();
      require(count >= 1, ErrorCode::validation, "phantom.ti.count must be >= 1");
      spec.ti = ti_schedule(count, first, spacing);
    }
  }
  f.finish();
  spec.validate();
  return spec;
}

PhantomSpec load_phantom_spec(std::filesystem::path const &path)
{
  return parse_phantom_spec(load_json(path), path.parent_path());
}

HashGridConfig parse_hash_config(json const &j, HashGridConfig base)
{
  Fields f(j, "train.hash");
  f.read("levels", base.levels);
  f.read("features", base.features);
  if (auto bits = f.get<int>("log2_table_size")) {
    require(*bits >= 0 && *bits <= 30, ErrorCode::validation, "train.hash.log2_table_size must be in [0, 30]");
    base.table_size = 1u << *bits;
  }
  f.read("base_resolution", base.base_resolution);
  f.read("finest_resolution", base.finest_resolution);
  f.finish();
  base.validate();
  return base;
}

TrainConfig parse_train_config(json const &j, TrainConfig base)
{
  Fields f(j, "train");
  f.read("epochs", base.epochs);
  f.read("lr_tables", base.lr_tables);
  f.read("lr_mlp", base.lr_mlp);
  f.read("beta1", base.beta1);
  f.read("beta2", base.beta2);
  f.read("eps", base.eps);
  f.read("hidden", base.hidden);
  f.read("max_restarts", base.max_restarts);
  if (auto s = f.get<std::string>("scaling")) { base.scaling = parse_scaling(*s); }
  if (f.has("hash")) { base.hash = parse_hash_config(f.raw("hash"), base.hash.value_or(HashGridConfig{})); }
  f.finish();
  base.validate();
  return base;
}

PipelineConfig parse_pipeline_config(json const &j, std::filesystem::path const &base_dir)
{
  PipelineConfig cfg;
  Fields f(j, "config");
  if (f.has("phantom")) { cfg.phantom = parse_phantom_spec(f.raw("phantom"), base_dir); }
  if (f.has("slices")) {
    json const &s = f.raw("slices");
    require(s.is_array(), ErrorCode::validation, "config.slices must be an array of positions");
    cfg.slices.clear();
    for (auto const &v : s) {
      require(v.is_number(), ErrorCode::validation, "config.slices entries must be numbers");
      cfg.slices.push_back(v.get<double>());
    }
  }
  f.read("seed", cfg.seed);
  f.read("workers", cfg.workers);
  if (auto out = f.get<std::string>("output")) { cfg.output = *out; }

  if (f.has("coils")) {
    Fields c(f.raw("coils"), "coils");
    c.read("count", cfg.coils);
    c.read("smoothness", cfg.coil_smoothness);
    if (auto s = c.get<std::uint64_t>("seed")) { cfg.coil_seed = s; }
    c.finish();
  }
  if (f.has("sampling")) {
    Fields s(f.raw("sampling"), "sampling");
    s.read("R", cfg.R);
    if (auto r = s.get<double>("center_radius")) { cfg.center_radius = r; }
    if (auto v = s.get<std::uint64_t>("seed")) { cfg.mask_seed = v; }
    s.finish();
  }
  if (f.has("noise")) {
    Fields n(f.raw("noise"), "noise");
    n.read("relative_sigma", cfg.noise_relative);
    if (auto v = n.get<std::uint64_t>("seed")) { cfg.noise_seed = v; }
    n.finish();
  }
  if (f.has("train")) {
    json t = f.raw("train");
    require(t.is_object(), ErrorCode::validation, "train must be an object");
    Fields tf(t, "train");
    if (auto v = tf.get<std::uint64_t>("seed")) { cfg.model_seed = v; }
    tf.read("log_every", cfg.log_every);
    t.erase("seed");
    t.erase("log_every");
    cfg.train = parse_train_config(t, cfg.train);
  }
  if (f.has("metrics")) {
    Fields m(f.raw("metrics"), "metrics");
    m.read("p_lo", cfg.metrics.p_lo);
    m.read("p_hi", cfg.metrics.p_hi);
    m.finish();
  }
  f.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(std::filesystem::path const &path)
{
  return parse_pipeline_config(load_json(path), path.parent_path());
}

void PipelineConfig::validate() const
{
  phantom.validate();
  require(!slices.empty(), ErrorCode::validation, "config.slices must not be empty");
  for (double x : slices) {
    require(std::isfinite(x) && x >= -1.0 && x <= 1.0, ErrorCode::validation, "slice positions must be in [-1, 1]");
  }
  require(coils >= 1, ErrorCode::validation, "coils.count must be >= 1");
  require(coil_smoothness > 0.0, ErrorCode::validation, "coils.smoothness must be > 0");
  require(std::isfinite(R) && R >= 1.0, ErrorCode::validation, "sampling.R must be >= 1");
  double const cr = center_radius_value();
  require(cr >= 0.0 && cr < 0.5 * static_cast<double>(std::min(phantom.grid.ny, phantom.grid.nz)),
          ErrorCode::validation, "sampling.center_radius must be in [0, min(grid)/2)");
  require(std::isfinite(noise_relative) && noise_relative >= 0.0, ErrorCode::validation,
          "noise.relative_sigma must be >= 0");
  train.validate();
  require(log_every >= 0, ErrorCode::validation, "train.log_every must be >= 0");
  require(metrics.p_lo >= 0.0 && metrics.p_lo < metrics.p_hi && metrics.p_hi <= 100.0, ErrorCode::validation,
          "metrics percentiles need 0 <= p_lo < p_hi <= 100");
  require(workers >= 1, ErrorCode::validation, "workers must be >= 1");
  require(!output.empty(), ErrorCode::validation, "output directory must be set");
}

json to_json(PhantomSpec const &spec)
{
  json ellipses = json::array();
  for (auto const &e : spec.ellipses) {
    json el = {{"center", {e.cy, e.cz}},
               {"axes", {e.ay, e.az}},
               {"rotation", e.rotation_deg},
               {"tissue", to_string(e.label)},
               {"x_center", e.cx}};
    if (std::isfinite(e.ax)) { el["x_axis"] = e.ax; }
    ellipses.push_back(std::move(el));
  }
  json tissues = json::object();
  for (auto const &[label, tc] : spec.tissues) { tissues[std::string(to_string(label))] = {{"t1", tc.t1}, {"m0", tc.m0}}; }
  return {{"grid", {spec.grid.ny, spec.grid.nz}},
          {"preset", "empty"},
          {"ellipses", ellipses},
          {"tissues", tissues},
          {"ti", spec.ti}};
}

json to_json(HashGridConfig const &cfg)
{
  return {{"levels", cfg.levels},
          {"features", cfg.features},
          {"log2_table_size", std::countr_zero(cfg.table_size)},
          {"base_resolution", cfg.base_resolution},
          {"finest_resolution", cfg.finest_resolution}};
}

json to_json(TrainConfig const &cfg)
{
  json j = {{"epochs", cfg.epochs},   {"lr_tables", cfg.lr_tables}, {"lr_mlp", cfg.lr_mlp},
            {"beta1", cfg.beta1},     {"beta2", cfg.beta2},         {"eps", cfg.eps},
            {"hidden", cfg.hidden},   {"max_restarts", cfg.max_restarts},
            {"scaling", to_string(cfg.scaling)}};
  if (cfg.hash) { j["hash"] = to_json(*cfg.hash); }
  return j;
}

json to_json(PipelineConfig const &cfg)
{
  json train = to_json(cfg.train);
  train["seed"] = cfg.model_seed_value();
  train["log_every"] = cfg.log_every;
  return {{"phantom", to_json(cfg.phantom)},
          {"slices", cfg.slices},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"output", cfg.output.string()},
          {"coils", {{"count", cfg.coils}, {"smoothness", cfg.coil_smoothness}, {"seed", cfg.coil_seed_value()}}},
          {"sampling", {{"R", cfg.R}, {"center_radius", cfg.center_radius_value()}, {"seed", cfg.mask_seed_value()}}},
          {"noise", {{"relative_sigma", cfg.noise_relative}, {"seed", cfg.noise_seed_value()}}},
          {"train", train},
          {"metrics", {{"p_lo", cfg.metrics.p_lo}, {"p_hi", cfg.metrics.p_hi}}}};
}

} // namespace mcinr
