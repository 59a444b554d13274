// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance --cli <path to mcinr> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include "mcinr/engine.hpp"
#include "mcinr/metrics.hpp"
#include "mcinr/pipeline.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace mcinr;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, std::string const &what)
  {
    if (!ok) {
      pass = false;
      detail << " failed:" << what;
    }
  }

  template <class T_>
  void note(std::string const &key, T_ const &value)
  {
    detail << " " << key << "=" << value;
  }
};

struct Criterion
{
  int id;
  std::string name;
  double limit_s;
  std::function<void(Outcome &)> run;
};

std::string g_cli;

int workers_for(int slices)
{
  if (char const *env = std::getenv("MCINR_WORKERS")) { return std::max(1, std::atoi(env)); }
  return std::max(1, std::min<int>(slices, static_cast<int>(std::thread::hardware_concurrency())));
}

// 1 ---------------------------------------------------------------------------

void operators(Outcome &o)
{
  Rng rng(1);
  Grid const g16{16, 16};
  Plane<double> const x = test::random_plane(g16, rng);
  double const fwd = test::rel_error(fft2c<double>(x), test::naive_dft2c(x, false));
  double const inv = test::rel_error(ifft2c<double>(x), test::naive_dft2c(x, true));
  o.note("dft_rel", std::max(fwd, inv));
  o.require(fwd <= 1e-10 && inv <= 1e-10, "dft");

  double worst = 0.0;
  for (Index n : {8, 16, 64}) {
    Grid const g{n, n};
    for (Index C : {1, 4}) {
      for (Index N : {1, 10}) {
        auto const coils = test::random_coils(C, g, rng);
        auto const masks = test::random_masks(N, g, 0.3, rng);
        auto const d = test::random_stack(N, g, rng);
        auto const y = test::random_kspace(C, N, g, rng);
        Complex<double> const lhs = test::inner(forward_model(d, coils, masks), y);
        Complex<double> const rhs = test::inner(d, adjoint_model(y, coils, masks));
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
      }
    }
  }
  o.note("adjoint_rel", worst);
  o.require(worst <= 1e-10, "adjoint");
}

// 2 ---------------------------------------------------------------------------

void gradients(Outcome &o)
{
  Grid const g{6, 6};
  Rng rng(21);
  auto const coils = test::random_coils(2, g, rng);
  auto const masks = test::random_masks(2, g, 0.5, rng);
  auto const data = test::random_kspace(2, 2, g, rng, &masks);
  auto const w = distance_weights(g);

  HashGridConfig hash;
  hash.levels = 2;
  hash.features = 2;
  hash.table_size = 32;
  hash.base_resolution = 3;
  hash.finest_resolution = 6;
  auto model = InrModel<double>::random(hash, 2, 16, 3);
  for (auto &t : model.tables.levels) {
    for (Index k = 0; k < t.size(); ++k) { t.data()[k] = rng.uniform(-0.5, 0.5); }
  }
  EncodingPlan const plan(hash, voxel_coordinates(g));
  auto const r = test::check_model_gradient(model, plan, data, coils, masks, w);
  o.note("parameters", r.parameters);
  o.note("kink_step_reductions", r.step_reductions);
  o.note("max_rel_error", r.max_rel_error);
  o.require(r.parameters == model.parameter_count(), "coverage");
  o.require(r.max_rel_error <= 1e-5, "fd");
}

// 3 ---------------------------------------------------------------------------

bool spacing_holds(SamplingMask const &m)
{
  Grid const g = m.grid();
  double const kmax = std::hypot(static_cast<double>(g.ny / 2), static_cast<double>(g.nz / 2));
  struct P
  {
    Index i, j;
    double r;
  };
  std::vector<P> pts;
  for (Index i = 0; i < g.ny; ++i) {
    for (Index j = 0; j < g.nz; ++j) {
      double const k = std::hypot(static_cast<double>(i - g.ny / 2), static_cast<double>(j - g.nz / 2));
      if (m.bits(i, j) && k > m.center_radius) { pts.push_back({i, j, m.r0 * (1.0 + m.alpha * k / kmax)}); }
    }
  }
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double const d = std::hypot(static_cast<double>(pts[a].i - pts[b].i), static_cast<double>(pts[a].j - pts[b].j));
      if (d < std::min(pts[a].r, pts[b].r) * (1.0 - 1e-9)) { return false; }
    }
  }
  return true;
}

void masks(Outcome &o)
{
  Grid const g{160, 160};
  double const radius = default_center_radius(g);
  for (double R : {4.0, 8.0, 12.0}) {
    auto const set = complementary_mask_set(g, R, radius, 10, 100);
    double worst_R = 0.0;
    bool center = true, spacing = true;
    Index max_single = 0;
    for (auto const &m : set.masks) {
      double const achieved = acceleration_of(m.bits);
      worst_R = std::max(worst_R, std::abs(achieved - R) / R);
      for (Index i = 0; i < g.ny; ++i) {
        for (Index j = 0; j < g.nz; ++j) {
          if (std::hypot(static_cast<double>(i - 80), static_cast<double>(j - 80)) <= radius) { center &= m.bits(i, j); }
        }
      }
      spacing &= spacing_holds(m);
      max_single = std::max(max_single, m.bits.count());
    }
    Index const uni = set.coverage().count();
    std::string const tag = "R" + std::to_string(static_cast<int>(R));
    o.note(tag + "_max_dev", worst_R);
    o.note(tag + "_union_over_single", static_cast<double>(uni) / static_cast<double>(max_single));
    o.require(worst_R <= 0.10, tag + "_rate");
    o.require(center, tag + "_center");
    o.require(spacing, tag + "_spacing");
    o.require(uni > max_single, tag + "_union");
  }
}

// 4-7 -------------------------------------------------------------------------

PipelineConfig phantom_config(double R)
{
  PipelineConfig cfg; // 64x64, 4 coils, 10 TIs, sigma 0.5% of k-space max
  cfg.R = R;
  cfg.log_every = 0;
  return cfg;
}

struct Recon
{
  MetricReport inr, zf;
  InrRun run;
  Study study;
};

Recon reconstruct(PipelineConfig const &cfg, int workers)
{
  Recon r;
  r.study = simulate_study(cfg);
  r.run = run_inr(r.study.kspace, r.study.coils, r.study.masks, cfg.train, cfg.model_seed_value(), workers);
  r.inr = evaluate(r.study.truth, r.run.images, r.study.support, cfg.metrics);
  r.zf = evaluate(r.study.truth, zero_filled(r.study.kspace, r.study.coils, r.study.masks), r.study.support,
                  cfg.metrics);
  return r;
}

void fully_sampled(Outcome &o)
{
  auto const r = reconstruct(phantom_config(1.0), 1);
  double const ssim = r.inr.ssim_all().mean;
  double const psnr = r.inr.psnr_all()->mean;
  o.note("ssim", ssim);
  o.note("ssim_std", r.inr.ssim_all().std);
  o.note("psnr", psnr);
  o.note("psnr_std", r.inr.psnr_all()->std);
  o.require(ssim >= 0.95, "ssim");
  o.require(psnr >= 30.0, "psnr");
}

void acceleration(Outcome &o)
{
  std::vector<double> inr;
  for (double R : {4.0, 8.0, 12.0}) {
    auto const r = reconstruct(phantom_config(R), 1);
    double const p_inr = r.inr.psnr_all()->mean;
    double const p_zf = r.zf.psnr_all()->mean;
    std::string const tag = "R" + std::to_string(static_cast<int>(R));
    o.note(tag + "_inr_psnr", p_inr);
    o.note(tag + "_zf_psnr", p_zf);
    o.note(tag + "_inr_ssim", r.inr.ssim_all().mean);
    o.require(p_inr - p_zf >= 3.0, tag + "_margin");
    inr.push_back(p_inr);
  }
  for (std::size_t k = 1; k < inr.size(); ++k) { o.require(inr[k] <= inr[k - 1] + 0.5, "monotone"); }
}

/// Weighted loss at every location a contrast did not sample, against noiseless k-space.
double heldout_loss(ContrastStack<double> const &images, ContrastStack<double> const &truth, CoilMaps<double> const &coils,
                    MaskSet const &masks)
{
  MaskSet unseen = masks;
  for (auto &m : unseen.masks) { m.bits = !m.bits; }
  auto const reference = forward_model(truth, coils, unseen);
  return weighted_loss(images, coils, unseen, reference, distance_weights(truth.grid()));
}

void joint_vs_separate(Outcome &o)
{
  PipelineConfig const cfg = phantom_config(8.0);
  Study const st = simulate_study(cfg);
  auto const w = distance_weights(cfg.phantom.grid);
  Index const N = cfg.phantom.contrasts();

  TrainConfig train = cfg.train;
  train.seed = cfg.model_seed_value();
  auto const joint = reconstruct_slice<float>(st.kspace[0], st.coils, st.masks, w, train);
  double const joint_loss = heldout_loss(joint.images, st.truth[0], st.coils, st.masks);

  // one model per contrast, same architecture and epoch budget
  double separate_loss = 0.0;
  for (Index n = 0; n < N; ++n) {
    KSpace<double> one(st.coils.coils(), 1, cfg.phantom.grid);
    for (Index c = 0; c < st.coils.coils(); ++c) { one(c, 0) = st.kspace[0](c, n); }
    MaskSet m;
    m.masks.push_back(st.masks.masks[static_cast<std::size_t>(n)]);
    ContrastStack<double> truth_n;
    truth_n.images.push_back(st.truth[0][n]);
    auto const r = reconstruct_slice<float>(one, st.coils, m, w, train);
    separate_loss += heldout_loss(r.images, truth_n, st.coils, m);
  }
  o.note("heldout_joint", joint_loss);
  o.note("heldout_separate_sum", separate_loss);
  o.note("ratio", joint_loss / separate_loss);
  o.require(joint_loss < separate_loss, "joint_not_better");
}

double adjacent_mad(std::vector<ContrastStack<double>> const &vol)
{
  double total = 0.0;
  Index count = 0;
  for (std::size_t s = 0; s + 1 < vol.size(); ++s) {
    for (Index n = 0; n < vol[s].contrasts(); ++n) {
      total += (vol[s][n].abs() - vol[s + 1][n].abs()).abs().mean();
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

void cross_plane(Outcome &o)
{
  PipelineConfig cfg = phantom_config(8.0);
  cfg.slices = {-0.15, -0.05, 0.05, 0.15};
  auto const r = reconstruct(cfg, workers_for(4));
  double const truth_mad = adjacent_mad(r.study.truth);
  double const recon_mad = adjacent_mad(r.run.images);
  o.note("truth_mad", truth_mad);
  o.note("recon_mad", recon_mad);
  o.note("ratio", recon_mad / truth_mad);
  o.note("inr_psnr", r.inr.psnr_all()->mean);
  o.require(recon_mad <= 2.0 * truth_mad, "continuity");
}

// 8 ---------------------------------------------------------------------------

std::string slurp(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) { throw std::runtime_error("missing " + p.string()); }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Outcome &o)
{
  if (g_cli.empty()) { throw std::runtime_error("no --cli given"); }
  fs::path const dir = fs::temp_directory_path() / "mcinr_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << R"({
  "phantom": {"grid": [48, 48], "ti": {"first": 26.0, "spacing": 249.05, "count": 4}},
  "slices": [-0.05, 0.05],
  "coils": {"count": 3},
  "sampling": {"R": 6},
  "train": {"epochs": 60, "log_every": 0},
  "seed": 5
})";
  for (char const *run : {"a", "b"}) {
    std::string const cmd = "'" + g_cli + "' pipeline --config '" + (dir / "config.json").string() + "' --out '" +
                            (dir / run).string() + "' > '" + (dir / (std::string(run) + ".log")).string() + "' 2>&1";
    if (std::system(cmd.c_str()) != 0) { throw std::runtime_error("pipeline run failed: " + cmd); }
  }
  for (char const *f : {"report_inr.txt", "report_zf.txt", "table.txt"}) {
    bool const same = slurp(dir / "a" / f) == slurp(dir / "b" / f);
    o.note(f, same ? "identical" : "different");
    o.require(same, f);
  }
  for (char const *f : {"truth.mcir", "support.mcir", "masks.mcir", "coils.mcir", "kspace.mcir", "recon_inr.mcir"}) {
    bool const same = slurp(dir / "a" / f) == slurp(dir / "b" / f);
    o.note(f, same ? "identical" : "different");
    o.require(same, f);
  }
  fs::remove_all(dir);
}

// 9 ---------------------------------------------------------------------------

double oracle_percentile(std::vector<double> v, double p)
{
  std::sort(v.begin(), v.end());
  double const pos = p / 100.0 * static_cast<double>(v.size() - 1);
  auto const k = static_cast<std::size_t>(std::floor(pos));
  double const frac = pos - static_cast<double>(k);
  if (frac == 0.0 || k + 1 >= v.size()) { return v[k]; }
  return v[k] + frac * (v[k + 1] - v[k]);
}

void metric_validity(Outcome &o)
{
  Rng rng(9);
  Grid const g{32, 28};
  RealPlane<double> a(g.ny, g.nz), b(g.ny, g.nz);
  for (Index k = 0; k < a.size(); ++k) {
    a.data()[k] = rng.uniform();
    b.data()[k] = std::clamp(a.data()[k] + 0.1 * rng.normal(), 0.0, 1.0);
  }
  MaskPlane mask = MaskPlane::Constant(g.ny, g.nz, true);
  mask.block(0, 0, 10, 10) = false;

  double const self = ssim(a, a, mask);
  double const sym = std::abs(ssim(a, b, mask) - ssim(b, a, mask));
  double sse = 0.0;
  Index n = 0;
  for (Index k = 0; k < a.size(); ++k) {
    if (mask.data()[k]) {
      sse += (a.data()[k] - b.data()[k]) * (a.data()[k] - b.data()[k]);
      ++n;
    }
  }
  double const psnr_err = std::abs(psnr(a, b, mask).value() - 10.0 * std::log10(static_cast<double>(n) / sse));
  o.note("ssim_self_err", std::abs(self - 1.0));
  o.note("ssim_asymmetry", sym);
  o.note("psnr_err", psnr_err);
  o.require(std::abs(self - 1.0) <= 1e-12, "ssim_self");
  o.require(sym <= 1e-12, "ssim_symmetry");
  o.require(psnr_err <= 1e-10, "psnr_oracle");

  // toy stacks: two slices of three contrasts each, masked pool
  std::vector<ContrastStack<double>> stacks;
  for (int s = 0; s < 2; ++s) { stacks.push_back(test::random_stack(3, {5, 4}, rng)); }
  MaskPlane toy = MaskPlane::Constant(5, 4, true);
  toy(0, 0) = toy(4, 3) = false;
  std::vector<double> pool;
  for (auto const &st : stacks) {
    for (auto const &im : st.images) {
      for (Index k = 0; k < im.size(); ++k) {
        if (toy.data()[k]) { pool.push_back(std::abs(im.data()[k])); }
      }
    }
  }
  double const lo = oracle_percentile(pool, 1.0), hi = oracle_percentile(pool, 99.0);
  auto const got = joint_percentile_normalize(stacks, {toy}, 1.0, 99.0);
  bool exact = true;
  for (std::size_t s = 0; s < stacks.size(); ++s) {
    for (Index c = 0; c < 3; ++c) {
      for (Index k = 0; k < 20; ++k) {
        double const want = std::clamp((std::abs(stacks[s][c].data()[k]) - lo) / (hi - lo), 0.0, 1.0);
        exact &= got[s][static_cast<std::size_t>(c)].data()[k] == want;
      }
    }
  }
  o.note("percentile_exact", exact ? "yes" : "no");
  o.require(exact, "normalization");
}

} // namespace

int main(int argc, char **argv)
{
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) {
    std::string const arg = argv[k];
    if (arg == "--cli" && k + 1 < argc) {
      g_cli = argv[++k];
    } else {
      selected.push_back(std::atoi(arg.c_str()));
    }
  }

  std::vector<Criterion> const criteria{
    {1, "operator-correctness", 10.0, operators},
    {2, "gradient-correctness", 60.0, gradients},
    {3, "mask-properties", 30.0, masks},
    {4, "fully-sampled-quality", 300.0, fully_sampled},
    {5, "acceleration-robustness", 900.0, acceleration},
    {6, "joint-vs-separate", 1200.0, joint_vs_separate},
    {7, "cross-plane-continuity", 1200.0, cross_plane},
    {8, "determinism", 1200.0, determinism},
    {9, "metrics-validity", 60.0, metric_validity},
  };

  int failures = 0;
  int ran = 0;
  for (auto const &c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) { continue; }
    Outcome o;
    auto const t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (std::exception const &e) {
      o.pass = false;
      o.detail << " exception=\"" << e.what() << "\"";
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.limit_s, "runtime");
    ++ran;
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d %s %s%s runtime_s=%.1f limit_s=%.0f\n", c.id, o.pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.str().c_str(), secs, c.limit_s);
    std::fflush(stdout);
  }
  std::printf("acceptance %d/%d passed\n", ran - failures, ran);
  return failures == 0 && ran > 0 ? 0 : 1;
}
