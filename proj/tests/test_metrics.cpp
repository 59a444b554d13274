#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mcinr/metrics.hpp"
#include "mcinr/rng.hpp"

using namespace mcinr;

namespace {

RealPlane<double> smooth_image(Index ny, Index nz, Rng &rng)
{
  RealPlane<double> im(ny, nz);
  double const a = rng.uniform(1.0, 3.0), b = rng.uniform(1.0, 3.0);
  for (Index i = 0; i < ny; ++i) {
    for (Index j = 0; j < nz; ++j) {
      im(i, j) = 0.5 + 0.3 * std::sin(a * i / 5.0) * std::cos(b * j / 7.0) + 0.05 * rng.uniform(-1.0, 1.0);
    }
  }
  return im;
}

/// Direct 2D-window SSIM: each center gets its own weighted sums, no separable filtering.
double ssim_oracle(RealPlane<double> const &x, RealPlane<double> const &y, MaskPlane const &mask)
{
  Index const half = 5;
  double const sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  Index n = 0;
  for (Index ci = half; ci + half < x.rows(); ++ci) {
    for (Index cj = half; cj + half < x.cols(); ++cj) {
      if (!mask(ci, cj)) { continue; }
      double wsum = 0.0, mx = 0.0, my = 0.0;
      for (Index di = -half; di <= half; ++di) {
        for (Index dj = -half; dj <= half; ++dj) {
          double const w = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
          wsum += w;
          mx += w * x(ci + di, cj + dj);
          my += w * y(ci + di, cj + dj);
        }
      }
      mx /= wsum;
      my /= wsum;
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (Index di = -half; di <= half; ++di) {
        for (Index dj = -half; dj <= half; ++dj) {
          double const w = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma)) / wsum;
          double const dx = x(ci + di, cj + dj) - mx, dy = y(ci + di, cj + dj) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cxy += w * dx * dy;
        }
      }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

ContrastStack<double> as_stack(std::vector<RealPlane<double>> const &planes)
{
  ContrastStack<double> s;
  for (auto const &p : planes) { s.images.push_back(p.cast<Complex<double>>()); }
  return s;
}

} // namespace

TEST_CASE("percentile")
{
  CHECK(percentile({3.0, 1.0, 2.0}, 50.0) == 2.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 50.0) == 2.5);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 0.0) == 1.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 100.0) == 4.0);
  CHECK(percentile({0.0, 10.0}, 99.0) == doctest::Approx(9.9));
  // sort-based oracle: position p/100 * (n - 1)
  Rng rng(1);
  std::vector<double> v(1001);
  for (auto &x : v) { x = rng.normal(); }
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (double p : {1.0, 7.3, 50.0, 99.0}) {
    double const pos = p / 100.0 * 1000.0;
    auto const lo = static_cast<std::size_t>(std::floor(pos));
    double const want = sorted[lo] + (pos - lo) * (sorted[std::min<std::size_t>(lo + 1, 1000)] - sorted[lo]);
    CHECK(percentile(v, p) == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK_THROWS_AS(percentile({}, 50.0), Error);
  CHECK_THROWS_AS(percentile({1.0}, 101.0), Error);
}

TEST_CASE("joint percentile normalization")
{
  Rng rng(2);
  RealPlane<double> a(8, 8), b(8, 8);
  for (Index k = 0; k < 64; ++k) {
    a.data()[k] = static_cast<double>(k);
    b.data()[k] = static_cast<double>(k + 64);
  }
  MaskPlane const all = MaskPlane::Constant(8, 8, true);
  SUBCASE("window is pooled over every contrast and slice")
  {
    PercentileWindow w;
    auto const out = joint_percentile_normalize({as_stack({a}), as_stack({b})}, {all}, 0.0, 100.0, &w);
    CHECK(w.lo == 0.0);
    CHECK(w.hi == 127.0);
    CHECK(out[0][0](0, 0) == 0.0);
    CHECK(out[1][0](7, 7) == 1.0);
    CHECK(out[1][0](0, 0) == doctest::Approx(64.0 / 127.0));
  }
  SUBCASE("clipping at the 1st and 99th percentile")
  {
    PercentileWindow w;
    auto const out = joint_percentile_normalize({as_stack({a, b})}, {all}, 1.0, 99.0, &w);
    CHECK(w.lo == doctest::Approx(1.27));
    CHECK(w.hi == doctest::Approx(125.73));
    CHECK(out[0][0](0, 0) == 0.0);
    CHECK(out[0][1](7, 7) == 1.0);
    for (auto const &im : out[0]) {
      CHECK(im.minCoeff() >= 0.0);
      CHECK(im.maxCoeff() <= 1.0);
    }
  }
  SUBCASE("mask restricts the pool")
  {
    MaskPlane m = MaskPlane::Constant(8, 8, false);
    m(0, 1) = m(0, 2) = true;
    PercentileWindow w;
    joint_percentile_normalize({as_stack({a})}, {m}, 0.0, 100.0, &w);
    CHECK(w.lo == 1.0);
    CHECK(w.hi == 2.0);
  }
  SUBCASE("idempotent on [0, 1] data spanning the range")
  {
    auto const once = joint_percentile_normalize({as_stack({a})}, {all}, 0.0, 100.0);
    auto const twice = joint_percentile_normalize({as_stack(once[0])}, {all}, 0.0, 100.0);
    CHECK((once[0][0] - twice[0][0]).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("magnitude of complex data")
  {
    ContrastStack<double> s;
    s.images.push_back(Plane<double>::Constant(2, 2, Complex<double>(3.0, 4.0)));
    CHECK((magnitude(s)[0] == 5.0).all());
  }
  SUBCASE("degenerate windows")
  {
    RealPlane<double> const flat = RealPlane<double>::Constant(8, 8, 0.3);
    try {
      joint_percentile_normalize({as_stack({flat})}, {all}, 1.0, 99.0);
      FAIL("expected degenerate");
    } catch (Error const &e) {
      CHECK(e.code() == ErrorCode::degenerate);
    }
    CHECK_THROWS_AS(joint_percentile_normalize({as_stack({a})}, {MaskPlane::Constant(8, 8, false)}, 1.0, 99.0), Error);
    CHECK_THROWS_AS(joint_percentile_normalize({as_stack({a})}, {all}, 50.0, 50.0), Error);
    CHECK_THROWS_AS(apply_window({as_stack({a})}, {1.0, 1.0}), Error);
  }
}

TEST_CASE("psnr")
{
  MaskPlane const all = MaskPlane::Constant(10, 10, true);
  RealPlane<double> const ref = RealPlane<double>::Constant(10, 10, 0.5);
  CHECK(psnr(ref, ref + 0.1, all).value() == doctest::Approx(20.0));
  CHECK(!psnr(ref, ref, all).has_value());
  Rng rng(3);
  RealPlane<double> x(10, 10), y(10, 10);
  for (Index k = 0; k < 100; ++k) {
    x.data()[k] = rng.uniform();
    y.data()[k] = rng.uniform();
  }
  MaskPlane half = all;
  half.topRows(5) = false;
  double mse = 0.0;
  for (Index i = 5; i < 10; ++i) {
    for (Index j = 0; j < 10; ++j) { mse += (x(i, j) - y(i, j)) * (x(i, j) - y(i, j)); }
  }
  mse /= 50.0;
  CHECK(std::abs(std::pow(10.0, -psnr(x, y, half).value() / 10.0) - mse) < 1e-10);
  // identical where it counts
  RealPlane<double> z = x;
  z.topRows(5) += 1.0;
  CHECK(!psnr(x, z, half).has_value());
  double prev = 1e9;
  for (double s : {0.01, 0.02, 0.05, 0.1}) {
    RealPlane<double> noisy = x;
    Rng r(4);
    for (Index k = 0; k < 100; ++k) { noisy.data()[k] += s * r.normal(); }
    double const p = psnr(x, noisy, all).value();
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(psnr(x, y, MaskPlane::Constant(10, 10, false)), Error);
  CHECK_THROWS_AS(psnr(x, RealPlane<double>::Zero(9, 10), all), Error);
}

TEST_CASE("ssim")
{
  Rng rng(5);
  RealPlane<double> const ref = smooth_image(32, 30, rng);
  MaskPlane const all = MaskPlane::Constant(32, 30, true);
  CHECK(ssim(ref, ref, all) == doctest::Approx(1.0).epsilon(1e-12));
  RealPlane<double> const other = smooth_image(32, 30, rng);
  CHECK(std::abs(ssim(ref, other, all) - ssim(other, ref, all)) <= 1e-12);
  CHECK(ssim(ref, other, all) < 1.0);

  SUBCASE("direct window oracle")
  {
    MaskPlane ring = all;
    ring.block(10, 10, 8, 8) = false;
    for (auto const &test : {RealPlane<double>(1.0 - ref), RealPlane<double>(ref + 0.1), other}) {
      CHECK(ssim(ref, test, all) == doctest::Approx(ssim_oracle(ref, test, all)).epsilon(1e-10));
      CHECK(ssim(ref, test, ring) == doctest::Approx(ssim_oracle(ref, test, ring)).epsilon(1e-10));
    }
    CHECK(ssim(ref, RealPlane<double>(1.0 - ref), all) < 0.0);
  }
  SUBCASE("monotone in noise")
  {
    double prev = 1.0;
    for (double s : {0.01, 0.03, 0.1}) {
      RealPlane<double> noisy = ref;
      Rng r(6);
      for (Index k = 0; k < noisy.size(); ++k) { noisy.data()[k] += s * r.normal(); }
      double const v = ssim(ref, noisy, all);
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("errors")
  {
    RealPlane<double> const small = RealPlane<double>::Zero(8, 20);
    CHECK_THROWS_AS(ssim(small, small, MaskPlane::Constant(8, 20, true)), Error);
    MaskPlane border = MaskPlane::Constant(32, 30, false);
    border.row(0) = true; // no window center fits
    CHECK_THROWS_AS(ssim(ref, ref, border), Error);
    SsimOptions even;
    even.window = 10;
    CHECK_THROWS_AS(ssim(ref, ref, all, even), Error);
  }
}

TEST_CASE("evaluate and reports")
{
  Rng rng(7);
  std::vector<ContrastStack<double>> ref, test;
  for (int s = 0; s < 2; ++s) {
    std::vector<RealPlane<double>> r, t;
    for (int n = 0; n < 3; ++n) {
      r.push_back(smooth_image(24, 24, rng));
      t.push_back(n == 0 ? r.back() : RealPlane<double>(r.back() + 0.02 * (n + s)));
    }
    ref.push_back(as_stack(r));
    test.push_back(as_stack(t));
  }
  MaskPlane const all = MaskPlane::Constant(24, 24, true);
  auto const report = evaluate(ref, test, {all});
  REQUIRE(report.entries.size() == 6);
  CHECK(report.entries[3].slice == 1);
  CHECK(report.entries[3].contrast == 0);

  // separate normalization: a global scale of the test volume changes nothing
  std::vector<ContrastStack<double>> scaled = test;
  for (auto &st : scaled) {
    for (auto &im : st.images) { im *= 7.0; }
  }
  auto const same = evaluate(ref, scaled, {all});
  for (std::size_t k = 0; k < 6; ++k) { CHECK(same.entries[k].ssim == doctest::Approx(report.entries[k].ssim)); }

  // self-comparison
  auto const self = evaluate(ref, ref, {all});
  CHECK(self.identical_count() == 6);
  CHECK(!self.psnr_all().has_value());
  CHECK(self.ssim_all().mean == doctest::Approx(1.0));
  CHECK(self.to_text().find("psnr_mean=identical") != std::string::npos);

  // summaries use the population standard deviation
  MetricReport r;
  r.entries = {{0, 0, 0.5, 20.0}, {0, 1, 0.7, 30.0}, {1, 0, 0.9, std::nullopt}, {1, 1, 0.9, 40.0}};
  CHECK(r.ssim_all().mean == doctest::Approx(0.75));
  CHECK(r.ssim_all().std == doctest::Approx(std::sqrt((0.0625 + 0.0025 + 0.0225 + 0.0225) / 4.0)));
  CHECK(r.ssim_by_slice().mean == doctest::Approx(0.75));
  CHECK(r.ssim_by_slice().std == doctest::Approx(0.15));
  CHECK(r.ssim_by_contrast().mean == doctest::Approx(0.75));
  CHECK(r.psnr_all()->mean == doctest::Approx(30.0));
  CHECK(r.psnr_by_slice()->mean == doctest::Approx(32.5));
  CHECK(r.identical_count() == 1);
  CHECK(r.ssim_of_contrast(1) == doctest::Approx(0.8));
  CHECK(r.psnr_of_contrast(0).value() == doctest::Approx(20.0));
  auto const text = r.to_text();
  CHECK(text.find("slice=1 contrast=0 ssim=0.9 psnr=identical\n") != std::string::npos);
  CHECK(text.find("aggregate ssim_mean=0.75") != std::string::npos);
  CHECK(text.find("identical=1 entries=4") != std::string::npos);

  auto const table = format_table({{"INR", "R=4", r}, {"ZF", "R=4", self}, {"INR", "R=8", r}});
  CHECK(table.find("method") == 0);
  CHECK(table.find("R=8") != std::string::npos);
  CHECK(table.find("0.750 +- ") != std::string::npos);
  CHECK(table.find("30.0 +- ") != std::string::npos);
  CHECK(table.find("identical") != std::string::npos);
  CHECK(table.find("-") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);

  CHECK_THROWS_AS(evaluate(ref, {test[0]}, {all}), Error);
}
