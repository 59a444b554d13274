#include "mcinr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace mcinr {

namespace {

MaskPlane const &mask_for(std::vector<MaskPlane> const &masks, std::size_t k)
{
  return masks.size() == 1 ? masks.front() : masks[k];
}

Summary summarize(std::vector<double> const &v)
{
  Summary s;
  if (v.empty()) { return s; }
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) { acc += (x - s.mean) * (x - s.mean); }
  s.std = std::sqrt(acc / static_cast<double>(v.size()));
  return s;
}

// Partial selection of one order statistic.
double order_statistic(std::vector<double> &values, std::size_t k)
{
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

} // namespace

MagnitudeStack magnitude(ContrastStack<double> const &stack)
{
  MagnitudeStack out;
  out.reserve(stack.images.size());
  for (auto const &im : stack.images) { out.push_back(im.abs()); }
  return out;
}

double percentile(std::vector<double> values, double p)
{
  require(!values.empty(), ErrorCode::degenerate, "percentile of an empty set");
  require(p >= 0.0 && p <= 100.0, ErrorCode::validation, "percentile must be in [0, 100]");
  double const pos = p / 100.0 * static_cast<double>(values.size() - 1);
  auto const k = static_cast<std::size_t>(std::floor(pos));
  double const frac = pos - static_cast<double>(k);
  double const lo = order_statistic(values, k);
  if (frac == 0.0 || k + 1 >= values.size()) { return lo; }
  // After nth_element everything above k is >= lo, so the next order statistic is their minimum.
  double const next = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(k) + 1, values.end());
  return lo + frac * (next - lo);
}

PercentileWindow pooled_window(std::vector<ContrastStack<double>> const &stacks, std::vector<MaskPlane> const &masks,
                               double p_lo, double p_hi)
{
  require(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 100.0, ErrorCode::validation,
          "percentiles must satisfy 0 <= p_lo < p_hi <= 100");
  require(!stacks.empty(), ErrorCode::validation, "no stacks to normalize");
  require(masks.size() == 1 || masks.size() == stacks.size(), ErrorCode::shape,
          "need one evaluation mask or one per stack");
  std::vector<double> pool;
  for (std::size_t k = 0; k < stacks.size(); ++k) {
    auto const &mask = mask_for(masks, k);
    for (auto const &im : stacks[k].images) {
      require(im.rows() == mask.rows() && im.cols() == mask.cols(), ErrorCode::shape, "mask does not match image");
      for (Index i = 0; i < im.rows(); ++i) {
        for (Index j = 0; j < im.cols(); ++j) {
          if (mask(i, j)) { pool.push_back(std::abs(im(i, j))); }
        }
      }
    }
  }
  require(!pool.empty(), ErrorCode::degenerate, "evaluation mask selects no voxels");
  PercentileWindow w{percentile(pool, p_lo), percentile(pool, p_hi)};
  require(w.hi > w.lo, ErrorCode::degenerate, "percentile window is degenerate (hi == lo)");
  return w;
}

std::vector<MagnitudeStack> apply_window(std::vector<ContrastStack<double>> const &stacks, PercentileWindow window)
{
  require(window.hi > window.lo, ErrorCode::degenerate, "percentile window is degenerate (hi == lo)");
  std::vector<MagnitudeStack> out;
  for (auto const &s : stacks) {
    MagnitudeStack m = magnitude(s);
    for (auto &im : m) { im = ((im - window.lo) / (window.hi - window.lo)).max(0.0).min(1.0); }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MagnitudeStack> joint_percentile_normalize(std::vector<ContrastStack<double>> const &stacks,
                                                       std::vector<MaskPlane> const &masks, double p_lo, double p_hi,
                                                       PercentileWindow *window)
{
  PercentileWindow const w = pooled_window(stacks, masks, p_lo, p_hi);
  if (window) { *window = w; }
  return apply_window(stacks, w);
}

std::optional<double> psnr(RealPlane<double> const &ref, RealPlane<double> const &test, MaskPlane const &mask)
{
  require(ref.rows() == test.rows() && ref.cols() == test.cols() && ref.rows() == mask.rows() &&
            ref.cols() == mask.cols(),
          ErrorCode::shape, "psnr: image and mask shapes differ");
  Index const n = mask.count();
  require(n > 0, ErrorCode::degenerate, "psnr: evaluation mask is empty");
  double const sse = mask.select((ref - test).square(), 0.0).sum();
  if (sse == 0.0) { return std::nullopt; }
  return 10.0 * std::log10(1.0 / (sse / static_cast<double>(n)));
}

double ssim(RealPlane<double> const &ref, RealPlane<double> const &test, MaskPlane const &mask, SsimOptions const &opts)
{
  require(ref.rows() == test.rows() && ref.cols() == test.cols() && ref.rows() == mask.rows() &&
            ref.cols() == mask.cols(),
          ErrorCode::shape, "ssim: image and mask shapes differ");
  Index const ws = opts.window;
  require(ws >= 1 && ws % 2 == 1, ErrorCode::validation, "ssim window size must be odd");
  require(ws <= ref.rows() && ws <= ref.cols(), ErrorCode::validation, "ssim window larger than image");

  Eigen::ArrayXd g(ws);
  Index const half = ws / 2;
  for (Index k = 0; k < ws; ++k) {
    double const d = static_cast<double>(k - half);
    g[k] = std::exp(-d * d / (2.0 * opts.sigma * opts.sigma));
  }
  g /= g.sum();

  // Separable valid-mode filter: rows first, then columns.
  Index const oy = ref.rows() - ws + 1;
  Index const oz = ref.cols() - ws + 1;
  auto filter = [&](RealPlane<double> const &x) {
    RealPlane<double> tmp = RealPlane<double>::Zero(ref.rows(), oz);
    for (Index k = 0; k < ws; ++k) { tmp += g[k] * x.middleCols(k, oz); }
    RealPlane<double> out = RealPlane<double>::Zero(oy, oz);
    for (Index k = 0; k < ws; ++k) { out += g[k] * tmp.middleRows(k, oy); }
    return out;
  };

  RealPlane<double> const mx = filter(ref);
  RealPlane<double> const my = filter(test);
  RealPlane<double> const sxx = filter(ref.square()) - mx.square();
  RealPlane<double> const syy = filter(test.square()) - my.square();
  RealPlane<double> const sxy = filter(ref * test) - mx * my;
  double const c1 = std::pow(opts.k1 * opts.data_range, 2);
  double const c2 = std::pow(opts.k2 * opts.data_range, 2);
  RealPlane<double> const map =
    ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx.square() + my.square() + c1) * (sxx + syy + c2));

  auto const centers = mask.block(half, half, oy, oz);
  Index const n = centers.count();
  require(n > 0, ErrorCode::degenerate, "ssim: no window center inside the evaluation mask");
  return centers.select(map, 0.0).sum() / static_cast<double>(n);
}

namespace {

template <class Key_, class Fn_>
std::vector<double> grouped_means(std::vector<ContrastMetric> const &entries, Key_ key, Fn_ value)
{
  std::map<Index, std::pair<double, Index>> acc;
  for (auto const &e : entries) {
    auto const v = value(e);
    if (!v) { continue; }
    auto &[sum, count] = acc[key(e)];
    sum += *v;
    ++count;
  }
  std::vector<double> means;
  for (auto const &[k, sc] : acc) { means.push_back(sc.first / static_cast<double>(sc.second)); }
  return means;
}

auto const by_slice = [](ContrastMetric const &e) { return e.slice; };
auto const by_contrast = [](ContrastMetric const &e) { return e.contrast; };
auto const ssim_of = [](ContrastMetric const &e) { return std::optional<double>(e.ssim); };
auto const psnr_of = [](ContrastMetric const &e) { return e.psnr; };

std::optional<Summary> maybe_summary(std::vector<double> const &v)
{
  if (v.empty()) { return std::nullopt; }
  return summarize(v);
}

} // namespace

Summary MetricReport::ssim_all() const
{
  std::vector<double> v;
  for (auto const &e : entries) { v.push_back(e.ssim); }
  return summarize(v);
}

Summary MetricReport::ssim_by_slice() const { return summarize(grouped_means(entries, by_slice, ssim_of)); }
Summary MetricReport::ssim_by_contrast() const { return summarize(grouped_means(entries, by_contrast, ssim_of)); }

std::optional<Summary> MetricReport::psnr_all() const
{
  std::vector<double> v;
  for (auto const &e : entries) {
    if (e.psnr) { v.push_back(*e.psnr); }
  }
  return maybe_summary(v);
}

std::optional<Summary> MetricReport::psnr_by_slice() const
{
  return maybe_summary(grouped_means(entries, by_slice, psnr_of));
}

std::optional<Summary> MetricReport::psnr_by_contrast() const
{
  return maybe_summary(grouped_means(entries, by_contrast, psnr_of));
}

Index MetricReport::identical_count() const
{
  return static_cast<Index>(std::count_if(entries.begin(), entries.end(), [](auto const &e) { return !e.psnr; }));
}

double MetricReport::ssim_of_contrast(Index contrast) const
{
  std::vector<double> v;
  for (auto const &e : entries) {
    if (e.contrast == contrast) { v.push_back(e.ssim); }
  }
  return summarize(v).mean;
}

std::optional<double> MetricReport::psnr_of_contrast(Index contrast) const
{
  std::vector<double> v;
  for (auto const &e : entries) {
    if (e.contrast == contrast && e.psnr) { v.push_back(*e.psnr); }
  }
  if (v.empty()) { return std::nullopt; }
  return summarize(v).mean;
}

std::string MetricReport::to_text() const
{
  std::ostringstream os;
  os << std::setprecision(10);
  auto psnr_text = [](std::optional<double> const &p) {
    std::ostringstream s;
    s << std::setprecision(10);
    if (p) {
      s << *p;
    } else {
      s << "identical";
    }
    return s.str();
  };
  for (auto const &e : entries) {
    os << "slice=" << e.slice << " contrast=" << e.contrast << " ssim=" << e.ssim << " psnr=" << psnr_text(e.psnr)
       << "\n";
  }
  auto const sa = ssim_all();
  auto const ss = ssim_by_slice();
  os << "aggregate ssim_mean=" << sa.mean << " ssim_std=" << sa.std << " ssim_slice_std=" << ss.std;
  if (auto const pa = psnr_all()) {
    auto const ps = psnr_by_slice();
    os << " psnr_mean=" << pa->mean << " psnr_std=" << pa->std << " psnr_slice_std=" << ps->std;
  } else {
    os << " psnr_mean=identical psnr_std=0 psnr_slice_std=0";
  }
  os << " identical=" << identical_count() << " entries=" << entries.size() << "\n";
  return os.str();
}

MetricReport evaluate(std::vector<ContrastStack<double>> const &ref, std::vector<ContrastStack<double>> const &test,
                      std::vector<MaskPlane> const &masks, MetricOptions const &opts)
{
  require(ref.size() == test.size() && !ref.empty(), ErrorCode::shape, "reference and test slice counts differ");
  for (std::size_t s = 0; s < ref.size(); ++s) {
    require(ref[s].contrasts() == test[s].contrasts() && ref[s].grid() == test[s].grid(), ErrorCode::shape,
            "reference and test stacks differ in shape");
  }
  auto const nref = joint_percentile_normalize(ref, masks, opts.p_lo, opts.p_hi);
  auto const ntest = joint_percentile_normalize(test, masks, opts.p_lo, opts.p_hi);
  MetricReport report;
  for (std::size_t s = 0; s < ref.size(); ++s) {
    auto const &mask = mask_for(masks, s);
    for (std::size_t n = 0; n < nref[s].size(); ++n) {
      ContrastMetric m;
      m.slice = static_cast<Index>(s);
      m.contrast = static_cast<Index>(n);
      m.ssim = ssim(nref[s][n], ntest[s][n], mask, opts.ssim);
      m.psnr = psnr(nref[s][n], ntest[s][n], mask);
      report.entries.push_back(m);
    }
  }
  return report;
}

std::string format_table(std::vector<TableCell> const &cells)
{
  std::vector<std::string> methods, conditions;
  auto add_unique = [](std::vector<std::string> &v, std::string const &s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) { v.push_back(s); }
  };
  for (auto const &c : cells) {
    add_unique(methods, c.method);
    add_unique(conditions, c.condition);
  }
  auto find = [&](std::string const &m, std::string const &c) -> MetricReport const * {
    for (auto const &cell : cells) {
      if (cell.method == m && cell.condition == c) { return &cell.report; }
    }
    return nullptr;
  };

  std::ostringstream os;
  os << std::fixed;
  os << std::left << std::setw(12) << "method" << std::setw(8) << "metric";
  for (auto const &c : conditions) { os << std::setw(18) << c; }
  os << "\n";
  for (auto const &m : methods) {
    for (int row = 0; row < 2; ++row) {
      os << std::setw(12) << (row == 0 ? m : "") << std::setw(8) << (row == 0 ? "SSIM" : "PSNR");
      for (auto const &c : conditions) {
        std::ostringstream cell;
        cell << std::fixed;
        if (auto const *r = find(m, c)) {
          if (row == 0) {
            auto const s = r->ssim_all();
            cell << std::setprecision(3) << s.mean << " +- " << s.std;
          } else if (auto const p = r->psnr_all()) {
            cell << std::setprecision(1) << p->mean << " +- " << p->std;
          } else {
            cell << "identical";
          }
        } else {
          cell << "-";
        }
        os << std::setw(18) << cell.str();
      }
      os << "\n";
    }
  }
  return os.str();
}

} // namespace mcinr
