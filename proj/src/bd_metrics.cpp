#include "ladder/bd_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace ladder {

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw std::invalid_argument("pchip needs >= 2 samples");
  for (size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("pchip abscissae must be strictly ascending");
  }
  d_.resize(n);
  std::vector<double> h(n - 1), slope(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    slope[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  if (n == 2) {
    d_[0] = d_[1] = slope[0];
    return;
  }
  // Fritsch-Carlson: weighted harmonic mean at interior points, one-sided
  // three-point estimate at the ends, clipped to preserve monotonicity.
  for (size_t i = 1; i + 1 < n; ++i) {
    if (slope[i - 1] * slope[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      double w1 = 2.0 * h[i] + h[i - 1];
      double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 <= 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
    return d;
  };
  d_[0] = end_slope(h[0], h[1], slope[0], slope[1]);
  d_[n - 1] = end_slope(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
}

double Pchip::operator()(double x) const {
  size_t n = x_.size();
  if (x <= x_[0]) x = x_[0];
  if (x >= x_[n - 1]) x = x_[n - 1];
  size_t hi = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
  if (hi == 0) hi = 1;
  if (hi >= n) hi = n - 1;
  size_t lo = hi - 1;
  double h = x_[hi] - x_[lo];
  double t = (x - x_[lo]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1;
  double h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2;
  double h11 = t3 - t2;
  return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[hi] + h11 * h * d_[hi];
}

namespace {

// Least-squares cubic y(x); classic Bjontegaard fit.
class CubicFit {
 public:
  CubicFit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 4)
      throw std::invalid_argument("cubic fit needs >= 4 samples");
    double a[4][5] = {};
    for (size_t k = 0; k < x.size(); ++k) {
      double p[4] = {1.0, x[k], x[k] * x[k], x[k] * x[k] * x[k]};
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) a[i][j] += p[i] * p[j];
        a[i][4] += p[i] * y[k];
      }
    }
    for (int col = 0; col < 4; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 4; ++r)
        if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
      std::swap(a[col], a[pivot]);
      if (std::abs(a[col][col]) < 1e-14)
        throw std::runtime_error("degenerate cubic fit");
      for (int r = 0; r < 4; ++r) {
        if (r == col) continue;
        double f = a[r][col] / a[col][col];
        for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
      }
    }
    for (int i = 0; i < 4; ++i) coef_[i] = a[i][4] / a[i][i];
  }

  double operator()(double x) const {
    return coef_[0] + x * (coef_[1] + x * (coef_[2] + x * coef_[3]));
  }

 private:
  double coef_[4];
};

struct Fit {
  std::function<double(double)> eval;
  double lo, hi;
  // Breakpoints where the fit is only C1 (PCHIP knots); empty for the
  // globally smooth cubic polynomial.
  std::vector<double> knots;
};

// Sorts samples by x, collapses exact x-duplicates to the max y.
void prepare_axis(std::vector<double>& x, std::vector<double>& y) {
  std::vector<size_t> order(x.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, ys;
  for (size_t i : order) {
    if (!xs.empty() && x[i] == xs.back()) {
      ys.back() = std::max(ys.back(), y[i]);
    } else {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

Fit fit_curve(std::vector<double> x, std::vector<double> y,
              const BDOptions& options, const char* what) {
  prepare_axis(x, y);
  int min_points = options.min_points;
  if (options.interpolation == BDInterpolation::kCubicPolynomial)
    min_points = std::max(min_points, 4);
  if (static_cast<int>(x.size()) < min_points)
    throw std::invalid_argument(std::string("too few points for ") + what +
                                " (need " + std::to_string(min_points) + ")");
  Fit fit;
  fit.lo = x.front();
  fit.hi = x.back();
  if (options.interpolation == BDInterpolation::kPiecewiseCubicHermite) {
    auto p = std::make_shared<Pchip>(std::move(x), std::move(y));
    fit.knots = p->knots();
    fit.eval = [p](double v) { return (*p)(v); };
  } else {
    auto p = std::make_shared<CubicFit>(x, y);
    fit.eval = [p](double v) { return (*p)(v); };
  }
  return fit;
}

// Composite Simpson of f over [lo, hi] with n subintervals (rounded up to
// even).
double simpson(const std::function<double(double)>& f, double lo, double hi,
               int n) {
  if (n < 2) n = 2;
  if (n % 2) ++n;
  double h = (hi - lo) / n;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Mean of (ft - fr) over [lo, hi]. The sample budget is spread over the
// segments between interpolant knots so every Simpson subinterval lies
// inside a single cubic piece of both fits; Simpson is exact for cubics,
// which keeps the C1 kinks of PCHIP from degrading accuracy.
double mean_difference(const Fit& ft, const Fit& fr, double lo, double hi,
                       int samples) {
  std::vector<double> breaks = {lo, hi};
  for (const Fit* f : {&ft, &fr})
    for (double k : f->knots)
      if (k > lo && k < hi) breaks.push_back(k);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto diff = [&](double x) { return ft.eval(x) - fr.eval(x); };
  double total = 0.0;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    double a = breaks[i], b = breaks[i + 1];
    int n = static_cast<int>(std::ceil(samples * (b - a) / (hi - lo)));
    total += simpson(diff, a, b, std::max(n, 2));
  }
  return total / (hi - lo);
}

void extract(const RDCurve& curve, std::vector<double>& log_rate,
             std::vector<double>& quality) {
  for (const auto& p : curve.points) {
    if (!(p.actual_bitrate_kbps > 0.0))
      throw std::invalid_argument("non-positive rate in curve");
    log_rate.push_back(std::log(p.actual_bitrate_kbps));
    quality.push_back(p.quality);
  }
}

}  // namespace

double bd_rate(const RDCurve& test, const RDCurve& reference,
               const BDOptions& options) {
  std::vector<double> lr_t, q_t, lr_r, q_r;
  extract(test, lr_t, q_t);
  extract(reference, lr_r, q_r);
  Fit ft = fit_curve(q_t, lr_t, options, "bd_rate test curve");
  Fit fr = fit_curve(q_r, lr_r, options, "bd_rate reference curve");
  double lo = std::max(ft.lo, fr.lo);
  double hi = std::min(ft.hi, fr.hi);
  if (!(lo < hi)) throw std::runtime_error("no quality overlap for bd_rate");
  double avg = mean_difference(ft, fr, lo, hi, options.integration_samples);
  return 100.0 * (std::exp(avg) - 1.0);
}

double bd_quality(const RDCurve& test, const RDCurve& reference,
                  const BDOptions& options) {
  std::vector<double> lr_t, q_t, lr_r, q_r;
  extract(test, lr_t, q_t);
  extract(reference, lr_r, q_r);
  Fit ft = fit_curve(lr_t, q_t, options, "bd_quality test curve");
  Fit fr = fit_curve(lr_r, q_r, options, "bd_quality reference curve");
  double lo = std::max(ft.lo, fr.lo);
  double hi = std::min(ft.hi, fr.hi);
  if (!(lo < hi)) throw std::runtime_error("no rate overlap for bd_quality");
  return mean_difference(ft, fr, lo, hi, options.integration_samples);
}

BDResult bd_metrics(const RDCurve& test, const RDCurve& reference,
                    const BDOptions& options) {
  BDResult result;
  result.bd_rate_percent = bd_rate(test, reference, options);
  result.bd_quality = bd_quality(test, reference, options);
  std::vector<double> lr_t, q_t, lr_r, q_r;
  extract(test, lr_t, q_t);
  extract(reference, lr_r, q_r);
  auto minmax_t = std::minmax_element(lr_t.begin(), lr_t.end());
  auto minmax_r = std::minmax_element(lr_r.begin(), lr_r.end());
  constexpr double kLn10 = 2.302585092994046;
  result.overlap_low = std::max(*minmax_t.first, *minmax_r.first) / kLn10;
  result.overlap_high = std::min(*minmax_t.second, *minmax_r.second) / kLn10;
  return result;
}

RDCurve ladder_curve(const BitrateLadder& ladder, const RDSurface& surface) {
  RDCurve curve;
  for (const auto& [bitrate, res] : ladder.entries) {
    auto point = surface.lookup(res, bitrate);
    if (!point)
      throw std::runtime_error("ladder entry unresolvable in surface: " +
                               res.name() + " @ " + std::to_string(bitrate) +
                               " Kbps");
    if (curve.points.empty()) curve.resolution = res;
    curve.points.push_back(*point);
  }
  return curve;
}

std::string bd_fit_csv(const RDCurve& test, const RDCurve& reference,
                       const BDOptions& options, int samples) {
  std::vector<double> lr_t, q_t, lr_r, q_r;
  extract(test, lr_t, q_t);
  extract(reference, lr_r, q_r);
  Fit ft = fit_curve(lr_t, q_t, options, "bd fit test curve");
  Fit fr = fit_curve(lr_r, q_r, options, "bd fit reference curve");
  double lo = std::max(ft.lo, fr.lo);
  double hi = std::min(ft.hi, fr.hi);
  std::ostringstream out;
  out << "rate_kbps,test_quality,reference_quality\n";
  for (int i = 0; i <= samples; ++i) {
    double lr = lo + (hi - lo) * i / samples;
    out << std::exp(lr) << "," << ft.eval(lr) << "," << fr.eval(lr) << "\n";
  }
  return out.str();
}

}  // namespace ladder
