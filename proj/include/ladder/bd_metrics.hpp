#ifndef LADDER_BD_METRICS_HPP_
#define LADDER_BD_METRICS_HPP_

#include <vector>

#include "ladder/core.hpp"

namespace ladder {

enum class BDInterpolation { kPiecewiseCubicHermite, kCubicPolynomial };

struct BDOptions {
  BDInterpolation interpolation = BDInterpolation::kPiecewiseCubicHermite;
  int min_points = 2;  // cubic_polynomial requires >= 4
  int integration_samples = 1000;
};

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
// Exposed for the test oracles, which integrate the same fit independently.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y);  // x strictly ascending
  double operator()(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& knots() const { return x_; }

 private:
  std::vector<double> x_, y_, d_;
};

// Average percent rate difference of `test` over `reference` on the
// overlapping quality interval.
double bd_rate(const RDCurve& test, const RDCurve& reference,
               const BDOptions& options = {});

// Average quality difference (test - reference) on the overlapping log-rate
// interval.
double bd_quality(const RDCurve& test, const RDCurve& reference,
                  const BDOptions& options = {});

// Both deltas plus the log10-rate overlap used for bd_quality.
BDResult bd_metrics(const RDCurve& test, const RDCurve& reference,
                    const BDOptions& options = {});

// RD curve of a ladder over a surface: (actual bitrate, quality) at each
// preset bitrate, following the ladder's resolution choices.
RDCurve ladder_curve(const BitrateLadder& ladder, const RDSurface& surface);

// CSV of the fitted quality-vs-rate functions sampled on the overlap, for
// external plotting.
std::string bd_fit_csv(const RDCurve& test, const RDCurve& reference,
                       const BDOptions& options = {}, int samples = 200);

}  // namespace ladder

#endif  // LADDER_BD_METRICS_HPP_
