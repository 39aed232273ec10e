#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

// Least-squares power-law fits for h-sweeps.
namespace predissoc {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // of the ln-ln fit
  double r2 = 1.0;
};

// fit y = C x^p through (x_i, y_i) by least squares in ln-ln coordinates
inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need at least two samples");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_slope: samples must be positive");
    const double u = std::log(x[i]), v = std::log(y[i]);
    sx += u;
    sy += v;
    sxx += u * u;
    sxy += u * v;
    syy += v * v;
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw std::invalid_argument("fit_slope: degenerate abscissae");
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  const double sst = syy - sy * sy / n;
  double sse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
    sse += e * e;
  }
  f.r2 = (sst > 0.0) ? 1.0 - sse / sst : 1.0;
  return f;
}

}  // namespace predissoc
