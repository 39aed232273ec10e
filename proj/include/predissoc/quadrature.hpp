#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

// Adaptive Gauss-Kronrod quadrature on finite intervals, with optional
// inverse-square-root endpoint substitutions (t = a + s^2 resp. t = b - s^2)
// for integrands behaving like |t - endpoint|^{-1/2}.
namespace predissoc {

struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subdivisions = 4000;
};

enum class Endpoint { regular, sqrt_singular };

struct IntegrationResult {
  std::complex<double> value{0.0, 0.0};
  double error = 0.0;
  int subdivisions = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace quad_detail {

// 15-point Kronrod value plus embedded 7-point Gauss error estimate.
template <class F>
void gk15(const F& f, double a, double b, std::complex<double>& value, double& err) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  using g7 = boost::math::quadrature::gauss<double, 7>;
  const double c = 0.5 * (a + b);
  const double hl = 0.5 * (b - a);
  const auto& kx = gk::abscissa();
  const auto& kw = gk::weights();
  const auto& gx = g7::abscissa();
  const auto& gw = g7::weights();
  std::complex<double> sk = kw[0] * f(c);
  for (std::size_t i = 1; i < kx.size(); ++i)
    sk += kw[i] * (f(c + hl * kx[i]) + f(c - hl * kx[i]));
  std::complex<double> sg = gw[0] * f(c);
  for (std::size_t i = 1; i < gx.size(); ++i)
    sg += gw[i] * (f(c + hl * gx[i]) + f(c - hl * gx[i]));
  value = hl * sk;
  err = std::abs(hl * (sk - sg));
}

struct Interval {
  double a, b, err;
  std::complex<double> value;
  bool operator<(const Interval& other) const { return err < other.err; }
};

template <class F>
IntegrationResult adaptive(const F& f, double a, double b, const QuadratureSpec& spec) {
  std::priority_queue<Interval> heap;
  Interval whole;
  whole.a = a;
  whole.b = b;
  gk15(f, a, b, whole.value, whole.err);
  heap.push(whole);
  std::complex<double> total = whole.value;
  double total_err = whole.err;
  int used = 0;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (used >= spec.max_subdivisions) {
      const Interval& worst = heap.top();
      std::ostringstream msg;
      msg << "quadrature failed to converge: error " << total_err << " after " << used
          << " subdivisions, worst subinterval [" << worst.a << ", " << worst.b << "]";
      throw QuadratureError(msg.str());
    }
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Interval left{worst.a, mid, 0.0, {}};
    Interval right{mid, worst.b, 0.0, {}};
    gk15(f, left.a, left.b, left.value, left.err);
    gk15(f, right.a, right.b, right.value, right.err);
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    heap.push(left);
    heap.push(right);
    ++used;
  }
  IntegrationResult r;
  r.value = total;
  r.error = total_err;
  r.subdivisions = used;
  return r;
}

}  // namespace quad_detail

// Integrate f over [a, b]; f may return double or std::complex<double>.
template <class F>
IntegrationResult integrate_full(F f, double a, double b, QuadratureSpec spec = {},
                                 Endpoint left = Endpoint::regular,
                                 Endpoint right = Endpoint::regular) {
  if (!(a < b)) {
    if (a == b) return {};
    throw std::invalid_argument("integrate: requires a <= b");
  }
  auto wrap = [&f](double t) -> std::complex<double> { return std::complex<double>(0, 0) + f(t); };
  if (left == Endpoint::regular && right == Endpoint::regular)
    return quad_detail::adaptive(wrap, a, b, spec);

  const double mid = 0.5 * (a + b);
  IntegrationResult total;
  QuadratureSpec half = spec;
  half.abs_tol = 0.5 * spec.abs_tol;
  half.rel_tol = 0.5 * spec.rel_tol;
  auto accumulate = [&total](const IntegrationResult& part) {
    total.value += part.value;
    total.error += part.error;
    total.subdivisions += part.subdivisions;
  };
  if (left == Endpoint::sqrt_singular) {
    // t = a + s^2, dt = 2 s ds on [a, mid]
    auto g = [&wrap, a](double s) { return 2.0 * s * wrap(a + s * s); };
    accumulate(quad_detail::adaptive(g, 0.0, std::sqrt(mid - a), half));
  } else {
    accumulate(quad_detail::adaptive(wrap, a, mid, half));
  }
  if (right == Endpoint::sqrt_singular) {
    // t = b - s^2, dt = -2 s ds, orientation restored on [mid, b]
    auto g = [&wrap, b](double s) { return 2.0 * s * wrap(b - s * s); };
    accumulate(quad_detail::adaptive(g, 0.0, std::sqrt(b - mid), half));
  } else {
    accumulate(quad_detail::adaptive(wrap, mid, b, half));
  }
  return total;
}

// Convenience wrappers returning only the value.
template <class F>
std::complex<double> integrate(F f, double a, double b, QuadratureSpec spec = {},
                               Endpoint left = Endpoint::regular,
                               Endpoint right = Endpoint::regular) {
  return integrate_full(f, a, b, spec, left, right).value;
}

template <class F>
double integrate_real(F f, double a, double b, QuadratureSpec spec = {},
                      Endpoint left = Endpoint::regular, Endpoint right = Endpoint::regular) {
  return integrate(f, a, b, spec, left, right).real();
}

}  // namespace predissoc
