#pragma once
// Closed-form ingredients of the long-time survival-amplitude expansion:
//   * the smooth plateau cutoff used to isolate the resonant level,
//   * the Airy convolution amplitude A0 (integral and closed forms) and its
//     half-line splittings A^+/A^-/B^+,
//   * the oscillatory contour integral F(lambda),
//   * the first correction term q0(t, h) assembled from these pieces.

#include <cmath>
#include <complex>
#include <stdexcept>

#include "airy.hpp"
#include "quadrature.hpp"

namespace predissoc {

namespace asym_detail {

// exp(-1/u) extended by 0 for u <= 0 (the standard smooth step ingredient)
inline double decay_factor(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

// C^inf step: 0 for u <= 0, 1 for u >= 1, strictly monotone in between
inline double smooth_step(double u) {
  const double a = decay_factor(u);
  const double b = decay_factor(1.0 - u);
  return a / (a + b);
}

// |Ai(x)| < 1e-16 for x beyond this; used to truncate products in which one
// factor is a decaying Airy tail
constexpr double kAiryDecayCut = 14.0;

}  // namespace asym_detail

// ------------------------------------------------------------- cutoff bump
// smooth even bump: identically 1 on [-delta0, delta0], supported in
// (-delta1, delta1), values in [0, 1]
inline double g0_bump(double s, double delta0, double delta1) {
  if (!(0.0 < delta0 && delta0 < delta1))
    throw std::invalid_argument("g0_bump: need 0 < delta0 < delta1");
  return asym_detail::smooth_step((delta1 - std::abs(s)) / (delta1 - delta0));
}

// ------------------------------------------------- Airy convolution A0
// A0(s) = tau1^{-1/6} tau2^{-1/6} int_R Ai(-tau2^{1/3}(y + s/tau2))
//                                      Ai( tau1^{1/3}(y - s/tau1)) dy
inline double a0_convolution(double s, double tau1, double tau2,
                             QuadratureSpec spec = {1e-13, 1e-12, 4000}) {
  if (!(tau1 > 0.0 && tau2 > 0.0))
    throw std::invalid_argument("a0_convolution: slopes must be positive");
  if (std::abs(s) > 20.0)
    throw std::invalid_argument("a0_convolution: |s| > 20 unsupported (use the closed form)");
  const double t1 = std::cbrt(tau1), t2 = std::cbrt(tau2);
  // beyond y_hi the second factor is a decaying Airy tail below 1e-16; below
  // y_lo the first factor is
  const double y_hi = s / tau1 + asym_detail::kAiryDecayCut / t1;
  const double y_lo = -s / tau2 - asym_detail::kAiryDecayCut / t2;
  auto f = [&](double y) {
    return airy(-t2 * (y + s / tau2)).ai * airy(t1 * (y - s / tau1)).ai;
  };
  return std::pow(tau1 * tau2, -1.0 / 6.0) * integrate_real(f, y_lo, y_hi, spec);
}

// closed form of the same quantity:
// A0(s) = (tau1 tau2)^{-1/6} (tau1+tau2)^{-1/3} Ai(-((tau1+tau2)/(tau1 tau2))^{2/3} s)
inline double a0_closed(double s, double tau1, double tau2) {
  if (!(tau1 > 0.0 && tau2 > 0.0))
    throw std::invalid_argument("a0_closed: slopes must be positive");
  const double k = std::pow((tau1 + tau2) / (tau1 * tau2), 2.0 / 3.0);
  return std::pow(tau1 * tau2, -1.0 / 6.0) * std::pow(tau1 + tau2, -1.0 / 3.0) *
         airy(-k * s).ai;
}

// -------------------------------------- half-line splittings A^+/A^-/B^+
// A^{+-}(rho) = (tau1 tau2)^{-1/6} int_{R_{+-}} Ai(-tau2^{1/3}(y + rho/tau2))
//                                               Ai( tau1^{1/3}(y - mu0/tau1)) dy
// B^{+}(rho)  = same over (0, inf) with Bi(-.) in the first slot.
// A^+(rho) + A^-(rho) equals A0 at rho = mu0.
struct HalfLineAmplitudes {
  double a_plus = 0.0;
  double a_minus = 0.0;
  double b_plus = 0.0;
};

inline HalfLineAmplitudes ab_integrals(double rho, double mu0, double tau1, double tau2,
                                       QuadratureSpec spec = {1e-13, 1e-12, 4000}) {
  if (!(tau1 > 0.0 && tau2 > 0.0))
    throw std::invalid_argument("ab_integrals: slopes must be positive");
  if (std::abs(rho) > 20.0 || std::abs(mu0) > 20.0)
    throw std::invalid_argument("ab_integrals: arguments larger than 20 unsupported");
  const double t1 = std::cbrt(tau1), t2 = std::cbrt(tau2);
  const double pref = std::pow(tau1 * tau2, -1.0 / 6.0);
  // truncation points where the decaying factor of each product is < 1e-16:
  // on the right it is the second (Ai) factor, on the left the first one
  const double y_hi = mu0 / tau1 + asym_detail::kAiryDecayCut / t1;
  const double y_lo = -rho / tau2 - asym_detail::kAiryDecayCut / t2;
  auto second = [&](double y) { return airy(t1 * (y - mu0 / tau1)).ai; };
  auto f_a = [&](double y) { return airy(-t2 * (y + rho / tau2)).ai * second(y); };
  auto f_b = [&](double y) { return airy(-t2 * (y + rho / tau2)).bi * second(y); };
  HalfLineAmplitudes r;
  r.a_minus = (y_lo < 0.0) ? pref * integrate_real(f_a, y_lo, 0.0, spec) : 0.0;
  r.a_plus = (y_hi > 0.0) ? pref * integrate_real(f_a, 0.0, y_hi, spec) : 0.0;
  r.b_plus = (y_hi > 0.0) ? pref * integrate_real(f_b, 0.0, y_hi, spec) : 0.0;
  return r;
}

// -------------------------------------------------- contour integral F
// F(lambda) = -2i int_{gamma} e^{-i lambda z} g0(Re z) / z^2 dz, with gamma the
// real axis with the segment [-radius, radius] replaced by the lower
// semicircle of that radius, oriented left to right.  g0 is the plateau bump
// above, so the rays truncate at +-delta1 and the semicircle (which must stay
// inside the plateau, radius <= delta0) carries g0 = 1.  The value is
// independent of the radius by analyticity.
struct CutoffBump {
  double delta0 = 0.0;
  double delta1 = 0.0;
  double operator()(double s) const { return g0_bump(s, delta0, delta1); }
};

inline std::complex<double> f_contour(double lambda, const CutoffBump& bump, double radius = 0.0,
                                      QuadratureSpec spec = {1e-13, 1e-12, 4000}) {
  using cplx = std::complex<double>;
  const double r = (radius > 0.0) ? radius : bump.delta0;
  if (!(0.0 < r && r <= bump.delta0))
    throw std::invalid_argument("f_contour: semicircle radius must lie in (0, delta0]");
  const cplx i_unit{0.0, 1.0};
  auto ray = [&](double x) -> cplx {
    return std::exp(-i_unit * lambda * x) * bump(x) / (x * x);
  };
  // lower semicircle z = r e^{i a}, a from pi to 2 pi: dz / z^2 = i e^{-i a} / r da
  auto arc = [&](double a) -> cplx {
    const cplx z = r * std::exp(i_unit * a);
    return std::exp(-i_unit * lambda * z) * i_unit * std::exp(-i_unit * a) / r;
  };
  const cplx total = integrate(ray, -bump.delta1, -r, spec) +
                     integrate(arc, M_PI, 2.0 * M_PI, spec) +
                     integrate(ray, r, bump.delta1, spec);
  return -2.0 * i_unit * total;
}

// ------------------------------------------------- first correction term
// q0(t, h) = 4 a0(0)^2 c0^2 e^{-i t lambda0} [A0(lambda0 h^{-2/3})]^2 (i/2) F(h t)
//
// The (i/2) converts F back to the bare path integral int e^{-i lambda z}
// g0(Re z) z^{-2} dz that the expansion of the survival amplitude actually
// produces; with it, the real part of the t = 0 defect A(0) - b is matched to
// about h/100 (without it the correction is off by a factor -2i and degrades
// the residual instead of improving it).
struct ExpansionCoefficients {
  double tau1 = 0.0;          // slope of V1 at the crossing (from the left well)
  double tau2 = 0.0;          // slope of -V2 at the crossing
  double lambda0 = 0.0;       // resonant level of the decoupled well
  double c0 = 0.0;            // well-state normalization constant
  double a0_at_crossing = 0.0;  // coupling amplitude at the crossing point
  double h = 0.0;
};

struct CorrectionTerm {
  ExpansionCoefficients coeff;
  CutoffBump bump;
  double prefactor = 0.0;  // 4 a0(0)^2 c0^2 A0(lambda0 h^{-2/3})^2

  CorrectionTerm(const ExpansionCoefficients& c, const CutoffBump& b) : coeff(c), bump(b) {
    const double amp = a0_closed(c.lambda0 * std::pow(c.h, -2.0 / 3.0), c.tau1, c.tau2);
    prefactor = 4.0 * c.a0_at_crossing * c.a0_at_crossing * c.c0 * c.c0 * amp * amp;
  }

  std::complex<double> operator()(double t) const {
    const std::complex<double> i_unit{0.0, 1.0};
    return prefactor * std::exp(-i_unit * coeff.lambda0 * t) * 0.5 * i_unit *
           f_contour(coeff.h * t, bump);
  }
};

}  // namespace predissoc
