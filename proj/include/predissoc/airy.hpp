#pragma once

#include <cmath>
#include <stdexcept>

// Real-argument Airy functions Ai, Bi and derivatives.
//
// Evaluation zones:
//   |x| <= 4.2      Taylor marching from the exact values at x = 0
//   4.2 < x < 9     Bi marched forward from 4.2, Ai marched backward from 9
//                   (each direction keeps the propagated solution dominant)
//   x >= 9          Poincare asymptotic expansions (machine precision there)
//   -9 < x < -4.2   Taylor marching (oscillatory, neutrally stable)
//   x <= -9         oscillatory asymptotic expansions
namespace predissoc {

struct AiryValue {
  double ai = 0.0;
  double ai_prime = 0.0;
  double bi = 0.0;
  double bi_prime = 0.0;

  double wronskian() const { return ai * bi_prime - ai_prime * bi; }
};

namespace airy_detail {

// One Taylor step for u'' = x u: advance (u, u') from x0 to x0 + s.
inline void taylor_step(double x0, double s, double& u, double& up) {
  constexpr int kOrder = 30;
  double c[kOrder + 2];
  c[0] = u;
  c[1] = up;
  for (int n = 0; n + 2 <= kOrder + 1; ++n) {
    const double prev = (n >= 1) ? c[n - 1] : 0.0;
    c[n + 2] = (x0 * c[n] + prev) / (static_cast<double>(n + 1) * (n + 2));
  }
  double v = 0.0;
  for (int n = kOrder + 1; n >= 0; --n) v = v * s + c[n];
  double d = 0.0;
  for (int n = kOrder + 1; n >= 1; --n) d = d * s + n * c[n];
  u = v;
  up = d;
}

inline void march(double from, double to, double& u, double& up) {
  const double len = std::abs(to - from);
  const int nstep = std::max(1, static_cast<int>(std::ceil(len / 0.25)));
  const double ds = (to - from) / nstep;
  double x = from;
  for (int i = 0; i < nstep; ++i) {
    taylor_step(x, ds, u, up);
    x += ds;
  }
}

// Values at the origin: Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3).
constexpr double kAi0 = 0.35502805388781723926006318600418;
constexpr double kAip0 = -0.25881940379280679840518356018920;
constexpr double kBi0 = 0.61492662744600073515265877322846;
constexpr double kBip0 = 0.44828835735382635789577418188425;

// Asymptotic sums S = sum u_k z^{-k} (signs +1 or alternating) and the v_k analog.
inline void asym_sums(double zeta, double sign, double& su, double& sv) {
  double uk = 1.0, vk = 1.0;
  su = 1.0;
  sv = 1.0;
  double pw = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double un = uk * (6.0 * k + 1.0) * (6.0 * k + 5.0) / (72.0 * (k + 1.0));
    const double vn = -un * (6.0 * k + 7.0) / (6.0 * k + 5.0);
    pw *= sign / zeta;
    if (std::abs(un * pw) > std::abs(uk)) break;  // divergent tail reached
    su += un * pw;
    sv += vn * pw;
    if (std::abs(un * pw) < 1e-18 * std::abs(su)) break;
    uk = un;
    vk = vn;
    (void)vk;
  }
}

inline AiryValue asym_positive(double x) {
  const double zeta = (2.0 / 3.0) * x * std::sqrt(x);
  if (zeta > 700.0) throw std::overflow_error("airy: Bi(x) overflows double range");
  double sa, sva, sb, svb;
  asym_sums(zeta, -1.0, sa, sva);
  asym_sums(zeta, +1.0, sb, svb);
  const double q = std::pow(x, 0.25);
  const double spi = std::sqrt(M_PI);
  AiryValue r;
  r.ai = std::exp(-zeta) / (2.0 * spi * q) * sa;
  r.ai_prime = -q * std::exp(-zeta) / (2.0 * spi) * sva;
  r.bi = std::exp(zeta) / (spi * q) * sb;
  r.bi_prime = q * std::exp(zeta) / spi * svb;
  return r;
}

// DLMF 9.7.9-9.7.12 with t = -x > 0.
inline AiryValue asym_negative(double x) {
  const double t = -x;
  const double zeta = (2.0 / 3.0) * t * std::sqrt(t);
  double ue = 1.0, uo = 0.0, ve = 1.0, vo = 0.0;
  double uk = 1.0;
  double pw = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double un = uk * (6.0 * k + 1.0) * (6.0 * k + 5.0) / (72.0 * (k + 1.0));
    const double vn = -un * (6.0 * k + 7.0) / (6.0 * k + 5.0);
    pw /= zeta;
    const double term = un * pw;
    if (std::abs(term) > std::abs(uk)) break;
    const int kk = k + 1;
    const double sgn = (kk / 2) % 2 == 0 ? 1.0 : -1.0;  // (-1)^{floor(k/2)} pattern
    if (kk % 2 == 0) {
      ue += sgn * term;
      ve += sgn * vn * pw;
    } else {
      uo += sgn * term;
      vo += sgn * vn * pw;
    }
    if (std::abs(term) < 1e-18) break;
    uk = un;
  }
  const double q = std::pow(t, 0.25);
  const double spi = std::sqrt(M_PI);
  const double c = std::cos(zeta - M_PI / 4.0);
  const double s = std::sin(zeta - M_PI / 4.0);
  AiryValue r;
  r.ai = (c * ue + s * uo) / (spi * q);
  r.ai_prime = (s * ve - c * vo) * q / spi;
  r.bi = (-s * ue + c * uo) / (spi * q);
  r.bi_prime = (c * ve + s * vo) * q / spi;
  return r;
}

}  // namespace airy_detail

inline AiryValue airy(double x) {
  using namespace airy_detail;
  if (!std::isfinite(x)) throw std::invalid_argument("airy: non-finite argument");
  if (x >= 9.0) return asym_positive(x);
  if (x <= -9.0) return asym_negative(x);
  AiryValue r;
  if (x <= 4.2) {
    r.ai = kAi0;
    r.ai_prime = kAip0;
    march(0.0, x, r.ai, r.ai_prime);
    r.bi = kBi0;
    r.bi_prime = kBip0;
    march(0.0, x, r.bi, r.bi_prime);
    return r;
  }
  // 4.2 < x < 9: Bi forward from 0, Ai backward from the asymptotic anchor at 9.
  r.bi = kBi0;
  r.bi_prime = kBip0;
  march(0.0, x, r.bi, r.bi_prime);
  const AiryValue anchor = asym_positive(9.0);
  r.ai = anchor.ai;
  r.ai_prime = anchor.ai_prime;
  march(9.0, x, r.ai, r.ai_prime);
  return r;
}

// \check{Ai}-style reflection: componentwise airy(-s). Note d/ds Ai(-s) = -Ai'(-s);
// the returned ai_prime field is Ai'(-s) itself, the caller applies the chain rule.
inline AiryValue airy_reflected(double s) { return airy(-s); }

}  // namespace predissoc
