#pragma once

#include <predissoc/airy.hpp>
#include <predissoc/discretize.hpp>
#include <predissoc/distortion.hpp>
#include <predissoc/model.hpp>
#include <predissoc/quadrature.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

// Action integrals, Bohr-Sommerfeld values, the well eigenpair (lambda0, phi0)
// with its matching coefficient c0, and global fundamental solutions
// u^{+-}_{j,L/R}(z, .) computed by exponential-midpoint propagation of the ODE
// h^2 u'' = (V - z) u, seeded from Langer/Airy models at the turning points.
//
// Normalization conventions (uniform Airy models, O(h) accurate):
//   u^-_{1,L} = 2|xi'|^{-1/2} Ai(h^{-2/3} xi)   about the left well turning point
//   u^-_{1,R} = 2|xi'|^{-1/2} Ai(h^{-2/3} xi)   about the right well turning point
//   u^-_{2,L} = 2|xi2'|^{-1/2} Ai(-h^{-2/3} xi2)
//   u^-_{2,R} = 2^{-1/2} e^{i pi/4} |xi2'|^{-1/2} (Ai - iBi)(-h^{-2/3} xi2)
//   u^+_{2,R} = 2^{+1/2} e^{i pi/4} |xi2'|^{-1/2} (Ai + iBi)(-h^{-2/3} xi2)
// The "+" solutions on the well side carry an arbitrary normalization (every
// use is a Wronskian ratio that cancels it).
namespace predissoc {

// ----------------------------------------------------------------- actions

struct ActionData {
  double energy = 0.0;
  double x_left = 0.0;
  double x_right = 0.0;
  double action = 0.0;
  double action_derivative = 0.0;
};

namespace wkb_detail {

inline double well_bottom(const PotentialModel& m) {
  // coarse scan of v1 over (x_min, 0), then ternary refinement
  double best_x = m.x_min, best_v = m.v1(m.x_min);
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double x = m.x_min + (0.0 - m.x_min) * i / n;
    const double v = m.v1(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  double a = best_x - (0.0 - m.x_min) / n, b = best_x + (0.0 - m.x_min) / n;
  for (int it = 0; it < 200; ++it) {
    const double p = a + (b - a) / 3.0, q = b - (b - a) / 3.0;
    if (m.v1(p) < m.v1(q))
      b = q;
    else
      a = p;
  }
  return 0.5 * (a + b);
}

// first sign change of f - target scanning from x0 in direction dir
inline double scan_root(const std::function<double(double)>& f, double target, double x0,
                        double dir, double limit) {
  const double step = 0.002 * dir;
  double prev_x = x0, prev_f = f(x0) - target;
  for (double x = x0 + step;; x += step) {
    const bool past = dir > 0 ? (x > limit) : (x < limit);
    const double xe = past ? limit : x;
    const double fe = f(xe) - target;
    if (prev_f * fe <= 0.0) {
      const double lo = std::min(prev_x, xe), hi = std::max(prev_x, xe);
      return model_detail::bracketed_root([&](double t) { return f(t) - target; }, lo, hi);
    }
    if (past) throw std::runtime_error("turning point not found: energy outside well range");
    prev_x = xe;
    prev_f = fe;
  }
}

}  // namespace wkb_detail

inline ActionData action(const PotentialModel& m, double energy) {
  const double xb = wkb_detail::well_bottom(m);
  if (!(energy > m.v1(xb)))
    throw std::invalid_argument("action: energy at or below the well bottom");
  ActionData a;
  a.energy = energy;
  a.x_left = wkb_detail::scan_root(m.v1, energy, xb, -1.0, m.x_min);
  a.x_right = wkb_detail::scan_root(m.v1, energy, xb, +1.0, m.x_max);
  QuadratureSpec spec;
  a.action = integrate_real(
      [&](double t) { return std::sqrt(std::max(energy - m.v1(t), 0.0)); }, a.x_left, a.x_right,
      spec, Endpoint::sqrt_singular, Endpoint::sqrt_singular);
  a.action_derivative =
      0.5 * integrate_real(
                [&](double t) { return 1.0 / std::sqrt(std::max(energy - m.v1(t), 1e-300)); },
                a.x_left, a.x_right, spec, Endpoint::sqrt_singular, Endpoint::sqrt_singular);
  return a;
}

inline double bohr_sommerfeld(const PotentialModel& m, double h, int k, double c0_window = 1.0) {
  const ActionData a = action(m, 0.0);
  const double ek = (-2.0 * a.action + (2 * k + 1) * M_PI * h) / (2.0 * a.action_derivative);
  if (std::abs(ek) > c0_window * std::pow(h, 2.0 / 3.0))
    throw std::invalid_argument("bohr_sommerfeld: index k outside the energy window");
  return ek;
}

// index k whose Bohr-Sommerfeld value is nearest 0
inline int bs_index(const PotentialModel& m, double h) {
  const ActionData a = action(m, 0.0);
  return static_cast<int>(std::lround(a.action / (M_PI * h) - 0.5));
}

// ------------------------------------------------- Langer variables xi(x)

struct XiValue {
  double xi = 0.0;
  double xi_prime = 0.0;
};

namespace wkb_detail {

// Langer variable about the turning point `tp` of V - E, with xi > 0 on the
// side selected by `positive_in_forbidden` (true: xi > 0 where V > E).
// `forbidden_left` states on which side of tp the forbidden region lies.
inline XiValue langer_xi(const std::function<double(double)>& V, double E, double tp,
                         bool forbidden_left, bool positive_in_forbidden, double x) {
  const double dsg = (positive_in_forbidden ? 1.0 : -1.0) * (forbidden_left ? -1.0 : 1.0);
  XiValue r;
  if (std::abs(x - tp) < 1e-5) {
    r.xi_prime = dsg * std::cbrt(std::abs(fd_derivative(V, tp)));
    r.xi = r.xi_prime * (x - tp);
    return r;
  }
  const double lo = std::min(x, tp), hi = std::max(x, tp);
  QuadratureSpec spec;
  spec.abs_tol = 1e-13;
  const Endpoint le = (tp == lo) ? Endpoint::sqrt_singular : Endpoint::regular;
  const Endpoint ri = (tp == hi) ? Endpoint::sqrt_singular : Endpoint::regular;
  const double S =
      integrate_real([&](double t) { return std::sqrt(std::abs(E - V(t))); }, lo, hi, spec, le, ri);
  const double mag = std::pow(1.5 * S, 2.0 / 3.0);
  const bool forbidden = forbidden_left ? (x < tp) : (x > tp);
  r.xi = (forbidden == positive_in_forbidden ? 1.0 : -1.0) * mag;
  r.xi_prime = dsg * std::sqrt(std::abs(E - V(x)) / mag);
  return r;
}

}  // namespace wkb_detail

// ------------------------------------------------- fundamental solutions

struct WkbSolution {
  int level = 1;
  char side = 'L';
  int kind = -1;  // -1 decaying at the unbounded end, +1 growing
  int ray = 0;    // 0: real axis; +-1: scaled ray I_R^{+-theta}
  std::complex<double> z{0.0, 0.0};
  double h = 0.0;
  double theta = 0.0;
  double x0 = 0.0;  // first grid node; nodes are x0 + i*dx with x0/dx integral
  double dx = 0.0;
  std::vector<std::complex<double>> u;
  std::vector<std::complex<double>> du;                 // d/dx of the sampled function
  std::vector<std::complex<double>> gamma_prime_nodes;  // only for ray != 0

  int n() const { return static_cast<int>(u.size()); }
  double x_at(int i) const { return x0 + i * dx; }
  double x_last() const { return x_at(n() - 1); }

  // cubic (4-point) interpolation
  std::complex<double> value_at(double x) const { return interp(u, x); }
  std::complex<double> deriv_at(double x) const { return interp(du, x); }

 private:
  std::complex<double> interp(const std::vector<std::complex<double>>& f, double x) const {
    const int m = n();
    if (m < 4 || x < x0 - 1e-12 || x > x_last() + 1e-12)
      throw std::out_of_range("WkbSolution: query outside sampled grid");
    int i = static_cast<int>(std::floor((x - x0) / dx));
    i = std::max(1, std::min(m - 3, i));
    const double s = (x - x_at(i)) / dx;  // in [0,1] when interior
    const double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    const double w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    const double w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    const double w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    return w0 * f[i - 1] + w1 * f[i] + w2 * f[i + 1] + w3 * f[i + 2];
  }
};

namespace wkb_detail {

using cplx = std::complex<double>;

// One exponential-midpoint step for the system u' = w, w' = a u + b w:
// exp(s M) with M = [[0,1],[a,b]] in closed form (det exactly e^{s b}).
inline void expm_step(cplx a, cplx b, double s, cplx& u, cplx& w) {
  const cplx half_b = 0.5 * b;
  const cplx delta = std::sqrt(half_b * half_b + a);
  const cplx sd = s * delta;
  cplx ch, shd;  // cosh(sd), sinh(sd)/delta
  if (std::abs(sd) < 1e-6) {
    const cplx sd2 = sd * sd;
    ch = 1.0 + sd2 * (0.5 + sd2 / 24.0);
    shd = s * (1.0 + sd2 * (1.0 / 6.0 + sd2 / 120.0));
  } else {
    ch = std::cosh(sd);
    shd = std::sinh(sd) / delta;
  }
  const cplx e = std::exp(s * half_b);
  const cplx nu = e * (ch * u + shd * (w - half_b * u));
  const cplx nw = e * (shd * a * u + ch * w + shd * half_b * w);
  u = nu;
  w = nw;
  if (std::abs(u) > 1e250)
    throw std::runtime_error(
        "fundamental_solution: integration blow-up (growing solution integrated in the wrong "
        "direction)");
}

// march from node i0 to node i1 (inclusive), filling sol.u/du; coefficients
// a(x), b(x) are sampled at cell midpoints.
template <class FA, class FB>
void march(WkbSolution& sol, int i0, int i1, const FA& fa, const FB& fb) {
  const int dir = (i1 >= i0) ? 1 : -1;
  const double s = dir * sol.dx;
  cplx u = sol.u[i0], w = sol.du[i0];
  for (int i = i0; i != i1; i += dir) {
    const double xm = sol.x_at(i) + 0.5 * s;
    expm_step(fa(xm), fb(xm), s, u, w);
    sol.u[i + dir] = u;
    sol.du[i + dir] = w;
  }
}

// point where the accumulated decay exponent int f(t) dt reaches `target`,
// scanning from x0 in direction dir, clamped to `limit`.
template <class F>
double exponent_point(const F& f, double x0, double dir, double target, double limit) {
  const double step = 0.002;
  double acc = 0.0, x = x0, fp = std::max(f(x0), 0.0);
  while (true) {
    const double xn = x + dir * step;
    const bool past = dir > 0 ? (xn >= limit) : (xn <= limit);
    const double xe = past ? limit : xn;
    const double fn = std::max(f(xe), 0.0);
    acc += 0.5 * (fp + fn) * std::abs(xe - x);
    if (acc >= target || past) return xe;
    x = xe;
    fp = fn;
  }
}

struct AiryModel {
  // u(x) = |xi'(x)|^{-1/2} (ca*Ai + cb*Bi)(sign_arg * h^{-2/3} xi(x))
  std::function<XiValue(double)> xi;
  cplx ca{0.0, 0.0}, cb{0.0, 0.0};
  double sign_arg = 1.0;  // -1 realizes the reflected argument
  double h23 = 0.0;       // h^{-2/3}

  cplx value(double x) const {
    const XiValue v = xi(x);
    const AiryValue a = airy(sign_arg * h23 * v.xi);
    return std::pow(std::abs(v.xi_prime), -0.5) * (ca * a.ai + cb * a.bi);
  }
  // derivative, with xi'' from a centered difference of xi'
  cplx deriv(double x) const {
    const XiValue v = xi(x);
    const double d = 1e-4;
    const double xipp = (xi(x + d).xi_prime - xi(x - d).xi_prime) / (2.0 * d);
    const AiryValue a = airy(sign_arg * h23 * v.xi);
    const double p = std::abs(v.xi_prime);
    const cplx amp = std::pow(p, -0.5);
    const cplx damp = -0.5 * std::pow(p, -1.5) * (v.xi_prime > 0 ? xipp : -xipp);
    return damp * (ca * a.ai + cb * a.bi) +
           amp * (ca * a.ai_prime + cb * a.bi_prime) * sign_arg * h23 * v.xi_prime;
  }
};

}  // namespace wkb_detail

inline WkbSolution fundamental_solution(const PotentialModel& m, double h, int level, char side,
                                        int kind, std::complex<double> z,
                                        const DistortionProfile* dist = nullptr, int ray = 0,
                                        double budget = 25.0, double dx_factor = 0.05) {
  using namespace wkb_detail;
  if ((level != 1 && level != 2) || (side != 'L' && side != 'R') || (kind != -1 && kind != 1))
    throw std::invalid_argument("fundamental_solution: bad (level, side, kind)");
  if (ray != 0 && (dist == nullptr || level != 2 || side != 'R'))
    throw std::invalid_argument("fundamental_solution: rays only for level-2 right solutions");

  const double rez = z.real();
  const double dx = h * dx_factor;
  const double h23 = std::pow(h, -2.0 / 3.0);
  const auto& V = (level == 1) ? m.v1 : m.v2;

  WkbSolution sol;
  sol.level = level;
  sol.side = side;
  sol.kind = kind;
  sol.ray = ray;
  sol.z = z;
  sol.h = h;
  sol.theta = (ray != 0) ? dist->theta : 0.0;
  sol.dx = dx;

  auto setup_grid = [&](double a, double b) {
    const long ia = std::lround(std::ceil(a / dx));
    const long ib = std::lround(std::floor(b / dx));
    sol.x0 = ia * dx;
    sol.u.assign(ib - ia + 1, cplx{});
    sol.du.assign(ib - ia + 1, cplx{});
  };
  auto q_real = [&](double x) { return (V(x) - z) / (h * h); };
  const auto fb_zero = [](double) { return cplx{0.0, 0.0}; };
  auto forb = [&](double x) { return V(x) - rez; };
  auto sqrt_forb = [&](double x) { return std::sqrt(std::max(V(x) - rez, 0.0)); };

  if (level == 1) {
    const ActionData tp = action(m, rez);
    const double margin = 0.35;
    if (side == 'L') {
      const double left_edge =
          exponent_point(sqrt_forb, tp.x_left, -1.0, budget * h, m.x_min + 2 * dx);
      const double right_edge = exponent_point(sqrt_forb, tp.x_right, +1.0, 2.0 * h,
                                               std::min(tp.x_right + margin, m.x_max));
      setup_grid(left_edge, std::max(right_edge, margin));
      AiryModel mod;
      mod.h23 = h23;
      // both branches use the Langer model about the LEFT turning point: the
      // growing companion must be the pure Bi-type solution about the same
      // turning point as the decaying one, otherwise the Wronskian-ratio
      // prefactors of the resolvent pick up an O(1) admixture contribution
      mod.xi = [&, tp](double x) { return langer_xi(V, rez, tp.x_left, true, true, x); };
      if (kind == -1) {
        // decaying at -infinity: Langer-Ai about the left turning point
        mod.ca = 2.0;
        sol.u.front() = mod.value(sol.x0);
        sol.du.front() = mod.deriv(sol.x0);
        march(sol, 0, sol.n() - 1, q_real, fb_zero);
      } else {
        // Bi about the left turning point, seeded mid-well (away from both
        // turning points, where the uniform model is most accurate) and
        // marched outward in both directions
        mod.cb = 1.0;
        const double x_seed = 0.5 * (tp.x_left + tp.x_right);
        const int is = std::max(
            1, std::min(sol.n() - 2, static_cast<int>(std::lround((x_seed - sol.x0) / dx))));
        sol.u[is] = mod.value(sol.x_at(is));
        sol.du[is] = mod.deriv(sol.x_at(is));
        march(sol, is, 0, q_real, fb_zero);
        march(sol, is, sol.n() - 1, q_real, fb_zero);
      }
    } else {
      // level 1 on I_R: classically forbidden beyond the right turning point
      const double base = tp.x_right;
      const double right_floor = exponent_point(sqrt_forb, std::max(base, 0.0), +1.0, budget * h,
                                                m.x_max - 2 * dx);
      setup_grid(-margin, right_floor);
      if (kind == -1) {
        // decays at +infinity: Langer-Ai about the right turning point, marched left
        AiryModel mod;
        mod.h23 = h23;
        mod.xi = [&, tp](double x) { return langer_xi(V, rez, tp.x_right, false, true, x); };
        mod.ca = 2.0;
        sol.u.back() = mod.value(sol.x_last());
        sol.du.back() = mod.deriv(sol.x_last());
        march(sol, sol.n() - 1, 0, q_real, fb_zero);
      } else {
        // grows at +infinity: pure Bi-type companion about the right turning
        // point (same normalization requirement as on the left side), seeded
        // in the oscillatory region and marched in its growth direction
        AiryModel mod;
        mod.h23 = h23;
        mod.xi = [&, tp](double x) { return langer_xi(V, rez, tp.x_right, false, true, x); };
        mod.cb = 1.0;
        sol.u.front() = mod.value(sol.x0);
        sol.du.front() = mod.deriv(sol.x0);
        march(sol, 0, sol.n() - 1, q_real, fb_zero);
      }
    }
    return sol;
  }

  // ---- level 2: single turning point x2 near 0, dissociative to the right
  // root of v2 = Re z; v2 is decreasing, so scan right iff v2(0) > Re z
  const double x2 = wkb_detail::scan_root(m.v2, rez, 0.0, (m.v2(0.0) > rez ? +1.0 : -1.0),
                                          (m.v2(0.0) > rez ? m.x_max : m.x_min));
  auto xi2 = [&, x2](double x) { return langer_xi(V, rez, x2, true, false, x); };
  const double margin = 0.35;
  const double left_floor =
      exponent_point(sqrt_forb, x2, -1.0, budget * h, m.x_min + 2 * dx);

  if (side == 'L') {
    setup_grid(left_floor, std::max(margin, x2 + margin));
    AiryModel mod;
    mod.h23 = h23;
    mod.xi = xi2;
    mod.sign_arg = -1.0;  // reflected argument: Ai(-h^{-2/3} xi2)
    if (kind == -1) {
      mod.ca = 2.0;
      sol.u.front() = mod.value(sol.x0);
      sol.du.front() = mod.deriv(sol.x0);
      march(sol, 0, sol.n() - 1, q_real, fb_zero);
    } else {
      mod.cb = 1.0;
      sol.u.back() = mod.value(sol.x_last());
      sol.du.back() = mod.deriv(sol.x_last());
      march(sol, sol.n() - 1, 0, q_real, fb_zero);
    }
    return sol;
  }

  // ---- level 2 on I_R (possibly on a scaled ray)
  const int sg = ray;
  const auto& V2c = m.v2_c;
  if (ray != 0 && !V2c)
    throw std::invalid_argument("fundamental_solution: model lacks analytic continuation v2_c");
  auto ga = [&](double x) -> cplx {
    if (ray == 0) return q_real(x);
    const cplx g = dist->gamma(x, sg), gp = dist->gamma_prime(x, sg);
    return gp * gp * (V2c(g) - z) / (h * h);
  };
  auto gb = [&](double x) -> cplx {
    if (ray == 0) return {0.0, 0.0};
    return dist->gamma_second(x, sg) / dist->gamma_prime(x, sg);
  };

  // a solution decays along ray sigma iff (kind, sigma) in {(-,+1),(+,-1)};
  // on the real axis nothing decays (purely oscillatory).
  const bool decaying_on_ray = (ray != 0) && ((kind == -1 && ray == 1) || (kind == 1 && ray == -1));
  double right_edge;
  if (ray == 0) {
    right_edge = m.x_max - 2 * dx;
  } else {
    auto decay_rate = [&](double x) {
      return dist->theta * dist->nu_prime(x) * std::sqrt(std::max(rez - m.v2(x), 0.0));
    };
    right_edge = exponent_point(decay_rate, x2, +1.0, budget * h, m.x_max - 2 * dx);
  }
  setup_grid(std::min(-margin, left_floor), right_edge);

  AiryModel mod;
  mod.h23 = h23;
  mod.xi = xi2;
  mod.sign_arg = -1.0;
  const cplx phase = std::exp(cplx(0.0, M_PI / 4.0));
  if (kind == -1) {
    mod.ca = phase / std::sqrt(2.0);
    mod.cb = cplx(0.0, -1.0) * phase / std::sqrt(2.0);
  } else {
    mod.ca = phase * std::sqrt(2.0);
    mod.cb = cplx(0.0, 1.0) * phase * std::sqrt(2.0);
  }

  if (decaying_on_ray || ray == 0) {
    // march leftward from the far end (growth direction of the stored solution),
    // then rescale to the Airy model near the turning point (least squares).
    const double xe = sol.x_last();
    const cplx qv = (ray == 0) ? cplx(rez - m.v2(xe), 0.0)
                               : (z - V2c(dist->gamma(xe, sg)));
    const cplx k_wkb = std::sqrt(qv) / h;
    const cplx gp_e = (ray == 0) ? cplx(1.0, 0.0) : dist->gamma_prime(xe, sg);
    sol.u.back() = std::pow(qv, -0.25);
    // kind -1 is outgoing e^{+iS/h}, kind +1 incoming e^{-iS/h}
    sol.du.back() = cplx(0.0, -kind) * k_wkb * gp_e * sol.u.back();
    march(sol, sol.n() - 1, 0, ga, gb);
    // complex least-squares rescale over a window right of the turning point
    const double wlo = x2 + 0.05, whi = std::min(x2 + 1.2, (ray != 0 ? dist->x_inf : sol.x_last()));
    const int stride = std::max(1, static_cast<int>((whi - wlo) / dx) / 160);
    cplx num = 0.0, den = 0.0;
    for (int i = 0; i < sol.n(); i += stride) {
      const double x = sol.x_at(i);
      if (x < wlo || x > whi) continue;
      num += std::conj(sol.u[i]) * mod.value(x);
      den += std::conj(sol.u[i]) * sol.u[i];
    }
    if (std::abs(den) == 0.0)
      throw std::runtime_error("fundamental_solution: empty normalization window");
    const cplx c = num / den;
    for (int i = 0; i < sol.n(); ++i) {
      sol.u[i] *= c;
      sol.du[i] *= c;
    }
  } else {
    // growing along the ray: seed with the Airy model at the turning point and
    // march outward in both directions.
    int i2 = static_cast<int>(std::lround((x2 - sol.x0) / dx));
    i2 = std::max(1, std::min(sol.n() - 2, i2));
    const double xs = sol.x_at(i2);
    sol.u[i2] = mod.value(xs);
    sol.du[i2] = mod.deriv(xs);
    march(sol, i2, sol.n() - 1, ga, gb);
    march(sol, i2, 0, ga, gb);
  }

  if (ray != 0) {
    sol.gamma_prime_nodes.resize(sol.n());
    for (int i = 0; i < sol.n(); ++i)
      sol.gamma_prime_nodes[i] = dist->gamma_prime(sol.x_at(i), sg);
  }
  return sol;
}

// Wronskian u v' - u' v on the shared node range (constant for two solutions of
// the same equation; for ray solutions the stored x-derivatives are divided by
// gamma'). Returns the value near the centre of the overlap; if `constancy` is
// given, stores the max relative deviation over the interior of the overlap.
inline std::complex<double> wronskian(const WkbSolution& a, const WkbSolution& b,
                                      double* constancy = nullptr) {
  if (std::abs(a.dx - b.dx) > 1e-14 || a.level != b.level)
    throw std::invalid_argument("wronskian: incompatible solutions");
  const long ia0 = std::lround(a.x0 / a.dx), ib0 = std::lround(b.x0 / b.dx);
  const long lo = std::max(ia0, ib0);
  long hi = std::min(ia0 + a.n() - 1, ib0 + b.n() - 1);
  if (a.ray != b.ray) {
    // mixed-contour pair: they satisfy the same equation only where both
    // contours are still the real axis (gamma' = 1)
    auto real_axis = [&](const WkbSolution& s, long node) {
      if (s.ray == 0) return true;
      return std::abs(s.gamma_prime_nodes[node - std::lround(s.x0 / s.dx)] - 1.0) < 1e-14;
    };
    while (hi > lo && !(real_axis(a, hi) && real_axis(b, hi))) --hi;
  }
  if (hi - lo < 8) throw std::invalid_argument("wronskian: grids do not overlap");
  auto gp = [&](const WkbSolution& s, long node) -> std::complex<double> {
    if (s.ray == 0) return {1.0, 0.0};
    return s.gamma_prime_nodes[node - std::lround(s.x0 / s.dx)];
  };
  std::vector<std::complex<double>> w(hi - lo + 1);
  double wmax = 0.0;
  for (long k = lo; k <= hi; ++k) {
    const long i = k - ia0, j = k - ib0;
    const std::complex<double> ga = gp(a, k), gb = gp(b, k);
    w[k - lo] = a.u[i] * (b.du[j] / gb) - (a.du[i] / ga) * b.u[j];
    wmax = std::max(wmax, std::abs(w[k - lo]));
  }
  // value taken nearest x = 0 (all grids are anchored there)
  long kc = std::min(std::max(0L, -lo), hi - lo);
  const std::complex<double> wc = w[kc];
  if (constancy) {
    double dev = 0.0;
    for (const auto& wi : w) dev = std::max(dev, std::abs(wi - wc));
    *constancy = dev / std::max(wmax, 1e-300);
  }
  return wc;
}

// ------------------------------------------------------- well ground state

struct GroundStateData {
  double lambda0 = 0.0;
  Grid grid;
  Eigen::VectorXd phi0;  // L^2-normalized: sum phi^2 dx = 1
  double c0 = 0.0;
  int k_index = 0;
  double residual = 0.0;
};

inline std::pair<double, double> default_window(const PotentialModel& m, double h) {
  const int k = bs_index(m, h);
  const double ek = bohr_sommerfeld(m, h, k);
  const double half = 0.45 * M_PI * h / action(m, 0.0).action_derivative;
  return {ek - half, ek + half};
}

inline GroundStateData ground_state(const PotentialModel& m, double h, double lo, double hi,
                                    double dx_factor = 0.1) {
  auto solve = [&](double f) {
    Grid g = make_grid(m.x_min, m.x_max, h * f);
    SpMat P1 = schrodinger_matrix(g, h, m.v1);
    auto pairs = eigenpairs_in_window(P1, lo, hi);
    if (pairs.size() != 1)
      throw std::runtime_error("ground_state: window holds " + std::to_string(pairs.size()) +
                               " eigenvalues, expected exactly one (window misconfiguration)");
    return std::tuple<Grid, SpMat, EigenPair>(g, std::move(P1), std::move(pairs.front()));
  };
  auto [g_c, P_c, p_c] = solve(dx_factor);
  auto [g_f, P_f, p_f] = solve(0.5 * dx_factor);

  GroundStateData r;
  // order-4 Richardson extrapolation of the eigenvalue over dx, dx/2
  r.lambda0 = (16.0 * p_f.value - p_c.value) / 15.0;
  r.grid = g_f;
  r.phi0 = p_f.vector / std::sqrt(g_f.dx);
  r.residual = (P_f * p_f.vector - p_f.value * p_f.vector).norm();
  r.k_index = eigenvalue_count_below(P_f, lo);

  // c0 from phi0 = c0 h^{-1/6} u^-_{1,L}(lambda0) over the well interior
  const WkbSolution u = fundamental_solution(m, h, 1, 'L', -1, r.lambda0);
  const ActionData tp = action(m, r.lambda0);
  const double wlo = tp.x_left + 0.25 * (tp.x_right - tp.x_left);
  const double whi = tp.x_right - 0.15 * (tp.x_right - tp.x_left);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < r.grid.n; ++i) {
    const double x = r.grid.x(i);
    if (x < wlo || x > whi) continue;
    const double uv = u.value_at(x).real();
    num += r.phi0(i) * uv;
    den += uv * uv;
  }
  r.c0 = std::pow(h, 1.0 / 6.0) * num / den;
  if (r.c0 < 0.0) {
    r.phi0 = -r.phi0;
    r.c0 = -r.c0;
  }
  return r;
}

// Independent eigenvalue oracle: match the two decaying solutions by their
// Wronskian; lambda0 is the zero of E -> W[u^-_{1,R}(E), u^-_{1,L}(E)] in the window.
inline double ground_state_shooting(const PotentialModel& m, double h, double lo, double hi,
                                    double dx_factor = 0.0125) {
  auto wr = [&](double E) {
    const WkbSolution ul = fundamental_solution(m, h, 1, 'L', -1, E, nullptr, 0, 25.0, dx_factor);
    const WkbSolution ur = fundamental_solution(m, h, 1, 'R', -1, E, nullptr, 0, 25.0, dx_factor);
    return wronskian(ur, ul).real();
  };
  const int n = 24;
  double prev_e = lo, prev_w = wr(lo);
  for (int i = 1; i <= n; ++i) {
    const double e = lo + (hi - lo) * i / n;
    const double w = wr(e);
    if (prev_w * w <= 0.0)
      return model_detail::bracketed_root(wr, prev_e, e);
    prev_e = e;
    prev_w = w;
  }
  throw std::runtime_error("ground_state_shooting: no Wronskian sign change in window");
}

}  // namespace predissoc
