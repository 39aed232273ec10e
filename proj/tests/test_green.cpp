#include <doctest.h>

#include <predissoc/green.hpp>
#include <predissoc/sweep.hpp>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <complex>
#include <map>
#include <vector>

using namespace predissoc;
using cplx = std::complex<double>;

namespace {

const PotentialModel& model() {
  static const PotentialModel m = default_model();
  return m;
}

// quantized level nearest 0 and the local level spacing pi h / A'
struct SpectralWindow {
  double ek = 0.0;
  double spacing = 0.0;
};

SpectralWindow window_at(double h) {
  static std::map<double, SpectralWindow> cache;
  auto it = cache.find(h);
  if (it != cache.end()) return it->second;
  SpectralWindow w;
  w.ek = bohr_sommerfeld(model(), h, bs_index(model(), h));
  w.spacing = M_PI * h / action(model(), 0.0).action_derivative;
  cache[h] = w;
  return w;
}

std::vector<cplx> gaussian_on(const KernelSpec& k, double center, double width) {
  std::vector<cplx> v(k.n);
  for (int i = 0; i < k.n; ++i) {
    const double x = k.x_at(i);
    v[i] = std::exp(-(x - center) * (x - center) / (width * width));
  }
  return v;
}

// max over interior nodes of |(P_j - z) y - v| relative to the local scale;
// on a scaled ray the operator acts in the contour parameter t.
double defining_identity_residual(const KernelSpec& k, const DistortionProfile* dist,
                                  const std::vector<cplx>& v, const std::vector<cplx>& y) {
  const PotentialModel& m = model();
  const double h2 = k.h * k.h;
  double vmax = 0.0;
  for (const auto& vi : v) vmax = std::max(vmax, std::abs(vi));
  double worst = 0.0;
  for (int i = 5; i <= k.n - 6; ++i) {
    const cplx ypp =
        (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) /
        (12.0 * k.dx * k.dx);
    cplx kin, pot;
    if (k.ray == 0) {
      const double x = k.x_at(i);
      kin = -h2 * ypp;
      pot = (k.level == 1) ? cplx(m.v1(x), 0.0) : cplx(m.v2(x), 0.0);
    } else {
      const cplx yp = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * k.dx);
      const double t = k.x_at(i);
      const cplx gp = dist->gamma_prime(t, k.ray);
      const cplx gs = dist->gamma_second(t, k.ray);
      kin = -h2 * (ypp / (gp * gp) - gs * yp / (gp * gp * gp));
      pot = m.v2_c(dist->gamma(t, k.ray));
    }
    const cplx res = kin + (pot - k.z) * y[i] - v[i];
    const double scale =
        vmax + std::abs(v[i]) + std::abs((pot - k.z) * y[i]) + std::abs(kin);
    worst = std::max(worst, std::abs(res) / scale);
  }
  return worst;
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

double rel_diff(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

// The stepper's frozen-midpoint coefficient leaves a local residual ~ V' dx/2
// in the sampled solutions, and cubic resampling onto the kernel grid adds a
// comparable amount under the finite-difference second derivative; 2e-3 is the
// realistic floor for the relative defining-identity residual.
static constexpr double kIdentityTol = 2e-3;

TEST_CASE("kernel application: zero input gives exactly zero output") {
  const double h = 0.04;
  const SpectralWindow w = window_at(h);
  const cplx z(w.ek + 0.5 * w.spacing, 0.0);
  const KernelSpec k = make_kernel(model(), h, 1, 'L', z, nullptr, 0, 800);
  const KernelImage y = apply_kernel(k, std::vector<cplx>(k.n, cplx{}));
  CHECK(max_abs(y.y) == 0.0);
  CHECK(max_abs(y.dy) == 0.0);
}

TEST_CASE("kernel application rejects mismatched sizes and non-decaying input") {
  const double h = 0.04;
  const SpectralWindow w = window_at(h);
  const cplx z(w.ek + 0.5 * w.spacing, 0.0);
  const KernelSpec k = make_kernel(model(), h, 1, 'L', z, nullptr, 0, 800);
  CHECK_THROWS_AS(apply_kernel(k, std::vector<cplx>(k.n + 1, cplx{})), std::invalid_argument);
  CHECK_THROWS_AS(apply_kernel(k, std::vector<cplx>(k.n, cplx(1.0, 0.0))),
                  std::invalid_argument);
}

TEST_CASE("defining identity (P_j - z) K_j[v] = v on all four kernels") {
  const double h = 0.02;
  const SpectralWindow w = window_at(h);
  const cplx z(w.ek + 0.5 * w.spacing, 0.0);
  const PotentialModel& m = model();
  DistortionProfile dist;

  SUBCASE("level 1 left") {
    const KernelSpec k = make_kernel(m, h, 1, 'L', z, nullptr, 0, 4000);
    const std::vector<cplx> v = gaussian_on(k, -1.0, 0.5);
    const KernelImage y = apply_kernel(k, v);
    CHECK(defining_identity_residual(k, nullptr, v, y.y) < kIdentityTol);
  }
  SUBCASE("level 2 left") {
    const KernelSpec k = make_kernel(m, h, 2, 'L', z, nullptr, 0, 4000);
    const std::vector<cplx> v = gaussian_on(k, -1.0, 0.5);
    const KernelImage y = apply_kernel(k, v);
    CHECK(defining_identity_residual(k, nullptr, v, y.y) < kIdentityTol);
  }
  SUBCASE("level 1 right") {
    const KernelSpec k = make_kernel(m, h, 1, 'R', z, nullptr, 0, 4000);
    const std::vector<cplx> v = gaussian_on(k, 1.0, 0.5);
    const KernelImage y = apply_kernel(k, v);
    CHECK(defining_identity_residual(k, nullptr, v, y.y) < kIdentityTol);
  }
  SUBCASE("level 2 right, both rays") {
    for (const int ray : {+1, -1}) {
      const KernelSpec k = make_kernel(m, h, 2, 'R', z, &dist, ray, 4000);
      std::vector<cplx> v(k.n);
      for (int i = 0; i < k.n; ++i) {
        const cplx t = dist.gamma(k.x_at(i), ray);
        v[i] = std::exp(-4.0 * (t - 1.0) * (t - 1.0));
      }
      const KernelImage y = apply_kernel(k, v);
      CHECK(defining_identity_residual(k, &dist, v, y.y) < kIdentityTol);
    }
  }
}

TEST_CASE("kernel images match an independent sparse boundary-value solve") {
  // Complex energy shift keeps the Dirichlet problem uniformly well
  // conditioned; boundary data (two nodes each end) are taken from the kernel
  // image so both constructions solve the same boundary-value problem.
  const double h = 0.02;
  const SpectralWindow w = window_at(h);
  const cplx z(w.ek + 0.5 * w.spacing, 0.15);
  const PotentialModel& m = model();

  for (const int level : {1, 2}) {
    CAPTURE(level);
    const KernelSpec k = make_kernel(m, h, level, 'L', z, nullptr, 0, 2400);
    const std::vector<cplx> v = gaussian_on(k, -1.0, 0.5);
    const KernelImage img = apply_kernel(k, v);

    const int n = k.n;
    const double c2 = h * h / (12.0 * k.dx * k.dx);
    const auto& V = (level == 1) ? m.v1 : m.v2;
    std::vector<Eigen::Triplet<cplx>> trip;
    Eigen::VectorXcd rhs(n - 4);
    for (int i = 2; i < n - 2; ++i) {
      const int r = i - 2;
      rhs(r) = v[i];
      const cplx diag = 30.0 * c2 + (V(k.x_at(i)) - z);
      const cplx off1 = -16.0 * c2, off2 = c2;
      auto put = [&](int j, cplx c) {
        if (j >= 2 && j < n - 2)
          trip.emplace_back(r, j - 2, c);
        else
          rhs(r) -= c * img.y[j];  // known boundary layer
      };
      put(i - 2, off2);
      put(i - 1, off1);
      put(i, diag);
      put(i + 1, off1);
      put(i + 2, off2);
    }
    Eigen::SparseMatrix<cplx> A(n - 4, n - 4);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(A);
    REQUIRE(lu.info() == Eigen::Success);
    const Eigen::VectorXcd y = lu.solve(rhs);

    double ymax = 0.0, err = 0.0;
    for (int i = 2; i < n - 2; ++i) ymax = std::max(ymax, std::abs(img.y[i]));
    for (int i = 2; i < n - 2; ++i) err = std::max(err, std::abs(y(i - 2) - img.y[i]));
    CHECK(err / ymax < 0.02);
  }
}

TEST_CASE("piecewise resolvent: C^1 matching at 0 and defining identity") {
  const double h = 0.02;
  const SpectralWindow w = window_at(h);
  const cplx z(w.ek + 0.5 * w.spacing, 0.0);
  DistortionProfile dist;
  const GreenSystem gs = build_green_system(model(), h, z, dist, +1, 4000);
  const CFun phi = [](cplx t) { return std::exp(-2.0 * t * t); };

  for (const int level : {1, 2}) {
    CAPTURE(level);
    const PiecewiseSamples r = resolvent_apply(gs, level, phi);
    const KernelSpec& kl = (level == 1) ? gs.k1l : gs.k2l;
    const KernelSpec& kr = (level == 1) ? gs.k1r : gs.k2r;

    // continuity of value and derivative across the matching point
    const double scale = std::max(std::abs(r.l.back()), std::abs(r.r.front()));
    const double dscale = std::max(std::abs(r.dl.back()), std::abs(r.dr.front()));
    CHECK(std::abs(r.l.back() - r.r.front()) < 1e-3 * scale);
    CHECK(std::abs(r.dl.back() - r.dr.front()) < 1e-3 * dscale);

    // (P - z) R phi = phi on both pieces
    std::vector<cplx> vl(kl.n), vr(kr.n);
    for (int i = 0; i < kl.n; ++i) vl[i] = phi(kl.x_at(i));
    for (int i = 0; i < kr.n; ++i)
      vr[i] = (kr.ray == 0) ? phi(cplx(kr.x_at(i), 0.0)) : phi(dist.gamma(kr.x_at(i), kr.ray));
    CHECK(defining_identity_residual(kl, nullptr, vl, r.l) < kIdentityTol);
    CHECK(defining_identity_residual(kr, &dist, vr, r.r) < kIdentityTol);
  }

  SUBCASE("second contour sign") {
    const GreenSystem gm = build_green_system(model(), h, z, dist, -1, 4000);
    const PiecewiseSamples r = resolvent_apply(gm, 2, phi);
    const KernelSpec& kr = gm.k2r;
    std::vector<cplx> vr(kr.n);
    for (int i = 0; i < kr.n; ++i) vr[i] = phi(dist.gamma(kr.x_at(i), kr.ray));
    CHECK(defining_identity_residual(kr, &dist, vr, r.r) < kIdentityTol);
  }
}

TEST_CASE("level-1 resolvent refuses energies at the decoupled well level") {
  const double h = 0.02;
  const SpectralWindow w = window_at(h);
  const double lam = ground_state_shooting(model(), h, w.ek - 0.45 * w.spacing,
                                           w.ek + 0.45 * w.spacing);
  DistortionProfile dist;
  const GreenSystem gs = build_green_system(model(), h, cplx(lam, 0.0), dist, +1, 600);
  const CFun phi = [](cplx t) { return std::exp(-2.0 * t * t); };
  CHECK_THROWS_AS(resolvent_apply(gs, 1, phi), std::runtime_error);
  CHECK_NOTHROW(resolvent_apply(gs, 2, phi));  // level 2 has no well spectrum
}

TEST_CASE("rank-one coefficients reproduce the semiclassical prefactors") {
  // At z a quarter-spacing above the quantized level, A(z)/h = 3 pi/4 mod pi,
  // so tan and cos are away from poles/zeros. Leading-order prefactors (in
  // units of h^{-4/3}) carry O(h^{1/3}) corrections, hence the loose tolerance.
  const double h = 0.02;
  const SpectralWindow w = window_at(h);
  const double zr = w.ek + 0.25 * w.spacing;
  const double phase = action(model(), zr).action / h;
  DistortionProfile dist;
  const double h43 = std::pow(h, -4.0 / 3.0);
  const double tol = 0.45;

  const GreenSystem gp = build_green_system(model(), h, cplx(zr, 0.0), dist, +1, 600);
  const GreenSystem gm = build_green_system(model(), h, cplx(zr, 0.0), dist, -1, 600);

  SUBCASE("level 1: tan / sec laws in the crossing phase") {
    CHECK(rel_diff(gp.c1.pre_LL, (M_PI / 4.0) * std::tan(phase) * h43) < tol);
    CHECK(rel_diff(gp.c1.pre_LR, (M_PI / 4.0) / std::cos(phase) * h43) < tol);
    CHECK(gp.c1.pre_RL == gp.c1.pre_LR);
    CHECK(rel_diff(gp.c1.pre_RR, (M_PI / 4.0) * std::tan(phase) * h43) < tol);
  }
  SUBCASE("level 2, upper contour") {
    const cplx eipi4 = std::polar(1.0, M_PI / 4.0);
    CHECK(rel_diff(gp.c2.pre_LL, cplx(0.0, M_PI / 4.0) * h43) < tol);
    CHECK(rel_diff(gp.c2.pre_LR, (M_PI / std::sqrt(2.0)) * eipi4 * h43) < tol);
    CHECK(gp.c2.pre_RL == gp.c2.pre_LR);
    CHECK(rel_diff(gp.c2.pre_RR, cplx(M_PI, 0.0) * h43) < tol);
  }
  SUBCASE("level 2, lower contour") {
    const cplx eipi4 = std::polar(1.0, M_PI / 4.0);
    CHECK(rel_diff(gm.c2.pre_LL, cplx(0.0, -M_PI / 4.0) * h43) < tol);
    CHECK(rel_diff(gm.c2.pre_LR, -(M_PI / (2.0 * std::sqrt(2.0))) * eipi4 * h43) < tol);
    CHECK(rel_diff(gm.c2.pre_RR, cplx(-M_PI / 4.0, 0.0) * h43) < tol);
  }
}

TEST_CASE("composed operator: zero input gives exactly zero") {
  const double h = 0.04;
  const SpectralWindow w = window_at(h);
  DistortionProfile dist;
  const GreenSystem gs =
      build_green_system(model(), h, cplx(w.ek + 0.5 * w.spacing, 0.0), dist, +1, 600);
  const std::vector<cplx> zl(gs.k1l.n, cplx{}), zr(gs.k1r.n, cplx{});
  const PiecewiseSamples y = m_operator_apply(model(), gs, zl, zl, zr, zr);
  CHECK(max_abs(y.l) == 0.0);
  CHECK(max_abs(y.r) == 0.0);
}

TEST_CASE("operator norm scalings across the semiclassical sweep") {
  // Kernel / resolvent / composed-operator norms against their predicted
  // powers of h; the coupling support is covered by |x| <= 3.5 up to a
  // relative truncation of a0(3.5)^2 / a0(0)^2 ~ 2e-3.
  //
  // The h^{-2/3} (concentrated kernels) and h^{1/6} (composed operator)
  // rates are carried by the singular value itself.  The h^{-7/6} rates of
  // the deconcentrated family are Schur-test bounds: their kernel density
  // peaks at a turning point but oscillates, so the true singular value
  // scales only like h^{-1} (measured -1.00 +- 0.01) while the Schur
  // functional -- the quantity the asymptotic estimates control -- carries
  // the full h^{-7/6}.  Both are asserted: the Schur slope at -7/6, and the
  // singular value staying below that rate.
  const std::vector<double> hs = {0.04, 0.02, 0.01};
  DistortionProfile dist;
  std::vector<double> s_wide, s_tight, rr2, mm, p_tight;
  for (const double h : hs) {
    const SpectralWindow w = window_at(h);
    const GreenSystem gs = build_green_system(model(), h, cplx(w.ek + 0.5 * w.spacing, 0.0),
                                              dist, +1, 800, 3.5);
    s_wide.push_back(operator_norm_estimate(gs.k2l) + operator_norm_estimate(gs.k1r));
    s_tight.push_back(operator_schur_estimate(gs.k1l) + operator_schur_estimate(gs.k2r));
    p_tight.push_back(operator_norm_estimate(gs.k1l) + operator_norm_estimate(gs.k2r));
    rr2.push_back(resolvent_schur_estimate(gs, 2));
    // singular value never exceeds its Schur bound
    CHECK(p_tight.back() <= s_tight.back());
    CHECK(resolvent_norm_estimate(gs, 2) <= rr2.back());
    mm.push_back(m_norm_estimate(model(), gs));
    CHECK(mm.back() < 1.0);
  }
  CHECK(std::abs(fit_slope(hs, s_wide).slope - (-2.0 / 3.0)) < 0.15);
  CHECK(std::abs(fit_slope(hs, s_tight).slope - (-7.0 / 6.0)) < 0.15);
  CHECK(std::abs(fit_slope(hs, rr2).slope - (-7.0 / 6.0)) < 0.15);
  CHECK(std::abs(fit_slope(hs, mm).slope - (1.0 / 6.0)) < 0.15);
  // the true singular value of the deconcentrated family decays no faster
  // than its h^{-7/6} bound permits
  CHECK(fit_slope(hs, p_tight).slope > -7.0 / 6.0 - 0.15);

  SUBCASE("lower contour at one h: contraction and comparable resolvent size") {
    const double h = 0.02;
    const SpectralWindow w = window_at(h);
    const GreenSystem gm = build_green_system(model(), h, cplx(w.ek + 0.5 * w.spacing, 0.0),
                                              dist, -1, 800, 3.5);
    CHECK(m_norm_estimate(model(), gm) < 1.0);
    const double r2m = resolvent_schur_estimate(gm, 2);
    CHECK(r2m / rr2[1] < 4.0);
    CHECK(rr2[1] / r2m < 4.0);
  }
}

TEST_CASE("weighted-envelope membership of the decaying branches") {
  // h^{-1/6}-rescaled decaying solutions stay inside the weighted classes:
  // the sup over the algebraic regions must not grow as h decreases, and the
  // fitted exponential rates in the decay regions must stay positive.
  const std::vector<double> hs = {0.04, 0.01};
  std::vector<double> sup1;
  for (const double h : hs) {
    const SpectralWindow w = window_at(h);
    const cplx z(w.ek, 0.0);
    EnvelopeSpec spec;
    spec.h = h;
    spec.x_star = action(model(), w.ek).x_left;

    const WkbSolution u1 = fundamental_solution(model(), h, 1, 'L', -1, z, nullptr, 0, 60.0);
    std::vector<cplx> v1(u1.n());
    for (int i = 0; i < u1.n(); ++i) v1[i] = std::pow(h, -1.0 / 6.0) * u1.u[i];
    const EnvelopeReport r1 = envelope_check(v1, u1.x0, u1.dx, 1, 'L', spec);
    CHECK(r1.pass);
    CHECK(r1.fitted_c > 0.0);
    sup1.push_back(r1.sup_ratio);

    const WkbSolution u2 = fundamental_solution(model(), h, 2, 'L', -1, z, nullptr, 0, 60.0);
    std::vector<cplx> v2(u2.n());
    for (int i = 0; i < u2.n(); ++i) v2[i] = std::pow(h, -1.0 / 6.0) * u2.u[i];
    // the left-side barrier class has exponential clauses only, so the report
    // is conveyed entirely through the fitted rates
    const EnvelopeReport r2 = envelope_check(v2, u2.x0, u2.dx, 2, 'L', spec);
    CHECK(r2.pass);
    CHECK(r2.fitted_c > 0.0);
  }
  CHECK(sup1[1] / sup1[0] < 2.5);

  SUBCASE("the zero function is in every class") {
    EnvelopeSpec spec;
    spec.h = 0.02;
    const EnvelopeReport r = envelope_check(std::vector<cplx>(100, cplx{}), -1.0, 0.01, 1, 'L',
                                            spec);
    CHECK(r.pass);
    CHECK(std::isinf(r.fitted_c));
  }

  SUBCASE("argument validation") {
    EnvelopeSpec spec;
    spec.h = 0.02;
    CHECK_THROWS_AS(envelope_check(std::vector<cplx>(10, cplx{}), 0.0, 0.01, 3, 'L', spec),
                    std::invalid_argument);
  }
}
