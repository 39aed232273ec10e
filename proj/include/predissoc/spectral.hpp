#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "predissoc/discretize.hpp"
#include "predissoc/distortion.hpp"
#include "predissoc/model.hpp"
#include "predissoc/wkb.hpp"

// Grid realization of the coupled two-level operator
//   H = [ P1   hW  ]      P_j = h^2 D^2 + V_j,   W = a0 + h a1 d/dx,
//       [ hW*  P2  ]      W* = (a0 - h a1') - h a1 d/dx,
// under exterior complex scaling x -> x + i theta nu(x), realized on the real
// grid by the chain-rule factors s = 1/gamma', never by complex grid points.
// The two components are interleaved so the coupled matrix stays banded.
namespace predissoc {

struct Discretization {
  Grid grid;
  double h = 0.0;
  double dx_limit = 0.0;  // resolution bound (h/10) min(1, 1/sqrt(max |V|))
};

namespace spectral_detail {

inline double potential_bound(const PotentialModel& m) {
  double vmax = 0.0;
  const int n = 256;
  for (int i = 0; i <= n; ++i) {
    const double x = m.x_min + (m.x_max - m.x_min) * i / n;
    vmax = std::max(vmax, std::max(std::abs(m.v1(x)), std::abs(m.v2(x))));
  }
  return vmax;
}

// 4th-order central derivative of an analytic function along the real
// direction at a complex point.
inline std::complex<double> cfd_derivative(const CFun& f, std::complex<double> z,
                                           double step = 1e-4) {
  return (-f(z + 2.0 * step) + 8.0 * f(z + step) - 8.0 * f(z - step) + f(z - 2.0 * step)) /
         (12.0 * step);
}

}  // namespace spectral_detail

inline double resolution_limit(const PotentialModel& m, double h) {
  const double vmax = spectral_detail::potential_bound(m);
  return 0.1 * h * std::min(1.0, 1.0 / std::sqrt(std::max(vmax, 1e-30)));
}

inline Discretization make_discretization(const PotentialModel& m, double h,
                                          double dx_factor = 0.1) {
  Discretization d;
  d.h = h;
  d.dx_limit = resolution_limit(m, h);
  d.grid = make_grid(m.x_min, m.x_max, std::min(dx_factor * h, d.dx_limit));
  return d;
}

struct OperatorSet {
  Grid grid;
  double h = 0.0;
  double theta = 0.0;
  SpMatC p1, p2, w, wstar;  // per-component, n x n
  SpMatC hamiltonian;       // 2n x 2n, components interleaved
  Eigen::VectorXcd gamma_prime;  // chain-rule weight on the grid

  // interleaved index of component c (0 or 1) at grid node i
  static int idx(int c, int i) { return 2 * i + c; }
};

inline OperatorSet discretize(const PotentialModel& m, double h, const Discretization& d,
                              const DistortionProfile* dist) {
  if (dist && (dist->theta < 0.0 || dist->theta > 0.35))
    throw std::invalid_argument("discretize: distortion angle outside [0, 0.35]");
  if (d.grid.dx > d.dx_limit * (1.0 + 1e-12)) {
    const int required =
        static_cast<int>(std::ceil((m.x_max - m.x_min) / d.dx_limit)) - 1;
    throw std::invalid_argument(
        "discretize: grid spacing " + std::to_string(d.grid.dx) +
        " does not resolve the h-oscillations; need at least n = " + std::to_string(required) +
        " interior points");
  }
  const Grid& g = d.grid;
  const int n = g.n;
  const double theta = dist ? dist->theta : 0.0;
  const bool scaled = theta != 0.0;
  using cplx = std::complex<double>;

  OperatorSet ops;
  ops.grid = g;
  ops.h = h;
  ops.theta = theta;
  ops.gamma_prime.resize(n);
  for (int i = 0; i < n; ++i)
    ops.gamma_prime(i) = dist ? dist->gamma_prime(g.x(i), +1) : cplx(1.0, 0.0);

  // symmetrized -d^2/dx^2 so the theta = 0 operator is exactly real symmetric
  // (the one-sided near-boundary rows only perturb exponentially small tails)
  SpMat m2r = minus_second_derivative(g);
  SpMat m2 = 0.5 * (SpMat(m2r.transpose()) + m2r);
  SpMat d1 = first_derivative(g);

  auto p_matrix = [&](const std::function<double(double)>& v, const CFun& vc) {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(m2.nonZeros() + d1.nonZeros() + n);
    for (int k = 0; k < m2.outerSize(); ++k)
      for (SpMat::InnerIterator it(m2, k); it; ++it) {
        cplx coef = h * h;
        if (scaled) {
          const cplx gp = ops.gamma_prime(it.row());
          coef /= gp * gp;  // s^2
        }
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                       coef * it.value());
      }
    if (scaled) {
      // - h^2 s s' d/dx with s s' = -gamma'' / gamma'^3
      for (int k = 0; k < d1.outerSize(); ++k)
        for (SpMat::InnerIterator it(d1, k); it; ++it) {
          const int i = static_cast<int>(it.row());
          const cplx gp = ops.gamma_prime(i);
          const cplx gs = dist->gamma_second(g.x(i), +1);
          t.emplace_back(i, static_cast<int>(it.col()),
                         h * h * gs / (gp * gp * gp) * it.value());
        }
    }
    for (int i = 0; i < n; ++i) {
      const cplx vi = scaled ? vc(dist->gamma(g.x(i), +1)) : cplx(v(g.x(i)), 0.0);
      t.emplace_back(i, i, vi);
    }
    SpMatC A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
  };

  if (scaled && (!m.v1_c || !m.v2_c || !m.a0_c || !m.a1_c))
    throw std::invalid_argument(
        "discretize: complex scaling needs the analytic continuations of the model");

  ops.p1 = p_matrix(m.v1, m.v1_c);
  ops.p2 = p_matrix(m.v2, m.v2_c);

  // W = a0(gamma) + h a1(gamma) s d/dx
  {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(d1.nonZeros() + n);
    for (int k = 0; k < d1.outerSize(); ++k)
      for (SpMat::InnerIterator it(d1, k); it; ++it) {
        const int i = static_cast<int>(it.row());
        const cplx a1i =
            scaled ? m.a1_c(dist->gamma(g.x(i), +1)) : cplx(m.a1(g.x(i)), 0.0);
        t.emplace_back(i, static_cast<int>(it.col()),
                       h * a1i / ops.gamma_prime(i) * it.value());
      }
    for (int i = 0; i < n; ++i) {
      const cplx a0i =
          scaled ? m.a0_c(dist->gamma(g.x(i), +1)) : cplx(m.a0(g.x(i)), 0.0);
      t.emplace_back(i, i, a0i);
    }
    ops.w.resize(n, n);
    ops.w.setFromTriplets(t.begin(), t.end());
    ops.w.makeCompressed();
  }

  if (!scaled) {
    // exact transpose keeps the theta = 0 Hamiltonian exactly symmetric; it
    // agrees with the analytic W* = (a0 - h a1') - h a1 d/dx to stencil order
    ops.wstar = SpMatC(ops.w.transpose());
  } else {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(d1.nonZeros() + n);
    for (int k = 0; k < d1.outerSize(); ++k)
      for (SpMat::InnerIterator it(d1, k); it; ++it) {
        const int i = static_cast<int>(it.row());
        const cplx a1i = m.a1_c(dist->gamma(g.x(i), +1));
        t.emplace_back(i, static_cast<int>(it.col()),
                       -h * a1i / ops.gamma_prime(i) * it.value());
      }
    for (int i = 0; i < n; ++i) {
      const cplx gi = dist->gamma(g.x(i), +1);
      t.emplace_back(i, i, m.a0_c(gi) - h * spectral_detail::cfd_derivative(m.a1_c, gi));
    }
    ops.wstar.resize(n, n);
    ops.wstar.setFromTriplets(t.begin(), t.end());
    ops.wstar.makeCompressed();
  }

  // interleaved coupled matrix [P1 hW; hW* P2]
  {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(ops.p1.nonZeros() + ops.p2.nonZeros() + ops.w.nonZeros() + ops.wstar.nonZeros());
    auto add = [&](const SpMatC& A, int rc, int cc, cplx scale) {
      for (int k = 0; k < A.outerSize(); ++k)
        for (SpMatC::InnerIterator it(A, k); it; ++it)
          t.emplace_back(OperatorSet::idx(rc, static_cast<int>(it.row())),
                         OperatorSet::idx(cc, static_cast<int>(it.col())),
                         scale * it.value());
    };
    add(ops.p1, 0, 0, 1.0);
    add(ops.p2, 1, 1, 1.0);
    add(ops.w, 0, 1, h);
    add(ops.wstar, 1, 0, h);
    ops.hamiltonian.resize(2 * n, 2 * n);
    ops.hamiltonian.setFromTriplets(t.begin(), t.end());
    ops.hamiltonian.makeCompressed();
  }
  return ops;
}

// ------------------------------------------------------------------ resonance

struct ResonanceResult {
  std::complex<double> rho0;
  Eigen::VectorXcd psi0;  // interleaved, bilinear-normalized (c-product with gamma' weight)
  std::complex<double> b;
  int k_index = 0;
  double lambda0 = 0.0;
  double c0 = 0.0;
  Grid grid;
  std::complex<double> rho0_alt;  // from the 20%-varied distortion angle
  double theta_drift = 0.0;   // |rho0 - rho0_alt|
  double theta_margin = 0.0;  // uncovered continuum depth minus the window depth
};

namespace spectral_detail {

struct RhoSolve {
  std::complex<double> rho;
  Eigen::VectorXcd psi;
  Grid grid;
  Eigen::VectorXcd gamma_prime;
};

inline RhoSolve solve_rho(const PotentialModel& m, double h, DistortionProfile dp,
                          double lambda0, double dx_factor) {
  Discretization d = make_discretization(m, h, dx_factor);
  OperatorSet ops = discretize(m, h, d, &dp);
  auto pairs = eigenpairs_near_shift(ops.hamiltonian, {lambda0, 0.0}, 3, 80, 1e-8);
  const double spacing = M_PI * h / action(m, 0.0).action_derivative;
  for (const auto& p : pairs) {
    // the resonance is the eigenvalue within the level window below the axis;
    // rotated-continuum artifacts carry order-one imaginary parts
    if (std::abs(p.value.real() - lambda0) < 0.75 * spacing && p.value.imag() < 0.2 * h &&
        p.value.imag() > -0.5 * h) {
      RhoSolve r;
      r.rho = p.value;
      r.psi = p.vector;
      r.grid = ops.grid;
      r.gamma_prime = ops.gamma_prime;
      return r;
    }
  }
  throw std::runtime_error("resonance: no eigenvalue near the well level inside the window");
}

}  // namespace spectral_detail

// Resonance nearest the well level: eigenvalue of the distorted coupled
// operator, Richardson-extrapolated over dx and dx/2, with a stability check
// under a 20% change of the distortion angle. The overlap coefficient b is the
// squared bilinear pairing of the well state against the resonant state.
inline ResonanceResult resonance(const PotentialModel& m, double h,
                                 const DistortionProfile& dist, double dx_factor = 0.1) {
  const auto [lo, hi] = default_window(m, h);
  const GroundStateData gsd = ground_state(m, h, lo, hi, dx_factor);

  auto rho_at = [&](double theta) {
    DistortionProfile dp = dist;
    dp.theta = theta;
    const auto coarse = spectral_detail::solve_rho(m, h, dp, gsd.lambda0, dx_factor);
    auto fine = spectral_detail::solve_rho(m, h, dp, gsd.lambda0, 0.5 * dx_factor);
    fine.rho = (16.0 * fine.rho - coarse.rho) / 15.0;
    return fine;
  };

  auto base = rho_at(dist.theta);
  const auto varied = rho_at(0.8 * dist.theta);

  ResonanceResult r;
  r.rho0 = base.rho;
  r.rho0_alt = varied.rho;
  r.theta_drift = std::abs(base.rho - varied.rho);
  // the rotated continuum emanating from the open-channel threshold must dip
  // below the resonance window: depth ~ tan(2 theta) * (lambda0 - threshold)
  const double gap = gsd.lambda0 - m.v2(m.x_max);
  r.theta_margin = std::tan(2.0 * dist.theta) * gap - 3.0 * h;
  r.lambda0 = gsd.lambda0;
  r.c0 = gsd.c0;
  r.k_index = gsd.k_index;
  r.grid = base.grid;

  // bilinear normalization <Psi^theta, Psi^{-theta}> = 1, i.e. the c-product
  // int (Psi1^2 + Psi2^2) gamma' dx = 1 on the scaled contour
  const int n = base.grid.n;
  std::complex<double> q = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> p1 = base.psi(OperatorSet::idx(0, i));
    const std::complex<double> p2 = base.psi(OperatorSet::idx(1, i));
    q += (p1 * p1 + p2 * p2) * base.gamma_prime(i) * base.grid.dx;
  }
  r.psi0 = base.psi / std::sqrt(q);

  // b = <phi_theta, Psi^{-theta}><Psi^theta, phi_{-theta}>; the well state is
  // exponentially small on the distortion support, so phi_theta = phi on the
  // grid and both factors coincide with the bilinear overlap
  if (gsd.grid.n != n || std::abs(gsd.grid.dx - base.grid.dx) > 1e-12)
    throw std::runtime_error("resonance: well-state and resonance grids disagree");
  std::complex<double> ov = 0.0;
  for (int i = 0; i < n; ++i)
    ov += gsd.phi0(i) * r.psi0(OperatorSet::idx(0, i)) * base.gamma_prime(i) * base.grid.dx;
  r.b = ov * ov;
  return r;
}

// ---------------------------------------------------------- box eigensystem

struct BoxEigensystem {
  Grid grid;
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, interleaved components, sum v^2 dx = 1
};

// Dense eigendecomposition of the undistorted coupled operator on the box with
// zero boundary data; feeds the spectral-calculus dynamics. Desk-scale only.
inline BoxEigensystem eigendecompose_box(const PotentialModel& m, double h,
                                         const Discretization& d) {
  OperatorSet ops = discretize(m, h, d, nullptr);
  const int N = 2 * d.grid.n;
  if (N > 9000)
    throw std::invalid_argument(
        "eigendecompose_box: dense path limited to 9000 unknowns; use the windowed solver");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < ops.hamiltonian.outerSize(); ++k)
    for (SpMatC::InnerIterator it(ops.hamiltonian, k); it; ++it)
      A(it.row(), it.col()) = it.value().real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecompose_box: dense eigensolver failed");
  BoxEigensystem out;
  out.grid = d.grid;
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors() / std::sqrt(d.grid.dx);
  return out;
}

}  // namespace predissoc
