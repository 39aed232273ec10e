#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

// Uniform-grid finite-difference discretization of h^2 D^2 + V with Dirichlet
// boundary conditions (4th-order interior stencils), plus windowed eigensolvers:
// shift-invert Lanczos for real symmetric operators, shift-invert Arnoldi for
// the complex-scaled (complex symmetric) ones, and LDL^T inertia counts to
// certify that no eigenvalue in a window was missed.
namespace predissoc {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;

struct Grid {
  double x0 = 0.0;
  double dx = 1.0;
  int n = 0;  // interior points; x(i) = x0 + (i+1) dx, boundaries carry u = 0

  double x(int i) const { return x0 + (i + 1) * dx; }
  double x_last() const { return x(n - 1); }
};

inline Grid make_grid(double a, double b, double dx_target) {
  if (!(b > a) || !(dx_target > 0.0)) throw std::invalid_argument("make_grid: bad interval");
  const int cells = std::max(4, static_cast<int>(std::ceil((b - a) / dx_target)));
  Grid g;
  g.x0 = a;
  g.dx = (b - a) / cells;
  g.n = cells - 1;
  return g;
}

// -d^2/dx^2 on interior points, 4th order (5-point stencil), zero Dirichlet data.
// The two points next to each boundary fall back to the 2nd-order stencil; the
// eigenfunctions of interest are exponentially small there.
inline SpMat minus_second_derivative(const Grid& g) {
  const double c = 1.0 / (g.dx * g.dx);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(5 * g.n);
  for (int i = 0; i < g.n; ++i) {
    if (i == 0 || i == g.n - 1) {
      t.emplace_back(i, i, 2.0 * c);
      if (i > 0) t.emplace_back(i, i - 1, -c);
      if (i < g.n - 1) t.emplace_back(i, i + 1, -c);
    } else {
      const bool full = (i >= 2 && i <= g.n - 3);
      if (full) {
        t.emplace_back(i, i - 2, c / 12.0);
        t.emplace_back(i, i - 1, -16.0 * c / 12.0);
        t.emplace_back(i, i, 30.0 * c / 12.0);
        t.emplace_back(i, i + 1, -16.0 * c / 12.0);
        t.emplace_back(i, i + 2, c / 12.0);
      } else {
        t.emplace_back(i, i - 1, -c);
        t.emplace_back(i, i, 2.0 * c);
        t.emplace_back(i, i + 1, -c);
      }
    }
  }
  SpMat A(g.n, g.n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// d/dx on interior points, 4th order central stencil (2nd order near boundary).
inline SpMat first_derivative(const Grid& g) {
  const double c = 1.0 / g.dx;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * g.n);
  for (int i = 0; i < g.n; ++i) {
    const bool full = (i >= 2 && i <= g.n - 3);
    if (full) {
      t.emplace_back(i, i - 2, c / 12.0);
      t.emplace_back(i, i - 1, -8.0 * c / 12.0);
      t.emplace_back(i, i + 1, 8.0 * c / 12.0);
      t.emplace_back(i, i + 2, -c / 12.0);
    } else {
      if (i > 0) t.emplace_back(i, i - 1, -0.5 * c);
      if (i < g.n - 1) t.emplace_back(i, i + 1, 0.5 * c);
    }
  }
  SpMat A(g.n, g.n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// h^2 D^2 + V, i.e. -h^2 d^2/dx^2 + V(x), real symmetric.
inline SpMat schrodinger_matrix(const Grid& g, double h,
                                const std::function<double(double)>& v) {
  SpMat A = minus_second_derivative(g) * (h * h);
  for (int i = 0; i < g.n; ++i) A.coeffRef(i, i) += v(g.x(i));
  A.makeCompressed();
  return A;
}

// Number of eigenvalues of a real symmetric sparse matrix strictly below `a`,
// by the inertia of the LDL^T factorization of A - aI.
inline int eigenvalue_count_below(const SpMat& A, double a) {
  SpMat S = A;
  for (int i = 0; i < S.rows(); ++i) S.coeffRef(i, i) -= a;
  S.makeCompressed();
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(S);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue_count_below: LDL^T factorization failed");
  const auto& d = ldlt.vectorD();
  int cnt = 0;
  for (int i = 0; i < d.size(); ++i)
    if (d(i) < 0.0) ++cnt;
  return cnt;
}

inline int eigenvalue_count_in(const SpMat& A, double lo, double hi) {
  return eigenvalue_count_below(A, hi) - eigenvalue_count_below(A, lo);
}

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

// Shift-invert Lanczos with full reorthogonalization for a real symmetric
// sparse matrix; returns all eigenpairs inside [lo, hi], certified against the
// LDL^T inertia count.
inline std::vector<EigenPair> eigenpairs_in_window(const SpMat& A, double lo, double hi,
                                                   int max_iter = 120) {
  const int n = static_cast<int>(A.rows());
  const double sigma = 0.5 * (lo + hi);
  const int expected = eigenvalue_count_in(A, lo, hi);
  if (expected == 0) return {};

  SpMat S = A;
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) -= sigma;
  S.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("eigenpairs_in_window: LU factorization failed (shift hit)");

  const int m = std::min(n, max_iter);
  Eigen::MatrixXd V(n, m + 1);
  Eigen::VectorXd alpha(m), beta(m);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) q(i) = std::sin(1.0 + 0.7 * i);  // fixed deterministic seed
  q.normalize();
  V.col(0) = q;
  int k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXd w = lu.solve(V.col(k));
    alpha(k) = V.col(k).dot(w);
    w -= alpha(k) * V.col(k);
    if (k > 0) w -= beta(k - 1) * V.col(k - 1);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j <= k; ++j) w -= V.col(j).dot(w) * V.col(j);
    beta(k) = w.norm();
    if (beta(k) < 1e-14) {
      ++k;
      break;
    }
    V.col(k + 1) = w / beta(k);
  }

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = alpha(i);
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);

  std::vector<EigenPair> out;
  for (int i = 0; i < k; ++i) {
    const double nu = es.eigenvalues()(i);
    if (nu == 0.0) continue;
    const double lambda = sigma + 1.0 / nu;
    if (lambda < lo || lambda > hi) continue;
    EigenPair p;
    p.value = lambda;
    p.vector = V.leftCols(k) * es.eigenvectors().col(i);
    p.vector.normalize();
    const double res = (A * p.vector - lambda * p.vector).norm();
    if (res > 1e-7 * std::max(1.0, std::abs(lambda))) continue;  // spurious Ritz value
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  // de-duplicate Ritz copies of the same eigenvalue
  std::vector<EigenPair> uniq;
  for (auto& p : out)
    if (uniq.empty() || std::abs(p.value - uniq.back().value) > 1e-10 * std::max(1.0, std::abs(p.value)))
      uniq.push_back(std::move(p));
  if (static_cast<int>(uniq.size()) != expected)
    throw std::runtime_error("eigenpairs_in_window: found " + std::to_string(uniq.size()) +
                             " eigenvalues but inertia count expects " +
                             std::to_string(expected) + "; increase max_iter");
  return uniq;
}

struct EigenPairC {
  std::complex<double> value;
  Eigen::VectorXcd vector;
};

// Shift-invert Arnoldi for a general complex sparse matrix: Ritz pairs of
// (A - sigma I)^{-1} converted back, filtered by residual, nearest to sigma first.
inline std::vector<EigenPairC> eigenpairs_near_shift(const SpMatC& A, std::complex<double> sigma,
                                                     int want, int max_iter = 80,
                                                     double residual_tol = 1e-8) {
  const int n = static_cast<int>(A.rows());
  SpMatC S = A;
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) -= sigma;
  S.makeCompressed();
  Eigen::SparseLU<SpMatC> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("eigenpairs_near_shift: LU factorization failed");

  const int m = std::min(n, max_iter);
  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  Eigen::VectorXcd q(n);
  for (int i = 0; i < n; ++i) q(i) = std::complex<double>(std::sin(1.0 + 0.7 * i), std::cos(2.0 + 0.3 * i));
  q.normalize();
  V.col(0) = q;
  int k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXcd w = lu.solve(V.col(k));
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j <= k; ++j) {
        const std::complex<double> hjk = V.col(j).dot(w);
        H(j, k) += hjk;
        w -= hjk * V.col(j);
      }
    H(k + 1, k) = w.norm();
    if (std::abs(H(k + 1, k)) < 1e-14) {
      ++k;
      break;
    }
    V.col(k + 1) = w / H(k + 1, k);
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(k, k));
  std::vector<EigenPairC> out;
  for (int i = 0; i < k; ++i) {
    const std::complex<double> nu = es.eigenvalues()(i);
    if (std::abs(nu) < 1e-14) continue;
    EigenPairC p;
    p.value = sigma + 1.0 / nu;
    p.vector = V.leftCols(k) * es.eigenvectors().col(i);
    p.vector.normalize();
    const double res = (A * p.vector - p.value * p.vector).norm();
    if (res > residual_tol * std::max(1.0, std::abs(p.value))) continue;
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [&](const EigenPairC& a, const EigenPairC& b) {
    return std::abs(a.value - sigma) < std::abs(b.value - sigma);
  });
  // drop duplicates
  std::vector<EigenPairC> uniq;
  for (auto& p : out) {
    bool dup = false;
    for (const auto& u : uniq)
      if (std::abs(p.value - u.value) < 1e-9 * std::max(1.0, std::abs(p.value))) dup = true;
    if (!dup) uniq.push_back(std::move(p));
    if (static_cast<int>(uniq.size()) >= want) break;
  }
  return uniq;
}

}  // namespace predissoc
