#include <doctest.h>

#include <cmath>
#include <complex>
#include <predissoc/airy.hpp>
#include <predissoc/quadrature.hpp>

using namespace predissoc;

TEST_CASE("smooth real integrand: semicircle area") {
  const double v = integrate_real([](double x) { return std::sqrt(1.0 - x * x); }, -1.0, 1.0);
  CHECK(v == doctest::Approx(M_PI / 2.0).epsilon(1e-10));
}

TEST_CASE("oscillatory complex integrand") {
  // int_0^{2pi} e^{i 5 x} x dx = (2 pi / 5) i for the exact antiderivative bookkeeping:
  // int x e^{i k x} dx over a full period = 2 pi i / k * e^{i k b} * b-term; use closed form.
  const double k = 5.0;
  const double b = 2.0 * M_PI;
  const std::complex<double> I(0.0, 1.0);
  const std::complex<double> exact =
      (std::exp(I * k * b) * (b / (I * k) - 1.0 / (I * k * I * k))) - (-1.0 / (I * k * I * k));
  const std::complex<double> v =
      integrate([&](double x) { return x * std::exp(I * k * x); }, 0.0, b);
  CHECK(std::abs(v - exact) < 1e-10);
}

TEST_CASE("tail integral of Ai: int_0^40 Ai = 1/3 minus exponentially small remainder") {
  const double v = integrate_real([](double x) { return airy(x).ai; }, 0.0, 40.0);
  CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("inverse-square-root endpoint singularities") {
  // int_0^1 1/sqrt(x) dx = 2
  const double left = integrate_real([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {},
                                     Endpoint::sqrt_singular, Endpoint::regular);
  CHECK(left == doctest::Approx(2.0).epsilon(1e-10));
  // int_{-1}^{1} 1/sqrt(1-x^2) dx = pi, singular at both ends
  const double both =
      integrate_real([](double x) { return 1.0 / std::sqrt(1.0 - x * x); }, -1.0, 1.0, {},
                     Endpoint::sqrt_singular, Endpoint::sqrt_singular);
  CHECK(both == doctest::Approx(M_PI).epsilon(1e-10));
  // turning-point style: int_0^1 1/sqrt(1-x) dx = 2
  const double right = integrate_real([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0,
                                      {}, Endpoint::regular, Endpoint::sqrt_singular);
  CHECK(right == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("reported error bound is honoured") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-13;
  spec.rel_tol = 1e-12;
  const auto r = integrate_full([](double x) { return std::exp(-x * x) * std::cos(7.0 * x); },
                                -6.0, 6.0, spec);
  const double exact = std::sqrt(M_PI) * std::exp(-49.0 / 4.0);
  CHECK(r.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value)));
  CHECK(std::abs(r.value.real() - exact) <= 1e-12);
}

TEST_CASE("non-convergence raises a diagnostic error") {
  QuadratureSpec spec;
  spec.max_subdivisions = 8;
  CHECK_THROWS_AS(integrate_real([](double x) { return std::cos(500.0 * x * x); }, 0.0, 20.0, spec),
                  QuadratureError);
}

TEST_CASE("degenerate and invalid intervals") {
  CHECK(integrate_real([](double x) { return x; }, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(integrate_real([](double x) { return x; }, 1.0, 0.0), std::invalid_argument);
}
