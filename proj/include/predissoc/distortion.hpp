#pragma once

#include <cmath>
#include <complex>

// Exterior complex scaling profile: x -> x + i theta nu(x), with nu = 0 left of
// x_inf, nu(x) = x beyond the ramp, and a C^3 polynomial smoothstep in between.
namespace predissoc {

struct DistortionProfile {
  double theta = 0.25;
  double x_inf = 2.0;
  double ramp = 3.0;

  // 7th-order smoothstep: S(0)=0, S(1)=1, zero first three derivatives at both ends.
  static double sstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
  }
  static double sstep1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double u = t * (1.0 - t);
    return 140.0 * u * u * u;
  }
  static double sstep2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double u = t * (1.0 - t);
    return 420.0 * u * u * (1.0 - 2.0 * t);
  }

  double nu(double x) const { return x * sstep((x - x_inf) / ramp); }
  double nu_prime(double x) const {
    const double t = (x - x_inf) / ramp;
    return sstep(t) + x * sstep1(t) / ramp;
  }
  double nu_second(double x) const {
    const double t = (x - x_inf) / ramp;
    return 2.0 * sstep1(t) / ramp + x * sstep2(t) / (ramp * ramp);
  }

  std::complex<double> gamma(double x, int sign) const {
    return {x, sign * theta * nu(x)};
  }
  std::complex<double> gamma_prime(double x, int sign) const {
    return {1.0, sign * theta * nu_prime(x)};
  }
  std::complex<double> gamma_second(double x, int sign) const {
    return {0.0, sign * theta * nu_second(x)};
  }
};

}  // namespace predissoc
