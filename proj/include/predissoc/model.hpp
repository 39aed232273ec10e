#pragma once

#include <json.hpp>

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Two-level potential model: a confining well v1 crossing a dissociative step v2
// at x = 0 (reference energy 0), with smooth coupling profiles a0, a1.
namespace predissoc {

using CFun = std::function<std::complex<double>(std::complex<double>)>;

struct PotentialModel {
  std::function<double(double)> v1;
  std::function<double(double)> v2;
  std::function<double(double)> a0;
  std::function<double(double)> a1;
  // Analytic continuations, used on complex-scaled rays. Guaranteed for the
  // built-in closed-form families; may be empty for custom real-only models.
  CFun v1_c, v2_c, a0_c, a1_c;
  double x_min = -12.0;
  double x_max = 18.0;
  std::string family = "custom";
  nlohmann::json parameters;
  // Holomorphy is certified by construction (closed-form entire expressions),
  // not tested from samples.
  bool closed_form = false;
};

struct CrossingData {
  double x_star = 0.0;  // left zero of v1, < 0
  double tau0 = 0.0;    // -v1'(x_star)
  double tau1 = 0.0;    // v1'(0)
  double tau2 = 0.0;    // -v2'(0)
};

struct Clause {
  std::string name;
  bool pass = false;
  double witness = 0.0;  // point or value substantiating the verdict
  std::string message;
};

struct CertificateReport {
  std::vector<Clause> clauses;
  bool closed_form = false;

  bool all_pass() const {
    for (const auto& c : clauses)
      if (!c.pass) return false;
    return true;
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : clauses)
      os << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.message << "\n";
    return os.str();
  }
};

// Richardson-extrapolated central difference.
inline double fd_derivative(const std::function<double(double)>& f, double x,
                            double step = 1e-6) {
  auto d = [&](double s) { return (f(x + s) - f(x - s)) / (2.0 * s); };
  return (4.0 * d(step / 2.0) - d(step)) / 3.0;
}

inline PotentialModel default_model() {
  PotentialModel m;
  const double L1 = 0.5, xc = -1.0, sigma = 1.0;
  const double D = L1 * std::exp(1.0);  // pins v1(0) = 0 and v1(-2) = 0
  const double L2 = 0.5, w2 = 1.0;
  const double ca0 = 0.3, ca1 = 0.1, cw = 2.0;
  m.v1 = [=](double x) {
    const double u = (x - xc) / sigma;
    return L1 - D * std::exp(-u * u);
  };
  m.v2 = [=](double x) { return -L2 * std::tanh(x / w2); };
  m.a0 = [=](double x) { return ca0 * std::exp(-x * x / (cw * cw)); };
  m.a1 = [=](double x) { return ca1 * std::exp(-x * x / (cw * cw)); };
  m.v1_c = [=](std::complex<double> x) {
    const std::complex<double> u = (x - xc) / sigma;
    return L1 - D * std::exp(-u * u);
  };
  m.v2_c = [=](std::complex<double> x) { return -L2 * std::tanh(x / w2); };
  m.a0_c = [=](std::complex<double> x) { return ca0 * std::exp(-x * x / (cw * cw)); };
  m.a1_c = [=](std::complex<double> x) { return ca1 * std::exp(-x * x / (cw * cw)); };
  m.x_min = -12.0;
  m.x_max = 18.0;
  m.family = "gaussian-well-tanh-step";
  m.parameters = {{"L1", L1}, {"xc", xc},   {"sigma", sigma}, {"L2", L2},
                  {"w2", w2}, {"a0", ca0},  {"a1", ca1},      {"coupling_width", cw}};
  m.closed_form = true;
  return m;
}

// Same analytic family with parameters taken from a JSON document
// {family, parameters, domain_box}.
inline PotentialModel model_from_json(const nlohmann::json& j) {
  const std::string family = j.value("family", "gaussian-well-tanh-step");
  if (family != "gaussian-well-tanh-step")
    throw std::invalid_argument("model_from_json: unknown family '" + family + "'");
  PotentialModel base = default_model();
  nlohmann::json p = base.parameters;
  if (j.contains("parameters"))
    for (auto& [k, v] : j.at("parameters").items()) {
      if (!p.contains(k)) throw std::invalid_argument("model_from_json: unknown parameter " + k);
      p[k] = v;
    }
  const double L1 = p["L1"], xc = p["xc"], sigma = p["sigma"];
  const double L2 = p["L2"], w2 = p["w2"];
  const double ca0 = p["a0"], ca1 = p["a1"], cw = p["coupling_width"];
  PotentialModel m;
  const double u0 = xc / sigma;
  const double D = L1 * std::exp(u0 * u0);  // pins v1(0) = 0
  m.v1 = [=](double x) {
    const double u = (x - xc) / sigma;
    return L1 - D * std::exp(-u * u);
  };
  m.v2 = [=](double x) { return -L2 * std::tanh(x / w2); };
  m.a0 = [=](double x) { return ca0 * std::exp(-x * x / (cw * cw)); };
  m.a1 = [=](double x) { return ca1 * std::exp(-x * x / (cw * cw)); };
  m.v1_c = [=](std::complex<double> x) {
    const std::complex<double> u = (x - xc) / sigma;
    return L1 - D * std::exp(-u * u);
  };
  m.v2_c = [=](std::complex<double> x) { return -L2 * std::tanh(x / w2); };
  m.a0_c = [=](std::complex<double> x) { return ca0 * std::exp(-x * x / (cw * cw)); };
  m.a1_c = [=](std::complex<double> x) { return ca1 * std::exp(-x * x / (cw * cw)); };
  if (j.contains("domain_box")) {
    m.x_min = j["domain_box"].at(0);
    m.x_max = j["domain_box"].at(1);
  }
  m.family = family;
  m.parameters = p;
  m.closed_form = true;
  return m;
}

namespace model_detail {

inline double bracketed_root(const std::function<double(double)>& f, double a, double b) {
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(f, a, b, tol, it);
  return 0.5 * (r.first + r.second);
}

}  // namespace model_detail

inline CrossingData crossing_data(const PotentialModel& m) {
  // Bracket the left zero of v1 by scanning (x_min, 0).
  const int n = 4000;
  double a = m.x_min, b = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool found = false;
  double prev_x = a, prev_f = m.v1(a);
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * i / (n + 1.0);
    const double f = m.v1(x);
    if (prev_f > 0.0 && f <= 0.0) {
      bracket_lo = prev_x;
      bracket_hi = x;
      found = true;
      break;
    }
    prev_x = x;
    prev_f = f;
  }
  if (!found) throw std::runtime_error("crossing_data: no sign change of v1 on (x_min, 0)");
  CrossingData c;
  c.x_star = model_detail::bracketed_root(m.v1, bracket_lo, bracket_hi);
  c.tau0 = -fd_derivative(m.v1, c.x_star);
  c.tau1 = fd_derivative(m.v1, 0.0);
  c.tau2 = -fd_derivative(m.v2, 0.0);
  if (!(c.x_star < 0.0) || !(c.tau0 > 0.0) || !(c.tau1 > 0.0) || !(c.tau2 > 0.0))
    throw std::runtime_error("crossing_data: slope signs violate the crossing assumptions");
  return c;
}

inline CertificateReport validate_assumptions(const PotentialModel& m) {
  CertificateReport rep;
  rep.closed_form = m.closed_form;
  auto add = [&rep](const std::string& name, bool pass, double witness,
                    const std::string& msg) {
    rep.clauses.push_back({name, pass, witness, msg});
  };
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };

  // Crossing at the reference energy.
  add("v1(0)=0", std::abs(m.v1(0.0)) <= 1e-12, m.v1(0.0), "v1(0) = " + fmt(m.v1(0.0)));
  add("v2(0)=0", std::abs(m.v2(0.0)) <= 1e-12, m.v2(0.0), "v2(0) = " + fmt(m.v2(0.0)));

  // Left zero of v1 on (x_min, 0).
  double x_star = 0.0;
  bool have_xstar = false;
  try {
    x_star = crossing_data(m).x_star;
    have_xstar = true;
  } catch (const std::exception& e) {
    add("x* exists", false, 0.0, e.what());
  }
  if (have_xstar) add("x* exists", true, x_star, "x* = " + fmt(x_star));

  // Slope signs at the crossing points.
  if (have_xstar) {
    const double t0 = -fd_derivative(m.v1, x_star);
    const double t1 = fd_derivative(m.v1, 0.0);
    const double t2 = -fd_derivative(m.v2, 0.0);
    add("tau0>0", t0 > 0.0, t0, "-v1'(x*) = " + fmt(t0));
    add("tau1>0", t1 > 0.0, t1, "v1'(0) = " + fmt(t1));
    add("tau2>0", t2 > 0.0, t2, "-v2'(0) = " + fmt(t2));
  }

  // Sign pattern on the three subintervals, >= 200 points each.
  auto sign_check = [&](const std::string& name, double lo, double hi,
                        const std::function<bool(double)>& ok) {
    const int pts = 256;
    for (int i = 1; i < pts; ++i) {
      const double x = lo + (hi - lo) * i / pts;
      if (!ok(x)) {
        add(name, false, x, "violated at x = " + fmt(x));
        return;
      }
    }
    add(name, true, lo, "holds at " + std::to_string(pts - 1) + " points");
  };
  if (have_xstar) {
    const double pad1 = 1e-6 * (x_star - m.x_min), pad2 = 1e-6 * (-x_star);
    sign_check("v1>0, v2>0 on (x_min, x*)", m.x_min, x_star - pad1,
               [&](double x) { return m.v1(x) > 0.0 && m.v2(x) > 0.0; });
    sign_check("v1<0<v2 on (x*, 0)", x_star + pad2, -1e-9 * (-x_star),
               [&](double x) { return m.v1(x) < 0.0 && m.v2(x) > 0.0; });
  }
  sign_check("v2<0<v1 on (0, x_max)", 1e-9 * m.x_max, m.x_max,
             [&](double x) { return m.v2(x) < 0.0 && m.v1(x) > 0.0; });

  // Dissociative limit of v2 and flat tails at the box endpoints.
  add("lim v2 < 0 at +inf", m.v2(m.x_max) < 0.0, m.v2(m.x_max),
      "v2(x_max) = " + fmt(m.v2(m.x_max)));
  const double tail1 = std::max(std::abs(fd_derivative(m.v1, m.x_min)),
                                std::abs(fd_derivative(m.v1, m.x_max)));
  const double tail2 = std::max(std::abs(fd_derivative(m.v2, m.x_min)),
                                std::abs(fd_derivative(m.v2, m.x_max)));
  add("flat tails at box endpoints", tail1 <= 1e-8 && tail2 <= 1e-8, std::max(tail1, tail2),
      "max |v'| at endpoints = " + fmt(std::max(tail1, tail2)));

  // Smoothness proxy: Richardson consistency of the first three divided
  // differences at sampled points.
  auto smooth = [&](const std::function<double(double)>& f) {
    for (int i = 0; i <= 40; ++i) {
      const double x = m.x_min + (m.x_max - m.x_min) * i / 40.0;
      for (int order = 1; order <= 3; ++order) {
        auto dd = [&](double s) {
          if (order == 1) return (f(x + s) - f(x - s)) / (2 * s);
          if (order == 2) return (f(x + s) - 2 * f(x) + f(x - s)) / (s * s);
          return (f(x + 2 * s) - 2 * f(x + s) + 2 * f(x - s) - f(x - 2 * s)) / (2 * s * s * s);
        };
        const double scale = std::max(1.0, std::abs(dd(1e-3)));
        if (std::abs(dd(1e-3) - dd(5e-4)) > 1e-3 * scale) return x;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  double bad = smooth(m.v1);
  add("v1 smooth", std::isnan(bad), bad, std::isnan(bad) ? "C^3 consistency holds" : "kink");
  bad = smooth(m.v2);
  add("v2 smooth", std::isnan(bad), bad, std::isnan(bad) ? "C^3 consistency holds" : "kink");
  bad = smooth(m.a0);
  add("a0 smooth", std::isnan(bad), bad, std::isnan(bad) ? "C^3 consistency holds" : "kink");
  bad = smooth(m.a1);
  add("a1 smooth", std::isnan(bad), bad, std::isnan(bad) ? "C^3 consistency holds" : "kink");

  return rep;
}

}  // namespace predissoc
