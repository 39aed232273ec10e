#include <doctest.h>

#include <cmath>
#include <predissoc/model.hpp>

using namespace predissoc;

TEST_CASE("default model satisfies all assumption clauses") {
  const PotentialModel m = default_model();
  CHECK(m.v2(0.0) == 0.0);
  CHECK(std::abs(m.v1(0.0)) <= 1e-12);
  const CertificateReport rep = validate_assumptions(m);
  INFO(rep.summary());
  CHECK(rep.all_pass());
  CHECK(rep.closed_form);
  // sign pattern on (x*, 0), 100 interior points
  const double x_star = crossing_data(m).x_star;
  for (int i = 1; i <= 100; ++i) {
    const double x = x_star + (0.0 - x_star) * i / 101.0;
    CHECK(m.v1(x) < 0.0);
    CHECK(m.v2(x) > 0.0);
  }
}

TEST_CASE("constructed violations are reported by clause") {
  PotentialModel m = default_model();
  auto v2 = m.v2;
  m.v2 = [v2](double x) { return v2(x) + 1.0; };
  const CertificateReport rep = validate_assumptions(m);
  bool hit = false;
  for (const auto& c : rep.clauses)
    if (c.name == "v2(0)=0") {
      hit = true;
      CHECK(!c.pass);
    }
  CHECK(hit);

  PotentialModel m2 = default_model();
  m2.v1 = [](double) { return 1.0; };
  const CertificateReport rep2 = validate_assumptions(m2);
  CHECK(!rep2.all_pass());
  bool missing_xstar = false;
  for (const auto& c : rep2.clauses)
    if (c.name == "x* exists" && !c.pass) missing_xstar = true;
  CHECK(missing_xstar);
  CHECK_THROWS_AS(crossing_data(m2), std::runtime_error);
}

TEST_CASE("crossing data: linear slopes recovered exactly") {
  PotentialModel m = default_model();
  const double t1 = 0.73, t2 = 0.41;
  m.v1 = [t1](double x) { return x < -1.0 ? -t1 * (x + 2.0) : t1 * x; };
  m.v2 = [t2](double x) { return -t2 * x; };
  const CrossingData c = crossing_data(m);
  CHECK(c.tau1 == doctest::Approx(t1).epsilon(1e-8));
  CHECK(c.tau2 == doctest::Approx(t2).epsilon(1e-8));
  CHECK(c.x_star == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("default model crossing data matches the analytic family") {
  const PotentialModel m = default_model();
  const CrossingData c = crossing_data(m);
  // v1 = L1 - L1 e * exp(-(x+1)^2): zeros at -2 and 0, slopes +-2 L1.
  CHECK(c.x_star == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(std::abs(m.v1(c.x_star)) <= 1e-10);
  CHECK(c.tau0 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(c.tau1 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(c.tau2 == doctest::Approx(0.5).epsilon(1e-8));

  // independent oracle for x*: plain bisection on the stored analytic v1
  double lo = -3.0, hi = -1.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (m.v1(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  CHECK(c.x_star == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
}

TEST_CASE("json round trip and parameter overrides") {
  const nlohmann::json j = {{"family", "gaussian-well-tanh-step"},
                            {"parameters", {{"L2", 0.25}, {"w2", 2.0}}},
                            {"domain_box", {-10.0, 15.0}}};
  const PotentialModel m = model_from_json(j);
  CHECK(m.x_min == -10.0);
  CHECK(m.x_max == 15.0);
  CHECK(std::abs(m.v1(0.0)) <= 1e-12);
  const CrossingData c = crossing_data(m);
  CHECK(c.tau2 == doctest::Approx(0.25 / 2.0).epsilon(1e-8));

  CHECK_THROWS_AS(model_from_json({{"family", "unknown"}}), std::invalid_argument);
  CHECK_THROWS_AS(model_from_json({{"parameters", {{"bogus", 1.0}}}}), std::invalid_argument);
}
