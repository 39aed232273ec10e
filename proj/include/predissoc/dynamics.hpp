#pragma once
// Exact time evolution of the filtered well state on the truncated box and its
// comparison against the resonance-expansion predictor: the spectral cutoff g,
// the filtered state g(H)phi, the survival amplitude A(t) = <e^{-itH}g(H)phi,
// phi>, and the residual against e^{-it rho0} b + h^{2/3} q0(t, h).

#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "asym.hpp"
#include "spectral.hpp"

namespace predissoc {

// ----------------------------------------------------------- spectral cutoff
// g(lambda) = g0((lambda - lambda0)/h) with the plateau bump g0: the window
// isolating the single well level lambda0 from the rest of the spectrum
struct CutoffSpec {
  double delta0 = 0.0;
  double delta1 = 0.0;
  double lambda0 = 0.0;
  double h = 0.0;

  double g(double lambda) const { return g0_bump((lambda - lambda0) / h, delta0, delta1); }
  double support_lo() const { return lambda0 - delta1 * h; }
  double support_hi() const { return lambda0 + delta1 * h; }
};

// defaults: plateau at 0.3 pi / A'(0), support edge at 0.6 pi / A'(0); the
// admissible chain is 0 < delta0 < delta1 < pi / A'(0) (level spacing scale)
inline CutoffSpec make_cutoff(const PotentialModel& m, double h, double lambda0,
                              double plateau_frac = 0.3, double support_frac = 0.6) {
  const double unit = M_PI / action(m, 0.0).action_derivative;
  CutoffSpec s;
  s.delta0 = plateau_frac * unit;
  s.delta1 = support_frac * unit;
  s.lambda0 = lambda0;
  s.h = h;
  if (!(0.0 < s.delta0 && s.delta0 < s.delta1 && s.delta1 < unit))
    throw std::invalid_argument("make_cutoff: need 0 < delta0 < delta1 < pi/A'(0)");
  return s;
}

// the cutoff must capture exactly one level of the decoupled well operator
inline void check_single_level(const CutoffSpec& spec, const SpMat& p1) {
  const int count = eigenvalue_count_below(p1, spec.support_hi()) -
                    eigenvalue_count_below(p1, spec.support_lo());
  if (count != 1)
    throw std::runtime_error("check_single_level: cutoff support holds " +
                             std::to_string(count) + " well levels, expected exactly one");
}

// ------------------------------------------------------------ filtered state
// g(H) phi = sum_n g(E_n) <e_n, phi> e_n over a box eigendecomposition
inline Eigen::VectorXd filtered_state(const CutoffSpec& spec, const BoxEigensystem& eig,
                                      const Eigen::VectorXd& phi) {
  if (phi.size() != eig.vectors.rows())
    throw std::invalid_argument("filtered_state: state/eigensystem size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(phi.size());
  for (int n = 0; n < static_cast<int>(eig.values.size()); ++n) {
    const double gn = spec.g(eig.values[n]);
    if (gn == 0.0) continue;
    const double c = eig.vectors.col(n).dot(phi) * eig.grid.dx;
    out += gn * c * eig.vectors.col(n);
  }
  return out;
}

// ------------------------------------------- modes carrying the cutoff window
// Eigenpairs of the (theta = 0, real symmetric) coupled operator inside the
// cutoff support. Since g vanishes outside, the spectral sums over this set
// are exact, and the window holds O(1) modes regardless of h.
struct ModeSet {
  Grid grid;
  double h = 0.0;
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;  // interleaved, sum v^2 dx = 1
};

namespace dynamics_detail {

inline SpMat real_part(const SpMatC& A) {
  SpMat R(A.rows(), A.cols());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A.nonZeros());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMatC::InnerIterator it(A, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                     it.value().real());
  R.setFromTriplets(t.begin(), t.end());
  return R;
}

}  // namespace dynamics_detail

inline ModeSet modes_in_support(const PotentialModel& m, double h, const CutoffSpec& spec,
                                double dx_factor = 0.1) {
  const Discretization d = make_discretization(m, h, dx_factor);
  const OperatorSet ops = discretize(m, h, d, nullptr);
  const SpMat H = dynamics_detail::real_part(ops.hamiltonian);
  ModeSet ms;
  ms.grid = d.grid;
  ms.h = h;
  const double rt = 1.0 / std::sqrt(d.grid.dx);
  for (auto& p : eigenpairs_in_window(H, spec.support_lo(), spec.support_hi())) {
    ms.values.push_back(p.value);
    ms.vectors.push_back(p.vector * rt);
  }
  return ms;
}

// the well state on the same grid as a mode set, interleaved into channel 1
inline Eigen::VectorXd well_state_on(const PotentialModel& m, double h, const CutoffSpec& spec,
                                     const ModeSet& ms) {
  SpMat p1 = schrodinger_matrix(ms.grid, h, m.v1);
  check_single_level(spec, p1);
  const auto pairs = eigenpairs_in_window(p1, spec.support_lo(), spec.support_hi());
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(2 * ms.grid.n);
  const double rt = 1.0 / std::sqrt(ms.grid.dx);
  for (int i = 0; i < ms.grid.n; ++i) phi(2 * i) = pairs.front().vector(i) * rt;
  return phi;
}

// ------------------------------------------------------------ survival trace
struct PredictorSpec {
  std::complex<double> rho0{};
  std::complex<double> b{};
  std::optional<CorrectionTerm> correction;  // absent: predictor uses q0 = 0

  std::complex<double> operator()(double t, double h) const {
    const std::complex<double> i_unit{0.0, 1.0};
    std::complex<double> p = std::exp(-i_unit * rho0 * t) * b;
    if (correction) p += std::pow(h, 2.0 / 3.0) * (*correction)(t);
    return p;
  }
};

struct SurvivalTrace {
  std::vector<double> times;
  std::vector<std::complex<double>> amplitude;  // exact spectral sum
  std::vector<std::complex<double>> predictor;
  std::vector<std::complex<double>> residual;
  double h = 0.0;
  double horizon = 0.0;
  bool truncated = false;  // requested times beyond the horizon were dropped
  PredictorSpec model;
};

// box-reflection horizon: round trip of the fastest wave in the cutoff window
// over the open channel, 2 x_max / (2 h sqrt(E_sup - min V2)). Beyond it (and
// beyond the discrete-spectrum recurrence time just above it) the truncated
// box stops mimicking the line.
inline double reflection_horizon(const PotentialModel& m, double h, const CutoffSpec& spec) {
  double v2min = 0.0;
  for (int i = 0; i <= 256; ++i)
    v2min = std::min(v2min, m.v2(m.x_max * i / 256.0));
  const double vmax = 2.0 * h * std::sqrt(std::max(spec.support_hi() - v2min, 0.0));
  if (vmax == 0.0) throw std::invalid_argument("reflection_horizon: empty energy window");
  return 2.0 * m.x_max / vmax;
}

inline SurvivalTrace survival_amplitude(const PotentialModel& m, const CutoffSpec& spec,
                                        const ModeSet& modes, const Eigen::VectorXd& phi,
                                        std::vector<double> times, const PredictorSpec& pred) {
  SurvivalTrace tr;
  tr.h = spec.h;
  tr.model = pred;
  tr.horizon = reflection_horizon(m, spec.h, spec);

  const size_t requested = times.size();
  std::erase_if(times, [&](double t) { return std::abs(t) > tr.horizon; });
  if (times.size() < requested) {
    tr.truncated = true;
    std::cerr << "survival_amplitude: dropped " << requested - times.size()
              << " times beyond the box-reflection horizon t = " << tr.horizon << "\n";
  }

  // spectral weights g(E_n) |<e_n, phi>|^2
  std::vector<double> w(modes.values.size());
  for (size_t n = 0; n < modes.values.size(); ++n) {
    const double c = modes.vectors[n].dot(phi) * modes.grid.dx;
    w[n] = spec.g(modes.values[n]) * c * c;
  }

  const std::complex<double> i_unit{0.0, 1.0};
  tr.times = std::move(times);
  tr.amplitude.reserve(tr.times.size());
  tr.predictor.reserve(tr.times.size());
  tr.residual.reserve(tr.times.size());
  for (double t : tr.times) {
    std::complex<double> a = 0.0;
    for (size_t n = 0; n < w.size(); ++n)
      a += w[n] * std::exp(-i_unit * modes.values[n] * t);
    const std::complex<double> p = pred(t, tr.h);
    tr.amplitude.push_back(a);
    tr.predictor.push_back(p);
    tr.residual.push_back(a - p);
  }
  return tr;
}

// --------------------------------------------------------- critical time
// first time at which the algebraic correction h^{2/3} |q0(t)| overtakes the
// decaying exponential |b| e^{t Im rho0}, compared with the theoretical lower
// bound (2/3) |ln h| / |Im rho0|
struct CriticalTimeReport {
  bool crossed = false;
  double crossing_time = 0.0;  // scan upper limit when not crossed (lower bound)
  double bound = 0.0;
};

inline CriticalTimeReport critical_time_report(const SurvivalTrace& trace,
                                               std::complex<double> rho0) {
  CriticalTimeReport rep;
  const double gamma = -rho0.imag();
  rep.bound = (gamma > 0.0) ? (2.0 / 3.0) * std::abs(std::log(trace.h)) / gamma
                            : std::numeric_limits<double>::infinity();
  const double h23 = std::pow(trace.h, 2.0 / 3.0);
  const double t_max = (gamma > 0.0) ? 50.0 * rep.bound : 1e4 / trace.h;
  rep.crossing_time = t_max;
  if (!trace.model.correction) return rep;  // pure exponential: never overtaken
  for (double t = std::max(trace.h, 1e-3); t < t_max; t *= 1.001) {
    if (h23 * std::abs((*trace.model.correction)(t)) >
        std::abs(trace.model.b) * std::exp(-gamma * t)) {
      rep.crossed = true;
      rep.crossing_time = t;
      break;
    }
  }
  return rep;
}

// --------------------------------------------------------------- CSV output
inline void trace_csv(const SurvivalTrace& tr, std::ostream& os) {
  os << "t,re_amplitude,im_amplitude,abs_amplitude,re_predictor,im_predictor,abs_residual\n";
  for (size_t i = 0; i < tr.times.size(); ++i)
    os << tr.times[i] << ',' << tr.amplitude[i].real() << ',' << tr.amplitude[i].imag() << ','
       << std::abs(tr.amplitude[i]) << ',' << tr.predictor[i].real() << ','
       << tr.predictor[i].imag() << ',' << std::abs(tr.residual[i]) << '\n';
}

}  // namespace predissoc
