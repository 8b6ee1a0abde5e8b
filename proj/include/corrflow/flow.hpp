#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/dynamics.hpp"
#include "corrflow/states.hpp"

namespace corrflow {

enum class FlowClass { conventional, anomalous, reversible, indeterminate };

inline const char* to_string(FlowClass c) {
  switch (c) {
    case FlowClass::conventional: return "conventional";
    case FlowClass::anomalous: return "anomalous";
    case FlowClass::reversible: return "reversible";
    default: return "indeterminate";
  }
}

// All exchange quantities between two times, the relative entropies computed
// directly, and the inequality slacks computed from the thermodynamic side.
// slack_a and rel_ent_a are two routes to the same number; keeping both makes
// the identity checkable downstream.
struct FlowReport {
  double delta_e_a = 0.0, delta_e_b = 0.0;
  double delta_n_a = 0.0, delta_n_b = 0.0;
  double delta_s_a = 0.0, delta_s_b = 0.0;
  double delta_i_ab = 0.0;
  double rel_ent_a = 0.0, rel_ent_b = 0.0;   // S(rho_f || rho_i) per side
  double slack_a = 0.0, slack_b = 0.0;       // beta (dE - mu dN) - dS per side
  double slack_combined = 0.0;               // combined inequality LHS - dI
  FlowClass classification = FlowClass::indeterminate;
  double beta_a = 0.0, mu_a = 0.0;
  double beta_b = 0.0, mu_b = 0.0;
};

namespace detail {

constexpr double kEqualParamTol = 1e-12;
constexpr double kFlowThreshold = 1e-10;  // particle numbers are O(1) here

inline FlowClass classify(double delta_n_a, double delta_i, double beta_a, double beta_b,
                          double mu_a, double mu_b) {
  const bool quiet = std::abs(delta_n_a) <= kFlowThreshold;
  if (quiet && std::abs(delta_i) <= kFlowThreshold) return FlowClass::reversible;
  if (std::abs(beta_a - beta_b) > kEqualParamTol || std::abs(mu_a - mu_b) <= kEqualParamTol)
    return FlowClass::indeterminate;
  if (quiet) return FlowClass::indeterminate;
  const bool toward_higher_mu = (delta_n_a > 0.0) == (mu_a > mu_b);
  return toward_higher_mu ? FlowClass::anomalous : FlowClass::conventional;
}

}  // namespace detail

struct FlowTolerances {
  double thermal_initial = 1e-8;  // trace distance of initial marginals to their Gibbs states
};

// Exchange quantities between rho_i and rho_f.  Enforces the locally-thermal
// initial condition rather than trusting caller metadata: every inequality
// computed here is meaningless without it.
inline FlowReport flow_quantities(const DensityOperator& rho_i, const DensityOperator& rho_f,
                                  const CompositeModel& composite, const ThermalParams& params_a,
                                  const ThermalParams& params_b,
                                  const FlowTolerances& tols = {}) {
  if (rho_i.dim() != composite.dim() || rho_f.dim() != composite.dim())
    throw DimensionMismatch("flow_quantities: states do not match the composite dimension");

  const DensityOperator a_i = partial_trace(rho_i, composite, Side::A);
  const DensityOperator b_i = partial_trace(rho_i, composite, Side::B);
  const DensityOperator a_f = partial_trace(rho_f, composite, Side::A);
  const DensityOperator b_f = partial_trace(rho_f, composite, Side::B);

  ThermalParams ref_a = params_a;
  ThermalParams ref_b = params_b;
  const DensityOperator gibbs_a = thermal_state(composite.sub_a(), ref_a);
  const DensityOperator gibbs_b = thermal_state(composite.sub_b(), ref_b);
  const double dist_a = trace_distance(a_i, gibbs_a);
  const double dist_b = trace_distance(b_i, gibbs_b);
  if (dist_a > tols.thermal_initial || dist_b > tols.thermal_initial)
    throw NotThermalInitial("initial marginals are not the given Gibbs states (trace distances " +
                            std::to_string(dist_a) + ", " + std::to_string(dist_b) + ")");

  const OperatorMatrix h_a = bare_hamiltonian(composite.sub_a());
  const OperatorMatrix h_b = bare_hamiltonian(composite.sub_b());
  const OperatorMatrix n_a = number_operator(composite.sub_a());
  const OperatorMatrix n_b = number_operator(composite.sub_b());

  FlowReport r;
  r.beta_a = params_a.beta;
  r.mu_a = params_a.mu;
  r.beta_b = params_b.beta;
  r.mu_b = params_b.mu;
  r.delta_e_a = expectation(a_f, h_a) - expectation(a_i, h_a);
  r.delta_e_b = expectation(b_f, h_b) - expectation(b_i, h_b);
  r.delta_n_a = expectation(a_f, n_a) - expectation(a_i, n_a);
  r.delta_n_b = expectation(b_f, n_b) - expectation(b_i, n_b);
  r.delta_s_a = von_neumann_entropy(a_f) - von_neumann_entropy(a_i);
  r.delta_s_b = von_neumann_entropy(b_f) - von_neumann_entropy(b_i);
  r.delta_i_ab = mutual_information(rho_f, composite) - mutual_information(rho_i, composite);

  r.rel_ent_a = relative_entropy(a_f, a_i);
  r.rel_ent_b = relative_entropy(b_f, b_i);
  r.slack_a = params_a.beta * (r.delta_e_a - params_a.mu * r.delta_n_a) - r.delta_s_a;
  r.slack_b = params_b.beta * (r.delta_e_b - params_b.mu * r.delta_n_b) - r.delta_s_b;
  r.slack_combined = (params_a.beta - params_b.beta) * r.delta_e_a -
                     (params_a.beta * params_a.mu - params_b.beta * params_b.mu) * r.delta_n_a -
                     r.delta_i_ab;
  r.classification = detail::classify(r.delta_n_a, r.delta_i_ab, params_a.beta, params_b.beta,
                                      params_a.mu, params_b.mu);
  return r;
}

// beta (dE - mu dN) - dS of the requested side; equals the relative entropy
// of that side's final state to its initial thermal state.
inline double check_subsystem_inequality(const FlowReport& report, Side side) {
  if (side == Side::A)
    return report.beta_a * (report.delta_e_a - report.mu_a * report.delta_n_a) - report.delta_s_a;
  return report.beta_b * (report.delta_e_b - report.mu_b * report.delta_n_b) - report.delta_s_b;
}

// (beta_A - beta_B) dE_A - (beta_A mu_A - beta_B mu_B) dN_A - dI_AB.
// At equal beta the driving term reduces to -beta (mu_A - mu_B) dN_A, at
// equal mu to (beta_A - beta_B)(dE_A - mu dN_A).
inline double check_combined_inequality(const FlowReport& report, const ThermalParams& params_a,
                                        const ThermalParams& params_b) {
  const double lhs = (params_a.beta - params_b.beta) * report.delta_e_a -
                     (params_a.beta * params_a.mu - params_b.beta * params_b.mu) *
                         report.delta_n_a;
  return lhs - report.delta_i_ab;
}

// Flow direction at equal temperature.  Refuses mixed driving (unequal beta
// and unequal mu at once): no convention for it exists here.
inline FlowClass classify_flow(const FlowReport& report, const ThermalParams& params_a,
                               const ThermalParams& params_b) {
  if (std::abs(params_a.beta - params_b.beta) > detail::kEqualParamTol)
    throw UnequalTemperatures("classification is defined at equal beta only, got " +
                              std::to_string(params_a.beta) + " vs " +
                              std::to_string(params_b.beta));
  if (std::abs(params_a.mu - params_b.mu) <= detail::kEqualParamTol)
    throw DegenerateChemicalPotentials("chemical potentials coincide; no flow direction");
  return detail::classify(report.delta_n_a, report.delta_i_ab, params_a.beta, params_b.beta,
                          params_a.mu, params_b.mu);
}

namespace detail {

// Diagonal grand-canonical family over one subsystem's levels, in natural
// coordinates theta = (-beta, beta mu): weights exp(theta1 e_k + theta2 n_k).
struct GibbsFamily {
  RealVector energies;
  RealVector occupations;

  explicit GibbsFamily(const SubsystemModel& model)
      : energies(model.energies()), occupations(model.occupations()) {}

  struct Point {
    double log_z = 0.0;
    double energy = 0.0;
    double number = 0.0;
    double entropy = 0.0;
    RealVector populations;
  };

  Point at(double theta1, double theta2) const {
    const Eigen::Index d = energies.size();
    RealVector a(d);
    for (Eigen::Index k = 0; k < d; ++k) a[k] = theta1 * energies[k] + theta2 * occupations[k];
    const double a_max = a.maxCoeff();
    RealVector w = (a.array() - a_max).exp();
    const double z = w.sum();
    Point p;
    p.log_z = a_max + std::log(z);
    p.populations = w / z;
    p.energy = p.populations.dot(energies);
    p.number = p.populations.dot(occupations);
    for (Eigen::Index k = 0; k < d; ++k)
      if (p.populations[k] > tol::kEigenFloor)
        p.entropy -= p.populations[k] * std::log(p.populations[k]);
    return p;
  }

  double cov(const RealVector& p, const RealVector& x, const RealVector& y) const {
    return p.dot((x.array() * y.array()).matrix()) - p.dot(x) * p.dot(y);
  }
};

// Strict membership of (energy, number) in the moment set of the family.
// A two-point or otherwise collinear spectrum has a segment for its moment
// set; membership then means the relative interior of that segment.
inline void check_inside_moment_hull(const SubsystemModel& model, double energy, double number) {
  const RealVector es = model.energies();
  const RealVector ns = model.occupations();
  const Eigen::Index d = es.size();

  double scale = 1.0;
  for (Eigen::Index k = 0; k < d; ++k)
    scale = std::max({scale, std::abs(es[k]), std::abs(ns[k])});
  const auto fail = [&](const std::string& why) {
    throw OutOfHull("target (E=" + std::to_string(energy) + ", N=" + std::to_string(number) +
                    ") for subsystem '" + model.label() + "': " + why);
  };

  // Directions from the first point decide whether the spectrum is collinear.
  Eigen::Index anchor2 = -1;
  for (Eigen::Index k = 1; k < d; ++k) {
    const double cross = (es[k] - es[0]) * (ns[1] - ns[0]) - (ns[k] - ns[0]) * (es[1] - es[0]);
    if (std::abs(cross) > 1e-12 * scale * scale) {
      anchor2 = k;
      break;
    }
  }

  if (anchor2 < 0) {
    // Collinear spectrum: moment set is a segment in the (E, N) plane.
    const double ux = es[d - 1] - es[0], uy = ns[d - 1] - ns[0];
    const double len = std::hypot(ux, uy);
    const double cross = (energy - es[0]) * uy - (number - ns[0]) * ux;
    if (std::abs(cross) / len > 1e-11 * scale)
      fail("moment set is a line segment and the target lies off it");
    const double t = ((energy - es[0]) * ux + (number - ns[0]) * uy) / (len * len);
    double t_lo = 1.0, t_hi = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double tk = ((es[k] - es[0]) * ux + (ns[k] - ns[0]) * uy) / (len * len);
      t_lo = std::min(t_lo, tk);
      t_hi = std::max(t_hi, tk);
    }
    if (t <= t_lo + 1e-12 || t >= t_hi - 1e-12)
      fail("target is outside the open segment of reachable moments");
    return;
  }

  // 2D hull via monotone chain; require the target strictly inside.
  std::vector<std::pair<double, double>> pts(d);
  for (Eigen::Index k = 0; k < d; ++k) pts[k] = {es[k], ns[k]};
  std::sort(pts.begin(), pts.end());
  const auto cross3 = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                         const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross3(hull[hull.size() - 2], hull.back(), p) <= 0.0)
      hull.pop_back();
    hull.push_back(p);
  }
  const std::size_t lower = hull.size() + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (hull.size() >= lower && cross3(hull[hull.size() - 2], hull.back(), *it) <= 0.0)
      hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();

  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& p = hull[i];
    const auto& q = hull[(i + 1) % hull.size()];
    const double edge = std::hypot(q.first - p.first, q.second - p.second);
    const double c = cross3(p, q, {energy, number});
    if (c / edge < 1e-12 * scale) fail("target is on or outside the moment hull boundary");
  }
}

}  // namespace detail

namespace detail {

// Maximum-entropy distribution with the requested <H> and <N>, located by
// maximizing the concave dual G(theta) = theta . target - ln Z(theta) over
// the full natural-parameter plane theta = (-beta, beta mu).  Finite-level
// systems legitimately reach moment targets on the inverted-population side,
// where theta1 > 0; nothing restricts the sign here.  Deterministic start at
// (beta, mu) = (1, 0).
struct MomentSolution {
  double theta1 = 0.0;
  double theta2 = 0.0;
  GibbsFamily::Point point;
};

inline MomentSolution solve_moment_constraints(const GibbsFamily& family, double energy,
                                               double particles, const std::string& label) {
  constexpr double kMomentTol = 1e-10;
  constexpr int kMaxIterations = 200;

  Eigen::Vector2d theta(-1.0, 0.0);
  double lambda = 1e-3;
  int iterations = 0;

  const auto dual = [&](const Eigen::Vector2d& th, const GibbsFamily::Point& pt) {
    return th[0] * energy + th[1] * particles - pt.log_z;
  };

  GibbsFamily::Point pt = family.at(theta[0], theta[1]);
  while (iterations < kMaxIterations) {
    ++iterations;
    const Eigen::Vector2d grad(energy - pt.energy, particles - pt.number);
    const double res = grad.cwiseAbs().maxCoeff();
    if (res <= kMomentTol) return MomentSolution{theta[0], theta[1], pt};

    Eigen::Matrix2d cov;
    cov << family.cov(pt.populations, family.energies, family.energies),
        family.cov(pt.populations, family.energies, family.occupations),
        family.cov(pt.populations, family.energies, family.occupations),
        family.cov(pt.populations, family.occupations, family.occupations);

    if (res <= 1e-6) {
      // Endgame: dual improvements drop below double resolution here, so
      // switch to Newton on the moment equations, damped on the residual.
      // The minimum-norm solve also covers collinear (rank-1) spectra.
      const Eigen::Vector2d step =
          cov.completeOrthogonalDecomposition().solve(grad);
      double damp = 1.0;
      for (int tries = 0; tries < 40; ++tries) {
        const auto trial = family.at(theta[0] + damp * step[0], theta[1] + damp * step[1]);
        if (std::max(std::abs(energy - trial.energy), std::abs(particles - trial.number)) < res)
          break;
        damp *= 0.5;
      }
      theta += damp * step;
      pt = family.at(theta[0], theta[1]);
      continue;
    }

    // Levenberg-Marquardt ascent step on the dual.
    const double dual0 = dual(theta, pt);
    bool accepted = false;
    while (iterations < kMaxIterations) {
      const Eigen::Matrix2d damped = cov + lambda * Eigen::Matrix2d::Identity();
      const double det = damped.determinant();
      if (det <= 0.0 || !std::isfinite(det)) {
        lambda *= 10.0;
        ++iterations;
        continue;
      }
      const Eigen::Vector2d step = damped.inverse() * grad;
      const Eigen::Vector2d trial_theta = theta + step;
      const GibbsFamily::Point trial = family.at(trial_theta[0], trial_theta[1]);
      if (dual(trial_theta, trial) > dual0) {
        theta = trial_theta;
        pt = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
      ++iterations;
      if (lambda > 1e18) break;
    }
    if (!accepted)
      throw NoConvergence("moment inversion stalled after " + std::to_string(iterations) +
                          " iterations for subsystem '" + label + "'");
  }
  throw NoConvergence("moment inversion exceeded 200 iterations for subsystem '" + label +
                      "'");
}

}  // namespace detail

// Inverse of the Gibbs moment map: find (beta, mu) whose grand-canonical
// state reproduces <H> = energy and <N> = particles to 1e-10.  Targets that
// only an inverted-population (beta <= 0) state can reach are outside the
// positive-temperature Gibbs family and are reported as OutOfHull.
inline ThermalParams gibbs_params_from(const SubsystemModel& model, double energy,
                                       double particles) {
  detail::check_inside_moment_hull(model, energy, particles);
  const detail::GibbsFamily family(model);
  const detail::MomentSolution sol =
      detail::solve_moment_constraints(family, energy, particles, model.label());
  const double beta = -sol.theta1;
  if (!(beta > 0.0))
    throw OutOfHull("target (E=" + std::to_string(energy) + ", N=" + std::to_string(particles) +
                    ") for subsystem '" + model.label() +
                    "' needs a population-inverted state (beta = " + std::to_string(beta) +
                    "), outside the positive-temperature Gibbs family");
  ThermalParams out(beta, sol.theta2 / beta);
  out.log_partition = sol.point.log_z;
  out.grand_potential = -sol.point.log_z / beta;
  out.reference = model.label();
  return out;
}

// <H>, <N> and S of the subsystem's Gibbs state at the given parameters.
struct SubsystemMoments {
  double energy = 0.0;
  double number = 0.0;
  double entropy = 0.0;
};

inline SubsystemMoments subsystem_moments(const SubsystemModel& model,
                                          const ThermalParams& params) {
  const auto pt = detail::GibbsFamily(model).at(-params.beta, params.beta * params.mu);
  return SubsystemMoments{pt.energy, pt.number, pt.entropy};
}

namespace detail {

// Thermodynamic entropy surface S(E, N): the entropy of the maximum-entropy
// distribution with those moments.  Finite-difference displacements can fall
// on the inverted-population side of the family even when the base point has
// beta > 0, so this goes through the unrestricted solver rather than
// gibbs_params_from.
inline double entropy_at_moments(const SubsystemModel& model, double energy, double number) {
  check_inside_moment_hull(model, energy, number);
  const GibbsFamily family(model);
  return solve_moment_constraints(family, energy, number, model.label()).point.entropy;
}

}  // namespace detail

struct EntropyDerivatives {
  double ds_de = 0.0;  // (dS/dE) at constant N; equals beta on the Gibbs family
  double ds_dn = 0.0;  // (dS/dN) at constant E; equals -beta mu
};

// Central finite differences of S along the Gibbs family at constant N
// (resp. constant E), step 1e-4 with one Richardson extrapolation.
inline EntropyDerivatives entropy_derivatives(const SubsystemModel& model,
                                              const ThermalParams& params) {
  const SubsystemMoments base = subsystem_moments(model, params);
  constexpr double h = 1e-4;

  const auto central = [&](bool vary_energy, double step) {
    const double de = vary_energy ? step : 0.0;
    const double dn = vary_energy ? 0.0 : step;
    const double plus = detail::entropy_at_moments(model, base.energy + de, base.number + dn);
    const double minus = detail::entropy_at_moments(model, base.energy - de, base.number - dn);
    return (plus - minus) / (2.0 * step);
  };

  const auto richardson = [&](bool vary_energy) {
    const double coarse = central(vary_energy, h);
    const double fine = central(vary_energy, h / 2.0);
    return (4.0 * fine - coarse) / 3.0;
  };

  return EntropyDerivatives{richardson(true), richardson(false)};
}

struct NearEqResult {
  double delta_i_exact = 0.0;
  double delta_i_first_order = 0.0;
  double residual = 0.0;
};

// Entropy-side bookkeeping of a small transfer (dn, de) from B to A, with
// both subsystems kept on their Gibbs families, against the first-order
// expression -(beta_A mu_A - beta_B mu_B) dn + (beta_A - beta_B) de.
inline NearEqResult near_equilibrium_delta_i(const SubsystemModel& model_a,
                                             const SubsystemModel& model_b,
                                             const ThermalParams& params_a,
                                             const ThermalParams& params_b, double dn,
                                             double de) {
  const SubsystemMoments a0 = subsystem_moments(model_a, params_a);
  const SubsystemMoments b0 = subsystem_moments(model_b, params_b);

  NearEqResult r;
  if (dn == 0.0 && de == 0.0) return r;
  const double s_a = detail::entropy_at_moments(model_a, a0.energy + de, a0.number + dn);
  const double s_b = detail::entropy_at_moments(model_b, b0.energy - de, b0.number - dn);
  r.delta_i_exact = (s_a - a0.entropy) + (s_b - b0.entropy);
  r.delta_i_first_order =
      -(params_a.beta * params_a.mu - params_b.beta * params_b.mu) * dn +
      (params_a.beta - params_b.beta) * de;
  r.residual = std::abs(r.delta_i_exact - r.delta_i_first_order);
  return r;
}

}  // namespace corrflow
