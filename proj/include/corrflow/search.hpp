#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/flow.hpp"

namespace corrflow {

// One search coordinate: the explicit grid used by grid_search plus the
// interval refine is allowed to move in.
struct SearchAxis {
  std::vector<double> grid;
  double lo = 0.0;
  double hi = 0.0;

  static SearchAxis from_grid(std::vector<double> values) {
    if (values.empty()) throw InvalidModel("search axis has no grid points");
    SearchAxis axis;
    axis.lo = values.front();
    axis.hi = values.front();
    for (double v : values) {
      axis.lo = std::min(axis.lo, v);
      axis.hi = std::max(axis.hi, v);
    }
    axis.grid = std::move(values);
    return axis;
  }
};

// Search box for anomalous flow: correlation coefficient as a fraction of
// the feasible maximum times a phase, exchange coupling, and evolution time.
struct SearchSpec {
  CompositeModel composite;
  ThermalParams params_a;
  ThermalParams params_b;
  CorrelationPattern pattern_shape;  // unit coefficients; direction only
  SearchAxis alpha_fraction;
  SearchAxis phase;
  SearchAxis coupling;
  SearchAxis time;
  std::uint64_t seed = 0;  // reserved for jittered restarts; hashed with the search inputs

  SearchSpec(CompositeModel composite_, ThermalParams a, ThermalParams b,
             CorrelationPattern shape, SearchAxis alpha_fraction_, SearchAxis phase_,
             SearchAxis coupling_, SearchAxis time_, std::uint64_t seed_ = 0)
      : composite(std::move(composite_)),
        params_a(std::move(a)),
        params_b(std::move(b)),
        pattern_shape(std::move(shape)),
        alpha_fraction(std::move(alpha_fraction_)),
        phase(std::move(phase_)),
        coupling(std::move(coupling_)),
        time(std::move(time_)),
        seed(seed_) {
    if (std::abs(params_a.beta - params_b.beta) > detail::kEqualParamTol)
      throw UnequalTemperatures("anomalous-flow search requires equal beta");
    if (std::abs(params_a.mu - params_b.mu) <= detail::kEqualParamTol)
      throw DegenerateChemicalPotentials("search requires distinct chemical potentials");
    for (double f : alpha_fraction.grid)
      if (f < -1.0 || f > 1.0)
        throw InvalidModel("alpha_fraction grid must lie in [-1, 1]");
    for (double g : coupling.grid)
      if (!(g > 0.0)) throw InvalidModel("coupling grid must be positive");
    for (double t : time.grid)
      if (t < 0.0) throw InvalidModel("time grid must be non-negative");
  }
};

struct SearchConfig {
  double alpha_fraction = 0.0;
  double phase = 0.0;
  double coupling = 0.0;
  double time = 0.0;
  Complex alpha{0.0, 0.0};  // realized coefficient: fraction * feasible max * e^{i phase}
};

struct SearchResult {
  SearchConfig best_config;
  FlowReport report;
  double objective = 0.0;  // dN_A toward the higher-mu side
  bool chain_verified = false;
};

namespace detail {

inline constexpr double kSearchPi = 3.14159265358979323846;

class SearchEvaluator {
 public:
  explicit SearchEvaluator(const SearchSpec& spec)
      : spec_(spec),
        params_a_(spec.params_a),
        params_b_(spec.params_b),
        rho_a_(thermal_state(spec.composite.sub_a(), params_a_)),
        rho_b_(thermal_state(spec.composite.sub_b(), params_b_)),
        h_bare_(spec.composite.bare_hamiltonian_total()),
        mu_sign_(spec.params_a.mu > spec.params_b.mu ? 1.0 : -1.0) {}

  // Feasibility ceiling for the unit pattern rotated to the given phase.
  double feasible_max(double eff_phase) const {
    if (spec_.pattern_shape.is_empty()) return 0.0;
    const Complex rot = std::polar(1.0, eff_phase);
    const CorrelationPattern direction = spec_.pattern_shape.scaled(rot, spec_.composite);
    return max_correlation_coefficient(rho_a_, rho_b_, direction);
  }

  SearchConfig realize(double fraction, double phase, double g, double t) const {
    SearchConfig c;
    c.alpha_fraction = fraction;
    c.phase = phase;
    c.coupling = g;
    c.time = t;
    if (spec_.pattern_shape.is_empty() || fraction == 0.0) return c;
    const double eff_phase = fraction < 0.0 ? phase + kSearchPi : phase;
    const double s_max = feasible_max(eff_phase);
    c.alpha = std::polar(std::abs(fraction) * s_max, eff_phase);
    return c;
  }

  SearchResult evaluate(const SearchConfig& config) const {
    const CorrelationPattern pattern =
        spec_.pattern_shape.is_empty() || config.alpha == Complex(0.0, 0.0)
            ? CorrelationPattern::empty(spec_.composite)
            : spec_.pattern_shape.scaled(config.alpha, spec_.composite);
    const DensityOperator rho0 = correlated_join(rho_a_, rho_b_, pattern, spec_.composite);
    const OperatorMatrix h_total = OperatorMatrix(
        h_bare_.mat() + exchange_interaction(spec_.composite, config.coupling).op.mat());
    const DensityOperator rho_t = evolve(rho0, h_total, config.time);
    SearchResult r;
    r.best_config = config;
    r.report = flow_quantities(rho0, rho_t, spec_.composite, spec_.params_a, spec_.params_b);
    r.objective = r.report.delta_n_a * mu_sign_;
    r.chain_verified = verify_chain(r.report);
    return r;
  }

  double mu_sign() const { return mu_sign_; }

  // 0 > -beta (mu_A - mu_B) dN_A >= dI_AB, required whenever the report is
  // anomalous.
  bool verify_chain(const FlowReport& report) const {
    if (report.classification != FlowClass::anomalous) return false;
    const double middle =
        -spec_.params_a.beta * (spec_.params_a.mu - spec_.params_b.mu) * report.delta_n_a;
    return middle < 0.0 && middle >= report.delta_i_ab - 1e-9;
  }

 private:
  const SearchSpec& spec_;
  ThermalParams params_a_;
  ThermalParams params_b_;
  DensityOperator rho_a_;
  DensityOperator rho_b_;
  OperatorMatrix h_bare_;
  double mu_sign_;
};

}  // namespace detail

// Exhaustive Cartesian scan in lexicographic axis order (fraction, phase,
// coupling, time); ties keep the earliest grid index, so the result is a
// pure function of the spec.
inline SearchResult grid_search(const SearchSpec& spec) {
  const detail::SearchEvaluator eval(spec);

  if (!spec.pattern_shape.is_empty()) {
    bool any_feasible = false;
    for (double phase : spec.phase.grid) {
      if (eval.feasible_max(phase) > 0.0 ||
          eval.feasible_max(phase + detail::kSearchPi) > 0.0) {
        any_feasible = true;
        break;
      }
    }
    if (!any_feasible)
      throw InfeasiblePattern("no phase admits a nonzero correlation coefficient");
  }

  bool have_best = false;
  SearchResult best;
  for (double fraction : spec.alpha_fraction.grid)
    for (double phase : spec.phase.grid)
      for (double g : spec.coupling.grid)
        for (double t : spec.time.grid) {
          const SearchResult candidate = eval.evaluate(eval.realize(fraction, phase, g, t));
          if (!have_best || candidate.objective > best.objective) {
            best = candidate;
            have_best = true;
          }
        }
  if (!have_best) throw InvalidModel("search grid is empty");
  return best;
}

namespace detail {

// Golden-section maximization on [lo, hi] to interval tolerance 1e-8.
template <typename F>
double golden_section_max(F&& f, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  constexpr double tolerance = 1e-8;
  if (hi - lo <= tolerance) return 0.5 * (lo + hi);
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tolerance) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Cyclic coordinate descent from a grid optimum: golden-section line search
// per coordinate over the axis interval, accepting only strict improvements,
// at most 50 cycles.  The objective never decreases below the start.
inline SearchResult refine(const SearchSpec& spec, const SearchConfig& start) {
  const detail::SearchEvaluator eval(spec);

  double coords[4] = {start.alpha_fraction, start.phase, start.coupling, start.time};
  const SearchAxis* axes[4] = {&spec.alpha_fraction, &spec.phase, &spec.coupling, &spec.time};

  const auto objective_at = [&](const double c[4]) {
    return eval.evaluate(eval.realize(c[0], c[1], c[2], c[3])).objective;
  };

  double best_objective = objective_at(coords);
  for (int cycle = 0; cycle < 50; ++cycle) {
    bool improved = false;
    for (int axis = 0; axis < 4; ++axis) {
      const double lo = axes[axis]->lo;
      const double hi = axes[axis]->hi;
      if (!(hi > lo)) continue;
      double trial[4] = {coords[0], coords[1], coords[2], coords[3]};
      const double candidate = detail::golden_section_max(
          [&](double v) {
            trial[axis] = v;
            return objective_at(trial);
          },
          lo, hi);
      trial[axis] = candidate;
      const double value = objective_at(trial);
      if (value > best_objective) {
        coords[axis] = candidate;
        best_objective = value;
        improved = true;
      }
    }
    if (!improved) break;
  }

  return eval.evaluate(eval.realize(coords[0], coords[1], coords[2], coords[3]));
}

}  // namespace corrflow
