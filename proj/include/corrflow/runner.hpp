#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/dynamics.hpp"
#include "corrflow/flow.hpp"
#include "corrflow/io.hpp"
#include "corrflow/scenario.hpp"
#include "corrflow/search.hpp"

namespace corrflow {

// Conservation audit thresholds.  Nonfatal in CLI runs (reported as output
// comments); tests assert on them directly.  `scaled` serves the
// CORRFLOW_TOL_OVERRIDE escape hatch for exploratory parameter regimes.
struct AuditTolerances {
  double trace = 1e-12;
  double entropy_total = 1e-9;
  double number_total = 1e-10;
  double bare_energy = 1e-10;
  double thermal_initial = 1e-8;

  AuditTolerances scaled(double factor) const {
    return AuditTolerances{trace * factor, entropy_total * factor, number_total * factor,
                           bare_energy * factor, thermal_initial * factor};
  }
};

inline CompositeModel build_composite(const Scenario& sc) {
  return CompositeModel(SubsystemModel(sc.levels_a, "A"), SubsystemModel(sc.levels_b, "B"));
}

namespace detail {

inline Eigen::Index level_index(const SubsystemModel& model, int occupation,
                                const std::string& what) {
  for (Eigen::Index k = 0; k < model.dim(); ++k)
    if (model.levels()[k].occupation == occupation) return k;
  throw ParseError(what + ": subsystem '" + model.label() + "' has no level with occupation " +
                   std::to_string(occupation));
}

inline PatternTerm resolve_term(const ScenarioTerm& t, const CompositeModel& composite,
                                const std::string& what) {
  PatternTerm out;
  out.bra = composite.index(level_index(composite.sub_a(), t.bra_occ_a, what),
                            level_index(composite.sub_b(), t.bra_occ_b, what));
  out.ket = composite.index(level_index(composite.sub_a(), t.ket_occ_a, what),
                            level_index(composite.sub_b(), t.ket_occ_b, what));
  out.coefficient = t.coefficient;
  return out;
}

}  // namespace detail

inline CorrelationPattern build_pattern_shape(const Scenario& sc,
                                              const CompositeModel& composite) {
  std::vector<PatternTerm> terms;
  for (const auto& t : sc.correlation_shape) {
    PatternTerm term = detail::resolve_term(t, composite, "correlation.shape");
    term.coefficient = Complex(1.0, 0.0);
    terms.push_back(term);
  }
  return CorrelationPattern(composite, std::move(terms));
}

// The initial correlation matrix of the scenario: explicit terms as given,
// or the shape scaled to alpha_fraction of its feasibility ceiling.
inline CorrelationPattern realize_pattern(const Scenario& sc, const CompositeModel& composite,
                                          const DensityOperator& rho_a,
                                          const DensityOperator& rho_b,
                                          std::optional<double> fraction_override = {}) {
  if (!sc.correlation_terms.empty()) {
    std::vector<PatternTerm> terms;
    for (const auto& t : sc.correlation_terms)
      terms.push_back(detail::resolve_term(t, composite, "correlation.terms"));
    return CorrelationPattern(composite, std::move(terms));
  }
  if (sc.correlation_shape.empty()) return CorrelationPattern::empty(composite);

  const double fraction = fraction_override.value_or(sc.alpha_fraction);
  if (fraction == 0.0) return CorrelationPattern::empty(composite);
  const CorrelationPattern shape = build_pattern_shape(sc, composite);
  const double eff_phase =
      fraction < 0.0 ? sc.alpha_phase + detail::kSearchPi : sc.alpha_phase;
  const CorrelationPattern direction =
      shape.scaled(std::polar(1.0, eff_phase), composite);
  const double s_max = max_correlation_coefficient(rho_a, rho_b, direction);
  if (!std::isfinite(s_max))
    throw InfeasiblePattern("pattern shape is degenerate (no positivity boundary)");
  return shape.scaled(std::polar(std::abs(fraction) * s_max, eff_phase), composite);
}

inline std::vector<std::string> flow_report_header() {
  return {"dE_A", "dE_B", "dN_A", "dN_B", "dS_A", "dS_B", "dI_AB", "relent_A",
          "relent_B", "slack_A", "slack_B", "slack_combined", "classification"};
}

inline std::vector<std::string> flow_report_row(const FlowReport& r) {
  return {format_real(r.delta_e_a), format_real(r.delta_e_b), format_real(r.delta_n_a),
          format_real(r.delta_n_b), format_real(r.delta_s_a), format_real(r.delta_s_b),
          format_real(r.delta_i_ab), format_real(r.rel_ent_a), format_real(r.rel_ent_b),
          format_real(r.slack_a), format_real(r.slack_b), format_real(r.slack_combined),
          to_string(r.classification)};
}

struct RunOutput {
  ResultTable table;
  DensityOperator initial_state;
  DensityOperator final_state;
  FlowReport final_report;
  AuditDrift drift;
  bool audits_ok = true;
};

// The full run pipeline: operators -> states -> trajectory -> per-point flow
// rows, with a conservation audit summary appended as comments.
inline RunOutput run_scenario(const Scenario& sc, const AuditTolerances& tols = {}) {
  const CompositeModel composite = build_composite(sc);
  ThermalParams params_a(sc.beta_a, sc.mu_a);
  ThermalParams params_b(sc.beta_b, sc.mu_b);
  const DensityOperator rho_a = thermal_state(composite.sub_a(), params_a);
  const DensityOperator rho_b = thermal_state(composite.sub_b(), params_b);
  const CorrelationPattern pattern = realize_pattern(sc, composite, rho_a, rho_b);
  const DensityOperator rho0 = correlated_join(rho_a, rho_b, pattern, composite);

  const ExchangeOperator exchange = exchange_interaction(composite, sc.coupling);
  const OperatorMatrix h_total =
      OperatorMatrix(composite.bare_hamiltonian_total().mat() + exchange.op.mat());

  std::vector<double> grid(static_cast<std::size_t>(sc.samples));
  for (long k = 0; k < sc.samples; ++k)
    grid[k] = sc.samples == 1 ? 0.0
                              : sc.t_max * static_cast<double>(k) /
                                    static_cast<double>(sc.samples - 1);

  std::vector<TrajectoryPoint> points;
  if (sc.samples >= 2 && sc.t_max > 0.0) {
    points = trajectory(rho0, EvolutionPlan(h_total, grid), composite);
  } else {
    // Degenerate grids (single sample or t_max = 0) fall back to sampling
    // the initial state directly.
    for (double t : grid)
      points.push_back(TrajectoryPoint{t, rho0, audit_state(rho0, composite)});
  }

  const FlowTolerances flow_tols{tols.thermal_initial};
  const OperatorMatrix h_a = bare_hamiltonian(composite.sub_a());
  const OperatorMatrix h_b = bare_hamiltonian(composite.sub_b());
  const OperatorMatrix n_a = number_operator(composite.sub_a());
  const OperatorMatrix n_b = number_operator(composite.sub_b());

  RunOutput out;
  out.table.header = {"time", "E_A", "E_B", "N_A", "N_B", "S_A", "S_B", "S_AB",
                      "I_AB", "dN_A", "dE_A", "dI_AB", "relent_A", "relent_B",
                      "slack_combined", "classification"};
  for (const auto& point : points) {
    const DensityOperator ra = partial_trace(point.state, composite, Side::A);
    const DensityOperator rb = partial_trace(point.state, composite, Side::B);
    const FlowReport report =
        flow_quantities(rho0, point.state, composite, params_a, params_b, flow_tols);
    out.table.rows.push_back(
        {format_real(point.time), format_real(expectation(ra, h_a)),
         format_real(expectation(rb, h_b)), format_real(expectation(ra, n_a)),
         format_real(expectation(rb, n_b)), format_real(von_neumann_entropy(ra)),
         format_real(von_neumann_entropy(rb)), format_real(point.audit.entropy_total),
         format_real(mutual_information(point.state, composite)), format_real(report.delta_n_a),
         format_real(report.delta_e_a), format_real(report.delta_i_ab),
         format_real(report.rel_ent_a), format_real(report.rel_ent_b),
         format_real(report.slack_combined), to_string(report.classification)});
    out.final_report = report;
  }

  out.initial_state = rho0;
  out.final_state = points.back().state;
  out.drift = audit_drift(points);
  out.audits_ok = out.drift.trace <= tols.trace &&
                  out.drift.entropy_total <= tols.entropy_total &&
                  out.drift.number_total <= tols.number_total &&
                  out.drift.bare_energy <= tols.bare_energy;

  out.table.comments.push_back(std::string(kToolVersion));
  out.table.comments.push_back("scenario hash: fnv1a64 " + hex64(fnv1a64(sc.raw_text)));
  if (exchange.degenerate_none())
    out.table.comments.push_back(
        "warning: DegenerateNone - no energy-degenerate exchange pair; interaction is zero");
  out.table.comments.push_back(
      "audit max drift: trace=" + format_real(out.drift.trace) +
      " S_AB=" + format_real(out.drift.entropy_total) +
      " N_tot=" + format_real(out.drift.number_total) +
      " E_bare=" + format_real(out.drift.bare_energy) +
      (out.audits_ok ? " (within tolerance)" : " (EXCEEDS tolerance)"));
  return out;
}

// One row per Cartesian grid point, axes in canonical order; failed points
// keep their row with the violated invariant in the status column.
inline ResultTable sweep_scenario(const Scenario& sc, const AuditTolerances& tols = {}) {
  ResultTable table;
  table.comments.push_back(std::string(kToolVersion));
  table.comments.push_back("scenario hash: fnv1a64 " + hex64(fnv1a64(sc.raw_text)));

  table.header.clear();
  for (const auto& axis : sc.sweep_axes) table.header.push_back(axis.name);
  for (const auto& column : flow_report_header()) table.header.push_back(column);
  table.header.push_back("status");

  std::vector<std::size_t> index(sc.sweep_axes.size(), 0);
  const FlowTolerances flow_tols{tols.thermal_initial};

  while (true) {
    Scenario point = sc;
    std::vector<std::string> row;
    std::optional<double> fraction_override;
    double time_point = sc.t_max;
    for (std::size_t a = 0; a < sc.sweep_axes.size(); ++a) {
      const double value = sc.sweep_axes[a].values[index[a]];
      const std::string& name = sc.sweep_axes[a].name;
      row.push_back(format_real(value));
      if (name == "beta") point.beta_a = point.beta_b = value;
      else if (name == "mu_a") point.mu_a = value;
      else if (name == "mu_b") point.mu_b = value;
      else if (name == "g") point.coupling = value;
      else if (name == "alpha_fraction") fraction_override = value;
      else if (name == "t") time_point = value;
    }

    try {
      const CompositeModel composite = build_composite(point);
      ThermalParams params_a(point.beta_a, point.mu_a);
      ThermalParams params_b(point.beta_b, point.mu_b);
      const DensityOperator rho_a = thermal_state(composite.sub_a(), params_a);
      const DensityOperator rho_b = thermal_state(composite.sub_b(), params_b);
      const CorrelationPattern pattern =
          realize_pattern(point, composite, rho_a, rho_b, fraction_override);
      const DensityOperator rho0 = correlated_join(rho_a, rho_b, pattern, composite);
      const OperatorMatrix h_total =
          OperatorMatrix(composite.bare_hamiltonian_total().mat() +
                         exchange_interaction(composite, point.coupling).op.mat());
      const DensityOperator rho_t = evolve(rho0, h_total, time_point);
      const FlowReport report =
          flow_quantities(rho0, rho_t, composite, params_a, params_b, flow_tols);
      for (const auto& cell : flow_report_row(report)) row.push_back(cell);
      row.push_back("ok");
    } catch (const Error& err) {
      for (std::size_t k = 0; k < flow_report_header().size(); ++k) row.push_back("nan");
      row.push_back(err.invariant());
    }
    table.rows.push_back(std::move(row));

    // Lexicographic advance, last axis fastest.
    std::size_t a = sc.sweep_axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < sc.sweep_axes[a].values.size()) break;
      index[a] = 0;
      if (a == 0) return table;
    }
    if (sc.sweep_axes.empty()) return table;
  }
}

inline SearchSpec build_search_spec(const Scenario& sc) {
  CompositeModel composite = build_composite(sc);
  CorrelationPattern shape = build_pattern_shape(sc, composite);
  return SearchSpec(std::move(composite), ThermalParams(sc.beta_a, sc.mu_a),
                    ThermalParams(sc.beta_b, sc.mu_b), std::move(shape),
                    SearchAxis::from_grid(sc.search_alpha_fraction),
                    SearchAxis::from_grid(sc.search_phase), SearchAxis::from_grid(sc.search_g),
                    SearchAxis::from_grid(sc.search_t), sc.search_seed);
}

struct SearchOutput {
  ResultTable table;
  SearchResult grid;
  std::optional<SearchResult> refined;
};

inline SearchOutput search_scenario(const Scenario& sc) {
  const SearchSpec spec = build_search_spec(sc);
  SearchOutput out;
  out.grid = grid_search(spec);
  if (sc.search_refine) out.refined = refine(spec, out.grid.best_config);

  out.table.comments.push_back(std::string(kToolVersion));
  out.table.comments.push_back("scenario hash: fnv1a64 " + hex64(fnv1a64(sc.raw_text)));
  out.table.header = {"stage", "objective", "alpha_re", "alpha_im", "alpha_fraction",
                      "phase", "g", "t", "chain_verified"};
  for (const auto& column : flow_report_header()) out.table.header.push_back(column);

  const auto emit = [&](const std::string& stage, const SearchResult& r) {
    std::vector<std::string> row = {stage,
                                    format_real(r.objective),
                                    format_real(r.best_config.alpha.real()),
                                    format_real(r.best_config.alpha.imag()),
                                    format_real(r.best_config.alpha_fraction),
                                    format_real(r.best_config.phase),
                                    format_real(r.best_config.coupling),
                                    format_real(r.best_config.time),
                                    r.chain_verified ? "true" : "false"};
    for (const auto& cell : flow_report_row(r.report)) row.push_back(cell);
    out.table.rows.push_back(std::move(row));
  };
  emit("grid", out.grid);
  if (out.refined) emit("refine", *out.refined);
  return out;
}

struct CheckOutput {
  FlowReport report;
  bool slacks_ok = false;
};

// Verify two serialized composite states against the inequalities.  The
// scenario supplies the models; beta/mu may be overridden by CLI flags.
inline CheckOutput check_states(const std::string& initial_path, const std::string& final_path,
                                const Scenario& sc, const AuditTolerances& tols = {}) {
  const CompositeModel composite = build_composite(sc);
  const ComplexMatrix m_i = read_matrix_csv(initial_path);
  const ComplexMatrix m_f = read_matrix_csv(final_path);
  if (m_i.rows() != composite.dim() || m_f.rows() != composite.dim())
    throw ParseError("state dimension does not match the scenario composite (" +
                     std::to_string(composite.dim()) + ")");

  // Malformed matrices (non-Hermitian, non-PSD, trace != 1) surface as the
  // DensityOperator constructor's invariant errors.
  const DensityOperator rho_i((ComplexMatrix(m_i)));
  const DensityOperator rho_f((ComplexMatrix(m_f)));

  ThermalParams params_a(sc.beta_a, sc.mu_a);
  ThermalParams params_b(sc.beta_b, sc.mu_b);
  CheckOutput out;
  out.report = flow_quantities(rho_i, rho_f, composite, params_a, params_b,
                               FlowTolerances{tols.thermal_initial});
  out.slacks_ok = out.report.slack_a >= -1e-9 && out.report.slack_b >= -1e-9 &&
                  out.report.slack_combined >= -1e-9;
  return out;
}

}  // namespace corrflow
