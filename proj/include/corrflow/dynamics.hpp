#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "corrflow/states.hpp"

namespace corrflow {

// Composite Hamiltonian plus the sampling times.  The grid starts at 0 and
// increases strictly; dimensions stay small enough that the exact
// diagonalization propagator is both faster and exactly unitary compared to
// any time stepper.
struct EvolutionPlan {
  OperatorMatrix h_total;
  std::vector<double> time_grid;

  EvolutionPlan(OperatorMatrix h, std::vector<double> grid)
      : h_total(std::move(h)), time_grid(std::move(grid)) {
    if (time_grid.size() < 2) throw InvalidModel("evolution plan needs at least 2 grid points");
    if (time_grid.front() != 0.0) throw InvalidModel("time grid must start at 0");
    for (std::size_t k = 1; k < time_grid.size(); ++k)
      if (!(time_grid[k] > time_grid[k - 1]))
        throw InvalidModel("time grid must increase strictly");
  }
};

// Conserved quantities recorded alongside every trajectory point.  Tests
// assert on them; the CLI reports deviations without aborting.
struct ConservationAudit {
  double trace = 0.0;
  double entropy_total = 0.0;   // S_AB, conserved by unitarity
  double number_total = 0.0;    // <N_A + N_B>
  double bare_energy = 0.0;     // <H_A + H_B>
};

struct TrajectoryPoint {
  double time = 0.0;
  DensityOperator state;
  ConservationAudit audit;
};

namespace detail {

inline DensityOperator propagate(const DensityOperator& rho0,
                                 const Eigen::SelfAdjointEigenSolver<ComplexMatrix>& eig,
                                 double t) {
  if (t == 0.0) return rho0;
  const Eigen::Index d = rho0.dim();
  Eigen::VectorXcd phases(d);
  for (Eigen::Index i = 0; i < d; ++i)
    phases[i] = std::exp(Complex(0.0, -eig.eigenvalues()[i] * t));
  const ComplexMatrix u = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
  return DensityOperator(u * rho0.mat() * u.adjoint());
}

}  // namespace detail

// U rho U^dagger with U = exp(-i H t); output re-hermitized and PSD-audited
// by the DensityOperator constructor.
inline DensityOperator evolve(const DensityOperator& rho0, const OperatorMatrix& h_total,
                              double t) {
  if (rho0.dim() != h_total.dim())
    throw DimensionMismatch("evolve: state and Hamiltonian dimensions differ");
  return detail::propagate(rho0, eigensolve(h_total.mat()), t);
}

inline ConservationAudit audit_state(const DensityOperator& rho, const CompositeModel& composite) {
  ConservationAudit a;
  a.trace = rho.mat().trace().real();
  a.entropy_total = von_neumann_entropy(rho);
  a.number_total = expectation(rho, composite.number_total());
  a.bare_energy = expectation(rho, composite.bare_hamiltonian_total());
  return a;
}

// One point per grid time.  The Hamiltonian eigendecomposition is computed
// once and reused for every sample.
inline std::vector<TrajectoryPoint> trajectory(const DensityOperator& rho0,
                                               const EvolutionPlan& plan,
                                               const CompositeModel& composite) {
  if (rho0.dim() != plan.h_total.dim() || rho0.dim() != composite.dim())
    throw DimensionMismatch("trajectory: state, Hamiltonian and composite must agree");
  const auto eig = eigensolve(plan.h_total.mat());
  std::vector<TrajectoryPoint> points;
  points.reserve(plan.time_grid.size());
  for (double t : plan.time_grid) {
    DensityOperator state = detail::propagate(rho0, eig, t);
    ConservationAudit audit = audit_state(state, composite);
    points.push_back(TrajectoryPoint{t, std::move(state), audit});
  }
  return points;
}

// Worst-case drifts of the audited quantities relative to the first point.
struct AuditDrift {
  double trace = 0.0;
  double entropy_total = 0.0;
  double number_total = 0.0;
  double bare_energy = 0.0;
};

inline AuditDrift audit_drift(const std::vector<TrajectoryPoint>& points) {
  AuditDrift d;
  if (points.empty()) return d;
  const ConservationAudit& ref = points.front().audit;
  for (const auto& p : points) {
    d.trace = std::max(d.trace, std::abs(p.audit.trace - ref.trace));
    d.entropy_total = std::max(d.entropy_total, std::abs(p.audit.entropy_total - ref.entropy_total));
    d.number_total = std::max(d.number_total, std::abs(p.audit.number_total - ref.number_total));
    d.bare_energy = std::max(d.bare_energy, std::abs(p.audit.bare_energy - ref.bare_energy));
  }
  return d;
}

}  // namespace corrflow
