#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/fockspace.hpp"
#include "corrflow/matrix.hpp"

namespace corrflow {

enum class Side { A, B };

inline const char* to_string(Side s) { return s == Side::A ? "A" : "B"; }

// State of a subsystem or of the composite.  Construction re-hermitizes and
// then enforces: Hermitian to 1e-12, unit trace to 1e-12, min eigenvalue
// >= -1e-10.
class DensityOperator {
 public:
  DensityOperator() = default;

  explicit DensityOperator(ComplexMatrix m) : mat_(hermitized(std::move(m))) {
    if (mat_.rows() != mat_.cols())
      throw DimensionMismatch("density operator must be square");
    const double defect = hermiticity_defect(mat_);
    if (defect > tol::kHermitian)
      throw NotHermitian("density operator: max |M - M^dagger| = " + std::to_string(defect));
    const Complex tr = mat_.trace();
    if (std::abs(tr - Complex(1.0, 0.0)) > tol::kTrace)
      throw TraceNotOne("density operator trace = " + std::to_string(tr.real()));
    const double min_eig = eigensolve(mat_).eigenvalues().minCoeff();
    if (min_eig < -tol::kPsd)
      throw NotPositive("density operator min eigenvalue = " + std::to_string(min_eig));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& mat() const { return mat_; }

 private:
  ComplexMatrix mat_;
};

inline double expectation(const DensityOperator& rho, const OperatorMatrix& op) {
  if (rho.dim() != op.dim())
    throw DimensionMismatch("expectation value of mismatched operator");
  return (rho.mat() * op.mat()).trace().real();
}

// Inverse temperature and chemical potential of one side.  The derived fields
// ln Z and Omega = -ln Z / beta are filled in by gibbs_state against a
// specific (H, N) pair, recorded in `reference`.
struct ThermalParams {
  double beta = 1.0;
  double mu = 0.0;
  std::optional<double> log_partition;
  std::optional<double> grand_potential;
  std::string reference;

  ThermalParams(double beta_, double mu_) : beta(beta_), mu(mu_) {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw InvalidModel("inverse temperature must be positive, got " + std::to_string(beta));
    if (!std::isfinite(mu)) throw InvalidModel("chemical potential must be finite");
  }
};

// exp(-beta (H - mu N)) / Z via eigendecomposition, spectrally shifted so the
// largest Boltzmann weight is 1 before normalization.  Fills in the partition
// function and grand potential on `params`.
inline DensityOperator gibbs_state(const OperatorMatrix& h, const OperatorMatrix& n,
                                   ThermalParams& params, const std::string& reference = "") {
  if (h.dim() != n.dim()) throw DimensionMismatch("gibbs_state: H and N dimensions differ");
  const double comm = commutator_norm(h, n);
  if (comm > tol::kDegeneracy)
    throw NonCommuting("gibbs_state requires [H, N] = 0, commutator norm = " +
                       std::to_string(comm));

  const ComplexMatrix k = h.mat() - params.mu * n.mat();
  const auto eig = eigensolve(k);
  const RealVector kappa = params.beta * eig.eigenvalues().array();
  const double kappa_min = kappa.minCoeff();

  RealVector w = (-(kappa.array() - kappa_min)).exp();
  const double z_shifted = w.sum();
  const double log_z = -kappa_min + std::log(z_shifted);
  if (!std::isfinite(log_z))
    throw Overflow("gibbs_state: ln Z not finite despite spectral shift");

  w /= z_shifted;
  ComplexMatrix rho =
      eig.eigenvectors() * w.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();

  params.log_partition = log_z;
  params.grand_potential = -log_z / params.beta;
  if (!reference.empty()) params.reference = reference;
  return DensityOperator(std::move(rho));
}

// Gibbs state of one subsystem; stamps the params reference with the label.
inline DensityOperator thermal_state(const SubsystemModel& model, ThermalParams& params) {
  return gibbs_state(bare_hamiltonian(model), number_operator(model), params, model.label());
}

inline DensityOperator partial_trace(const DensityOperator& rho, const CompositeModel& composite,
                                     Side keep) {
  if (rho.dim() != composite.dim())
    throw DimensionMismatch("partial_trace: state dim " + std::to_string(rho.dim()) +
                            " != composite dim " + std::to_string(composite.dim()));
  const Eigen::Index da = composite.dim_a();
  const Eigen::Index db = composite.dim_b();
  if (keep == Side::A) {
    ComplexMatrix out = ComplexMatrix::Zero(da, da);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index b = 0; b < db; ++b) out(i, j) += rho.mat()(i * db + b, j * db + b);
    return DensityOperator(std::move(out));
  }
  ComplexMatrix out = ComplexMatrix::Zero(db, db);
  for (Eigen::Index i = 0; i < db; ++i)
    for (Eigen::Index j = 0; j < db; ++j)
      for (Eigen::Index a = 0; a < da; ++a) out(i, j) += rho.mat()(a * db + i, a * db + j);
  return DensityOperator(std::move(out));
}

// -sum(lambda ln lambda) in nats; eigenvalues below 1e-14 count as exact zeros.
inline double von_neumann_entropy(const DensityOperator& rho) {
  const RealVector lambda = eigensolve(rho.mat()).eigenvalues();
  double s = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > tol::kEigenFloor) s -= lambda[i] * std::log(lambda[i]);
  return s;
}

// Tr[rho (ln rho - ln sigma)] in nats.  Returns +infinity when rho has weight
// outside sigma's support (sigma eigenvalue < 1e-14 with overlap > 1e-10).
inline double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim())
    throw DimensionMismatch("relative_entropy of states with different dimensions");

  const auto eig_rho = eigensolve(rho.mat());
  double tr_rho_ln_rho = 0.0;
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    const double p = eig_rho.eigenvalues()[i];
    if (p > tol::kEigenFloor) tr_rho_ln_rho += p * std::log(p);
  }

  const auto eig_sigma = eigensolve(sigma.mat());
  double tr_rho_ln_sigma = 0.0;
  for (Eigen::Index j = 0; j < sigma.dim(); ++j) {
    const double s = eig_sigma.eigenvalues()[j];
    const auto v = eig_sigma.eigenvectors().col(j);
    const double overlap = (v.adjoint() * rho.mat() * v).value().real();
    if (s < tol::kEigenFloor) {
      if (overlap > tol::kSupport) return std::numeric_limits<double>::infinity();
      continue;  // 0 * ln 0
    }
    tr_rho_ln_sigma += overlap * std::log(s);
  }

  const double result = tr_rho_ln_rho - tr_rho_ln_sigma;
  if (result < 0.0 && result > -1e-12) return 0.0;  // rounding of S(rho||rho)
  return result;
}

// S_A + S_B - S_AB in nats.
inline double mutual_information(const DensityOperator& rho_ab, const CompositeModel& composite) {
  const DensityOperator rho_a = partial_trace(rho_ab, composite, Side::A);
  const DensityOperator rho_b = partial_trace(rho_ab, composite, Side::B);
  return von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b) - von_neumann_entropy(rho_ab);
}

// (1/2) sum |eig(rho - sigma)|.
inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim())
    throw DimensionMismatch("trace_distance of states with different dimensions");
  const RealVector lambda = eigensolve(rho.mat() - sigma.mat()).eigenvalues();
  return 0.5 * lambda.cwiseAbs().sum();
}

struct PatternTerm {
  Eigen::Index bra = 0;  // composite basis index
  Eigen::Index ket = 0;
  Complex coefficient{0.0, 0.0};
};

// A marginal-preserving correlation: a Hermitian perturbation of a product
// state living in the degenerate exchange sector, whose partial traces vanish
// so both thermal marginals survive intact.  Terms are validated against the
// composite at construction; the adjoint of every term is added automatically.
class CorrelationPattern {
 public:
  CorrelationPattern(const CompositeModel& composite, std::vector<PatternTerm> terms)
      : dim_a_(composite.dim_a()), dim_b_(composite.dim_b()) {
    const Eigen::Index d = composite.dim();
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    for (const auto& t : terms) {
      if (t.bra < 0 || t.bra >= d || t.ket < 0 || t.ket >= d)
        throw DimensionMismatch("pattern term index outside composite basis");
      if (t.bra == t.ket)
        throw MarginalViolation("diagonal pattern term would shift a marginal population");
      if (composite.total_occupation(t.bra) != composite.total_occupation(t.ket))
        throw MarginalViolation("pattern term changes total occupation");
      if (std::abs(composite.bare_energy(t.bra) - composite.bare_energy(t.ket)) >
          tol::kDegeneracy)
        throw MarginalViolation("pattern term connects non-degenerate bare energies");
      m(t.bra, t.ket) += t.coefficient;
      m(t.ket, t.bra) += std::conj(t.coefficient);
    }
    check_zero_partial_traces(m, composite);
    terms_ = std::move(terms);
    matrix_ = std::move(m);
  }

  static CorrelationPattern empty(const CompositeModel& composite) {
    return CorrelationPattern(composite, {});
  }

  const std::vector<PatternTerm>& terms() const { return terms_; }
  const ComplexMatrix& matrix() const { return matrix_; }
  Eigen::Index dim_a() const { return dim_a_; }
  Eigen::Index dim_b() const { return dim_b_; }
  bool is_empty() const { return terms_.empty(); }

  // Same index structure with every coefficient multiplied by `factor`.
  CorrelationPattern scaled(Complex factor, const CompositeModel& composite) const {
    std::vector<PatternTerm> scaled_terms = terms_;
    for (auto& t : scaled_terms) t.coefficient *= factor;
    return CorrelationPattern(composite, std::move(scaled_terms));
  }

 private:
  static void check_zero_partial_traces(const ComplexMatrix& m, const CompositeModel& c) {
    const Eigen::Index da = c.dim_a(), db = c.dim_b();
    ComplexMatrix tra = ComplexMatrix::Zero(da, da);
    ComplexMatrix trb = ComplexMatrix::Zero(db, db);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index b = 0; b < db; ++b) tra(i, j) += m(i * db + b, j * db + b);
    for (Eigen::Index i = 0; i < db; ++i)
      for (Eigen::Index j = 0; j < db; ++j)
        for (Eigen::Index a = 0; a < da; ++a) trb(i, j) += m(a * db + i, a * db + j);
    if (max_abs(tra) > 1e-14 || max_abs(trb) > 1e-14)
      throw MarginalViolation("pattern partial trace is not zero");
  }

  std::vector<PatternTerm> terms_;
  ComplexMatrix matrix_;
  Eigen::Index dim_a_ = 0;
  Eigen::Index dim_b_ = 0;
};

// rho_A (x) rho_B + pattern.  Verifies positivity and that both marginals of
// the result still equal the inputs entry-wise to 1e-12.
inline DensityOperator correlated_join(const DensityOperator& rho_a, const DensityOperator& rho_b,
                                       const CorrelationPattern& pattern,
                                       const CompositeModel& composite) {
  if (rho_a.dim() != pattern.dim_a() || rho_b.dim() != pattern.dim_b() ||
      rho_a.dim() != composite.dim_a() || rho_b.dim() != composite.dim_b())
    throw DimensionMismatch("correlated_join: marginals do not match the pattern's composite");

  ComplexMatrix joint = kron(rho_a.mat(), rho_b.mat()) + pattern.matrix();
  const double min_eig = eigensolve(hermitized(joint)).eigenvalues().minCoeff();
  if (min_eig < -tol::kPsd)
    throw NotPositive("correlated_join: pattern coefficients too large, min eigenvalue = " +
                      std::to_string(min_eig));

  DensityOperator out(std::move(joint));
  const DensityOperator back_a = partial_trace(out, composite, Side::A);
  const DensityOperator back_b = partial_trace(out, composite, Side::B);
  if (max_abs(back_a.mat() - rho_a.mat()) > 1e-12 || max_abs(back_b.mat() - rho_b.mat()) > 1e-12)
    throw MarginalViolation("correlated_join: output marginals differ from inputs");
  return out;
}

// Largest s >= 0 such that rho_A (x) rho_B + s * pattern stays positive
// semidefinite, located by doubling from s = 1 and bisecting to 1e-10.
// Returns +infinity for a pattern with no terms (any s is feasible) and 0
// when even infinitesimal s fails.
inline double max_correlation_coefficient(const DensityOperator& rho_a,
                                          const DensityOperator& rho_b,
                                          const CorrelationPattern& pattern_shape) {
  if (rho_a.dim() != pattern_shape.dim_a() || rho_b.dim() != pattern_shape.dim_b())
    throw DimensionMismatch("max_correlation_coefficient: marginal dimensions");
  if (pattern_shape.is_empty() || max_abs(pattern_shape.matrix()) == 0.0)
    return std::numeric_limits<double>::infinity();

  const ComplexMatrix product = kron(rho_a.mat(), rho_b.mat());
  const auto min_eigenvalue = [&](double s) {
    const ComplexMatrix candidate = hermitized(product + s * pattern_shape.matrix());
    return eigensolve(candidate).eigenvalues().minCoeff();
  };
  const auto feasible = [&](double s) { return min_eigenvalue(s) >= -tol::kPsd; };

  constexpr double precision = 1e-10;
  // Zero-headroom probe: populations of exactly zero reject any coefficient,
  // which the PSD tolerance alone would mask at the bisection scale.
  if (min_eigenvalue(precision) < -1e-14) return 0.0;

  double lo = precision;
  double hi = 1.0;  // entries of a density matrix are bounded by 1
  while (feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6)
      throw Error("UnboundedPattern", "pattern never breaks positivity; shape is degenerate");
  }
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace corrflow
