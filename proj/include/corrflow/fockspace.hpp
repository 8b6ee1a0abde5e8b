#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/matrix.hpp"

namespace corrflow {

// One occupation level: particle count and bare energy (hbar = 1).
struct Level {
  int occupation = 0;
  double energy = 0.0;
};

// A subsystem given by the joint eigenbasis of its bare Hamiltonian and its
// number operator.  Both operators are diagonal here, so [H, N] = 0 holds by
// construction and cannot be violated by any model instance.
class SubsystemModel {
 public:
  SubsystemModel(std::vector<Level> levels, std::string label)
      : levels_(std::move(levels)), label_(std::move(label)) {
    if (levels_.size() < 2)
      throw InvalidModel("subsystem '" + label_ + "' needs at least 2 levels");
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      if (levels_[k].occupation < 0)
        throw InvalidModel("subsystem '" + label_ + "': negative occupation");
      if (!std::isfinite(levels_[k].energy))
        throw InvalidModel("subsystem '" + label_ + "': non-finite level energy");
      if (k > 0 && levels_[k].occupation <= levels_[k - 1].occupation)
        throw InvalidModel("subsystem '" + label_ +
                           "': occupations must be distinct and increasing");
    }
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(levels_.size()); }
  const std::vector<Level>& levels() const { return levels_; }
  const std::string& label() const { return label_; }

  RealVector occupations() const {
    RealVector v(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) v[k] = levels_[k].occupation;
    return v;
  }

  RealVector energies() const {
    RealVector v(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) v[k] = levels_[k].energy;
    return v;
  }

 private:
  std::vector<Level> levels_;
  std::string label_;
};

inline OperatorMatrix number_operator(const SubsystemModel& model) {
  return OperatorMatrix::diagonal(model.occupations());
}

inline OperatorMatrix bare_hamiltonian(const SubsystemModel& model) {
  return OperatorMatrix::diagonal(model.energies());
}

// Two subsystems with the fixed composite index convention
//   composite = index_A * dim_B + index_B   (A is the slow index).
// All lifting, partial tracing and pattern indexing in the library relies on
// this one convention.
class CompositeModel {
 public:
  CompositeModel(SubsystemModel a, SubsystemModel b)
      : sub_a_(std::move(a)), sub_b_(std::move(b)) {}

  const SubsystemModel& sub_a() const { return sub_a_; }
  const SubsystemModel& sub_b() const { return sub_b_; }
  Eigen::Index dim_a() const { return sub_a_.dim(); }
  Eigen::Index dim_b() const { return sub_b_.dim(); }
  Eigen::Index dim() const { return sub_a_.dim() * sub_b_.dim(); }

  Eigen::Index index(Eigen::Index ia, Eigen::Index ib) const { return ia * dim_b() + ib; }
  Eigen::Index index_a(Eigen::Index composite) const { return composite / dim_b(); }
  Eigen::Index index_b(Eigen::Index composite) const { return composite % dim_b(); }

  int total_occupation(Eigen::Index composite) const {
    return sub_a_.levels()[index_a(composite)].occupation +
           sub_b_.levels()[index_b(composite)].occupation;
  }

  double bare_energy(Eigen::Index composite) const {
    return sub_a_.levels()[index_a(composite)].energy +
           sub_b_.levels()[index_b(composite)].energy;
  }

  OperatorMatrix lift_a(const OperatorMatrix& op) const {
    if (op.dim() != dim_a()) throw DimensionMismatch("lift_a: operator is not dim_A");
    return OperatorMatrix(kron(op.mat(), ComplexMatrix::Identity(dim_b(), dim_b())));
  }

  OperatorMatrix lift_b(const OperatorMatrix& op) const {
    if (op.dim() != dim_b()) throw DimensionMismatch("lift_b: operator is not dim_B");
    return OperatorMatrix(kron(ComplexMatrix::Identity(dim_a(), dim_a()), op.mat()));
  }

  OperatorMatrix hamiltonian_a() const { return lift_a(bare_hamiltonian(sub_a_)); }
  OperatorMatrix hamiltonian_b() const { return lift_b(bare_hamiltonian(sub_b_)); }
  OperatorMatrix number_a() const { return lift_a(number_operator(sub_a_)); }
  OperatorMatrix number_b() const { return lift_b(number_operator(sub_b_)); }

  OperatorMatrix bare_hamiltonian_total() const {
    return OperatorMatrix(hamiltonian_a().mat() + hamiltonian_b().mat());
  }

  OperatorMatrix number_total() const {
    return OperatorMatrix(number_a().mat() + number_b().mat());
  }

 private:
  SubsystemModel sub_a_;
  SubsystemModel sub_b_;
};

// Number- and energy-conserving hopping between the subsystems.  Carries a
// warning flag instead of failing when no degenerate exchange pair exists.
struct ExchangeOperator {
  OperatorMatrix op;
  std::size_t pair_count = 0;

  bool degenerate_none() const { return pair_count == 0; }
};

// g * sum(|n_A - 1, n_B + 1><n_A, n_B| + adjoint) over composite basis pairs
// that conserve total occupation and are degenerate under H_A + H_B within
// tol::kDegeneracy.  Restricting to degenerate pairs makes
// [H_A + H_B, H_I] = 0 and [N_tot, H_tot] = 0 hold by construction.
inline ExchangeOperator exchange_interaction(const CompositeModel& composite, double g) {
  const Eigen::Index d = composite.dim();
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  std::size_t pairs = 0;
  for (Eigen::Index ket = 0; ket < d; ++ket) {
    const int na = composite.sub_a().levels()[composite.index_a(ket)].occupation;
    const int nb = composite.sub_b().levels()[composite.index_b(ket)].occupation;
    for (Eigen::Index bra = 0; bra < d; ++bra) {
      const int ma = composite.sub_a().levels()[composite.index_a(bra)].occupation;
      const int mb = composite.sub_b().levels()[composite.index_b(bra)].occupation;
      if (ma != na - 1 || mb != nb + 1) continue;  // one particle moves A -> B
      if (std::abs(composite.bare_energy(bra) - composite.bare_energy(ket)) > tol::kDegeneracy)
        continue;
      m(bra, ket) += g;
      m(ket, bra) += g;
      ++pairs;
    }
  }
  return ExchangeOperator{OperatorMatrix(std::move(m)), pairs};
}

}  // namespace corrflow
