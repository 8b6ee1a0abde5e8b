#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace corrflow;
using Catch::Approx;

TEST_CASE("number operator is diagonal in the occupation basis") {
  SubsystemModel fermion({{0, 0.0}, {1, 1.3}}, "A");
  const OperatorMatrix n = number_operator(fermion);
  CHECK(n.mat()(0, 0).real() == 0.0);
  CHECK(n.mat()(1, 1).real() == 1.0);
  CHECK(max_abs(n.mat() - ComplexMatrix(n.mat().diagonal().asDiagonal())) == 0.0);

  SubsystemModel boson({{0, 0.0}, {1, 0.7}, {2, 1.4}}, "B");
  const OperatorMatrix nb = number_operator(boson);
  CHECK(nb.mat()(0, 0).real() == 0.0);
  CHECK(nb.mat()(1, 1).real() == 1.0);
  CHECK(nb.mat()(2, 2).real() == 2.0);
}

TEST_CASE("bare hamiltonian carries the level energies") {
  SubsystemModel m({{0, 0.0}, {1, 0.5}, {2, 1.0}}, "A");
  const OperatorMatrix h = bare_hamiltonian(m);
  CHECK(h.mat()(1, 1).real() == Approx(0.5));
  CHECK(h.mat()(2, 2).real() == Approx(1.0));
  CHECK(commutator_norm(h, number_operator(m)) == 0.0);
}

TEST_CASE("model invariants are enforced") {
  CHECK_THROWS_AS(SubsystemModel({{0, 0.0}}, "A"), InvalidModel);
  CHECK_THROWS_AS(SubsystemModel({{1, 0.0}, {1, 1.0}}, "A"), InvalidModel);
  CHECK_THROWS_AS(SubsystemModel({{2, 0.0}, {1, 1.0}}, "A"), InvalidModel);
  CHECK_THROWS_AS(SubsystemModel({{0, 0.0}, {-1, 1.0}}, "A"), InvalidModel);
}

TEST_CASE("composite lifting follows the A-slow index convention") {
  SubsystemModel a({{0, 0.0}, {1, 1.0}}, "A");
  SubsystemModel b({{0, 0.0}, {1, 2.0}}, "B");
  CompositeModel comp(a, b);
  REQUIRE(comp.dim() == 4);

  // N_A x 1 on basis |00>,|01>,|10>,|11>.
  const OperatorMatrix na = comp.number_a();
  CHECK(na.mat()(0, 0).real() == 0.0);
  CHECK(na.mat()(1, 1).real() == 0.0);
  CHECK(na.mat()(2, 2).real() == 1.0);
  CHECK(na.mat()(3, 3).real() == 1.0);

  CHECK(commutator_norm(comp.hamiltonian_a(), comp.hamiltonian_b()) == 0.0);
}

TEST_CASE("kronecker lifting preserves spectra") {
  SubsystemModel a({{0, 0.1}, {1, 0.9}, {2, 2.2}}, "A");
  SubsystemModel b({{0, 0.0}, {1, 1.0}}, "B");
  CompositeModel comp(a, b);
  const RealVector lifted = eigensolve(comp.hamiltonian_a().mat()).eigenvalues();
  // Each eigenvalue of H_A appears dim_B times.
  std::vector<double> expected;
  for (const Level& lvl : a.levels())
    for (Eigen::Index k = 0; k < b.dim(); ++k) expected.push_back(lvl.energy);
  std::sort(expected.begin(), expected.end());
  for (Eigen::Index i = 0; i < lifted.size(); ++i)
    CHECK(lifted[i] == Approx(expected[i]).margin(1e-12));
}

TEST_CASE("exchange interaction on two degenerate qubits") {
  // eps_A = eps_B = 1: the only exchange pair is |01> <-> |10>.
  SubsystemModel a({{0, 0.0}, {1, 1.0}}, "A");
  SubsystemModel b({{0, 0.0}, {1, 1.0}}, "B");
  CompositeModel comp(a, b);
  const ExchangeOperator ex = exchange_interaction(comp, 0.3);
  REQUIRE_FALSE(ex.degenerate_none());
  CHECK(ex.pair_count == 1);

  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected(1, 2) = 0.3;  // |01><10|
  expected(2, 1) = 0.3;
  CHECK(max_abs(ex.op.mat() - expected) == 0.0);
}

TEST_CASE("exchange interaction vanishes without degeneracy") {
  SubsystemModel a({{0, 0.0}, {1, 1.0}}, "A");
  SubsystemModel b({{0, 0.0}, {1, 2.0}}, "B");
  CompositeModel comp(a, b);
  const ExchangeOperator ex = exchange_interaction(comp, 0.3);
  CHECK(ex.degenerate_none());
  CHECK(max_abs(ex.op.mat()) == 0.0);
}

TEST_CASE("exchange interaction commutes with the conserved operators") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto sc = testsupport::random_scenario(rng, false, false);
    const ExchangeOperator ex = exchange_interaction(sc.composite, 0.4);
    const OperatorMatrix h_bare = sc.composite.bare_hamiltonian_total();
    const OperatorMatrix h_total = OperatorMatrix(h_bare.mat() + ex.op.mat());
    CHECK(commutator_norm(ex.op, h_bare) < 1e-12);
    CHECK(commutator_norm(sc.composite.number_total(), h_total) < 1e-12);
    CHECK(hermiticity_defect(ex.op.mat()) < 1e-12);
  }
}

TEST_CASE("commutator norm") {
  const OperatorMatrix d1 = OperatorMatrix::diagonal((RealVector(2) << 1, 2).finished());
  const OperatorMatrix d2 = OperatorMatrix::diagonal((RealVector(2) << 3, 4).finished());
  CHECK(commutator_norm(d1, d2) == 0.0);

  ComplexMatrix sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  // [sigma_x, sigma_z] has entries of magnitude 2.
  CHECK(commutator_norm(OperatorMatrix(sx), OperatorMatrix(sz)) == Approx(2.0));

  const OperatorMatrix id = OperatorMatrix::identity(2);
  CHECK(commutator_norm(OperatorMatrix(sx), id) == 0.0);

  CHECK_THROWS_AS(commutator_norm(d1, OperatorMatrix::identity(3)), DimensionMismatch);
}

TEST_CASE("operator matrices reject non-hermitian input") {
  ComplexMatrix bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK_THROWS_AS(OperatorMatrix(bad), NotHermitian);
}
