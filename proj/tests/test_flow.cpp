#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace corrflow;
using namespace testsupport;
using Catch::Approx;

namespace {

DensityOperator product_state(const TwoQubit& tq) {
  return correlated_join(tq.rho_a, tq.rho_b, CorrelationPattern::empty(tq.composite),
                         tq.composite);
}

OperatorMatrix total_hamiltonian(const CompositeModel& composite, double g) {
  return OperatorMatrix(composite.bare_hamiltonian_total().mat() +
                        exchange_interaction(composite, g).op.mat());
}

}  // namespace

TEST_CASE("identical states give a reversible all-zero report") {
  TwoQubit tq(1.0, 1.0, 0.5, -0.5);
  const DensityOperator rho0 = product_state(tq);
  const FlowReport r = flow_quantities(rho0, rho0, tq.composite, tq.params_a, tq.params_b);
  CHECK(r.delta_e_a == Approx(0.0).margin(1e-14));
  CHECK(r.delta_n_a == Approx(0.0).margin(1e-14));
  CHECK(r.delta_s_a == Approx(0.0).margin(1e-12));
  CHECK(r.delta_i_ab == Approx(0.0).margin(1e-12));
  CHECK(r.classification == FlowClass::reversible);
  CHECK(check_subsystem_inequality(r, Side::A) == Approx(0.0).margin(1e-12));
  CHECK(check_combined_inequality(r, tq.params_a, tq.params_b) == Approx(0.0).margin(1e-12));
}

TEST_CASE("conventional two-qubit full swap against the Fermi oracle") {
  const double g = 0.2;
  TwoQubit tq(1.0, 1.0, 0.5, -0.5);
  const DensityOperator rho0 = product_state(tq);
  const DensityOperator rho_t =
      evolve(rho0, total_hamiltonian(tq.composite, g), kPi / (2.0 * g));
  const FlowReport r = flow_quantities(rho0, rho_t, tq.composite, tq.params_a, tq.params_b);

  // Closed form: dN_A = p_B - p_A with Fermi factors at mu = +-0.5.
  const double expected = tq.p_b - tq.p_a;
  CHECK(expected == Approx(-0.19511514499178906).margin(1e-15));
  CHECK(r.delta_n_a == Approx(expected).margin(1e-12));
  CHECK(r.delta_e_a == Approx(expected).margin(1e-12));  // eps = 1 ties energy to particles
  CHECK(r.delta_n_a + r.delta_n_b == Approx(0.0).margin(1e-12));
  CHECK(r.delta_e_a + r.delta_e_b == Approx(0.0).margin(1e-12));
  CHECK(r.classification == FlowClass::conventional);

  // Eq-(20)-style slack equals the directly computed relative entropy.
  CHECK(r.slack_a == Approx(r.rel_ent_a).margin(1e-8));
  CHECK(r.slack_b == Approx(r.rel_ent_b).margin(1e-8));
  CHECK(r.slack_a >= -1e-9);
  CHECK(r.slack_b >= -1e-9);
  CHECK(r.slack_combined >= -1e-9);
  CHECK(classify_flow(r, tq.params_a, tq.params_b) == FlowClass::conventional);
}

TEST_CASE("flow quantities enforce thermal initial marginals") {
  TwoQubit tq(1.0, 1.0, 0.5, -0.5);
  const DensityOperator rho0 = product_state(tq);
  // Claim different thermal parameters than the state was built from.
  ThermalParams wrong_a(1.0, -0.2);
  CHECK_THROWS_AS(flow_quantities(rho0, rho0, tq.composite, wrong_a, tq.params_b),
                  NotThermalInitial);
}

TEST_CASE("subsystem slack is non-negative over random trajectories") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const auto sc = random_scenario(rng);
    const OperatorMatrix h = total_hamiltonian(sc.composite, sc.coupling);
    const double t = 0.2 + 0.1 * static_cast<double>(trial);
    const DensityOperator rho_t = evolve(sc.rho0, h, t);
    const FlowReport r = flow_quantities(sc.rho0, rho_t, sc.composite, sc.params_a, sc.params_b);
    CHECK(r.slack_a >= -1e-9);
    CHECK(r.slack_b >= -1e-9);
    CHECK(r.slack_combined >= -1e-9);
    CHECK(r.slack_a == Approx(r.rel_ent_a).margin(1e-8));
    CHECK(r.slack_b == Approx(r.rel_ent_b).margin(1e-8));
    CHECK(check_subsystem_inequality(r, Side::A) == Approx(r.slack_a).margin(1e-14));
    CHECK(check_subsystem_inequality(r, Side::B) == Approx(r.slack_b).margin(1e-14));
  }
}

TEST_CASE("combined inequality reductions at equal beta and equal mu") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sc = random_scenario(rng, /*equal_beta=*/true);
    const OperatorMatrix h = total_hamiltonian(sc.composite, sc.coupling);
    const DensityOperator rho_t = evolve(sc.rho0, h, 1.3);
    const FlowReport r = flow_quantities(sc.rho0, rho_t, sc.composite, sc.params_a, sc.params_b);
    // Equal beta: LHS reduces to -beta (mu_A - mu_B) dN_A.
    const double reduced = -sc.params_a.beta * (sc.params_a.mu - sc.params_b.mu) * r.delta_n_a;
    CHECK(check_combined_inequality(r, sc.params_a, sc.params_b) ==
          Approx(reduced - r.delta_i_ab).margin(1e-12));
  }

  // Equal mu: LHS reduces to (beta_A - beta_B)(dE_A - mu dN_A).
  TwoQubit base(1.0, 1.0, 0.3, 0.3);
  ThermalParams pa(0.8, 0.3), pb(1.4, 0.3);
  CompositeModel comp = base.composite;
  ThermalParams pa_state = pa, pb_state = pb;
  const DensityOperator ra = thermal_state(comp.sub_a(), pa_state);
  const DensityOperator rb = thermal_state(comp.sub_b(), pb_state);
  const DensityOperator rho0 =
      correlated_join(ra, rb, CorrelationPattern::empty(comp), comp);
  const DensityOperator rho_t = evolve(rho0, total_hamiltonian(comp, 0.25), 2.1);
  const FlowReport r = flow_quantities(rho0, rho_t, comp, pa, pb);
  const double reduced = (pa.beta - pb.beta) * (r.delta_e_a - pa.mu * r.delta_n_a);
  CHECK(check_combined_inequality(r, pa, pb) == Approx(reduced - r.delta_i_ab).margin(1e-12));
  CHECK(check_combined_inequality(r, pa, pb) >= -1e-9);
}

TEST_CASE("product initial states never show anomalous flow at equal beta") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 15; ++trial) {
    const auto sc = random_scenario(rng, /*equal_beta=*/true, /*correlated=*/false);
    const OperatorMatrix h = total_hamiltonian(sc.composite, sc.coupling);
    for (double t : {0.7, 1.9, 4.2}) {
      const DensityOperator rho_t = evolve(sc.rho0, h, t);
      const FlowReport r =
          flow_quantities(sc.rho0, rho_t, sc.composite, sc.params_a, sc.params_b);
      // dI >= 0 from a product start, so particles flow toward lower mu.
      CHECK(r.delta_i_ab >= -1e-10);
      CHECK(r.delta_n_a * (sc.params_a.mu - sc.params_b.mu) <= 1e-10);
      CHECK(r.classification != FlowClass::anomalous);
    }
  }
}

TEST_CASE("classification rules") {
  TwoQubit tq(1.0, 1.0, 0.5, -0.5);
  FlowReport r;
  r.beta_a = r.beta_b = 1.0;
  r.mu_a = 0.5;
  r.mu_b = -0.5;

  r.delta_n_a = -0.1;
  r.delta_i_ab = 0.2;
  CHECK(classify_flow(r, tq.params_a, tq.params_b) == FlowClass::conventional);

  r.delta_n_a = 0.1;
  r.delta_i_ab = -0.2;
  CHECK(classify_flow(r, tq.params_a, tq.params_b) == FlowClass::anomalous);

  r.delta_n_a = 0.0;
  r.delta_i_ab = 0.0;
  CHECK(classify_flow(r, tq.params_a, tq.params_b) == FlowClass::reversible);

  r.delta_n_a = 0.0;
  r.delta_i_ab = 0.3;  // information moved but no particles: neither direction
  CHECK(classify_flow(r, tq.params_a, tq.params_b) == FlowClass::indeterminate);

  ThermalParams colder(2.0, 0.5);
  CHECK_THROWS_AS(classify_flow(r, colder, tq.params_b), UnequalTemperatures);
  ThermalParams same_mu(1.0, 0.5);
  CHECK_THROWS_AS(classify_flow(r, tq.params_a, same_mu), DegenerateChemicalPotentials);
}

TEST_CASE("gibbs_params_from round trip") {
  SubsystemModel model({{0, 0.0}, {1, 1.0}, {2, 1.9}, {3, 3.2}}, "A");
  ThermalParams truth(1.0, 0.5);
  const SubsystemMoments m = subsystem_moments(model, truth);
  const ThermalParams recovered = gibbs_params_from(model, m.energy, m.number);
  CHECK(recovered.beta == Approx(1.0).margin(1e-8));
  CHECK(recovered.mu == Approx(0.5).margin(1e-8));
  REQUIRE(recovered.log_partition.has_value());
  CHECK(*recovered.log_partition ==
        Approx(-recovered.beta * *recovered.grand_potential).margin(1e-12));
}

TEST_CASE("gibbs_params_from half filling pins mu to the level energy") {
  SubsystemModel mode({{0, 0.0}, {1, 1.0}}, "F");
  const ThermalParams p = gibbs_params_from(mode, 0.5, 0.5);
  CHECK(p.mu == Approx(1.0).margin(1e-8));
  CHECK(p.beta > 0.0);
  const SubsystemMoments m = subsystem_moments(mode, p);
  CHECK(m.number == Approx(0.5).margin(1e-10));
}

TEST_CASE("gibbs_params_from random round trips stay on target") {
  SubsystemModel m3({{0, 0.0}, {1, 1.0}, {2, 2.6}}, "A");
  SubsystemModel m4({{0, 0.0}, {1, 0.5}, {2, 1.7}, {3, 2.0}}, "B");
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> beta_dist(0.3, 2.5);
  std::uniform_real_distribution<double> mu_dist(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const SubsystemModel& model = trial % 2 ? m3 : m4;
    ThermalParams truth(beta_dist(rng), mu_dist(rng));
    const SubsystemMoments target = subsystem_moments(model, truth);
    const ThermalParams solved = gibbs_params_from(model, target.energy, target.number);
    const SubsystemMoments reached = subsystem_moments(model, solved);
    CHECK(std::abs(reached.energy - target.energy) < 1e-10);
    CHECK(std::abs(reached.number - target.number) < 1e-10);
  }
}

TEST_CASE("gibbs_params_from rejects targets outside the moment hull") {
  SubsystemModel model({{0, 0.0}, {1, 1.0}, {2, 1.9}, {3, 3.2}}, "A");
  CHECK_THROWS_AS(gibbs_params_from(model, 5.0, 1.0), OutOfHull);
  CHECK_THROWS_AS(gibbs_params_from(model, 0.0, 0.0), OutOfHull);  // vertex, not interior
  CHECK_THROWS_AS(gibbs_params_from(model, 1.2, 1.1), OutOfHull);  // below the lower edge

  // Collinear moment set: off-segment targets are rejected.
  SubsystemModel mode({{0, 0.0}, {1, 1.0}}, "F");
  CHECK_THROWS_AS(gibbs_params_from(mode, 0.5 + 1e-4, 0.5), OutOfHull);
  CHECK_THROWS_AS(gibbs_params_from(mode, 1.0, 1.0), OutOfHull);  // endpoint

  // Hull-interior moments on the inverted-population side: only beta < 0
  // reaches them, which the positive-temperature family cannot represent.
  const auto inverted = detail::GibbsFamily(model).at(1.0, -2.0);
  CHECK_THROWS_AS(gibbs_params_from(model, inverted.energy, inverted.number), OutOfHull);
}

TEST_CASE("entropy derivatives reproduce beta and -beta mu") {
  // Small mixed-sign energies keep the moments away from the hull boundary
  // over the whole parameter range, where the 1e-4 stencil is accurate.
  SubsystemModel model({{0, 0.0}, {1, 0.1}, {2, -0.15}, {3, 0.3}}, "A");

  // mu = 0: dS/dN vanishes.
  {
    ThermalParams params(1.0, 0.0);
    const EntropyDerivatives d = entropy_derivatives(model, params);
    CHECK(d.ds_de == Approx(1.0).epsilon(1e-6));
    CHECK(d.ds_dn == Approx(0.0).margin(1e-8));
  }
  {
    ThermalParams params(2.0, 0.3);
    const EntropyDerivatives d = entropy_derivatives(model, params);
    CHECK(d.ds_de == Approx(2.0).epsilon(1e-6));
    CHECK(d.ds_dn == Approx(-0.6).epsilon(1e-6));
  }
  {
    ThermalParams params(0.5, -1.0);
    const EntropyDerivatives d = entropy_derivatives(model, params);
    CHECK(d.ds_de == Approx(0.5).epsilon(1e-6));
    CHECK(d.ds_dn == Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("near-equilibrium expansion") {
  SubsystemModel model_a({{0, 0.0}, {1, 1.0}, {2, 2.6}}, "A");
  SubsystemModel model_b({{0, 0.0}, {1, 0.8}, {2, 2.1}}, "B");

  // No transfer, no change.
  {
    ThermalParams pa(1.0, 0.5), pb(1.0, -0.5);
    const NearEqResult r = near_equilibrium_delta_i(model_a, model_b, pa, pb, 0.0, 0.0);
    CHECK(r.delta_i_exact == 0.0);
    CHECK(r.delta_i_first_order == 0.0);
    CHECK(r.residual == 0.0);
  }

  // Identical parameters: first order vanishes identically, exact is O(d^2).
  {
    ThermalParams pa(1.2, 0.4), pb(1.2, 0.4);
    const NearEqResult r =
        near_equilibrium_delta_i(model_a, model_a, pa, pb, 1e-3, 5e-4);
    CHECK(r.delta_i_first_order == 0.0);
    CHECK(std::abs(r.delta_i_exact) < 1e-4);
  }

  // Equal beta: first order is -beta (mu_A - mu_B) dn; residual scales as
  // O(dn^2), so halving dn divides it by about 4.
  {
    ThermalParams pa(1.0, 0.5), pb(1.0, -0.5);
    const NearEqResult r1 = near_equilibrium_delta_i(model_a, model_b, pa, pb, 1e-3, 0.0);
    CHECK(r1.delta_i_first_order == Approx(-1e-3).margin(1e-18));
    const NearEqResult r2 = near_equilibrium_delta_i(model_a, model_b, pa, pb, 5e-4, 0.0);
    const double ratio = r1.residual / r2.residual;
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
  }
}

TEST_CASE("near-equilibrium sign theorem at equal beta") {
  SubsystemModel model_a({{0, 0.0}, {1, 1.0}, {2, 2.6}}, "A");
  SubsystemModel model_b({{0, 0.0}, {1, 0.8}, {2, 2.1}}, "B");
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> mu_dist(-0.8, 0.8);
  std::uniform_real_distribution<double> dn_dist(-2e-3, 2e-3);
  for (int trial = 0; trial < 30; ++trial) {
    ThermalParams pa(1.0, mu_dist(rng)), pb(1.0, mu_dist(rng));
    const double dn = dn_dist(rng);
    if (std::abs(pa.mu - pb.mu) < 1e-3 || std::abs(dn) < 1e-6) continue;
    const NearEqResult r = near_equilibrium_delta_i(model_a, model_b, pa, pb, dn, 0.0);
    // sign(first_order) = -sign((mu_A - mu_B) dn) exactly.
    CHECK(r.delta_i_first_order * (pa.mu - pb.mu) * dn < 0.0);
  }
}
