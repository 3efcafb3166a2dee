#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "patchepi/dynamics.hpp"
#include "patchepi/equilibria.hpp"
#include "patchepi/error.hpp"
#include "patchepi/spectral.hpp"

using namespace patchepi;
using fixtures::v2;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

void expect_kind_matches_support(const Equilibrium& e) {
  const bool i1 = e.state.I1.minCoeff() > 0.0;
  const bool i2 = e.state.I2.minCoeff() > 0.0;
  const bool z1 = e.state.I1.cwiseAbs().maxCoeff() == 0.0;
  const bool z2 = e.state.I2.cwiseAbs().maxCoeff() == 0.0;
  switch (e.kind) {
    case EquilibriumKind::DiseaseFree: EXPECT_TRUE(z1 && z2); break;
    case EquilibriumKind::Strain1: EXPECT_TRUE(i1 && z2); break;
    case EquilibriumKind::Strain2: EXPECT_TRUE(z1 && i2); break;
    case EquilibriumKind::Coexistence: EXPECT_TRUE(i1 && i2); break;
  }
}

}  // namespace

TEST(Dfe, Examples) {
  const Equilibrium e = dfe(fixtures::sim1(), 4.0);
  EXPECT_EQ(e.state.S, v2(2, 2));
  EXPECT_EQ(e.residual, 0.0);
  EXPECT_EQ(rhs(fixtures::sim1(), e.state).flatten().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dfe(fixtures::sim1(), 0.3).state.S, v2(0.15, 0.15));
  expect_kind_matches_support(e);
}

TEST(SingleStrainUniform, HomogeneousClosedForm) {
  const Equilibrium e = single_strain_ee_uniform(fixtures::homogeneous(2, 2, 1, 0.8), 4.0, Strain::One);
  EXPECT_LT((e.state.I1 - v2(1.5, 1.5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((e.state.S - v2(0.5, 0.5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(e.kind, EquilibriumKind::Strain1);
  EXPECT_LT(e.residual, 1e-12);
  expect_kind_matches_support(e);
}

TEST(SingleStrainUniform, Sim5SmallDispersal) {
  const Equilibrium e = single_strain_ee_uniform(fixtures::sim5(0.005), 11.0, Strain::One);
  EXPECT_LT((e.state.I1 - v2(4.5, 4.5)).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT(e.residual, 1e-10);
}

TEST(SingleStrainUniform, SmallDispersalProfile) {
  const ModelSpec spec = fixtures::sim5(1e-4);
  for (Strain s : kStrains) {
    const Equilibrium e = single_strain_ee_uniform(spec, 11.0, s);
    const Vector limit = (Vector::Constant(2, 5.5) - susceptible_threshold(spec, s)).cwiseMax(0.0);
    EXPECT_LT((e.state.infected(s) - limit).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(SingleStrainUniform, ErrorsBelowThresholdAndWithoutUniformDispersal) {
  ModelSpec spec = fixtures::homogeneous(2, 2, 1, 1);
  // R0 = (N/2) * 2 = 0.9 at N = 0.9.
  EXPECT_EQ(code_of([&] { single_strain_ee_uniform(spec, 0.9, Strain::One); }),
            ErrorCode::NoPositiveSolution);
  spec.dS = 2.0;
  EXPECT_EQ(code_of([&] { single_strain_ee_uniform(spec, 4.0, Strain::One); }),
            ErrorCode::HypothesisViolated);
}

TEST(SingleStrainUniform, ConstantLocalReproductionGivesExactProfile) {
  // Strain 1 of sim5 has beta = gamma, so r_min = 1 and E1* = (1, N/k - 1, 0).
  for (double d : {0.01, 1.0, 30.0}) {
    const Equilibrium e = single_strain_ee_uniform(fixtures::sim5(d), 11.0, Strain::One);
    EXPECT_LT((e.state.S - Vector::Constant(2, 1.0)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((e.state.I1 - Vector::Constant(2, 4.5)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(e.state.I2.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SingleStrain, Sim1b) {
  const ModelSpec spec = fixtures::sim1();
  const Equilibrium e = single_strain_ee(spec, 1.5, Strain::One);
  EXPECT_LT(e.residual, 1e-10);
  EXPECT_LT(rhs(spec, e.state).flatten().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GT(e.state.I1.minCoeff(), 0.0);
  EXPECT_NEAR(total_mass(e.state), 1.5, 1e-10 * 1.5);
  expect_kind_matches_support(e);
}

TEST(SingleStrain, HomogeneousWithUnequalDispersal) {
  ModelSpec spec = fixtures::homogeneous(3, 2, 1, 0.5);
  spec.dS = 7.0;
  const Equilibrium e = single_strain_ee(spec, 6.0, Strain::Two);
  EXPECT_LT((e.state.I2 - Vector::Constant(3, 1.5)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((e.state.S - Vector::Constant(3, 0.5)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SingleStrain, BelowThresholdRejected) {
  EXPECT_EQ(code_of([] { single_strain_ee(fixtures::sim1(), 0.3, Strain::One); }),
            ErrorCode::NoPositiveSolution);
}

TEST(SingleStrainProperty, AgreesWithUniformSolver) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int trial = 0; checked < 40 && trial < 400; ++trial) {
    const int k = 2 + trial % 3;
    ModelSpec spec = fixtures::random_spec(rng, k, {0.2, 5.0, 0.05, 5.0, 0.1, 5.0});
    const double d = spec.dS;
    spec.strains[0].dispersal = spec.strains[1].dispersal = d;
    const Strain s = trial % 2 ? Strain::One : Strain::Two;
    const double mass = k * fixtures::log_uniform(rng, 1.0, 20.0);
    if (!(r0_strain(spec, mass, s) > 1.05)) continue;
    ++checked;
    const Equilibrium a = single_strain_ee_uniform(spec, mass, s);
    const Equilibrium b = single_strain_ee(spec, mass, s);
    EXPECT_LT(a.residual, 1e-10);
    EXPECT_LT(b.residual, 1e-10);
    EXPECT_LT((a.state.flatten() - b.state.flatten()).lpNorm<Eigen::Infinity>(), 1e-9) << "trial " << trial;
  }
  EXPECT_EQ(checked, 40);
}

TEST(Coexistence, Sim5FromTrajectoryEndpoint) {
  const ModelSpec spec = fixtures::sim5(0.005);
  const State init{v2(1, 2), v2(2, 1), v2(4, 1)};
  const Trajectory traj = integrate(spec, init, {});
  const std::vector<State> seeds{traj.states.back()};
  const std::vector<Equilibrium> found = coexistence_search(spec, 11.0, seeds);
  ASSERT_FALSE(found.empty());
  for (const Equilibrium& e : found) {
    EXPECT_EQ(e.kind, EquilibriumKind::Coexistence);
    EXPECT_LT(e.residual, 1e-10);
    expect_kind_matches_support(e);
    EXPECT_EQ(stability(spec, e).stability, Stability::LinearlyStable);
  }
}

TEST(Coexistence, IdenticalStrainsLieOnTheSingleStrainProfile) {
  ModelSpec spec = fixtures::sim1();
  spec.strains[1] = spec.strains[0];
  const double mass = 4.0;
  const Equilibrium single = single_strain_ee(spec, mass, Strain::One);
  State seed = single.state;
  seed.I2 = 0.4 * single.state.I1;
  seed.I1 = 0.6 * single.state.I1;
  const std::vector<State> seeds{seed};
  const std::vector<Equilibrium> found = coexistence_search(spec, mass, seeds);
  ASSERT_FALSE(found.empty());
  for (const Equilibrium& e : found) {
    EXPECT_LT((e.state.I1 + e.state.I2 - single.state.I1).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(stability(spec, e).stability, Stability::Marginal);
  }
}

TEST(Coexistence, EmptyBelowThreshold) {
  const ModelSpec spec = fixtures::sim1();
  const std::vector<State> seeds{State{v2(0.05, 0.05), v2(0.05, 0.05), v2(0.05, 0.05)}};
  EXPECT_TRUE(coexistence_search(spec, 0.3, seeds).empty());
}

TEST(Jacobian, DecoupledBlockAtDfe) {
  const ModelSpec spec = fixtures::sim1();
  const Matrix j = jacobian(spec, dfe(spec, 1.5).state);
  const Matrix lap = build_laplacian(spec.graph).matrix();
  Matrix expected = spec.strains[0].dispersal * lap;
  expected.diagonal() += 0.75 * spec.strains[0].beta - spec.strains[0].gamma;
  EXPECT_LT((j.block(2, 2, 2, 2) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(j.block(2, 0, 2, 2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(j.block(2, 4, 2, 2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(JacobianProperty, CentralDifferencesAndConservation) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 4;
    const ModelSpec spec = fixtures::random_spec(rng, k);
    const State s = fixtures::random_state(rng, k);
    const Matrix j = jacobian(spec, s);
    const Vector x = s.flatten();
    const double h = 1e-7;
    Matrix fd(3 * k, 3 * k);
    for (int c = 0; c < 3 * k; ++c) {
      Vector xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      fd.col(c) = (rhs(spec, State::unflatten(xp)).flatten() - rhs(spec, State::unflatten(xm)).flatten()) / (2 * h);
    }
    EXPECT_LT((fd - j).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_LT((Vector::Ones(3 * k).transpose() * j).cwiseAbs().maxCoeff(), 1e-12 * (1 + j.cwiseAbs().maxCoeff()));
  }
}

TEST(Stability, Sim1Dfe) {
  const ModelSpec spec = fixtures::sim1();
  EXPECT_EQ(stability(spec, dfe(spec, 0.3)).stability, Stability::LinearlyStable);
  EXPECT_EQ(stability(spec, dfe(spec, 1.5)).stability, Stability::Unstable);
  EXPECT_EQ(stability(spec, dfe(spec, 5.0)).stability, Stability::Unstable);
}

TEST(Stability, StructuralZeroProjectedOut) {
  const ModelSpec spec = fixtures::sim1();
  for (const Equilibrium& e : {dfe(spec, 0.3), single_strain_ee(spec, 1.5, Strain::One)}) {
    const Eigen::VectorXcd full = Eigen::EigenSolver<Matrix>(jacobian(spec, e.state), false).eigenvalues();
    EXPECT_LT(full.cwiseAbs().minCoeff(), 1e-9);
    EXPECT_EQ(projected_spectrum(spec, e.state).size(), 5);
  }
}

TEST(Stability, RejectsNonEquilibrium) {
  Equilibrium e;
  e.state = State{v2(1, 2), v2(1, 1), v2(1, 1)};
  e.residual = 1.0;
  EXPECT_EQ(code_of([&] { stability(fixtures::sim1(), e); }), ErrorCode::WrongEquilibrium);
}

TEST(Stability, Sim2AndSim3StrainOne) {
  const ModelSpec sim2 = fixtures::two_patch(v2(4, 6), v2(2, 3), 1, v2(1, 4), v2(2, 3), 2, 3);
  EXPECT_EQ(stability(sim2, single_strain_ee(sim2, 4.0, Strain::One)).stability, Stability::LinearlyStable);
  const ModelSpec sim3 = fixtures::two_patch(v2(2.0 / 3, 1), v2(2, 3), 1, v2(1, 4), v2(2, 3), 2, 5);
  EXPECT_EQ(stability(sim3, single_strain_ee(sim3, 7.0, Strain::One)).stability, Stability::Unstable);
}
