#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "patchepi/dynamics.hpp"
#include "patchepi/equilibria.hpp"
#include "patchepi/error.hpp"
#include "patchepi/spectral.hpp"

using namespace patchepi;
using fixtures::v2;

namespace {

State sim45_initial() { return State{v2(1, 2), v2(2, 1), v2(4, 1)}; }

IntegrationOptions horizon(double t_end) {
  IntegrationOptions o;
  o.t_end = t_end;
  return o;
}

}  // namespace

TEST(Integrate, DfeIsConstant) {
  const ModelSpec spec = fixtures::sim1();
  const State s = disease_free_state(2, 4.0);
  const Trajectory traj = integrate(spec, s, horizon(50));
  for (const State& x : traj.states) EXPECT_EQ(x.flatten(), s.flatten());
}

TEST(Integrate, Sim1aExtinction) {
  const ModelSpec spec = fixtures::sim1();
  const Trajectory traj = integrate(spec, State{v2(0.05, 0.05), v2(0.05, 0.05), v2(0.05, 0.05)}, horizon(500));
  const State& end = traj.states.back();
  EXPECT_LT(end.I1.lpNorm<Eigen::Infinity>() + end.I2.lpNorm<Eigen::Infinity>(), 1e-6 * 0.3);
}

TEST(Integrate, ZeroStrainStaysExactlyZero) {
  const ModelSpec spec = fixtures::sim1();
  const Trajectory traj = integrate(spec, State{v2(1, 2), v2(0.5, 0.5), v2(0, 0)}, horizon(300));
  for (const State& x : traj.states) EXPECT_EQ(x.I2.cwiseAbs().maxCoeff(), 0.0);
  const Trajectory traj1 = integrate(spec, State{v2(1, 2), v2(0, 0), v2(0.5, 0.5)}, horizon(300));
  for (const State& x : traj1.states) EXPECT_EQ(x.I1.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Integrate, SamplingGrid) {
  IntegrationOptions o = horizon(10.5);
  o.sample_every = 2.0;
  const Trajectory traj = integrate(fixtures::sim1(), sim45_initial(), o);
  const std::vector<double> expected{0, 2, 4, 6, 8, 10, 10.5};
  EXPECT_EQ(traj.times, expected);
  EXPECT_EQ(traj.lyapunov.size(), traj.size());
  EXPECT_EQ(traj.harnack_ratio[0].size(), traj.size());
  EXPECT_TRUE(std::isnan(traj.harnack_ratio[0][0]));
}

TEST(Integrate, InputValidation) {
  const ModelSpec spec = fixtures::sim1();
  EXPECT_THROW(integrate(spec, State::zeros(2), {}), Error);
  EXPECT_THROW(integrate(spec, State::zeros(3), {}), Error);
  EXPECT_THROW(integrate(spec, State{v2(-1, 2), v2(1, 1), v2(1, 1)}, {}), Error);
  IntegrationOptions bad;
  bad.t_end = -1;
  EXPECT_THROW(integrate(spec, sim45_initial(), bad), Error);
  bad = {};
  bad.rel_tol = 0;
  EXPECT_THROW(integrate(spec, sim45_initial(), bad), Error);
}

TEST(Integrate, MassDriftAborts) {
  IntegrationOptions o = horizon(100);
  o.rel_tol = 1e-3;
  o.abs_tol = 1e-3;
  o.max_mass_error = 1e-30;
  try {
    integrate(fixtures::sim1(), sim45_initial(), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MassDrift);
  }
}

TEST(IntegrateProperty, MassAndPositivity) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 2 + trial % 4;
    const ModelSpec spec = fixtures::random_spec(rng, k, {0.2, 5.0, 0.05, 2.0, 0.1, 2.0});
    const State s = fixtures::random_state(rng, k);
    const Trajectory traj = integrate(spec, s, horizon(200));
    EXPECT_LE(traj.max_mass_error(), 1e-8);
    EXPECT_GE(traj.min_entry(), -1e-14);
    for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj.times[i], traj.times[i - 1]);
  }
}

TEST(IntegrateProperty, EquilibriaStayPut) {
  const ModelSpec spec = fixtures::sim5(0.5);
  for (const Equilibrium& e : {single_strain_ee_uniform(spec, 11.0, Strain::One),
                               single_strain_ee_uniform(spec, 11.0, Strain::Two)}) {
    IntegrationOptions o = horizon(100);
    o.rel_tol = 1e-10;
    o.abs_tol = 1e-12;
    const Trajectory traj = integrate(spec, e.state, o);
    for (const State& x : traj.states) {
      // Both single-strain states are unstable here, but the zero strain stays zero and the
      // equilibrium is invariant up to integration error.
      EXPECT_LT((x.flatten() - e.state.flatten()).lpNorm<Eigen::Infinity>(), 1e-6);
    }
  }
  const Equilibrium d = dfe(fixtures::sim1(), 0.3);
  const Trajectory traj = integrate(fixtures::sim1(), d.state, horizon(100));
  EXPECT_LT((traj.states.back().flatten() - d.state.flatten()).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Classify, Sim1b) {
  const Trajectory traj =
      integrate(fixtures::sim1(), State{v2(0.25, 0.25), v2(0.25, 0.25), v2(0.25, 0.25)}, {});
  EXPECT_EQ(classify_outcome(traj).verdict, Verdict::Strain2Excluded);
}

TEST(Classify, Sim5SmallDispersal) {
  const Trajectory traj = integrate(fixtures::sim5(0.005), sim45_initial(), {});
  const Outcome o = classify_outcome(traj);
  EXPECT_EQ(o.verdict, Verdict::Coexistence);
  EXPECT_NEAR(o.window.t_begin, 1800.0, 1e-12);
  EXPECT_GT(o.window.min[1], 1e-3 * 11);
  EXPECT_GT(o.window.min[2], 1e-3 * 11);
}

TEST(Classify, ZeroInfection) {
  const Trajectory traj = integrate(fixtures::sim1(), State{v2(1, 2), v2(0, 0), v2(0, 0)}, horizon(100));
  EXPECT_EQ(classify_outcome(traj).verdict, Verdict::DiseaseExtinction);
}

TEST(Classify, UndeterminedWhenNeitherThreshold) {
  Trajectory traj;
  traj.mass = 1.0;
  for (int i = 0; i <= 10; ++i) {
    traj.times.push_back(i);
    traj.states.push_back(State{v2(1, 1), v2(1e-4, 1e-4), v2(0, 0)});
  }
  EXPECT_EQ(classify_outcome(traj).verdict, Verdict::Undetermined);
  EXPECT_EQ(classify_outcome(Trajectory{}).verdict, Verdict::Undetermined);
}

TEST(Lyapunov, DfeValue) {
  EXPECT_DOUBLE_EQ(lyapunov_value(disease_free_state(2, 4.0), 0.3, 0.7), 4.0);
}

TEST(Lyapunov, DissipationVanishesAtHomogeneousThreshold) {
  // Both strains with beta/gamma = 2 everywhere, so r1_min = r2_min = 0.5.
  const ModelSpec spec = fixtures::two_patch(v2(2, 4), v2(1, 2), 1, v2(1, 3), v2(0.5, 1.5), 2, 3);
  const State s{v2(0.5, 0.5), v2(0.3, 0.9), v2(1.1, 0.2)};
  EXPECT_EQ(lyapunov_dissipation(spec, s), 0.0);
  IntegrationOptions o = horizon(5);
  const Trajectory traj = integrate(spec, s, o);
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_NEAR(traj.lyapunov[i], traj.lyapunov[0], 1e-10);
}

TEST(Lyapunov, DissipationIsNonpositive) {
  const ModelSpec spec = fixtures::two_patch(v2(2.0 / 3, 1), v2(2, 3), 1, v2(1, 2), v2(2, 4), 2, 5);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    EXPECT_LE(lyapunov_dissipation(spec, fixtures::random_state(rng, 2, 0.0, 5.0)), 0.0);
  }
}

TEST(Lyapunov, DissipationMatchesFiniteDifference) {
  // Sim3 parameters with strain 2 made constant too.
  const ModelSpec spec = fixtures::two_patch(v2(2.0 / 3, 1), v2(2, 3), 1, v2(1, 1.5), v2(2, 3), 2, 5);
  IntegrationOptions o = horizon(2);
  o.sample_every = 1e-3;
  o.rel_tol = 1e-12;
  o.abs_tol = 1e-14;
  const Trajectory traj = integrate(spec, State{v2(1, 2), v2(1, 1), v2(1, 1)}, o);
  int good = 0, total = 0;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double fd = (traj.lyapunov[i + 1] - traj.lyapunov[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
    const double exact = lyapunov_dissipation(spec, traj.states[i]);
    ++total;
    if (std::abs(fd - exact) <= 1e-4 * std::abs(exact)) ++good;
  }
  EXPECT_GE(good, 0.95 * total);
}

TEST(Lyapunov, NonConstantReproductionRejected) {
  try {
    lyapunov_dissipation(fixtures::sim1(), State{v2(1, 2), v2(1, 1), v2(1, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisViolated);
  }
}

TEST(Harnack, Sim1bNoViolations) {
  const ModelSpec spec = fixtures::sim1();
  const Trajectory traj = integrate(spec, State{v2(0.25, 0.25), v2(0.25, 0.25), v2(0.25, 0.25)}, {});
  const Laplacian lap = build_laplacian(spec.graph);
  const double m = harnack_growth_bound(spec, 1.5);
  const HarnackReport rep =
      harnack_monitor(traj, {harnack_constant(1, m, lap), harnack_constant(2, m, lap)}, 1e-8);
  EXPECT_EQ(rep.total_violations(), 0);
  EXPECT_GT(rep.checked[0], 1900);
}

TEST(Harnack, HomogeneousRatioIsOne) {
  const ModelSpec spec = fixtures::homogeneous(3, 2, 1, 1);
  const Trajectory traj =
      integrate(spec, State{Vector::Constant(3, 1), Vector::Constant(3, 0.5), Vector::Constant(3, 0.2)}, horizon(20));
  const HarnackReport rep = harnack_monitor(traj, 1.0 + 1e-12, 0.0);
  EXPECT_EQ(rep.total_violations(), 0);
  EXPECT_NEAR(rep.worst_ratio[0], 1.0, 1e-12);
}

TEST(Harnack, ZeroStrainSkipped) {
  const Trajectory traj = integrate(fixtures::sim1(), State{v2(1, 2), v2(0.5, 0.5), v2(0, 0)}, horizon(20));
  const HarnackReport rep = harnack_monitor(traj, 1e6, 0.0);
  EXPECT_EQ(rep.checked[1], 0);
  EXPECT_EQ(rep.skipped[1], 20);
  EXPECT_EQ(rep.total_violations(), 0);
}

TEST(Harnack, ViolationDetected) {
  Trajectory traj;
  traj.mass = 1;
  traj.times = {0, 1, 2};
  for (int i = 0; i < 3; ++i) traj.states.push_back(State{v2(1, 1), v2(1, 0.1), v2(1, 1)});
  const HarnackReport rep = harnack_monitor(traj, 5.0, 0.0);
  EXPECT_EQ(rep.violations[0], 2);
  EXPECT_EQ(rep.violations[1], 0);
  EXPECT_NEAR(rep.worst_ratio[0], 10.0, 1e-12);
}

TEST(Persistence, Sim1c) {
  const ModelSpec spec = fixtures::sim1();
  const Trajectory traj = integrate(spec, State{v2(1, 2), v2(0.5, 0.5), v2(0.5, 0.5)}, {});
  ASSERT_GT(r0_strain(spec, 5.0, Strain::Two), 1.0);
  const SusceptibleBounds b = theoretical_s_bounds(spec);
  const PersistenceReport rep = persistence_check(traj, b, true);
  EXPECT_TRUE(rep.applicable);
  EXPECT_TRUE(rep.holds);
  EXPECT_GE(rep.observed_min, 0.5 - 0.05);
  EXPECT_LE(rep.observed_max, 2.0 + 0.05);
}

TEST(Persistence, NotApplicable) {
  const Trajectory traj = integrate(fixtures::sim1(), State{v2(0.05, 0.05), v2(0.05, 0.05), v2(0.05, 0.05)}, horizon(200));
  const PersistenceReport rep = persistence_check(traj, theoretical_s_bounds(fixtures::sim1()), false);
  EXPECT_FALSE(rep.applicable);
  EXPECT_TRUE(rep.holds);
}

TEST(Sweep, Sim5Grid) {
  const std::vector<double> grid{40, 0.005, 35};
  const std::vector<DispersalRates> rows = uniform_rates(grid);
  const std::vector<SweepRow> out = sweep_dispersal(fixtures::sim5(1), sim45_initial(), rows);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].rates.dS, 0.005);
  EXPECT_EQ(out[2].rates.dS, 40);
  for (const SweepRow& r : out) {
    ASSERT_FALSE(r.failed()) << r.error;
    EXPECT_EQ(r.outcome->verdict, Verdict::Coexistence);
    ASSERT_TRUE(r.invasion.has_value());
    EXPECT_GT((*r.invasion)[0], 1.0);
    EXPECT_GT((*r.invasion)[1], 1.0);
  }
}

TEST(Sweep, Sim4LargeRows) {
  const std::vector<DispersalRates> rows{{35, 35, 2}, {40, 40, 2}};
  for (const SweepRow& r : sweep_dispersal(fixtures::sim5(1), sim45_initial(), rows)) {
    ASSERT_FALSE(r.failed()) << r.error;
    EXPECT_EQ(r.outcome->verdict, Verdict::Strain1Excluded);
  }
}

TEST(Sweep, BelowThresholdRowAndFailedRow) {
  const std::vector<double> grid{1.0};
  const std::vector<SweepRow> out = sweep_dispersal(fixtures::sim1(), 0.3, grid);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].outcome->verdict, Verdict::DiseaseExtinction);
  EXPECT_FALSE(out[0].invasion.has_value());

  const std::vector<DispersalRates> rows{{1, 1, 1}, {-1, 1, 1}};
  const std::vector<SweepRow> mixed = sweep_dispersal(fixtures::sim1(), sim45_initial(), rows, horizon(50));
  ASSERT_EQ(mixed.size(), 2u);
  EXPECT_TRUE(mixed[0].failed());
  EXPECT_FALSE(mixed[1].failed());
}

TEST(IntegrateProperty, LongExtinctionKeepsMass) {
  std::mt19937_64 rng(20240404);
  const ModelSpec spec = fixtures::random_spec(rng, 5, {0.2, 5.0, 0.05, 1.0, 0.1, 1.0});
  const double mass = 0.3 / r0(spec, 5.0);
  State s = fixtures::random_state(rng, 5);
  const double scale = mass / total_mass(s);
  s.S *= scale;
  s.I1 *= scale;
  s.I2 *= scale;
  IntegrationOptions o = horizon(5000);
  o.sample_every = 50;
  const Trajectory traj = integrate(spec, s, o);
  EXPECT_LE(traj.max_mass_error(), 1e-10);
  EXPECT_GE(traj.min_entry(), 0.0);
}
