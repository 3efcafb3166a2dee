#include <gtest/gtest.h>

#include <cmath>

#include "patchepi/error.hpp"
#include "patchepi/ode.hpp"

using namespace patchepi;
using namespace patchepi::ode;

TEST(Dopri5, ExponentialDecay) {
  Dopri5 solver([](double, const Vector& x, Vector& dx) { dx = -0.7 * x; }, {1e-10, 1e-12});
  Vector x0(1);
  x0 << 2.0;
  solver.reset(0.0, x0);
  solver.advance_to(5.0);
  EXPECT_EQ(solver.time(), 5.0);
  EXPECT_NEAR(solver.state()[0], 2.0 * std::exp(-3.5), 1e-9);
}

TEST(Dopri5, HarmonicOscillatorLandsOnSampleTimes) {
  Dopri5 solver([](double, const Vector& x, Vector& dx) { dx.resize(2); dx << x[1], -x[0]; },
                {1e-10, 1e-12, 0.5});
  Vector x0(2);
  x0 << 1.0, 0.0;
  solver.reset(0.0, x0);
  for (int i = 1; i <= 20; ++i) {
    solver.advance_to(0.37 * i);
    EXPECT_EQ(solver.time(), 0.37 * i);
    EXPECT_NEAR(solver.state()[0], std::cos(0.37 * i), 1e-8);
    EXPECT_NEAR(solver.state()[1], -std::sin(0.37 * i), 1e-8);
  }
  EXPECT_GT(solver.stats().accepted, 0);
}

TEST(Dopri5, LinearInvariantPreserved) {
  // x0 + x1 is conserved by this flow; RK methods keep linear invariants.
  Dopri5 solver([](double, const Vector& x, Vector& dx) { dx.resize(2); dx << -x[0] * x[1], x[0] * x[1]; },
                {1e-8, 1e-10});
  Vector x0(2);
  x0 << 3.0, 0.01;
  solver.reset(0.0, x0);
  solver.advance_to(50.0);
  EXPECT_NEAR(solver.state().sum(), 3.01, 1e-13);
}

TEST(Dopri5, FilterRejectShrinksStep) {
  int rejections = 0;
  Dopri5 solver([](double, const Vector& x, Vector& dx) { dx = -x; }, {1e-8, 1e-10});
  Vector x0(1);
  x0 << 1.0;
  solver.reset(0.0, x0);
  solver.advance_to(1.0, [&](Vector&) {
    if (rejections < 3) {
      ++rejections;
      return StepAction::Reject;
    }
    return StepAction::Accept;
  });
  EXPECT_EQ(rejections, 3);
  EXPECT_NEAR(solver.state()[0], std::exp(-1.0), 1e-7);
}

TEST(Dopri5, UnderflowReported) {
  Dopri5 solver([](double, const Vector& x, Vector& dx) { dx = x; }, {1e-8, 1e-10});
  Vector x0(1);
  x0 << 1.0;
  solver.reset(0.0, x0);
  try {
    solver.advance_to(1.0, [](Vector&) { return StepAction::Reject; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
  }
}

TEST(Dopri5, InvalidControlRejected) {
  EXPECT_THROW(Dopri5([](double, const Vector&, Vector&) {}, StepControl{0.0, 1e-10}), Error);
}
