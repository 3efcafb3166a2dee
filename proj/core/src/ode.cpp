#include "patchepi/ode.hpp"

#include <algorithm>
#include <cmath>

#include "patchepi/error.hpp"

namespace patchepi::ode {

namespace {

// Dormand & Prince (1980) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (fifth minus fourth order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

Dopri5::Dopri5(System f, StepControl control) : f_(std::move(f)), control_(control) {
  if (!(control_.rel_tol > 0.0) || !(control_.abs_tol > 0.0) || !(control_.max_step > 0.0)) {
    throw Error(ErrorCode::InvalidModel, "integrator tolerances and max step must be > 0");
  }
}

void Dopri5::eval(double t, const Vector& x, Vector& dx) {
  f_(t, x, dx);
  ++stats_.evaluations;
}

void Dopri5::reset(double t0, const Vector& x0) {
  t_ = t0;
  x_ = x0;
  const Eigen::Index n = x0.size();
  for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &stage_, &next_, &err_}) {
    v->resize(n);
  }
  eval(t_, x_, k1_);
  h_ = 0.0;
  stats_ = Stats{};
  stats_.evaluations = 1;
}

double Dopri5::initial_step(double span) {
  // Hairer, Norsett & Wanner, "Solving ODEs I", II.4.
  const Vector scale =
      (control_.abs_tol + control_.rel_tol * x_.array().abs()).matrix();
  const double d0 = std::sqrt(x_.cwiseQuotient(scale).squaredNorm() / x_.size());
  const double d1 = std::sqrt(k1_.cwiseQuotient(scale).squaredNorm() / x_.size());
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min({h0, span, control_.max_step});
  stage_ = x_ + h0 * k1_;
  eval(t_ + h0, stage_, k2_);
  const double d2 =
      std::sqrt((k2_ - k1_).cwiseQuotient(scale).squaredNorm() / x_.size()) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span, control_.max_step});
}

void Dopri5::advance_to(double t_target, const StepFilter& filter) {
  if (t_target <= t_) return;
  if (h_ <= 0.0) h_ = initial_step(t_target - t_);

  while (t_ < t_target) {
    const double remaining = t_target - t_;
    double h = std::min({h_, control_.max_step, remaining});
    const bool last = h >= remaining;
    if (last) h = remaining;
    if (h < 1e-14 * std::max(1.0, std::abs(t_))) {
      throw Error(ErrorCode::StepUnderflow, "step size underflow at t = " + std::to_string(t_));
    }

    stage_ = x_ + h * a21 * k1_;
    eval(t_ + c2 * h, stage_, k2_);
    stage_ = x_ + h * (a31 * k1_ + a32 * k2_);
    eval(t_ + c3 * h, stage_, k3_);
    stage_ = x_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(t_ + c4 * h, stage_, k4_);
    stage_ = x_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(t_ + c5 * h, stage_, k5_);
    stage_ = x_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(t_ + h, stage_, k6_);
    next_ = x_ + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    eval(t_ + h, next_, k7_);
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < err_.size(); ++i) {
      const double sc =
          control_.abs_tol + control_.rel_tol * std::max(std::abs(x_[i]), std::abs(next_[i]));
      const double r = err_[i] / sc;
      err_norm += r * r;
    }
    err_norm = std::sqrt(err_norm / static_cast<double>(err_.size()));
    if (!std::isfinite(err_norm)) err_norm = 1e10;

    if (err_norm > 1.0) {
      ++stats_.rejected;
      h_ = h * std::max(kMinFactor, kSafety * std::pow(err_norm, -0.2));
      continue;
    }

    StepAction action = filter ? filter(next_) : StepAction::Accept;
    if (action == StepAction::Reject) {
      ++stats_.rejected;
      h_ = 0.5 * h;
      continue;
    }

    t_ = last ? t_target : t_ + h;
    x_.swap(next_);
    if (action == StepAction::Modified) {
      eval(t_, x_, k1_);
    } else {
      k1_.swap(k7_);
    }
    ++stats_.accepted;
    const double factor =
        err_norm == 0.0 ? kMaxFactor
                        : std::clamp(kSafety * std::pow(err_norm, -0.2), kMinFactor, kMaxFactor);
    // A step shortened to hit the target says little about the next one.
    if (!last || h >= h_) h_ = h * factor;
  }
}

}  // namespace patchepi::ode
