#include "patchepi/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "patchepi/error.hpp"
#include "patchepi/invasion.hpp"
#include "patchepi/ode.hpp"

namespace patchepi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double strain_r_min(const ModelSpec& spec, Strain s) {
  return susceptible_threshold(spec, s).minCoeff();
}

void require_initial(const ModelSpec& spec, const State& initial) {
  const int k = spec.patches();
  if (initial.S.size() != k || initial.I1.size() != k || initial.I2.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "initial state length does not match patch count");
  }
  const Vector x = initial.flatten();
  if (!x.allFinite() || x.minCoeff() < 0.0) {
    throw Error(ErrorCode::InvalidModel, "initial state must be finite and nonnegative");
  }
  if (!(x.sum() > 0.0)) {
    throw Error(ErrorCode::InvalidModel, "initial state must have positive total mass");
  }
}

// Terminal window: samples with t >= t_end - 10% of the horizon.
std::size_t window_start(const Trajectory& traj) {
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  const double cut = t1 - kTerminalWindowFraction * (t1 - t0);
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), cut);
  return static_cast<std::size_t>(it - traj.times.begin());
}

}  // namespace

void validate(const IntegrationOptions& opts) {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(opts.t_end)) throw Error(ErrorCode::InvalidModel, "t_end must be > 0");
  if (!positive(opts.rel_tol) || !positive(opts.abs_tol)) {
    throw Error(ErrorCode::InvalidModel, "integration tolerances must be > 0");
  }
  if (!(opts.max_step > 0.0)) throw Error(ErrorCode::InvalidModel, "max_step must be > 0");
  if (!positive(opts.sample_every)) throw Error(ErrorCode::InvalidModel, "sample_every must be > 0");
  if (!(opts.clamp_threshold >= 0.0)) {
    throw Error(ErrorCode::InvalidModel, "clamp_threshold must be >= 0");
  }
  if (!positive(opts.max_mass_error)) {
    throw Error(ErrorCode::InvalidModel, "max_mass_error must be > 0");
  }
}

double Trajectory::max_mass_error() const {
  return mass_error.empty() ? 0.0 : *std::max_element(mass_error.begin(), mass_error.end());
}

double Trajectory::min_entry() const {
  double lo = 0.0;
  for (const State& s : states) {
    lo = std::min({lo, s.S.minCoeff(), s.I1.minCoeff(), s.I2.minCoeff()});
  }
  return lo;
}

Trajectory integrate(const ModelSpec& spec, const State& initial, const IntegrationOptions& opts) {
  require_valid(spec);
  validate(opts);
  require_initial(spec, initial);

  const Matrix lap = build_laplacian(spec.graph).matrix();
  const double r1 = strain_r_min(spec, Strain::One);
  const double r2 = strain_r_min(spec, Strain::Two);

  Trajectory traj;
  traj.mass = total_mass(initial);
  const double mass = traj.mass;

  ode::Dopri5 solver([&spec, &lap](double, const Vector& x, Vector& dx) { rhs_flat(spec, lap, x, dx); },
                     ode::StepControl{opts.rel_tol, opts.abs_tol, opts.max_step});
  solver.reset(0.0, initial.flatten());

  const double clamp = opts.clamp_threshold;
  // Clamped mass is handed back through a uniform rescale.
  const ode::StepFilter filter = [clamp](Vector& x) {
    ode::StepAction action = ode::StepAction::Accept;
    double removed = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < 0.0) {
        if (x[i] <= -clamp) return ode::StepAction::Reject;
        removed += x[i];
        x[i] = 0.0;
        action = ode::StepAction::Modified;
      }
    }
    if (action == ode::StepAction::Modified) {
      const double total = x.sum();
      if (total > 0.0) x *= (total + removed) / total;
    }
    return action;
  };

  const auto record = [&](double t, const Vector& x) {
    State s = State::unflatten(x);
    const double err = std::abs(x.sum() - mass) / mass;
    if (err > opts.max_mass_error) {
      throw Error(ErrorCode::MassDrift, "relative mass error " + std::to_string(err) +
                                            " exceeds budget at t = " + std::to_string(t));
    }
    traj.times.push_back(t);
    traj.mass_error.push_back(err);
    traj.lyapunov.push_back(lyapunov_value(s, r1, r2));
    for (Strain l : kStrains) {
      const Vector& inf = s.infected(l);
      const double hi = inf.maxCoeff();
      const double ratio = (t >= 1.0 && hi > 0.0) ? hi / inf.minCoeff() : kNaN;
      traj.harnack_ratio[index(l)].push_back(ratio);
    }
    traj.states.push_back(std::move(s));
  };

  record(0.0, solver.state());
  const auto n_samples = static_cast<long>(std::floor(opts.t_end / opts.sample_every));
  for (long i = 1; i <= n_samples; ++i) {
    const double t = static_cast<double>(i) * opts.sample_every;
    if (t >= opts.t_end) break;
    solver.advance_to(t, filter);
    record(t, solver.state());
  }
  solver.advance_to(opts.t_end, filter);
  record(opts.t_end, solver.state());

  traj.steps_accepted = solver.stats().accepted;
  traj.steps_rejected = solver.stats().rejected;
  return traj;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::DiseaseExtinction: return "DiseaseExtinction";
    case Verdict::Strain1Excluded: return "Strain1Excluded";
    case Verdict::Strain2Excluded: return "Strain2Excluded";
    case Verdict::Coexistence: return "Coexistence";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

Outcome classify_outcome(const Trajectory& traj, double eps_extinct, double eps_persist) {
  Outcome out;
  if (traj.empty()) return out;

  const std::size_t begin = window_start(traj);
  out.window.t_begin = traj.times[begin];
  out.window.min.fill(std::numeric_limits<double>::infinity());
  out.window.max.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = begin; i < traj.size(); ++i) {
    const State& s = traj.states[i];
    const std::array<const Vector*, 3> blocks{&s.S, &s.I1, &s.I2};
    for (int c = 0; c < 3; ++c) {
      out.window.min[c] = std::min(out.window.min[c], blocks[c]->minCoeff());
      out.window.max[c] = std::max(out.window.max[c], blocks[c]->maxCoeff());
    }
  }

  const double mass = traj.mass;
  std::array<bool, 2> extinct{};
  std::array<bool, 2> persistent{};
  for (int l = 0; l < 2; ++l) {
    extinct[l] = out.window.max[l + 1] < eps_extinct * mass;
    persistent[l] = out.window.min[l + 1] > eps_persist * mass;
  }

  if (persistent[0] && persistent[1]) {
    out.verdict = Verdict::Coexistence;
  } else if (extinct[0] && extinct[1]) {
    out.verdict = Verdict::DiseaseExtinction;
  } else if (extinct[0] && persistent[1]) {
    out.verdict = Verdict::Strain1Excluded;
  } else if (extinct[1] && persistent[0]) {
    out.verdict = Verdict::Strain2Excluded;
  }
  return out;
}

double lyapunov_value(const State& state, double r1_min, double r2_min) {
  return 0.5 * state.S.squaredNorm() + r1_min * state.I1.sum() + r2_min * state.I2.sum();
}

double lyapunov_dissipation(const ModelSpec& spec, const State& state) {
  for (Strain l : kStrains) {
    if (!has_constant_local_reproduction(spec, l)) {
      throw Error(ErrorCode::HypothesisViolated,
                  std::string("beta/gamma is not constant across patches for ") +
                      std::string(to_string(l)));
    }
  }
  const Matrix& rates = spec.graph.rates;
  const int k = spec.patches();
  double spatial = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double diff = state.S[i] - state.S[j];
      spatial += rates(i, j) * diff * diff;
    }
  }
  double reaction = 0.0;
  for (Strain l : kStrains) {
    const double r = strain_r_min(spec, l);
    const Vector& beta = spec.strain(l).beta;
    const Vector& inf = state.infected(l);
    for (int j = 0; j < k; ++j) {
      const double diff = state.S[j] - r;
      reaction += diff * diff * beta[j] * inf[j];
    }
  }
  return -0.5 * spec.dS * spatial - reaction;
}

HarnackReport harnack_monitor(const Trajectory& traj, double c_tilde, double floor) {
  return harnack_monitor(traj, std::array<double, 2>{c_tilde, c_tilde}, floor);
}

HarnackReport harnack_monitor(const Trajectory& traj, std::array<double, 2> c_tilde, double floor) {
  HarnackReport rep;
  rep.c_tilde = c_tilde;
  if (traj.empty()) return rep;
  const double t0 = traj.times.front();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] - t0 < 1.0) continue;
    for (Strain l : kStrains) {
      const int li = index(l);
      const Vector& inf = traj.states[i].infected(l);
      const double hi = inf.maxCoeff();
      if (!(hi > floor)) {
        ++rep.skipped[li];
        continue;
      }
      ++rep.checked[li];
      const double lo = inf.minCoeff();
      const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
      rep.worst_ratio[li] = std::max(rep.worst_ratio[li], ratio);
      if (hi > c_tilde[li] * lo) ++rep.violations[li];
    }
  }
  return rep;
}

PersistenceReport persistence_check(const Trajectory& traj, const SusceptibleBounds& bounds,
                                    bool both_r0_above_one) {
  PersistenceReport rep;
  rep.applicable = both_r0_above_one;
  if (!both_r0_above_one || traj.empty()) return rep;

  rep.observed_min = std::numeric_limits<double>::infinity();
  rep.observed_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = window_start(traj); i < traj.size(); ++i) {
    rep.observed_min = std::min(rep.observed_min, traj.states[i].S.minCoeff());
    rep.observed_max = std::max(rep.observed_max, traj.states[i].S.maxCoeff());
  }
  const double tol = 0.01 * traj.mass;
  rep.lower_margin = rep.observed_min - (bounds.min - tol);
  rep.upper_margin = (bounds.max + tol) - rep.observed_max;
  rep.holds = rep.lower_margin >= 0.0 && rep.upper_margin >= 0.0;
  return rep;
}

ModelSpec with_dispersal(ModelSpec spec, const DispersalRates& rates) {
  spec.dS = rates.dS;
  spec.strain(Strain::One).dispersal = rates.d1;
  spec.strain(Strain::Two).dispersal = rates.d2;
  return spec;
}

std::vector<DispersalRates> uniform_rates(std::span<const double> d_grid) {
  std::vector<DispersalRates> rows;
  rows.reserve(d_grid.size());
  for (double d : d_grid) rows.push_back({d, d, d});
  return rows;
}

std::vector<SweepRow> sweep_dispersal(const ModelSpec& spec_template, const State& initial,
                                      std::span<const DispersalRates> rows,
                                      const IntegrationOptions& opts) {
  const double mass = total_mass(initial);
  std::vector<SweepRow> out;
  out.reserve(rows.size());
  for (const DispersalRates& rates : rows) {
    SweepRow row;
    row.rates = rates;
    try {
      const ModelSpec spec = with_dispersal(spec_template, rates);
      require_valid(spec);
      for (Strain l : kStrains) row.r0[index(l)] = r0_strain(spec, mass, l);
      try {
        row.invasion = invasion_numbers(spec, mass);
      } catch (const Error&) {
        row.invasion.reset();
      }
      row.outcome = classify_outcome(integrate(spec, initial, opts));
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.push_back(std::move(row));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.rates < b.rates; });
  return out;
}

std::vector<SweepRow> sweep_dispersal(const ModelSpec& spec_template, double mass,
                                      std::span<const double> d_grid,
                                      const IntegrationOptions& opts) {
  const int k = spec_template.patches();
  const double share = mass / (3.0 * k);
  State initial{Vector::Constant(k, share), Vector::Constant(k, share), Vector::Constant(k, share)};
  const std::vector<DispersalRates> rows = uniform_rates(d_grid);
  return sweep_dispersal(spec_template, initial, rows, opts);
}

}  // namespace patchepi
