#include "patchepi/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "newton.hpp"
#include "patchepi/error.hpp"
#include "patchepi/ode.hpp"
#include "patchepi/spectral.hpp"

namespace patchepi {

std::string_view to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::DiseaseFree: return "DFE";
    case EquilibriumKind::Strain1: return "Strain1EE";
    case EquilibriumKind::Strain2: return "Strain2EE";
    case EquilibriumKind::Coexistence: return "CoexistenceEE";
  }
  return "Unknown";
}

std::string_view to_string(Stability stability) {
  switch (stability) {
    case Stability::LinearlyStable: return "LinearlyStable";
    case Stability::Unstable: return "Unstable";
    case Stability::Marginal: return "Marginal";
    case Stability::NotAssessed: return "NotAssessed";
  }
  return "Unknown";
}

EquilibriumKind endemic_kind(Strain s) {
  return s == Strain::One ? EquilibriumKind::Strain1 : EquilibriumKind::Strain2;
}

namespace {

constexpr int kRestarts = 8;
constexpr double kMarchHorizon = 1000.0;
constexpr double kNewtonAccept = 1e-11;

double mass_of(const Vector& x) { return x.sum(); }

/// Flat residual of the full system with row k-1 replaced by the mass constraint.
struct FullSystem {
  const ModelSpec& spec;
  Matrix lap;
  double mass;

  void residual(const Vector& x, Vector& f) const {
    rhs_flat(spec, lap, x, f);
    f[lap.rows() - 1] = mass_of(x) - mass;
  }

  void jac(const Vector& x, Matrix& j) const {
    j = jacobian(spec, State::unflatten(x));
    j.row(lap.rows() - 1).setOnes();
  }
};

/// Same, restricted to the (S, I_s) block with the other strain absent.
struct SingleSystem {
  const ModelSpec& spec;
  Matrix lap;
  double mass;
  Strain strain;

  Vector embed(const Vector& y) const {
    const Eigen::Index k = lap.rows();
    Vector x = Vector::Zero(3 * k);
    x.segment(0, k) = y.segment(0, k);
    x.segment((index(strain) + 1) * k, k) = y.segment(k, k);
    return x;
  }

  Vector restrict(const Vector& x) const {
    const Eigen::Index k = lap.rows();
    Vector y(2 * k);
    y << x.segment(0, k), x.segment((index(strain) + 1) * k, k);
    return y;
  }

  void residual(const Vector& y, Vector& f) const {
    const Eigen::Index k = lap.rows();
    const Vector x = embed(y);
    Vector fx(3 * k);
    rhs_flat(spec, lap, x, fx);
    f = restrict(fx);
    f[k - 1] = mass_of(y) - mass;
  }

  void jac(const Vector& y, Matrix& j) const {
    const Eigen::Index k = lap.rows();
    const Matrix full = jacobian(spec, State::unflatten(embed(y)));
    const Eigen::Index off = (index(strain) + 1) * k;
    j.resize(2 * k, 2 * k);
    j.block(0, 0, k, k) = full.block(0, 0, k, k);
    j.block(0, k, k, k) = full.block(0, off, k, k);
    j.block(k, 0, k, k) = full.block(off, 0, k, k);
    j.block(k, k, k, k) = full.block(off, off, k, k);
    j.row(k - 1).setOnes();
  }
};

bool positive_block(const Vector& v, double mass) {
  return v.minCoeff() > 1e-12 * std::max(mass, 1.0) && v.maxCoeff() > 1e-9 * mass;
}

Vector rescale_to_mass(Vector x, double mass) {
  const double total = x.sum();
  if (total > 0.0) x *= mass / total;
  return x;
}

Vector perturb(const Vector& x, double mass, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = std::max(y[i], 1e-6 * mass) * std::exp(u(rng));
  return rescale_to_mass(y, mass);
}

/// Integrates the full system; used when Newton cannot find the root.
Vector march(const ModelSpec& spec, const Matrix& lap, const Vector& x0, double horizon) {
  ode::Dopri5 solver(
      [&](double, const Vector& x, Vector& dx) { rhs_flat(spec, lap, x, dx); },
      ode::StepControl{1e-10, 1e-12, horizon});
  solver.reset(0.0, x0);
  solver.advance_to(horizon, [](Vector& x) {
    if (x.minCoeff() < 0.0) {
      x = x.cwiseMax(0.0);
      return ode::StepAction::Modified;
    }
    return ode::StepAction::Accept;
  });
  return solver.state();
}

Equilibrium make_equilibrium(const ModelSpec& spec, const Vector& x, EquilibriumKind kind,
                             double mass) {
  Equilibrium eq;
  eq.state = State::unflatten(x);
  eq.kind = kind;
  eq.residual = equilibrium_residual(spec, eq.state, mass);
  return eq;
}

void require_endemic_threshold(const ModelSpec& spec, double mass, Strain s) {
  if (!(r0_strain(spec, mass, s) > 1.0)) {
    throw Error(ErrorCode::NoPositiveSolution,
                std::string(to_string(s)) + ": R0 <= 1, no positive endemic equilibrium");
  }
}

}  // namespace

double equilibrium_residual(const ModelSpec& spec, const State& state, double mass) {
  const StateDerivative d = rhs(spec, state);
  const double field = std::max({d.S.lpNorm<Eigen::Infinity>(), d.I1.lpNorm<Eigen::Infinity>(),
                                 d.I2.lpNorm<Eigen::Infinity>()});
  return std::max(field, std::abs(total_mass(state) - mass));
}

Equilibrium dfe(const ModelSpec& spec, double mass) {
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidModel, "total mass must be > 0");
  Equilibrium eq;
  eq.state = disease_free_state(spec.patches(), mass);
  eq.kind = EquilibriumKind::DiseaseFree;
  eq.residual = 0.0;
  return eq;
}

Equilibrium single_strain_ee_uniform(const ModelSpec& spec, double mass, Strain s) {
  if (!has_uniform_dispersal(spec)) {
    throw Error(ErrorCode::HypothesisViolated, "uniform dispersal dS == d1 == d2 is required");
  }
  require_endemic_threshold(spec, mass, s);

  const int k = spec.patches();
  const Matrix lap = build_laplacian(spec.graph).matrix();
  const StrainParams& p = spec.strain(s);
  const double level = mass / k;

  auto residual = [&](const Vector& infected, Vector& f) {
    f.noalias() = p.dispersal * (lap * infected);
    f.array() += (p.beta.array() * (level - infected.array()) - p.gamma.array()) * infected.array();
  };
  auto jac = [&](const Vector& infected, Matrix& j) {
    j = p.dispersal * lap;
    j.diagonal().array() += p.beta.array() * (level - 2.0 * infected.array()) - p.gamma.array();
  };

  auto to_state = [&](const Vector& infected) {
    State st = State::zeros(k);
    st.S = Vector::Constant(k, level) - infected;
    st.infected(s) = infected;
    return st;
  };
  auto accept = [&](const detail::NewtonResult& r) {
    return r.residual < kNewtonAccept && positive_block(r.x, mass) && r.x.maxCoeff() < level;
  };

  const double r_max = susceptible_threshold(spec, s).maxCoeff();
  Vector guess = Vector::Constant(k, std::max(level - r_max, 0.0) + 1e-3);
  detail::NewtonResult sol = detail::damped_newton(residual, jac, guess);
  if (!accept(sol)) {
    // The logistic flow is monotone and converges to the positive root.
    State start = to_state(Vector::Constant(k, 0.5 * level));
    const Vector marched = march(spec, lap, start.flatten(), kMarchHorizon);
    sol = detail::damped_newton(residual, jac, State::unflatten(marched).infected(s));
  }
  if (!accept(sol)) {
    throw Error(ErrorCode::ConvergenceFailure, "logistic solve did not converge");
  }

  Equilibrium eq;
  eq.state = to_state(sol.x);
  eq.kind = endemic_kind(s);
  eq.residual = equilibrium_residual(spec, eq.state, mass);
  if (!(eq.residual < kEquilibriumTolerance)) {
    throw Error(ErrorCode::ConvergenceFailure, "logistic root residual above tolerance");
  }
  return eq;
}

Equilibrium single_strain_ee(const ModelSpec& spec, double mass, Strain s,
                             const std::optional<State>& seed, std::uint64_t rng_seed) {
  require_endemic_threshold(spec, mass, s);
  const int k = spec.patches();
  SingleSystem sys{spec, build_laplacian(spec.graph).matrix(), mass, s};
  auto residual = [&](const Vector& y, Vector& f) { sys.residual(y, f); };
  auto jac = [&](const Vector& y, Matrix& j) { sys.jac(y, j); };

  Vector start;
  if (seed) {
    start = sys.restrict(seed->flatten());
  } else {
    const double level = mass / k;
    const Vector thr = susceptible_threshold(spec, s);
    start.resize(2 * k);
    for (int j = 0; j < k; ++j) {
      start[j] = std::min(thr[j], level);
      start[k + j] = std::max(level - thr[j], 0.0) + 0.01 * level;
    }
  }
  start = rescale_to_mass(start.cwiseMax(0.0), mass);

  auto accept = [&](const detail::NewtonResult& r) {
    return r.residual < kNewtonAccept && positive_block(r.x.segment(k, k), mass) &&
           r.x.segment(0, k).minCoeff() > 0.0;
  };
  auto finish = [&](const detail::NewtonResult& r) {
    Equilibrium eq = make_equilibrium(spec, sys.embed(r.x), endemic_kind(s), mass);
    if (!(eq.residual < kEquilibriumTolerance)) {
      throw Error(ErrorCode::ConvergenceFailure, "single-strain root residual above tolerance");
    }
    return eq;
  };

  std::mt19937_64 rng(rng_seed);
  Vector attempt = start;
  for (int restart = 0; restart <= kRestarts; ++restart) {
    const detail::NewtonResult sol = detail::damped_newton(residual, jac, attempt);
    if (accept(sol)) return finish(sol);
    attempt = perturb(start, mass, rng);
  }

  // Fall back on the flow restricted to the strain-s face.
  Vector x0 = sys.embed(start);
  x0.segment((index(s) + 1) * k, k).array() += 0.01 * mass / k;
  x0 = rescale_to_mass(x0, mass);
  const Vector marched = march(spec, sys.lap, x0, 2.0 * kMarchHorizon);
  const detail::NewtonResult sol = detail::damped_newton(residual, jac, sys.restrict(marched));
  if (accept(sol)) return finish(sol);
  throw Error(ErrorCode::ConvergenceFailure,
              std::string(to_string(s)) + ": no positive single-strain equilibrium found");
}

std::vector<Equilibrium> coexistence_search(const ModelSpec& spec, double mass,
                                            std::span<const State> seeds,
                                            std::uint64_t rng_seed) {
  const int k = spec.patches();
  FullSystem sys{spec, build_laplacian(spec.graph).matrix(), mass};
  auto residual = [&](const Vector& x, Vector& f) { sys.residual(x, f); };
  auto jac = [&](const Vector& x, Matrix& j) { sys.jac(x, j); };
  auto accept = [&](const detail::NewtonResult& r) {
    return r.residual < kNewtonAccept && positive_block(r.x.segment(k, k), mass) &&
           positive_block(r.x.segment(2 * k, k), mass) && r.x.segment(0, k).minCoeff() > 0.0;
  };

  std::mt19937_64 rng(rng_seed);
  std::vector<Equilibrium> found;
  for (const State& seed : seeds) {
    const Vector start = rescale_to_mass(seed.flatten().cwiseMax(0.0), mass);
    Vector attempt = start;
    for (int restart = 0; restart <= kRestarts; ++restart) {
      const detail::NewtonResult sol = detail::damped_newton(residual, jac, attempt);
      if (accept(sol)) {
        Equilibrium eq = make_equilibrium(spec, sol.x, EquilibriumKind::Coexistence, mass);
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Equilibrium& e) {
          return (e.state.flatten() - sol.x).lpNorm<Eigen::Infinity>() < kDedupRadius;
        });
        if (eq.residual < kEquilibriumTolerance && !duplicate) found.push_back(std::move(eq));
        break;
      }
      attempt = perturb(start, mass, rng);
    }
  }
  return found;
}

Matrix jacobian(const ModelSpec& spec, const State& state) {
  const int k = state.patches();
  const Matrix lap = build_laplacian(spec.graph).matrix();
  Matrix j = Matrix::Zero(3 * k, 3 * k);
  j.block(0, 0, k, k) = spec.dS * lap;
  for (Strain s : kStrains) {
    const StrainParams& p = spec.strain(s);
    const Vector& infected = state.infected(s);
    const int off = (index(s) + 1) * k;
    j.block(0, 0, k, k).diagonal() -= p.beta.cwiseProduct(infected);
    j.block(0, off, k, k).diagonal() = p.gamma - p.beta.cwiseProduct(state.S);
    j.block(off, 0, k, k).diagonal() = p.beta.cwiseProduct(infected);
    j.block(off, off, k, k) = p.dispersal * lap;
    j.block(off, off, k, k).diagonal() += p.beta.cwiseProduct(state.S) - p.gamma;
  }
  return j;
}

Eigen::VectorXcd projected_spectrum(const ModelSpec& spec, const State& state) {
  const Matrix j = jacobian(spec, state);
  const Eigen::Index n = j.rows();
  // Orthonormal basis of the complement of the all-ones vector.
  const Eigen::HouseholderQR<Matrix> qr(Matrix::Ones(n, 1));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix basis = q.rightCols(n - 1);
  const Matrix reduced = basis.transpose() * j * basis;
  Eigen::EigenSolver<Matrix> es(reduced, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigensolver failed on projected Jacobian");
  }
  return es.eigenvalues();
}

Equilibrium stability(const ModelSpec& spec, Equilibrium eq) {
  if (!(eq.residual < kEquilibriumTolerance)) {
    throw Error(ErrorCode::WrongEquilibrium, "stability needs an equilibrium with small residual");
  }
  const Eigen::VectorXcd ev = projected_spectrum(spec, eq.state);
  const double lead = ev.real().maxCoeff();
  eq.leading_eigenvalue = lead;
  if (lead < -kMarginalBand) {
    eq.stability = Stability::LinearlyStable;
  } else if (lead > kMarginalBand) {
    eq.stability = Stability::Unstable;
  } else {
    eq.stability = Stability::Marginal;
  }
  return eq;
}

}  // namespace patchepi
