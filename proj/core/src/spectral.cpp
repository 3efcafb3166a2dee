#include "patchepi/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "patchepi/error.hpp"

namespace patchepi {

namespace {

constexpr int kPowerIterationCap = 20000;
constexpr double kPowerIterationTol = 1e-12;

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": matrix is not square");
  }
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

LaplacianSpectrum laplacian_spectrum(const Laplacian& lap) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap.matrix());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  const Eigen::Index k = lap.size();
  LaplacianSpectrum out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  out.gap = k > 1 ? -out.eigenvalues[1] : 0.0;
  return out;
}

NextGeneration next_gen_matrices(const ModelSpec& spec, const Laplacian& lap, Strain s) {
  const StrainParams& p = spec.strain(s);
  if (p.beta.size() != lap.size() || p.gamma.size() != lap.size()) {
    throw Error(ErrorCode::DimensionMismatch, "strain vectors do not match the patch count");
  }
  NextGeneration ng;
  ng.F = p.beta.asDiagonal();
  ng.V = Matrix(p.gamma.asDiagonal()) - p.dispersal * lap.matrix();
  return ng;
}

NextGeneration next_gen_matrices(const ModelSpec& spec, Strain s) {
  return next_gen_matrices(spec, build_laplacian(spec.graph), s);
}

double spectral_radius_nonneg(const Matrix& a) {
  require_square(a, "spectral_radius_nonneg");
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  if ((a.array() < 0.0).any() || !a.allFinite()) {
    throw Error(ErrorCode::InvalidModel, "spectral_radius_nonneg: matrix has negative entries");
  }

  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector y(n);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < kPowerIterationCap; ++it) {
    y.noalias() = a * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double rayleigh = x.dot(y);

    // With a strictly positive iterate, min/max of (Ax)_i / x_i bracket the
    // Perron root (Collatz-Wielandt).
    if (x.minCoeff() > 1e-8 * x.maxCoeff()) {
      const Vector ratio = y.cwiseQuotient(x);
      const double lo = ratio.minCoeff();
      const double hi = ratio.maxCoeff();
      if (hi - lo <= kPowerIterationTol * hi) return 0.5 * (lo + hi);
    } else if (std::abs(rayleigh - previous) <= kPowerIterationTol * std::abs(rayleigh)) {
      return rayleigh;
    }
    previous = rayleigh;
    x = y / norm;
  }
  // Nearly reducible matrices (tiny dispersal) have a second eigenvalue close
  // to the Perron root, so the iteration stalls. Fall back to a dense solve.
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "power iteration exceeded its iteration cap");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_bound(const Matrix& a) {
  require_square(a, "spectral_bound");
  if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
  if (a.isApprox(a.transpose(), 0.0)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
    }
    return es.eigenvalues().maxCoeff();
  }
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigensolver did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

double r0_strain(const ModelSpec& spec, double mass, Strain s) {
  const NextGeneration ng = next_gen_matrices(spec, s);
  const Matrix next = ng.F * ng.V.partialPivLu().inverse();
  // Rounding can leave tiny negative entries in V^-1; they are not part of
  // the nonnegative operator.
  const Matrix clipped = next.cwiseMax(0.0);
  return mass / spec.patches() * spectral_radius_nonneg(clipped);
}

double r0(const ModelSpec& spec, double mass) {
  return std::max(r0_strain(spec, mass, Strain::One), r0_strain(spec, mass, Strain::Two));
}

Matrix local_reproduction(const ModelSpec& spec, double mass) {
  const int k = spec.patches();
  Matrix out(2, k);
  for (Strain s : kStrains) {
    const StrainParams& p = spec.strain(s);
    out.row(index(s)) = (mass / k) * p.beta.cwiseQuotient(p.gamma).transpose();
  }
  return out;
}

RiskSets risk_sets(const ModelSpec& spec, double mass) {
  const int k = spec.patches();
  const Matrix ratio = local_reproduction(spec, static_cast<double>(k));  // N/k == 1
  const Matrix scaled = local_reproduction(spec, mass);
  RiskSets sets;
  for (int j = 0; j < k; ++j) {
    const double diff = ratio(0, j) - ratio(1, j);
    if (std::abs(diff) <= kTieTolerance) {
      sets.sigma0.push_back(j);
    } else if (diff > 0.0) {
      sets.sigma1.push_back(j);
    } else {
      sets.sigma2.push_back(j);
    }
    for (Strain s : kStrains) {
      const double v = scaled(index(s), j);
      if (v > 1.0) sets.high[index(s)].push_back(j);
      if (v < 1.0) sets.low[index(s)].push_back(j);
    }
  }
  return sets;
}

Vector susceptible_threshold(const ModelSpec& spec, Strain s) {
  const StrainParams& p = spec.strain(s);
  return p.gamma.cwiseQuotient(p.beta);
}

double limit_invasion(const ModelSpec& spec, double mass, Strain invader) {
  const int k = spec.patches();
  const StrainParams& p = spec.strain(invader);
  const Vector resident_threshold = susceptible_threshold(spec, other(invader));
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    const double local = p.beta[j] / p.gamma[j];
    best = std::max(best, local * std::min(mass / k, resident_threshold[j]));
  }
  return best;
}

double extinction_margin(const ModelSpec& spec, double mass, Strain s) {
  const int k = spec.patches();
  const Laplacian lap = build_laplacian(spec.graph);
  const StrainParams& p = spec.strain(s);
  const Matrix base = p.dispersal * lap.matrix();
  auto bound_at = [&](double eps) {
    Matrix m = base;
    m.diagonal() += ((mass + eps) / k) * p.beta - p.gamma;
    return spectral_bound(m);
  };

  const double r = r0_strain(spec, mass, s);
  if (r >= 1.0) {
    throw Error(ErrorCode::ThresholdUndefined, "extinction margin needs R0 < 1");
  }
  if (bound_at(0.0) >= 0.0) {
    throw Error(ErrorCode::ThresholdOverflow, "R0 is within rounding of 1; margin unresolved");
  }

  double lo = 0.0;
  double hi = mass * (1.0 / r - 1.0) * k;
  for (int grow = 0; bound_at(hi) < 0.0; ++grow) {
    if (grow > 200) throw Error(ErrorCode::ConvergenceFailure, "margin bracket did not close");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (bound_at(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double critical_ds(const ModelSpec& spec, double mass, Strain s) {
  const double eps = extinction_margin(spec, mass, s);
  if (!(eps > 1e-10 * mass)) {
    throw Error(ErrorCode::ThresholdOverflow, "extinction margin below numerical resolution");
  }
  const int k = spec.patches();
  const LaplacianSpectrum spectrum = laplacian_spectrum(build_laplacian(spec.graph));
  const double d_star = std::abs(spectrum.most_negative());
  double beta_max = 0.0;
  double gamma_max = 0.0;
  for (const StrainParams& p : spec.strains) {
    beta_max = std::max(beta_max, p.beta.maxCoeff());
    gamma_max = std::max(gamma_max, p.gamma.maxCoeff());
  }
  const double value =
      3.0 * mass * k * std::sqrt(static_cast<double>(k)) * (gamma_max + mass * beta_max) /
      (d_star * eps);
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::ThresholdOverflow, "critical dispersal rate overflows");
  }
  return value;
}

double harnack_constant(double dispersal, double m_inf, const Laplacian& lap) {
  if (!(dispersal > 0.0) || !(m_inf >= 0.0)) {
    throw Error(ErrorCode::InvalidModel, "harnack_constant needs d > 0 and m_inf >= 0");
  }
  const Matrix& L = lap.matrix();

  // Perron vector of L scaled to minimum entry 1.
  Vector perron;
  if (L.isApprox(L.transpose(), 0.0)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(L);
    perron = es.eigenvectors().col(L.rows() - 1);
  } else {
    Eigen::EigenSolver<Matrix> es(L);
    Eigen::Index top = 0;
    es.eigenvalues().real().maxCoeff(&top);
    perron = es.eigenvectors().col(top).real();
  }
  perron = perron.cwiseAbs();
  const double perron_min = perron.minCoeff();

  const Matrix semigroup = (dispersal * L).exp();
  const double floor = semigroup.minCoeff();
  if (!semigroup.allFinite() || !(floor > 0.0) || !(perron_min > 0.0)) {
    throw Error(ErrorCode::ConvergenceFailure, "matrix exponential is not strictly positive");
  }
  return std::exp(2.0 * m_inf) * (perron.maxCoeff() / perron_min) / floor;
}

double harnack_growth_bound(const ModelSpec& spec, double mass) {
  double beta_max = 0.0;
  double gamma_max = 0.0;
  for (const StrainParams& p : spec.strains) {
    beta_max = std::max(beta_max, p.beta.maxCoeff());
    gamma_max = std::max(gamma_max, p.gamma.maxCoeff());
  }
  return mass * beta_max + gamma_max;
}

SusceptibleBounds theoretical_s_bounds(const ModelSpec& spec) {
  SusceptibleBounds b{std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity()};
  for (Strain s : kStrains) {
    const Vector r = susceptible_threshold(spec, s);
    b.min = std::min(b.min, r.minCoeff());
    b.max = std::max(b.max, r.maxCoeff());
  }
  return b;
}

bool has_constant_local_reproduction(const ModelSpec& spec, Strain s) {
  const StrainParams& p = spec.strain(s);
  const Vector ratio = p.beta.cwiseQuotient(p.gamma);
  return ratio.maxCoeff() - ratio.minCoeff() <= 1e-12 * ratio.maxCoeff();
}

bool has_uniform_dispersal(const ModelSpec& spec) {
  return nearly_equal(spec.dS, spec.strains[0].dispersal) &&
         nearly_equal(spec.dS, spec.strains[1].dispersal);
}

SpectralReport spectral_report(const ModelSpec& spec, double mass) {
  const Laplacian lap = build_laplacian(spec.graph);
  const int k = spec.patches();
  SpectralReport rep;
  for (Strain s : kStrains) {
    rep.r0_per_strain[index(s)] = r0_strain(spec, mass, s);
    const NextGeneration ng = next_gen_matrices(spec, lap, s);
    rep.lambda_star_per_strain[index(s)] = spectral_bound((mass / k) * ng.F - ng.V);
  }
  rep.r0 = std::max(rep.r0_per_strain[0], rep.r0_per_strain[1]);
  rep.local_matrix = local_reproduction(spec, mass);
  rep.risk = risk_sets(spec, mass);
  rep.laplacian = laplacian_spectrum(lap);
  return rep;
}

}  // namespace patchepi
