#include "patchepi/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "patchepi/error.hpp"

namespace patchepi {

PatchGraph PatchGraph::two_patch(double rate) {
  Matrix m(2, 2);
  m << 0.0, rate, rate, 0.0;
  return PatchGraph{m};
}

Vector State::flatten() const {
  const int k = patches();
  Vector x(3 * k);
  x << S, I1, I2;
  return x;
}

State State::unflatten(const Vector& x) {
  if (x.size() % 3 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "flat state length is not a multiple of 3");
  }
  const Eigen::Index k = x.size() / 3;
  return State{x.segment(0, k), x.segment(k, k), x.segment(2 * k, k)};
}

State State::zeros(int k) {
  return State{Vector::Zero(k), Vector::Zero(k), Vector::Zero(k)};
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i];
  }
  return os.str();
}

bool is_connected(const Matrix& rates) {
  const Eigen::Index k = rates.rows();
  if (k == 0) return false;
  std::vector<bool> seen(k, false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index reached = 1;
  while (!frontier.empty()) {
    const Eigen::Index i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!seen[j] && (rates(i, j) > 0.0 || rates(j, i) > 0.0)) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == k;
}

namespace {

void check_rates(const Vector& v, int k, const std::string& name, std::vector<std::string>& out) {
  if (v.size() != k) {
    out.push_back(name + ": length " + std::to_string(v.size()) + " != patch count " +
                  std::to_string(k));
    return;
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j]) || v[j] <= 0.0) {
      out.push_back(name + "[" + std::to_string(j) + "] must be finite and > 0");
    }
  }
}

void check_positive(double x, const std::string& name, std::vector<std::string>& out) {
  if (!std::isfinite(x) || x <= 0.0) out.push_back(name + " must be finite and > 0");
}

}  // namespace

ValidationReport validate(const ModelSpec& spec) {
  ValidationReport report;
  auto& out = report.violations;
  const Matrix& L = spec.graph.rates;
  const int k = spec.patches();

  if (L.rows() != L.cols()) {
    out.push_back("migration matrix is not square");
    return report;
  }
  if (k < 2) out.push_back("at least two patches are required");

  bool symmetric = true;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double v = L(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        out.push_back("migration rate L[" + std::to_string(i) + "][" + std::to_string(j) +
                      "] must be finite and nonnegative");
      }
      if (i == j && v != 0.0) {
        out.push_back("migration diagonal L[" + std::to_string(i) + "][" + std::to_string(i) +
                      "] must be zero");
      }
      if (j > i) {
        const double scale = std::max({std::abs(v), std::abs(L(j, i)), 1.0});
        if (std::abs(v - L(j, i)) > 1e-12 * scale) symmetric = false;
      }
    }
  }
  if (!symmetric) out.push_back("migration matrix is not symmetric");
  if (k >= 2 && !is_connected(L)) out.push_back("migration matrix is not irreducible");

  check_positive(spec.dS, "dS", out);
  for (Strain s : kStrains) {
    const std::string tag(to_string(s));
    const StrainParams& p = spec.strain(s);
    check_rates(p.beta, k, tag + ".beta", out);
    check_rates(p.gamma, k, tag + ".gamma", out);
    check_positive(p.dispersal, tag + ".d", out);
  }
  return report;
}

void require_valid(const ModelSpec& spec) {
  const ValidationReport report = validate(spec);
  if (!report.ok()) throw Error(ErrorCode::InvalidModel, report.to_string());
}

Laplacian build_laplacian(const PatchGraph& graph) {
  const Matrix& L = graph.rates;
  if (L.rows() != L.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "migration matrix is not square");
  }
  Matrix M = L;
  M.diagonal().setZero();
  const Eigen::RowVectorXd column_sums = M.colwise().sum();
  for (Eigen::Index j = 0; j < M.cols(); ++j) M(j, j) = -column_sums[j];
  return Laplacian(std::move(M));
}

namespace {

void check_dims(const ModelSpec& spec, int k) {
  if (spec.patches() != k || spec.strains[0].beta.size() != k ||
      spec.strains[1].beta.size() != k || spec.strains[0].gamma.size() != k ||
      spec.strains[1].gamma.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "state and model dimensions disagree");
  }
}

}  // namespace

void rhs_flat(const ModelSpec& spec, const Matrix& lap, const Vector& x, Vector& dx) {
  const Eigen::Index k = lap.rows();
  const auto S = x.segment(0, k);
  auto dSdt = dx.segment(0, k);
  dSdt.noalias() = spec.dS * (lap * S);
  for (Strain s : kStrains) {
    const StrainParams& p = spec.strain(s);
    const Eigen::Index off = (index(s) + 1) * k;
    const auto I = x.segment(off, k);
    auto dI = dx.segment(off, k);
    // Per-patch net infection flux (beta S - gamma) I.
    dI.noalias() = p.dispersal * (lap * I);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double flux = (p.beta[j] * S[j] - p.gamma[j]) * I[j];
      dI[j] += flux;
      dSdt[j] -= flux;
    }
  }
}

StateDerivative rhs(const ModelSpec& spec, const Laplacian& lap, const State& state) {
  const int k = state.patches();
  if (state.I1.size() != k || state.I2.size() != k || lap.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "state vectors have inconsistent lengths");
  }
  check_dims(spec, k);
  const Vector x = state.flatten();
  Vector dx(x.size());
  rhs_flat(spec, lap.matrix(), x, dx);
  return State::unflatten(dx);
}

StateDerivative rhs(const ModelSpec& spec, const State& state) {
  return rhs(spec, build_laplacian(spec.graph), state);
}

double total_mass(const State& state) { return state.S.sum() + state.I1.sum() + state.I2.sum(); }

Vector hat(const Vector& v) {
  if (v.size() == 0) return v;
  return v.array() - v.mean();
}

State disease_free_state(int k, double mass) {
  State s = State::zeros(k);
  s.S.setConstant(mass / k);
  return s;
}

}  // namespace patchepi
