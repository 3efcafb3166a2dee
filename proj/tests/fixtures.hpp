#pragma once

#include <cmath>
#include <random>

#include "patchepi/model.hpp"

namespace fixtures {

using patchepi::Matrix;
using patchepi::ModelSpec;
using patchepi::PatchGraph;
using patchepi::State;
using patchepi::StrainParams;
using patchepi::Vector;

inline Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline ModelSpec two_patch(Vector b1, Vector g1, double d1, Vector b2, Vector g2, double d2,
                           double dS) {
  ModelSpec spec;
  spec.graph = PatchGraph::two_patch(1.0);
  spec.dS = dS;
  spec.strains[0] = StrainParams{std::move(b1), std::move(g1), d1};
  spec.strains[1] = StrainParams{std::move(b2), std::move(g2), d2};
  return spec;
}

/// beta1=(2,3), gamma1=(1,2), beta2=(1,4), gamma2=(2,3), dS=3, d1=1, d2=2.
inline ModelSpec sim1() { return two_patch(v2(2, 3), v2(1, 2), 1, v2(1, 4), v2(2, 3), 2, 3); }

inline ModelSpec sim5(double d) { return two_patch(v2(2, 3), v2(2, 3), d, v2(1, 4), v2(2, 3), d, d); }

inline ModelSpec homogeneous(int k, double beta, double gamma, double d) {
  ModelSpec spec;
  spec.graph.rates = Matrix::Ones(k, k) - Matrix::Identity(k, k);
  spec.dS = d;
  for (auto& s : spec.strains) {
    s = StrainParams{Vector::Constant(k, beta), Vector::Constant(k, gamma), d};
  }
  return spec;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

/// Connected symmetric graph: a random spanning path plus random extra edges.
inline Matrix random_graph(std::mt19937_64& rng, int k, double lo, double hi) {
  Matrix L = Matrix::Zero(k, k);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i + 1 < k; ++i) L(i, i + 1) = L(i + 1, i) = log_uniform(rng, lo, hi);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 2; j < k; ++j) {
      if (coin(rng) < 0.5) L(i, j) = L(j, i) = log_uniform(rng, lo, hi);
    }
  }
  return L;
}

struct RandomRanges {
  double rate_lo = 0.1, rate_hi = 10.0;   // beta, gamma
  double disp_lo = 0.01, disp_hi = 10.0;  // dS, d1, d2
  double edge_lo = 0.1, edge_hi = 10.0;   // L entries
};

inline ModelSpec random_spec(std::mt19937_64& rng, int k, const RandomRanges& r = {}) {
  ModelSpec spec;
  spec.graph.rates = random_graph(rng, k, r.edge_lo, r.edge_hi);
  spec.dS = log_uniform(rng, r.disp_lo, r.disp_hi);
  for (auto& s : spec.strains) {
    s.beta.resize(k);
    s.gamma.resize(k);
    for (int j = 0; j < k; ++j) {
      s.beta[j] = log_uniform(rng, r.rate_lo, r.rate_hi);
      s.gamma[j] = log_uniform(rng, r.rate_lo, r.rate_hi);
    }
    s.dispersal = log_uniform(rng, r.disp_lo, r.disp_hi);
  }
  return spec;
}

inline State random_state(std::mt19937_64& rng, int k, double lo = 0.01, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  State s = State::zeros(k);
  for (int j = 0; j < k; ++j) {
    s.S[j] = u(rng);
    s.I1[j] = u(rng);
    s.I2[j] = u(rng);
  }
  return s;
}

/// Perron root of a 2x2 matrix with nonnegative off-diagonal product.
inline double perron_2x2(double a, double b, double c, double d) {
  return 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * c);
}

/// R0 on the unit two-patch graph from the closed-form 2x2 inverse of
/// V = [[g1 + d, -d], [-d, g2 + d]].
inline double r0_two_patch(double b1, double b2, double g1, double g2, double d, double mass) {
  const double det = (g1 + d) * (g2 + d) - d * d;
  const double a = b1 * (g2 + d) / det, b = b1 * d / det;
  const double c = b2 * d / det, e = b2 * (g1 + d) / det;
  return 0.5 * mass * perron_2x2(a, b, c, e);
}

}  // namespace fixtures
