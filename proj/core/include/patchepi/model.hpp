#pragma once

// Two-strain SIS dynamics on a network of patches.
//
//   S'  = dS L S + sum_l (gamma_l - beta_l o S) o I_l
//   I_l' = d_l L I_l + (beta_l o S - gamma_l) o I_l,   l = 1, 2
//
// where L is the migration Laplacian and "o" the componentwise product.
// The total population sum_j (S_j + I_1j + I_2j) is conserved.

#include <array>
#include <string>
#include <vector>

#include "patchepi/types.hpp"

namespace patchepi {

/// Migration rates between patches. rates(i, j) is the rate from patch j to
/// patch i; the matrix must be nonnegative, symmetric, zero on the diagonal
/// and irreducible.
struct PatchGraph {
  Matrix rates;

  int size() const { return static_cast<int>(rates.rows()); }

  /// Two patches joined by a unit-rate link.
  static PatchGraph two_patch(double rate = 1.0);
};

/// Column-conservative generator built from a PatchGraph: off-diagonals are
/// the migration rates, each diagonal entry is minus its column sum.
class Laplacian {
 public:
  explicit Laplacian(Matrix m) : m_(std::move(m)) {}

  const Matrix& matrix() const { return m_; }
  int size() const { return static_cast<int>(m_.rows()); }

 private:
  Matrix m_;
};

struct StrainParams {
  Vector beta;   // transmission rate per patch
  Vector gamma;  // recovery rate per patch
  double dispersal = 0.0;
};

struct ModelSpec {
  PatchGraph graph;
  double dS = 0.0;  // susceptible dispersal rate
  std::array<StrainParams, 2> strains;

  int patches() const { return graph.size(); }
  const StrainParams& strain(Strain s) const { return strains[index(s)]; }
  StrainParams& strain(Strain s) { return strains[index(s)]; }
};

/// Population counts per patch. The flat layout used by solvers is
/// [S; I1; I2], each block of length k.
struct State {
  Vector S;
  Vector I1;
  Vector I2;

  int patches() const { return static_cast<int>(S.size()); }
  const Vector& infected(Strain s) const { return s == Strain::One ? I1 : I2; }
  Vector& infected(Strain s) { return s == Strain::One ? I1 : I2; }

  Vector flatten() const;
  static State unflatten(const Vector& x);
  static State zeros(int k);
};

using StateDerivative = State;

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Checks nonnegativity, symmetry, zero diagonal and irreducibility of the
/// migration matrix, positivity of every rate, and vector dimensions.
ValidationReport validate(const ModelSpec& spec);

/// Throws Error(InvalidModel) listing every violation.
void require_valid(const ModelSpec& spec);

/// Breadth-first search over the support graph {(i, j) : rates(i, j) > 0}.
bool is_connected(const Matrix& rates);

Laplacian build_laplacian(const PatchGraph& graph);

StateDerivative rhs(const ModelSpec& spec, const Laplacian& lap, const State& state);
StateDerivative rhs(const ModelSpec& spec, const State& state);

/// Allocation-free vector field on the flat layout; `dx` must not alias `x`.
void rhs_flat(const ModelSpec& spec, const Matrix& lap, const Vector& x, Vector& dx);

double total_mass(const State& state);

/// v minus its mean; the result sums to zero.
Vector hat(const Vector& v);

/// The spatially uniform susceptible-only state ((N/k) 1, 0, 0).
State disease_free_state(int k, double mass);

}  // namespace patchepi
