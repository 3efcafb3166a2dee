#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace patchepi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// The two competing pathogen strains.
enum class Strain : int { One = 0, Two = 1 };

inline constexpr Strain kStrains[] = {Strain::One, Strain::Two};

constexpr int index(Strain s) { return static_cast<int>(s); }
constexpr Strain other(Strain s) { return s == Strain::One ? Strain::Two : Strain::One; }
constexpr std::string_view to_string(Strain s) { return s == Strain::One ? "strain1" : "strain2"; }

}  // namespace patchepi
