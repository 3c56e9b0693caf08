#pragma once

#include "acfid/hamiltonians.hpp"
#include "acfid/matrix.hpp"

#include <span>
#include <variant>

namespace acfid {

/// Eigenvalues (ascending) and eigenvectors at one parameter value.
/// Linear: energies. Circular: eigenphases in (-pi, pi].
struct SpectrumSnapshot {
  double lambda = 0.0;
  SpectrumKind kind = SpectrumKind::Linear;
  Eigen::VectorXd values;
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> vectors;  // column n belongs to values[n]

  Eigen::Index dim() const { return values.size(); }
  bool has_real_vectors() const { return std::holds_alternative<Eigen::MatrixXd>(vectors); }
  Eigen::MatrixXcd complex_vectors() const;
};

SpectrumSnapshot eig_hermitian(const HermitianMatrix& m, double lambda = 0.0);
SpectrumSnapshot eigenphases(const UnitaryMatrix& u, double lambda = 0.0);

/// Eigenvalues only (no vectors); cheaper, used for gaps at refined peak positions.
Eigen::VectorXd eigenvalues_hermitian(const HermitianMatrix& m, double lambda = 0.0);
Eigen::VectorXd eigenphase_values(const UnitaryMatrix& u, double lambda = 0.0);

/// Full snapshot of a family at lambda, dispatching on the spectrum kind.
SpectrumSnapshot spectrum_at(const ParametricHamiltonianSpec& spec, double lambda);
Eigen::VectorXd spectrum_values_at(const ParametricHamiltonianSpec& spec, double lambda);

/// Geodesic distance on the unit circle between two phases.
double circular_distance(double a, double b);

double nearest_gap(std::span<const double> values, SpectrumKind kind, Eigen::Index n);
double nearest_gap(const SpectrumSnapshot& s, Eigen::Index n);

/// |second central difference of E_n| / gap at grid index k of a uniform grid.
double renormalized_curvature(std::span<const double> lambdas, std::span<const double> energies,
                              std::span<const double> gaps, std::size_t k);

/// P(m, n) = |<a_m|b_n>|^2.
Eigen::MatrixXd overlap_probabilities(const SpectrumSnapshot& a, const SpectrumSnapshot& b);

/// Cyclic relabeling r that best aligns b to a: level n of a corresponds to level (n + r) mod dim of b.
Eigen::Index circular_alignment(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Exact eigenvalue degeneracy threshold (absolute, scaled by the spectral radius).
inline constexpr double kDegeneracyTolerance = 1e-13;

}  // namespace acfid
