#include "acfid/spectral.hpp"

#include "acfid/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace acfid {

namespace {

std::string where(Eigen::Index dim, double lambda) {
  return " (dim=" + std::to_string(dim) + ", lambda=" + std::to_string(lambda) + ")";
}

// Largest-modulus component real positive; ties go to the lowest index.
template <typename Matrix>
void fix_phases(Matrix& v) {
  for (Eigen::Index col = 0; col < v.cols(); ++col) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, col));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best_abs <= 0.0) continue;
    if constexpr (std::is_same_v<typename Matrix::Scalar, double>) {
      if (v(best, col) < 0.0) v.col(col) *= -1.0;
    } else {
      const cplx phase = std::conj(v(best, col)) / best_abs;
      v.col(col) *= phase;
      v(best, col) = cplx(v(best, col).real(), 0.0);
    }
  }
}

double principal_phase(cplx z) {
  double t = std::arg(z);
  if (t <= -std::numbers::pi) t = std::numbers::pi;
  return t;
}

std::vector<Eigen::Index> ascending_order(const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) < values(b); });
  return order;
}

void check_unitary(const UnitaryMatrix& u, double lambda) {
  const double defect = u.unitarity_defect();
  if (!(defect < 1e-8))
    throw Error(ErrorKind::NonUnitary,
                "eigenphases: unitarity defect " + std::to_string(defect) + where(u.dim(), lambda));
}

}  // namespace

Eigen::MatrixXcd SpectrumSnapshot::complex_vectors() const {
  if (has_real_vectors()) return std::get<Eigen::MatrixXd>(vectors).cast<cplx>();
  return std::get<Eigen::MatrixXcd>(vectors);
}

SpectrumSnapshot eig_hermitian(const HermitianMatrix& m, double lambda) {
  SpectrumSnapshot snap;
  snap.lambda = lambda;
  snap.kind = SpectrumKind::Linear;
  if (m.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real());
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::Convergence, "eig_hermitian: eigensolver failed" + where(m.dim(), lambda));
    snap.values = es.eigenvalues();
    Eigen::MatrixXd v = es.eigenvectors();
    fix_phases(v);
    snap.vectors = std::move(v);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.complex());
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::Convergence, "eig_hermitian: eigensolver failed" + where(m.dim(), lambda));
    snap.values = es.eigenvalues();
    Eigen::MatrixXcd v = es.eigenvectors();
    fix_phases(v);
    snap.vectors = std::move(v);
  }
  return snap;
}

Eigen::VectorXd eigenvalues_hermitian(const HermitianMatrix& m, double lambda) {
  if (m.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::Convergence, "eigenvalues_hermitian: eigensolver failed" + where(m.dim(), lambda));
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.complex(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "eigenvalues_hermitian: eigensolver failed" + where(m.dim(), lambda));
  return es.eigenvalues();
}

SpectrumSnapshot eigenphases(const UnitaryMatrix& u, double lambda) {
  check_unitary(u, lambda);
  // A unitary matrix is normal, so its complex Schur form is diagonal up to rounding
  // and the Schur vectors form an orthonormal eigenbasis.
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u.matrix());
  if (schur.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "eigenphases: Schur decomposition failed" + where(u.dim(), lambda));
  const auto& t = schur.matrixT();
  const auto& q = schur.matrixU();
  const auto n = u.dim();
  Eigen::VectorXd raw(n);
  for (Eigen::Index i = 0; i < n; ++i) raw(i) = principal_phase(t(i, i));
  const auto order = ascending_order(raw);

  SpectrumSnapshot snap;
  snap.lambda = lambda;
  snap.kind = SpectrumKind::Circular;
  snap.values.resize(n);
  Eigen::MatrixXcd v(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    snap.values(i) = raw(order[static_cast<std::size_t>(i)]);
    v.col(i) = q.col(order[static_cast<std::size_t>(i)]);
  }
  fix_phases(v);
  snap.vectors = std::move(v);
  return snap;
}

Eigen::VectorXd eigenphase_values(const UnitaryMatrix& u, double lambda) {
  check_unitary(u, lambda);
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u.matrix(), /*computeU=*/false);
  if (schur.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "eigenphases: Schur decomposition failed" + where(u.dim(), lambda));
  Eigen::VectorXd out(u.dim());
  for (Eigen::Index i = 0; i < u.dim(); ++i) out(i) = principal_phase(schur.matrixT()(i, i));
  std::sort(out.data(), out.data() + out.size());
  return out;
}

SpectrumSnapshot spectrum_at(const ParametricHamiltonianSpec& spec, double lambda) {
  if (spec.spectrum_kind() == SpectrumKind::Circular) return eigenphases(spec.evaluate_unitary(lambda), lambda);
  return eig_hermitian(spec.evaluate(lambda), lambda);
}

Eigen::VectorXd spectrum_values_at(const ParametricHamiltonianSpec& spec, double lambda) {
  if (spec.spectrum_kind() == SpectrumKind::Circular)
    return eigenphase_values(spec.evaluate_unitary(lambda), lambda);
  return eigenvalues_hermitian(spec.evaluate(lambda), lambda);
}

double circular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

double nearest_gap(std::span<const double> values, SpectrumKind kind, Eigen::Index n) {
  const auto dim = static_cast<Eigen::Index>(values.size());
  if (dim < 2) throw Error(ErrorKind::NoNeighbor, "nearest_gap: spectrum has fewer than two levels");
  if (n < 0 || n >= dim) throw Error(ErrorKind::InvalidParameter, "nearest_gap: level index out of range");
  const auto at = [&](Eigen::Index i) { return values[static_cast<std::size_t>(i)]; };
  if (kind == SpectrumKind::Circular) {
    const double lower = circular_distance(at(n), at((n + dim - 1) % dim));
    const double upper = circular_distance(at(n), at((n + 1) % dim));
    return std::min(lower, upper);
  }
  double gap = std::numeric_limits<double>::infinity();
  if (n > 0) gap = std::min(gap, at(n) - at(n - 1));
  if (n + 1 < dim) gap = std::min(gap, at(n + 1) - at(n));
  return gap;
}

double nearest_gap(const SpectrumSnapshot& s, Eigen::Index n) {
  return nearest_gap(std::span<const double>(s.values.data(), static_cast<std::size_t>(s.values.size())), s.kind, n);
}

double renormalized_curvature(std::span<const double> lambdas, std::span<const double> energies,
                              std::span<const double> gaps, std::size_t k) {
  const std::size_t count = lambdas.size();
  if (energies.size() != count || gaps.size() != count)
    throw Error(ErrorKind::InvalidParameter, "renormalized_curvature: array lengths differ");
  if (count < 3 || k < 1 || k + 1 >= count)
    throw Error(ErrorKind::OutOfStencil, "renormalized_curvature: index " + std::to_string(k) + " has no 3-point stencil");
  const double h = lambdas[k] - lambdas[k - 1];
  const double h2 = lambdas[k + 1] - lambdas[k];
  if (!(h > 0.0) || std::abs(h2 - h) > 1e-9 * std::abs(h))
    throw Error(ErrorKind::InvalidParameter, "renormalized_curvature: grid must be uniform and ascending");
  if (!(gaps[k] > kDegeneracyTolerance))
    throw Error(ErrorKind::DegenerateGap, "renormalized_curvature: vanishing gap at lambda=" + std::to_string(lambdas[k]));
  const double second = (energies[k - 1] - 2.0 * energies[k] + energies[k + 1]) / (h * h);
  return std::abs(second) / gaps[k];
}

Eigen::MatrixXd overlap_probabilities(const SpectrumSnapshot& a, const SpectrumSnapshot& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidParameter, "overlap_probabilities: dimension mismatch");
  if (a.has_real_vectors() && b.has_real_vectors()) {
    const auto& va = std::get<Eigen::MatrixXd>(a.vectors);
    const auto& vb = std::get<Eigen::MatrixXd>(b.vectors);
    Eigen::MatrixXd o;
    o.noalias() = va.transpose() * vb;
    return o.cwiseAbs2();
  }
  Eigen::MatrixXcd o;
  o.noalias() = a.complex_vectors().adjoint() * b.complex_vectors();
  return o.cwiseAbs2();
}

Eigen::Index circular_alignment(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = a.size();
  if (b.size() != n) throw Error(ErrorKind::InvalidParameter, "circular_alignment: dimension mismatch");
  Eigen::Index best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < n; ++r) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n && cost < best_cost; ++i) {
      const double d = circular_distance(a(i), b((i + r) % n));
      cost += d * d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = r;
    }
  }
  return best;
}

}  // namespace acfid
