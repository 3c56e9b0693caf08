#pragma once

#include <Eigen/Dense>

#include <complex>
#include <variant>

namespace acfid {

using cplx = std::complex<double>;

/// Dense Hermitian matrix. Real-symmetric families keep real storage so that the
/// eigensolver can take the cheaper real path; everything else is complex.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(Eigen::MatrixXd m);
  explicit HermitianMatrix(Eigen::MatrixXcd m);

  // Build from a complex matrix, demoting to real storage when the imaginary part is exactly zero.
  static HermitianMatrix compact(const Eigen::MatrixXcd& m);

  Eigen::Index dim() const;
  bool is_real() const { return std::holds_alternative<Eigen::MatrixXd>(data_); }

  const Eigen::MatrixXd& real() const;     // throws unless is_real()
  const Eigen::MatrixXcd& complex() const;  // throws when is_real()
  Eigen::MatrixXcd to_complex() const;

  cplx operator()(Eigen::Index i, Eigen::Index j) const;

  double hermiticity_defect() const;
  double max_norm() const;

 private:
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> data_;
};

/// Dense unitary matrix (Floquet operators and friends).
class UnitaryMatrix {
 public:
  UnitaryMatrix() = default;
  explicit UnitaryMatrix(Eigen::MatrixXcd m) : data_(std::move(m)) {}

  Eigen::Index dim() const { return data_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return data_; }

  /// max-norm of U^dagger U - I
  double unitarity_defect() const;

 private:
  Eigen::MatrixXcd data_;
};

}  // namespace acfid
