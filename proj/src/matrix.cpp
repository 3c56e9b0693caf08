#include "acfid/matrix.hpp"

#include "acfid/error.hpp"

namespace acfid {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Unsupported: return "unsupported-operation";
    case ErrorKind::DegenerateGap: return "degenerate-gap";
    case ErrorKind::NoNeighbor: return "no-neighbor";
    case ErrorKind::OutOfStencil: return "out-of-stencil";
    case ErrorKind::Convergence: return "convergence-failure";
    case ErrorKind::NonUnitary: return "non-unitary-input";
    case ErrorKind::IntegrationFailure: return "integration-failure";
    case ErrorKind::RefinementDiverged: return "refinement-diverged";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::AtomAtZero: return "atom-at-zero";
    case ErrorKind::Resource: return "resource-cap";
    case ErrorKind::Parse: return "parse-error";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::Parse:
      return 1;
    case ErrorKind::Resource:
      return 3;
    default:
      return 2;
  }
}

HermitianMatrix::HermitianMatrix(Eigen::MatrixXd m) : data_(std::move(m)) {
  if (std::get<Eigen::MatrixXd>(data_).rows() != std::get<Eigen::MatrixXd>(data_).cols())
    throw Error(ErrorKind::InvalidParameter, "HermitianMatrix: matrix must be square");
}

HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd m) : data_(std::move(m)) {
  if (std::get<Eigen::MatrixXcd>(data_).rows() != std::get<Eigen::MatrixXcd>(data_).cols())
    throw Error(ErrorKind::InvalidParameter, "HermitianMatrix: matrix must be square");
}

HermitianMatrix HermitianMatrix::compact(const Eigen::MatrixXcd& m) {
  if ((m.imag().array() == 0.0).all()) return HermitianMatrix(Eigen::MatrixXd(m.real()));
  return HermitianMatrix(m);
}

Eigen::Index HermitianMatrix::dim() const {
  return std::visit([](const auto& m) { return m.rows(); }, data_);
}

const Eigen::MatrixXd& HermitianMatrix::real() const {
  if (!is_real()) throw Error(ErrorKind::Unsupported, "HermitianMatrix: complex storage has no real view");
  return std::get<Eigen::MatrixXd>(data_);
}

const Eigen::MatrixXcd& HermitianMatrix::complex() const {
  if (is_real()) throw Error(ErrorKind::Unsupported, "HermitianMatrix: real storage has no complex view");
  return std::get<Eigen::MatrixXcd>(data_);
}

Eigen::MatrixXcd HermitianMatrix::to_complex() const {
  if (is_real()) return std::get<Eigen::MatrixXd>(data_).cast<cplx>();
  return std::get<Eigen::MatrixXcd>(data_);
}

cplx HermitianMatrix::operator()(Eigen::Index i, Eigen::Index j) const {
  return std::visit([i, j](const auto& m) { return cplx(m(i, j)); }, data_);
}

double HermitianMatrix::hermiticity_defect() const {
  return std::visit(
      [](const auto& m) -> double {
        if (m.size() == 0) return 0.0;
        return (m - m.adjoint()).cwiseAbs().maxCoeff();
      },
      data_);
}

double HermitianMatrix::max_norm() const {
  return std::visit([](const auto& m) -> double { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; },
                    data_);
}

double UnitaryMatrix::unitarity_defect() const {
  if (data_.size() == 0) return 0.0;
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(data_.rows(), data_.cols());
  return (data_.adjoint() * data_ - eye).cwiseAbs().maxCoeff();
}

}  // namespace acfid
