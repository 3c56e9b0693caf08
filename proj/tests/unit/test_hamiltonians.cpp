#include "acfid/bose_hubbard.hpp"
#include "acfid/hamiltonians.hpp"
#include "acfid/spectral.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <cstring>
#include <numbers>

using namespace acfid;
using acfid::test::error_kind_of;

namespace {

Eigen::MatrixXd pauli_x() { return (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished(); }
Eigen::MatrixXd pauli_z() { return (Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished(); }

std::vector<ParametricHamiltonianSpec> static_families() {
  HardwallConfig hw;
  hw.N = 3;
  hw.L = 3;
  return {build_two_level(0.7),
          build_triple(1, 2, 3),
          build_goe_interp(HermitianMatrix(test::random_symmetric(6, 1)), HermitianMatrix(test::random_symmetric(6, 2))),
          build_linear_pair(HermitianMatrix(test::random_hermitian(5, 3)), HermitianMatrix(test::random_hermitian(5, 4))),
          build_hardwall_tilted(hw)};
}

}  // namespace

TEST_CASE("two-level family matrix and spectrum") {
  const auto spec = build_two_level(1.0);
  CHECK(spec.dim() == 2);
  const auto h0 = evaluate(spec, 0.0);
  CHECK((h0.to_complex() - pauli_x().cast<cplx>()).norm() == 0.0);
  auto ev = eigenvalues_hermitian(h0);
  CHECK(ev(0) == doctest::Approx(-1.0));
  CHECK(ev(1) == doctest::Approx(1.0));

  ev = eigenvalues_hermitian(evaluate(spec, 3.0));
  CHECK(ev(0) == doctest::Approx(-std::sqrt(10.0)).epsilon(1e-14));
  CHECK(ev(1) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));

  // minimal gap 2g at lambda = 0
  const auto half = eigenvalues_hermitian(evaluate(build_two_level(0.5), 0.0));
  CHECK(half(1) - half(0) == doctest::Approx(1.0));
}

TEST_CASE("invalid couplings are rejected") {
  CHECK(error_kind_of([] { build_two_level(0.0); }) == ErrorKind::InvalidParameter);
  CHECK(error_kind_of([] { build_two_level(-1.0); }) == ErrorKind::InvalidParameter);
  CHECK(error_kind_of([] { build_two_level(std::numeric_limits<double>::quiet_NaN()); }) ==
        ErrorKind::InvalidParameter);
  CHECK(error_kind_of([] { build_two_level(std::numeric_limits<double>::infinity()); }) ==
        ErrorKind::InvalidParameter);
  CHECK(error_kind_of([] { evaluate(build_two_level(1.0), std::numeric_limits<double>::infinity()); }) ==
        ErrorKind::InvalidParameter);
}

TEST_CASE("triple model") {
  const auto spec = build_triple(0, 2, 3);
  CHECK(spec.warnings().empty());
  const auto h = evaluate(spec, 0.7);
  REQUIRE(h.is_real());
  CHECK(h.real()(0, 0) == doctest::Approx(-0.7));
  CHECK(h.real()(1, 1) == 0.0);
  CHECK(h.real()(2, 2) == doctest::Approx(0.7));

  // characteristic polynomial at lambda = 0 is mu^3 - 13 mu
  const auto ev = eigenvalues_hermitian(evaluate(spec, 0.0));
  CHECK(ev(0) == doctest::Approx(-std::sqrt(13.0)).epsilon(1e-12));
  CHECK(std::abs(ev(1)) < 1e-12);
  CHECK(ev(2) == doctest::Approx(std::sqrt(13.0)).epsilon(1e-12));

  const auto zero = build_triple(0, 0, 0);
  REQUIRE(zero.warnings().size() == 1);
  CHECK(zero.warnings()[0].find("degenerate") != std::string::npos);
}

TEST_CASE("GOE interpolation endpoints and derivative") {
  const Eigen::MatrixXd a = test::random_symmetric(4, 11), b = test::random_symmetric(4, 12);
  const auto spec = build_goe_interp(HermitianMatrix(a), HermitianMatrix(b));
  CHECK((evaluate(spec, 0.0).real() - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((evaluate(spec, std::numbers::pi / 2).real() - b).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((derivative_matrix(spec, 0.0).real() - b).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const auto ident = build_goe_interp(HermitianMatrix(id), HermitianMatrix(id));
  for (double lam : {0.1, 1.3, 2.9}) {
    const Eigen::MatrixXd expected = (std::cos(lam) + std::sin(lam)) * id;
    CHECK((evaluate(ident, lam).real() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }

  CHECK(error_kind_of([&] { build_goe_interp(HermitianMatrix(a), HermitianMatrix(id)); }) ==
        ErrorKind::InvalidParameter);
}

TEST_CASE("linear pair") {
  const auto flat = build_linear_pair(HermitianMatrix(test::random_symmetric(3, 5)),
                                      HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))));
  CHECK((eigenvalues_hermitian(evaluate(flat, 0.0)) - eigenvalues_hermitian(evaluate(flat, 4.0))).norm() == 0.0);

  const auto z = build_linear_pair(HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2))), HermitianMatrix(pauli_z()));
  const auto ev = eigenvalues_hermitian(evaluate(z, 2.0));
  CHECK(ev(0) == doctest::Approx(-2.0));
  CHECK(ev(1) == doctest::Approx(2.0));
  CHECK((derivative_matrix(z, -7.0).real() - pauli_z()).norm() == 0.0);

  CHECK(error_kind_of([] {
          build_linear_pair(HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2))), HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))));
        }) == ErrorKind::InvalidParameter);
}

TEST_CASE("two-level equals linear pair (g sigma_x, sigma_z) bitwise") {
  const double g = 0.37;
  const auto two = build_two_level(g);
  const auto lin = build_linear_pair(HermitianMatrix(Eigen::MatrixXd(g * pauli_x())), HermitianMatrix(pauli_z()));
  for (double lam : {-3.0, -0.1, 0.0, 1e-9, 2.5}) {
    const Eigen::MatrixXd a = evaluate(two, lam).real();
    const Eigen::MatrixXd b = evaluate(lin, lam).real();
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 4) == 0);
  }
}

TEST_CASE("hermiticity and dimension of every static family") {
  for (const auto& spec : static_families()) {
    for (double lam : {0.2, 0.9, 1.7, 3.1}) {
      const auto h = evaluate(spec, lam);
      CHECK(h.dim() == spec.dim());
      CHECK(h.hermiticity_defect() < 1e-12);
      CHECK(derivative_matrix(spec, lam).hermiticity_defect() < 1e-12);
    }
  }
}

TEST_CASE("analytic derivative agrees with a central difference") {
  const double h = 1e-5;
  for (const auto& spec : static_families()) {
    for (double lam : {0.3, 1.1, 2.4}) {
      const Eigen::MatrixXcd fd =
          (evaluate(spec, lam + h).to_complex() - evaluate(spec, lam - h).to_complex()) / (2 * h);
      const Eigen::MatrixXcd exact = derivative_matrix(spec, lam).to_complex();
      const double scale = 1.0 + exact.cwiseAbs().maxCoeff();
      CHECK((fd - exact).cwiseAbs().maxCoeff() < 1e-8 * scale);
    }
  }
}

TEST_CASE("analytic two-level oracle") {
  auto r = analytic_two_level(1.0, 0.0);
  CHECK(r.S == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(r.C == doctest::Approx(4 * r.S));
  CHECK(r.energies.first == doctest::Approx(-1.0));
  CHECK(r.energies.second == doctest::Approx(1.0));
  CHECK(r.fwhm == doctest::Approx(1.2871885058111654).epsilon(1e-13));

  r = analytic_two_level(1.0, 1.0);
  CHECK(r.S == doctest::Approx(0.03125).epsilon(1e-15));
  CHECK(r.energies.second == doctest::Approx(std::sqrt(2.0)));
  CHECK(error_kind_of([] { analytic_two_level(0.0, 1.0); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("spec JSON round trip is lossless") {
  for (const auto& spec : static_families()) {
    const auto again = spec_from_json(nlohmann::json::parse(spec.to_json().dump()));
    CHECK(again.kind() == spec.kind());
    CHECK(again.dim() == spec.dim());
    for (double lam : {0.25, 1.75}) {
      CHECK((again.evaluate(lam).to_complex() - spec.evaluate(lam).to_complex()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK(error_kind_of([] { spec_from_json({{"kind", "NoSuchModel"}}); }) == ErrorKind::Parse);
}

TEST_CASE("unitary families have no Hamiltonian interface") {
  FloquetFamilyConfig cfg;
  cfg.N = 2;
  cfg.L = 2;
  cfg.lambda_calibration = 2.0;
  const auto spec = build_floquet_family(cfg);
  CHECK(spec.spectrum_kind() == SpectrumKind::Circular);
  CHECK(error_kind_of([&] { spec.evaluate(1.0); }) == ErrorKind::Unsupported);
  CHECK(error_kind_of([&] { spec.derivative_matrix(1.0); }) == ErrorKind::Unsupported);
  CHECK(error_kind_of([] { build_two_level(1.0).evaluate_unitary(0.0); }) == ErrorKind::Unsupported);
}
