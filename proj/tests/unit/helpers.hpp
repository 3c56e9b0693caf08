#pragma once

#include "acfid/error.hpp"
#include "acfid/matrix.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cstdint>
#include <random>

namespace acfid::test {

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = z(rng);
  return m;
}

inline Eigen::MatrixXcd random_hermitian(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = z(rng);
    for (Eigen::Index j = 0; j < i; ++j) {
      m(i, j) = cplx(z(rng), z(rng));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

template <typename F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected acfid::Error");
  return ErrorKind::Parse;
}

}  // namespace acfid::test
