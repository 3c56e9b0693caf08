#include "acfid/rmt.hpp"
#include "acfid/stats.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace acfid;

namespace {

constexpr double pi = std::numbers::pi;

double goe_pdf(double c) { return (2 / pi) * std::exp(-c * c / pi); }

// Composite Simpson on [a, b] with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

std::vector<double> wigner_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  for (auto& x : s) x = std::sqrt(-4 / pi * std::log1p(-u(rng)));
  return s;
}

std::vector<double> exponential_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> s(n);
  for (auto& x : s) x = e(rng);
  return s;
}

}  // namespace

TEST_CASE("normalize_unit_mean") {
  const auto n = normalize_unit_mean({2.0, 4.0});
  CHECK(n.c_bar == 3.0);
  CHECK(n.widths[0] == doctest::Approx(2.0 / 3));
  CHECK(n.widths[1] == doctest::Approx(4.0 / 3));

  const auto same = normalize_unit_mean({0.5, 1.5, 1.0});
  CHECK(same.c_bar == 1.0);
  CHECK(same.widths == std::vector<double>{0.5, 1.5, 1.0});

  CHECK(test::error_kind_of([] { normalize_unit_mean({}); }) == ErrorKind::InvalidParameter);
  CHECK(test::error_kind_of([] { normalize_unit_mean({1.0, 0.0}); }) == ErrorKind::InvalidParameter);
  CHECK(test::error_kind_of([] { normalize_unit_mean({1.0, -2.0}); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("goe_width_cdf values") {
  CHECK(goe_width_cdf(0.0) == 0.0);
  CHECK(goe_width_cdf(50.0) == doctest::Approx(1.0).epsilon(1e-15));
  // erf(1/sqrt(pi)) = 0.575062...
  CHECK(goe_width_cdf(1.0) == doctest::Approx(0.57506).epsilon(1e-5));
  CHECK(test::error_kind_of([] { goe_width_cdf(-0.1); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("goe_width_cdf matches quadrature of the width density") {
  double worst = 0;
  for (int i = 1; i <= 100; ++i) {
    const double c = 0.05 * i;
    worst = std::max(worst, std::abs(simpson(goe_pdf, 0.0, c, 4000) - goe_width_cdf(c)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("mixture_cdf properties") {
  CHECK(mixture_cdf(0.0, 0.94) == doctest::Approx(0.06).epsilon(1e-12));
  for (double c : {0.0, 0.3, 1.0, 2.5})
    CHECK(mixture_cdf(c, 1.0) == doctest::Approx(goe_width_cdf(c)).epsilon(1e-15));
  for (double g : {0.1, 0.5, 0.94, 1.0}) {
    CHECK(mixture_cdf(0.0, g) == 1.0 - g);
    CHECK(mixture_cdf(1e3, g) == doctest::Approx(1.0).epsilon(1e-14));
    double prev = -1;
    for (int i = 0; i <= 200; ++i) {
      const double v = mixture_cdf(0.02 * i, g);
      CHECK(v >= prev);
      prev = v;
    }
  }
  CHECK(test::error_kind_of([] { mixture_cdf(1.0, 0.0); }) == ErrorKind::InvalidParameter);
  CHECK(test::error_kind_of([] { mixture_cdf(1.0, 1.5); }) == ErrorKind::InvalidParameter);
  CHECK(test::error_kind_of([] { mixture_cdf(-1.0, 0.5); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("mixture_pdf continuous part") {
  for (double c : {0.1, 0.7, 2.0}) CHECK(mixture_pdf(c, 1.0, 1.0) == doctest::Approx(goe_pdf(c)).epsilon(1e-14));
  CHECK(mixture_pdf(1e-12, 0.5, 1.0) == doctest::Approx(0.1592).epsilon(1e-3));
  for (double g : {0.3, 0.8, 1.0}) {
    const double mass = simpson([&](double c) { return c > 0 ? mixture_pdf(c, g, 1.0) : 2 * g * g / pi; }, 0.0,
                                40.0 / g, 20000);
    CHECK(std::abs(mass - g) < 1e-8);
  }
  CHECK(test::error_kind_of([] { mixture_pdf(0.0, 0.5, 1.0); }) == ErrorKind::AtomAtZero);
  CHECK(test::error_kind_of([] { mixture_pdf(1.0, 0.5, 0.0); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("fit_gamma recovers the chaotic weight") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto draws = sample_width_mixture(0.8, 5000, 100 + seed);
    const auto fit = fit_gamma(normalize_unit_mean(draws).widths);
    if (std::abs(fit.gamma - 0.8) <= 0.03) ++ok;
    CHECK(fit.objective >= 0);
    CHECK(fit.n_widths == 5000);
  }
  CHECK(ok == 20);
}

TEST_CASE("fit_gamma on pure GOE widths") {
  const auto draws = sample_width_mixture(1.0, 5000, 7);
  const auto fit = fit_gamma(normalize_unit_mean(draws).widths);
  CHECK(fit.gamma >= 0.97);
  CHECK(fit.gamma <= 1.0);
  const auto again = fit_gamma(normalize_unit_mean(draws).widths);
  CHECK(again.gamma == fit.gamma);
}

TEST_CASE("fit_gamma preconditions") {
  CHECK(test::error_kind_of([] { fit_gamma(std::vector<double>(10, 1.0)); }) == ErrorKind::InvalidParameter);
  CHECK(test::error_kind_of([] { fit_gamma(std::vector<double>(100, 1.0)); }) == ErrorKind::FitFailure);
}

TEST_CASE("ks_distance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> sample(10000);
  for (auto& x : sample) x = u(rng);
  CHECK(ks_distance(sample, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 0.02);
  CHECK(ks_distance(std::vector<double>(50, 0.5), [](double x) { return std::clamp(x, 0.0, 1.0); }) >= 0.5);
  CHECK(ks_distance({0.25}, [](double x) { return x; }) == doctest::Approx(0.75));
  CHECK(test::error_kind_of([] { ks_distance({}, [](double x) { return x; }); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("unfolding equally spaced phases") {
  const int d = 40;
  Eigen::VectorXd phases(d);
  for (int i = 0; i < d; ++i) phases(i) = -pi + 2 * pi * i / d + 0.01;
  const auto s = unfold_spacings(phases, SpectrumKind::Circular);
  REQUIRE(s.spacings.size() == static_cast<std::size_t>(d));
  for (double x : s.spacings) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(test::error_kind_of([] { unfold_spacings(Eigen::VectorXd::LinSpaced(10, 0, 1), SpectrumKind::Linear); }) ==
        ErrorKind::InvalidParameter);
}

TEST_CASE("unfolding Poisson levels gives exponential spacings") {
  const auto gaps = exponential_draws(5000, 11);
  Eigen::VectorXd levels(5001);
  levels(0) = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) levels(i + 1) = levels(i) + 3.0 * gaps[i];
  const auto s = unfold_spacings(levels, SpectrumKind::Linear);
  double mean = 0;
  for (double x : s.spacings) mean += x;
  CHECK(mean / static_cast<double>(s.spacings.size()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ks_distance(s.spacings, [](double x) { return 1 - std::exp(-x); }) < 0.05);
}

TEST_CASE("unfolded GOE spectrum follows the Wigner surmise") {
  const auto ev = eigenvalues_hermitian(sample_goe({512, 99, 1.0}));
  const auto s = unfold_spacings(ev, SpectrumKind::Linear);
  double mean = 0;
  for (double x : s.spacings) mean += x;
  CHECK(mean / static_cast<double>(s.spacings.size()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ks_distance(s.spacings, wigner_surmise_cdf) < 0.06);
  const auto chi = wigner_chi2(s, 10);
  CHECK(chi.chi2_per_dof < 3.0);
  const auto poisson = wigner_chi2({exponential_draws(511, 1)}, 10);
  CHECK(poisson.chi2_per_dof > 5 * chi.chi2_per_dof);
}

TEST_CASE("wigner_chi2 calibration") {
  const auto w = wigner_chi2({wigner_draws(5000, 5)}, 10);
  CHECK(w.chi2_per_dof > 0.2);
  CHECK(w.chi2_per_dof < 2.5);
  const auto p = wigner_chi2({exponential_draws(5000, 5)}, 10);
  CHECK(p.chi2_per_dof > 50);

  double mean = 0;
  for (int seed = 0; seed < 20; ++seed) mean += wigner_chi2({wigner_draws(5000, 200 + seed)}, 10).chi2_per_dof;
  CHECK(mean / 20 == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("wigner_chi2 ignores sample order and merges sparse bins") {
  auto draws = wigner_draws(2000, 8);
  const auto a = wigner_chi2({draws}, 10);
  std::mt19937_64 rng(1);
  std::shuffle(draws.begin(), draws.end(), rng);
  const auto b = wigner_chi2({draws}, 10);
  CHECK(a.chi2 == doctest::Approx(b.chi2).epsilon(1e-12));
  CHECK(a.dof == b.dof);

  // Expected overflow count beyond s = 3 is ~8.5e-4 per spacing: below 1 for 100 spacings.
  const auto small = wigner_chi2({wigner_draws(100, 9)}, 10);
  CHECK(small.merged);
  CHECK(small.bins_used < 11);
  CHECK(test::error_kind_of([] { wigner_chi2({wigner_draws(50, 1)}, 10); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("pooling concatenates samples") {
  const auto p = pool({{{1.0, 2.0}}, {{3.0}}});
  CHECK(p.spacings == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("mixture draws have the atom weight") {
  const auto d = sample_width_mixture(0.7, 20000, 4, 1e-9);
  const auto atoms = std::count_if(d.begin(), d.end(), [](double x) { return x <= 1e-9; });
  CHECK(static_cast<double>(atoms) / 20000 == doctest::Approx(0.3).epsilon(0.05));
}
