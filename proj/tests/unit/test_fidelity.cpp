#include "acfid/fidelity.hpp"
#include "acfid/hamiltonians.hpp"
#include "acfid/rmt.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace acfid;
using acfid::test::error_kind_of;

namespace {

double two_level_S(double g, double lambda) {
  const double r = g / (g * g + lambda * lambda);
  return r * r / 8.0;
}

// Hand-built sweep for detector tests that do not need a model.
FidelitySweep synthetic(const std::vector<std::vector<double>>& rows, double lo = 0.0, double h = 1.0) {
  FidelitySweep sw;
  sw.spec = build_two_level(1.0);
  const auto d = static_cast<Eigen::Index>(rows.size());
  const auto K = static_cast<Eigen::Index>(rows[0].size());
  sw.S.resize(d, K);
  sw.energies.resize(d, K);
  for (Eigen::Index n = 0; n < d; ++n)
    for (Eigen::Index k = 0; k < K; ++k) {
      sw.S(n, k) = rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
      sw.energies(n, k) = static_cast<double>(n);
    }
  sw.f = Eigen::MatrixXd::Ones(d, K);
  for (Eigen::Index k = 0; k < K; ++k) sw.lambda_grid.push_back(lo + h * static_cast<double>(k));
  sw.step = h;
  sw.delta_lambda = 1e-6;
  return sw;
}

}  // namespace

TEST_CASE("fidelity on the two-level family") {
  const auto spec = build_two_level(1.0);
  CHECK(fidelity(spec, 0.3, 0.0, 0) == 1.0);

  // far from the crossing: 1 - f = S dl^2 ~ 1.2e-12
  const double dl = 1e-4;
  const double one_minus_f = fidelity_change(spec, 10.0, dl, 0).value * dl * dl;
  CHECK(one_minus_f == doctest::Approx(two_level_S(1.0, 10.0 + dl / 2) * dl * dl).epsilon(1e-6));
  CHECK(one_minus_f == doctest::Approx(1.2e-12).epsilon(0.05));

  const double at_zero = 1.0 - fidelity(spec, 0.0, 1e-3, 1);
  CHECK(at_zero == doctest::Approx(1.25e-7).epsilon(1e-3));

  CHECK(fidelity_change(spec, 0.0, 1e-5, 0).value == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(fidelity_change(spec, 1.0, 1e-5, 1).value == doctest::Approx(0.03125).epsilon(1e-5));
}

TEST_CASE("fidelity change vanishes for a lambda-independent family") {
  const auto spec = build_linear_pair(HermitianMatrix(test::random_symmetric(4, 3)),
                                      HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(4, 4))));
  for (Eigen::Index n = 0; n < 4; ++n) {
    const auto r = fidelity_change(spec, 0.4, 1e-4, n);
    CHECK(r.value == 0.0);
    CHECK(r.below_precision_floor);
  }
}

TEST_CASE("validate_delta") {
  CHECK(validate_delta(build_two_level(1.0), 0.0, 1e-4, 0).ok);
  const auto narrow = validate_delta(build_two_level(0.001), 0.0, 0.01, 0);
  CHECK_FALSE(narrow.ok);
  CHECK(narrow.rel_change > 0.01);
  const auto flat = build_linear_pair(HermitianMatrix(test::random_symmetric(3, 4)),
                                      HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))));
  const auto z = validate_delta(flat, 1.0, 1e-3, 1);
  CHECK(z.ok);
  CHECK(z.rel_change == 0.0);
}

TEST_CASE("perturbative S") {
  const auto spec = build_two_level(1.0);
  const auto snap = spectrum_at(spec, 0.0);
  CHECK(pt_fidelity_change(snap, derivative_matrix(spec, 0.0), 0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(pt_fidelity_change(snap, HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2))), 1) == 0.0);

  const auto lin = build_linear_pair(HermitianMatrix(test::random_symmetric(10, 40)),
                                     HermitianMatrix(test::random_symmetric(10, 41)));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  int compared = 0;
  for (int i = 0; i < 20; ++i) {
    const double lam = u(rng);
    const auto s = spectrum_at(lin, lam);
    for (Eigen::Index n = 0; n < 10; ++n) {
      if (nearest_gap(s, n) < 1e-3) continue;
      const double pt = pt_fidelity_change(s, derivative_matrix(lin, lam), n);
      // the forward probe samples the midpoint
      const double fd = fidelity_change(lin, lam - 5e-5, 1e-4, n).value;
      CHECK(std::abs(fd - pt) < 0.01 * pt);
      ++compared;
    }
  }
  CHECK(compared > 150);

  const auto deg = eig_hermitian(HermitianMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3))));
  CHECK(error_kind_of([&] { pt_fidelity_change(deg, HermitianMatrix(test::random_symmetric(3, 1)), 0); }) ==
        ErrorKind::DegenerateGap);
}

TEST_CASE("two-level sweep matches the closed form") {
  const auto sw = sweep(build_two_level(1.0), -5, 5, 1001, {.delta_lambda = 1e-5});
  CHECK(sw.size() == 1001);
  CHECK(sw.step == doctest::Approx(0.01));
  double worst = 0.0;
  for (Eigen::Index k = 0; k < sw.size(); ++k) {
    const double exact = two_level_S(1.0, sw.lambda_grid[static_cast<std::size_t>(k)] + 0.5e-5);
    for (Eigen::Index n = 0; n < 2; ++n) worst = std::max(worst, std::abs(sw.S(n, k) - exact) / exact);
  }
  CHECK(worst < 1e-6);
  CHECK(sw.floored_points == 0);
  CHECK(sw.max_completeness_defect < 1e-10);
  CHECK((sw.f.array() >= 0.0).all());
  CHECK((sw.f.array() <= 1.0).all());
  CHECK((sw.S.array() >= 0.0).all());
}

TEST_CASE("sweep preconditions and minimal grid") {
  const auto spec = build_triple(0, 2, 3);
  const auto sw = sweep(spec, -1, 1, 3);
  CHECK(sw.size() == 3);
  CHECK(sw.delta_lambda < sw.step);
  CHECK(error_kind_of([&] { sweep(spec, -1, 1, 2); }) == ErrorKind::InvalidParameter);
  CHECK(error_kind_of([&] { sweep(spec, -1, 1, 3, {.delta_lambda = 1.5}); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("fidelity is symmetric in the two parameter points") {
  const auto spec = build_goe_interp(HermitianMatrix(test::random_symmetric(12, 7)),
                                     HermitianMatrix(test::random_symmetric(12, 8)));
  const auto a = spectrum_at(spec, 0.9), b = spectrum_at(spec, 0.9 + 1e-3);
  const auto ab = fidelity_column(a, b, 1e-3), ba = fidelity_column(b, a, 1e-3);
  for (Eigen::Index n = 0; n < 12; ++n) CHECK(ab.fidelity(n) == doctest::Approx(ba.fidelity(n)).epsilon(1e-14));
  CHECK(ab.completeness_defect < 1e-10);
}

TEST_CASE("delta independence where validate_delta passes") {
  const auto spec = build_triple(1, 2, 3);
  for (double lam : {-2.0, -0.4, 0.7, 3.0}) {
    for (const auto& c : validate_delta_all(spec, lam, 1e-4)) {
      if (!c.ok) continue;
      const double s1 = fidelity_change(spec, lam, 1e-4, c.level).value;
      const double s2 = fidelity_change(spec, lam, 5e-5, c.level).value;
      CHECK(std::abs(s1 - s2) < 0.01 * s1);
    }
  }
}

TEST_CASE("sweep is independent of the worker count") {
  const auto spec = build_goe_interp(HermitianMatrix(test::random_symmetric(16, 1)),
                                     HermitianMatrix(test::random_symmetric(16, 2)));
  const auto a = sweep(spec, 0, 3, 200, {.workers = 1});
  const auto b = sweep(spec, 0, 3, 200, {.workers = 3});
  CHECK(a.S == b.S);
  CHECK(a.f == b.f);
  CHECK(a.energies == b.energies);
  const auto da = detect_avoided_crossings(a, {.workers = 1});
  const auto db = detect_avoided_crossings(b, {.workers = 3});
  REQUIRE(da.events.size() == db.events.size());
  for (std::size_t i = 0; i < da.events.size(); ++i) {
    CHECK(da.events[i].lambda_star == db.events[i].lambda_star);
    CHECK(da.events[i].c_est == db.events[i].c_est);
  }
}

TEST_CASE("detect_peaks") {
  const auto sw = sweep(build_two_level(1.0), -5, 5, 1001, {.delta_lambda = 1e-5});
  const auto peaks = detect_peaks(sw, 0.01);
  REQUIRE(peaks.size() == 2);
  for (const auto& p : peaks) CHECK(p.k == 500);

  CHECK(detect_peaks(synthetic({{0.1, 0.1, 0.1, 0.1}}), 1.0).empty());

  // plateau: the leftmost point of a flat top wins, once
  const auto plateau = detect_peaks(synthetic({{0, 1, 3, 3, 3, 1, 0}}), 0.5);
  REQUIRE(plateau.size() == 1);
  CHECK(plateau[0].k == 2);

  const auto tri = sweep(build_triple(0, 2, 3), -6, 6, 1201);
  const auto tp = detect_peaks(tri, default_threshold(tri));
  CHECK(std::count_if(tp.begin(), tp.end(), [](const RawPeak& p) { return p.level == 1; }) == 2);
}

TEST_CASE("refinement on the two-level crossing") {
  const double dl = 1e-6;
  auto r = refine_peak(build_two_level(1.0), 0, -0.05, 0.05, dl);
  CHECK(std::abs(r.lambda_star) < 1e-6);
  CHECK(r.s_max == doctest::Approx(0.125).epsilon(1e-4));

  // a coarse grid of step 1 cannot see a peak of width 0.1
  r = refine_peak(build_two_level(0.05), 1, -1.0, 1.0, dl);
  CHECK(r.s_max == doctest::Approx(50.0).epsilon(0.01));
  CHECK(r.depth >= 1);

  CHECK(error_kind_of([] { refine_peak(build_two_level(1.0), 0, 1.0, 2.0, 1e-6); }) ==
        ErrorKind::RefinementDiverged);
}

TEST_CASE("log-parabola fit is exact for a Gaussian peak") {
  std::vector<double> row;
  const double centre = 2.3;
  for (int k = 0; k < 9; ++k) row.push_back(std::exp(-(k * 0.5 - centre) * (k * 0.5 - centre)));
  const auto sw = synthetic({row}, 0.0, 0.5);
  const auto r = coarse_peak_fit(sw, {0, 5});
  CHECK(r.lambda_star == doctest::Approx(centre + 0.5 * sw.delta_lambda).epsilon(1e-13));
  CHECK(r.s_max == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.log_curvature == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("full pipeline recovers the two-level width") {
  for (double g : {0.05, 0.2, 1.0, 5.0}) {
    const auto sw = sweep(build_two_level(g), -10 * g, 10 * g, 2001);
    const auto det = detect_avoided_crossings(sw);
    REQUIRE(det.events.size() == 1);
    const auto& e = det.events[0];
    CHECK(e.paired);
    CHECK(e.level_lo == 0);
    CHECK(e.level_hi == 1);
    CHECK(e.c_est / (2 * g) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(e.gap - e.c_est) / e.gap < 0.5);
    CHECK(std::abs(e.lambda_star) < 1e-3 * g);
  }
  const auto half = detect_avoided_crossings(sweep(build_two_level(0.5), -5, 5, 2001));
  REQUIRE(half.events.size() == 1);
  CHECK(half.events[0].s_max == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(half.events[0].c_est == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(width_from_peak(0.125) == doctest::Approx(2.0));
}

TEST_CASE("renormalized curvature tracks 4 S at an isolated crossing") {
  const auto sw = sweep(build_two_level(1.0), -5, 5, 2001, {.with_curvature = true});
  REQUIRE(sw.curvature);
  const Eigen::Index k = 1000;
  for (Eigen::Index n = 0; n < 2; ++n) {
    const double ratio = (*sw.curvature)(n, k) / sw.S(n, k);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("triple model yields two paired events") {
  for (double a : {0.0, 1.0}) {
    const auto det = detect_avoided_crossings(sweep(build_triple(a, 2, 3), -6, 6, 1201));
    REQUIRE(det.events.size() == 2);
    for (const auto& e : det.events) {
      CHECK(e.paired);
      CHECK(e.level_hi == e.level_lo + 1);
    }
    CHECK(det.events[0].level_lo != det.events[1].level_lo);
  }
  // (0, 0, 1): -lambda decouples and sits between the coupled pair at lambda = 0, so the one
  // avoided crossing shows up in sorted rows 0 and 2 (exact 2x2 block: S_max = 1/32, width 4).
  // The decoupled level crosses the pair exactly at +-1/sqrt(2); refinement resolves those
  // down to the probe step.
  const auto det = detect_avoided_crossings(sweep(build_triple(0, 0, 1), -6, 6, 1201));
  REQUIRE(det.events.size() == 4);
  CHECK(det.paired_count() == 0);
  int avoided = 0, exact = 0;
  for (const auto& e : det.events) {
    if (std::abs(e.lambda_star) < 1e-3) {
      ++avoided;
      CHECK((e.level_lo == 0 || e.level_lo == 2));
      CHECK(e.s_max == doctest::Approx(1.0 / 32).epsilon(1e-3));
      CHECK(e.c_est == doctest::Approx(4.0).epsilon(0.01));
    } else {
      ++exact;
      CHECK(e.level_lo == 1);
      CHECK(std::abs(std::abs(e.lambda_star) - std::sqrt(0.5)) < 1e-3);
      CHECK(e.c_est < 1e-3);
    }
  }
  CHECK(avoided == 2);
  CHECK(exact == 2);
}

TEST_CASE("single-level path agrees with the full decomposition") {
  const auto spec = build_goe_interp(HermitianMatrix(test::random_symmetric(40, 3)),
                                     HermitianMatrix(test::random_symmetric(40, 4)));
  for (double lam : {0.3, 1.4, 2.8})
    for (Eigen::Index n : {0, 17, 39}) {
      const double full = fidelity_change(spec, lam, 1e-6, n).value;
      const double fast = single_level_change(spec, n, lam, 1e-6);
      CHECK(fast == doctest::Approx(full).epsilon(1e-4));
    }
}

TEST_CASE("AC density histogram") {
  ACEvent e;
  e.lambda_star = 0.5;
  auto h = ac_density({e}, {0.0, 1.0}, 2);
  CHECK(h.density[0] == 0.5);
  CHECK(h.overflow == 0);

  h = ac_density({}, {0.0, 1.0, 2.0, 3.0}, 10);
  CHECK(std::all_of(h.density.begin(), h.density.end(), [](double x) { return x == 0.0; }));

  std::vector<ACEvent> evs(5);
  const double xs[] = {0.1, 0.7, 1.9, 3.0, 4.5};
  for (int i = 0; i < 5; ++i) evs[static_cast<std::size_t>(i)].lambda_star = xs[i];
  h = ac_density(evs, {0.0, 0.5, 2.0, 3.0}, 7);
  CHECK(h.counts == std::vector<std::size_t>{1, 2, 1});
  CHECK(h.overflow == 1);
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    CHECK(h.density[i] * (h.bin_edges[i + 1] - h.bin_edges[i]) * 7 == doctest::Approx(static_cast<double>(h.counts[i])));
  CHECK(error_kind_of([] { ac_density({}, {1.0, 0.0}, 2); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("raising the threshold never adds events") {
  const auto spec = build_goe_interp(HermitianMatrix(test::random_symmetric(24, 31)),
                                     HermitianMatrix(test::random_symmetric(24, 32)));
  const auto sw = sweep(spec, 0, 3.1, 800);
  std::size_t previous = SIZE_MAX;
  for (double thr : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    const auto n = detect_avoided_crossings(sw, {.threshold = thr}).events.size();
    CHECK(n <= previous);
    previous = n;
  }
}
