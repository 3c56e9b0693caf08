#include "acfid/fidelity.hpp"

#include "acfid/error.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace acfid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// HWHM of 1/(1 + x^2/w^2)^2 in units of w: sqrt(sqrt(2) - 1).
const double kHalfWidthFactor = std::sqrt(std::numbers::sqrt2 - 1.0);

void require_delta(double delta_lambda, const char* who) {
  if (!(delta_lambda > 0.0) || !std::isfinite(delta_lambda))
    throw Error(ErrorKind::InvalidParameter, std::string(who) + ": delta_lambda must be positive and finite");
}

void require_level(Eigen::Index n, Eigen::Index dim, const char* who) {
  if (n < 0 || n >= dim)
    throw Error(ErrorKind::InvalidParameter, std::string(who) + ": level " + std::to_string(n) +
                                                 " out of range for dim " + std::to_string(dim));
}

double wrap_phase(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

struct LogParabola {
  double offset;     // peak position relative to the middle sample, in units of the spacing
  double log_peak;
  double curvature;  // per spacing^2
  bool valid;
};

// Parabola through (-1, y0), (0, y1), (1, y2) with y = log S.
LogParabola fit_log_parabola(double s0, double s1, double s2) {
  if (!(s0 > 0.0 && s1 > 0.0 && s2 > 0.0)) return {0.0, 0.0, kNaN, false};
  const double y0 = std::log(s0), y1 = std::log(s1), y2 = std::log(s2);
  const double second = y0 - 2.0 * y1 + y2;
  if (!(second < 0.0)) return {0.0, y1, kNaN, false};
  const double offset = std::clamp(0.5 * (y0 - y2) / second, -1.0, 1.0);
  return {offset, y1 - 0.25 * (y0 - y2) * offset, second, true};
}

}  // namespace

// ---------------------------------------------------------------------------
// Fidelity of single levels

FidelityColumn fidelity_column(const SpectrumSnapshot& a, const SpectrumSnapshot& b, double delta_lambda) {
  require_delta(delta_lambda, "fidelity_column");
  if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidParameter, "fidelity_column: dimension mismatch");
  const auto d = a.dim();
  const Eigen::MatrixXd p = overlap_probabilities(a, b);
  const Eigen::Index shift = a.kind == SpectrumKind::Circular ? circular_alignment(a.values, b.values) : 0;

  FidelityColumn col;
  col.fidelity.resize(d);
  col.one_minus_f.resize(d);
  col.S.resize(d);
  col.floored.assign(static_cast<std::size_t>(d), 0);
  const double inv_d2 = 1.0 / (delta_lambda * delta_lambda);
  for (Eigen::Index n = 0; n < d; ++n) {
    const Eigen::Index j = (n + shift) % d;
    const double diag = p(n, j);
    double leak = 0.0;  // sum over m != n, never formed as a difference against 1
    for (Eigen::Index m = 0; m < d; ++m)
      if (m != n) leak += p(m, j);
    const double total = diag + leak;
    const double f = std::min(1.0, std::sqrt(diag));
    // 1 - f = (1 - f^2)/(1 + f) keeps full relative accuracy when f is close to 1.
    double one_minus_f = diag > 0.5 ? leak / (1.0 + f) : 1.0 - f;
    one_minus_f = std::clamp(one_minus_f, 0.0, 1.0);
    col.fidelity(n) = f;
    col.completeness_defect = std::max(col.completeness_defect, std::abs(total - 1.0));
    if (one_minus_f < kPrecisionFloor) {
      col.one_minus_f(n) = 0.0;
      col.S(n) = 0.0;
      col.floored[static_cast<std::size_t>(n)] = 1;
    } else {
      col.one_minus_f(n) = one_minus_f;
      col.S(n) = one_minus_f * inv_d2;
    }
  }
  return col;
}

double fidelity(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda, Eigen::Index n) {
  require_level(n, spec.dim(), "fidelity");
  if (delta_lambda == 0.0) return 1.0;
  require_delta(delta_lambda, "fidelity");
  const auto col = fidelity_column(spectrum_at(spec, lambda), spectrum_at(spec, lambda + delta_lambda), delta_lambda);
  return col.fidelity(n);
}

FidelityChange fidelity_change(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda,
                               Eigen::Index n) {
  require_level(n, spec.dim(), "fidelity_change");
  require_delta(delta_lambda, "fidelity_change");
  const auto col = fidelity_column(spectrum_at(spec, lambda), spectrum_at(spec, lambda + delta_lambda), delta_lambda);
  return {col.S(n), col.fidelity(n), col.floored[static_cast<std::size_t>(n)] != 0};
}

std::vector<DeltaCheck> validate_delta_all(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda) {
  require_delta(delta_lambda, "validate_delta");
  const auto base = spectrum_at(spec, lambda);
  const auto full = fidelity_column(base, spectrum_at(spec, lambda + delta_lambda), delta_lambda);
  const auto half = fidelity_column(base, spectrum_at(spec, lambda + 0.5 * delta_lambda), 0.5 * delta_lambda);
  std::vector<DeltaCheck> out;
  out.reserve(static_cast<std::size_t>(base.dim()));
  for (Eigen::Index n = 0; n < base.dim(); ++n) {
    DeltaCheck c;
    c.lambda = lambda;
    c.level = n;
    c.rel_change = std::abs(full.S(n) - half.S(n)) / std::max(full.S(n), 1e-300);
    c.precision_limited = full.floored[static_cast<std::size_t>(n)] || half.floored[static_cast<std::size_t>(n)];
    c.ok = c.rel_change < 0.01;
    out.push_back(c);
  }
  return out;
}

DeltaCheck validate_delta(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda, Eigen::Index n) {
  require_level(n, spec.dim(), "validate_delta");
  return validate_delta_all(spec, lambda, delta_lambda)[static_cast<std::size_t>(n)];
}

double pt_fidelity_change(const SpectrumSnapshot& snapshot, const HermitianMatrix& dH, Eigen::Index n) {
  if (snapshot.kind != SpectrumKind::Linear)
    throw Error(ErrorKind::Unsupported, "pt_fidelity_change: requires a Linear snapshot");
  require_level(n, snapshot.dim(), "pt_fidelity_change");
  if (dH.dim() != snapshot.dim()) throw Error(ErrorKind::InvalidParameter, "pt_fidelity_change: dimension mismatch");

  Eigen::VectorXd weights;  // |<m|dH|n>|^2
  if (snapshot.has_real_vectors() && dH.is_real()) {
    const auto& v = std::get<Eigen::MatrixXd>(snapshot.vectors);
    const Eigen::VectorXd w = v.transpose() * (dH.real() * v.col(n));
    weights = w.cwiseAbs2();
  } else {
    const Eigen::MatrixXcd v = snapshot.complex_vectors();
    const Eigen::VectorXcd w = v.adjoint() * (dH.to_complex() * v.col(n));
    weights = w.cwiseAbs2();
  }
  const double scale = std::max(1.0, snapshot.values.cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (Eigen::Index m = 0; m < snapshot.dim(); ++m) {
    if (m == n) continue;
    const double gap = snapshot.values(n) - snapshot.values(m);
    if (std::abs(gap) < kDegeneracyTolerance * scale)
      throw Error(ErrorKind::DegenerateGap, "pt_fidelity_change: levels " + std::to_string(n) + " and " +
                                                std::to_string(m) + " are degenerate");
    sum += weights(m) / (gap * gap);
  }
  return 0.5 * sum;
}

// ---------------------------------------------------------------------------
// Sweeps

Eigen::Index FidelitySweep::sorted_index(Eigen::Index row, Eigen::Index k) const {
  if (kind != SpectrumKind::Circular || label_offset.empty()) return row;
  return (row + label_offset[static_cast<std::size_t>(k)]) % dim();
}

FidelitySweep sweep(const ParametricHamiltonianSpec& spec, double lambda_min, double lambda_max, Eigen::Index K,
                    const SweepOptions& options) {
  if (K < 3) throw Error(ErrorKind::InvalidParameter, "sweep: need at least 3 grid points");
  if (!std::isfinite(lambda_min) || !std::isfinite(lambda_max) || !(lambda_max > lambda_min))
    throw Error(ErrorKind::InvalidParameter, "sweep: need finite lambda_min < lambda_max");
  const double h = (lambda_max - lambda_min) / static_cast<double>(K - 1);
  const double dl = options.delta_lambda.value_or(std::max(h / 100.0, 1e-8));
  require_delta(dl, "sweep");
  if (!(dl < h)) throw Error(ErrorKind::InvalidParameter, "sweep: delta_lambda must be smaller than the grid step");

  FidelitySweep sw;
  sw.spec = spec;
  sw.kind = spec.spectrum_kind();
  sw.step = h;
  sw.delta_lambda = dl;
  sw.warnings = spec.warnings();
  sw.lambda_grid.resize(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) sw.lambda_grid[static_cast<std::size_t>(k)] = lambda_min + static_cast<double>(k) * h;
  sw.lambda_grid.back() = lambda_max;

  const auto d = spec.dim();
  std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(K));
  std::vector<FidelityColumn> columns(static_cast<std::size_t>(K));
  detail::parallel_for(K, options.workers, [&](std::ptrdiff_t k) {
    const double lam = sw.lambda_grid[static_cast<std::size_t>(k)];
    try {
      auto a = spectrum_at(spec, lam);
      auto b = spectrum_at(spec, lam + dl);
      columns[static_cast<std::size_t>(k)] = fidelity_column(a, b, dl);
      values[static_cast<std::size_t>(k)] = std::move(a.values);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("sweep failed at lambda=") + std::to_string(lam) + ": " + e.what());
    }
  });

  sw.label_offset.assign(static_cast<std::size_t>(K), 0);
  if (sw.kind == SpectrumKind::Circular) {
    for (Eigen::Index k = 0; k + 1 < K; ++k) {
      const auto r = circular_alignment(values[static_cast<std::size_t>(k)], values[static_cast<std::size_t>(k + 1)]);
      sw.label_offset[static_cast<std::size_t>(k + 1)] = (sw.label_offset[static_cast<std::size_t>(k)] + r) % d;
    }
  }

  sw.S.resize(d, K);
  sw.f.resize(d, K);
  sw.energies.resize(d, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& col = columns[static_cast<std::size_t>(k)];
    const auto& vals = values[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < d; ++r) {
      const auto s = sw.sorted_index(r, k);
      sw.S(r, k) = col.S(s);
      sw.f(r, k) = col.fidelity(s);
      sw.energies(r, k) = vals(s);
      sw.floored_points += col.floored[static_cast<std::size_t>(s)];
    }
    sw.max_completeness_defect = std::max(sw.max_completeness_defect, col.completeness_defect);
  }
  if (sw.floored_points > 0)
    sw.warnings.push_back("precision floor: " + std::to_string(sw.floored_points) +
                          " points with 1-f below 1e-14 recorded as S=0");
  if (sw.max_completeness_defect > 1e-10)
    sw.warnings.push_back("overlap completeness defect " + std::to_string(sw.max_completeness_defect));

  if (options.with_curvature) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, K, kNaN);
    std::size_t degenerate = 0;
    for (Eigen::Index k = 1; k + 1 < K; ++k) {
      const auto& vals = values[static_cast<std::size_t>(k)];
      for (Eigen::Index r = 0; r < d; ++r) {
        const double gap = d > 1 ? nearest_gap(std::span<const double>(vals.data(), static_cast<std::size_t>(d)),
                                                sw.kind, sw.sorted_index(r, k))
                                 : kNaN;
        if (!(gap > kDegeneracyTolerance)) {
          ++degenerate;
          continue;
        }
        double second;
        if (sw.kind == SpectrumKind::Circular) {
          second = wrap_phase(sw.energies(r, k + 1) - sw.energies(r, k)) -
                   wrap_phase(sw.energies(r, k) - sw.energies(r, k - 1));
        } else {
          second = sw.energies(r, k - 1) - 2.0 * sw.energies(r, k) + sw.energies(r, k + 1);
        }
        c(r, k) = std::abs(second) / (h * h) / gap;
      }
    }
    if (degenerate > 0)
      sw.warnings.push_back("curvature undefined at " + std::to_string(degenerate) + " degenerate points");
    sw.curvature = std::move(c);
  }

  const int probes = std::max(0, options.delta_check_points);
  std::size_t failed = 0;
  double worst = 0.0;
  for (int j = 0; j < probes; ++j) {
    const auto k = probes == 1 ? Eigen::Index{0}
                               : static_cast<Eigen::Index>(std::llround(static_cast<double>(j) * static_cast<double>(K - 1) /
                                                                        static_cast<double>(probes - 1)));
    for (auto& c : validate_delta_all(spec, sw.lambda_grid[static_cast<std::size_t>(k)], dl)) {
      if (!c.ok && !c.precision_limited) {
        ++failed;
        worst = std::max(worst, c.rel_change);
      }
      sw.delta_checks.push_back(c);
    }
  }
  if (failed > 0)
    sw.warnings.push_back("validate_delta failed for " + std::to_string(failed) + " of " +
                          std::to_string(sw.delta_checks.size()) + " probes (max rel_change " + std::to_string(worst) +
                          ")");
  return sw;
}

double default_threshold(const FidelitySweep& sw) {
  const auto d = sw.dim();
  const auto K = sw.size();
  if (d < 2) throw Error(ErrorKind::NoNeighbor, "default_threshold: need at least two levels");
  if (K < 2) throw Error(ErrorKind::InvalidParameter, "default_threshold: need at least two grid points");
  const bool circular = sw.kind == SpectrumKind::Circular;
  double mean_spacing;
  if (circular) {
    mean_spacing = 2.0 * std::numbers::pi / static_cast<double>(d);
  } else {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < K; ++k)
      acc += (sw.energies.col(k).maxCoeff() - sw.energies.col(k).minCoeff()) / static_cast<double>(d - 1);
    mean_spacing = acc / static_cast<double>(K);
  }
  // Mean |slope difference| of adjacent levels converts the spacing into parameter units:
  // a crossing of slope difference v and gap D has width 2 D / v on the lambda axis.
  double slope_acc = 0.0;
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    for (Eigen::Index r = 0; r < d; ++r) {
      if (!circular && r + 1 == d) break;
      const Eigen::Index q = (r + 1) % d;
      double a = sw.energies(r, k + 1) - sw.energies(r, k);
      double b = sw.energies(q, k + 1) - sw.energies(q, k);
      if (circular) {
        a = std::remainder(a, 2.0 * std::numbers::pi);
        b = std::remainder(b, 2.0 * std::numbers::pi);
      }
      slope_acc += std::abs(b - a);
    }
  }
  const double pairs = static_cast<double>(K - 1) * static_cast<double>(circular ? d : d - 1);
  const double mean_slope = slope_acc / (pairs * sw.step);
  if (!(mean_spacing > 0.0)) throw Error(ErrorKind::DegenerateGap, "default_threshold: spectrum has zero extent");
  if (!(mean_slope > 0.0)) throw Error(ErrorKind::DegenerateGap, "default_threshold: spectrum does not move with lambda");
  const double spacing = 2.0 * mean_spacing / mean_slope;
  return 1.0 / (2.0 * spacing * spacing);
}

// ---------------------------------------------------------------------------
// Peaks

std::vector<RawPeak> detect_peaks(const FidelitySweep& sw, double s_threshold) {
  if (!(s_threshold > 0.0)) throw Error(ErrorKind::InvalidParameter, "detect_peaks: threshold must be positive");
  std::vector<RawPeak> out;
  for (Eigen::Index n = 0; n < sw.dim(); ++n)
    for (Eigen::Index k = 1; k + 1 < sw.size(); ++k) {
      const double s = sw.S(n, k);
      if (s >= s_threshold && s > sw.S(n, k - 1) && s >= sw.S(n, k + 1)) out.push_back({n, k});
    }
  return out;
}

double RefinedPeak::half_width() const {
  if (!(log_curvature < 0.0) || !std::isfinite(log_curvature)) return kNaN;
  return kHalfWidthFactor * std::sqrt(-4.0 / log_curvature);
}

RefinedPeak coarse_peak_fit(const FidelitySweep& sw, const RawPeak& peak) {
  if (peak.k < 1 || peak.k + 1 >= sw.size())
    throw Error(ErrorKind::OutOfStencil, "coarse_peak_fit: peak at the grid boundary");
  const auto fit = fit_log_parabola(sw.S(peak.level, peak.k - 1), sw.S(peak.level, peak.k), sw.S(peak.level, peak.k + 1));
  RefinedPeak r;
  r.level = peak.level;
  r.grid_index = peak.k;
  // S(lambda) compares lambda with lambda + dlambda; attribute it to the midpoint.
  r.lambda_star = sw.lambda_grid[static_cast<std::size_t>(peak.k)] + fit.offset * sw.step + 0.5 * sw.delta_lambda;
  r.s_max = fit.valid ? std::exp(fit.log_peak) : sw.S(peak.level, peak.k);
  r.log_curvature = fit.valid ? fit.curvature / (sw.step * sw.step) : kNaN;
  r.depth = 0;
  return r;
}

namespace {

// Eigenvector of the n-th smallest eigenvalue of a real symmetric matrix: Householder
// tridiagonalization, eigenvalues only, then inverse iteration on the tridiagonal form.
// About a third of the cost of a full decomposition when only one level is needed.
Eigen::VectorXd single_eigenvector(const Eigen::MatrixXd& a, Eigen::Index n) {
  const auto d = a.rows();
  Eigen::Tridiagonalization<Eigen::MatrixXd> tri(a);
  const Eigen::VectorXd diag = tri.diagonal();
  const Eigen::VectorXd sub = tri.subDiagonal();
  // n-th eigenvalue by Sturm-sequence bisection (count of eigenvalues below sigma).
  const auto count_below = [&](double sigma) {
    Eigen::Index count = 0;
    double q = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double b2 = i > 0 ? sub(i - 1) * sub(i - 1) : 0.0;
      q = diag(i) - sigma - (i > 0 ? b2 / q : 0.0);
      if (q == 0.0) q = -std::numeric_limits<double>::min();
      if (q < 0.0) ++count;
    }
    return count;
  };
  double radius = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    radius = std::max(radius, std::abs(diag(i)) + (i > 0 ? std::abs(sub(i - 1)) : 0.0) +
                                  (i + 1 < d ? std::abs(sub(i)) : 0.0));
  double lo = -radius - 1.0, hi = radius + 1.0;
  for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double m = 0.5 * (lo + hi);
    if (m <= lo || m >= hi) break;
    if (count_below(m) > n) hi = m;
    else lo = m;
  }
  const double mu = 0.5 * (lo + hi);
  const double scale = std::max(1.0, radius);
  const double tiny = std::numeric_limits<double>::epsilon() * scale;

  // Gaussian elimination with partial pivoting on T - mu I (LAPACK dgttrf layout).
  Eigen::VectorXd dl(d > 1 ? d - 1 : 0), dd(d), du(d > 1 ? d - 1 : 0), du2(d > 2 ? d - 2 : 0);
  std::vector<char> swapped(static_cast<std::size_t>(d), 0);
  for (Eigen::Index i = 0; i < d; ++i) dd(i) = diag(i) - mu;
  for (Eigen::Index i = 0; i + 1 < d; ++i) dl(i) = du(i) = sub(i);
  for (Eigen::Index i = 0; i + 2 < d; ++i) du2(i) = 0.0;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    if (std::abs(dd(i)) >= std::abs(dl(i))) {
      if (dd(i) == 0.0) dd(i) = tiny;
      const double f = dl(i) / dd(i);
      dl(i) = f;
      dd(i + 1) -= f * du(i);
    } else {
      const double f = dd(i) / dl(i);
      dd(i) = dl(i);
      dl(i) = f;
      const double t = du(i);
      du(i) = dd(i + 1);
      dd(i + 1) = t - f * dd(i + 1);
      if (i + 2 < d) {
        du2(i) = du(i + 1);
        du(i + 1) = -f * du(i + 1);
      }
      swapped[static_cast<std::size_t>(i)] = 1;
    }
  }
  if (dd(d - 1) == 0.0) dd(d - 1) = tiny;
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(dd(i)) < tiny) dd(i) = std::copysign(tiny, dd(i) == 0.0 ? 1.0 : dd(i));

  const auto solve = [&](Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
      if (swapped[static_cast<std::size_t>(i)]) std::swap(x(i), x(i + 1));
      x(i + 1) -= dl(i) * x(i);
    }
    x(d - 1) /= dd(d - 1);
    if (d > 1) x(d - 2) = (x(d - 2) - du(d - 2) * x(d - 1)) / dd(d - 2);
    for (Eigen::Index i = d - 3; i >= 0; --i) x(i) = (x(i) - du(i) * x(i + 1) - du2(i) * x(i + 2)) / dd(i);
  };
  Eigen::VectorXd y = Eigen::VectorXd::Ones(d);
  for (int it = 0; it < 3; ++it) {
    solve(y);
    y.normalize();
  }
  Eigen::VectorXd v = tri.matrixQ() * y;
  v.normalize();
  return v;
}

}  // namespace

double single_level_change(const ParametricHamiltonianSpec& spec, Eigen::Index level, double x, double dl,
                           const Eigen::VectorXd& reference) {
  if (spec.spectrum_kind() == SpectrumKind::Linear) {
    const auto ha = spec.evaluate(x);
    if (ha.is_real()) {
      const auto hb = spec.evaluate(x + dl);
      const Eigen::VectorXd a = single_eigenvector(ha.real(), level);
      const Eigen::VectorXd b = single_eigenvector(hb.real(), level);
      const double overlap = std::abs(a.dot(b));
      const double f = std::min(1.0, overlap);
      // 1 - f^2 = |b - (a.b) a|^2 avoids the cancellation in 1 - |a.b|^2.
      const double leak = (b - a.dot(b) * a).squaredNorm();
      const double one_minus_f = f > std::sqrt(0.5) ? leak / (1.0 + f) : 1.0 - f;
      return one_minus_f < kPrecisionFloor ? 0.0 : one_minus_f / (dl * dl);
    }
  }
  const auto a = spectrum_at(spec, x);
  const auto col = fidelity_column(a, spectrum_at(spec, x + dl), dl);
  const auto idx = reference.size() > 0 ? (level + circular_alignment(reference, a.values)) % a.dim() : level;
  return col.S(idx);
}

RefinedPeak refine_peak(const ParametricHamiltonianSpec& spec, Eigen::Index level, double lo, double hi,
                        double delta_lambda, const RefineOptions& options) {
  require_level(level, spec.dim(), "refine_peak");
  require_delta(delta_lambda, "refine_peak");
  if (!(hi > lo)) throw Error(ErrorKind::InvalidParameter, "refine_peak: empty bracket");
  if (options.factor < 2 || options.max_passes < 1)
    throw Error(ErrorKind::InvalidParameter, "refine_peak: need factor >= 2 and at least one pass");

  const bool circular = spec.spectrum_kind() == SpectrumKind::Circular;
  const double center0 = 0.5 * (lo + hi);
  const Eigen::VectorXd reference = circular ? spectrum_values_at(spec, center0) : Eigen::VectorXd();
  const auto s_at = [&](double x) { return single_level_change(spec, level, x, delta_lambda, reference); };

  // Each pass samples 2*factor+1 points; the next bracket is the best sample +- one spacing,
  // so successive spacings shrink by `factor`. Bracket ends and centre carry over.
  const int points = 2 * options.factor + 1;
  const auto mid = static_cast<std::size_t>(options.factor);
  const double initial_width = hi - lo;
  std::vector<double> xs(static_cast<std::size_t>(points)), ss(static_cast<std::size_t>(points));
  std::size_t best = 0;
  int pass = 0;
  double spacing = 0.0;
  double estimate = center0;
  LogParabola fit{};
  bool carried = false;
  double carried_s[3] = {0.0, 0.0, 0.0};
  while (pass < options.max_passes) {
    spacing = (hi - lo) / static_cast<double>(points - 1);
    const double centre = carried ? xs[best] : center0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double x = lo + static_cast<double>(i) * spacing;
      if (i == 0) x = lo;
      if (i + 1 == xs.size()) x = hi;
      if (i == mid && carried) x = centre;
      xs[i] = x;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (carried && i == 0) ss[i] = carried_s[0];
      else if (carried && i == mid) ss[i] = carried_s[1];
      else if (carried && i + 1 == xs.size()) ss[i] = carried_s[2];
      else ss[i] = s_at(xs[i]);
    }
    best = static_cast<std::size_t>(std::max_element(ss.begin(), ss.end()) - ss.begin());
    ++pass;
    if (best == 0 || best + 1 == ss.size())
      throw Error(ErrorKind::RefinementDiverged, "refine_peak: maximum escaped the bracket [" + std::to_string(lo) +
                                                     ", " + std::to_string(hi) + "] for level " + std::to_string(level));
    fit = fit_log_parabola(ss[best - 1], ss[best], ss[best + 1]);
    const double located = xs[best] + fit.offset * spacing;
    const double moved = std::abs(located - estimate);
    estimate = located;
    if (moved < options.move_tolerance * initial_width) break;
    carried_s[0] = ss[best - 1];
    carried_s[1] = ss[best];
    carried_s[2] = ss[best + 1];
    lo = xs[best - 1];
    hi = xs[best + 1];
    carried = true;
  }

  RefinedPeak r;
  r.level = level;
  r.lambda_star = estimate + 0.5 * delta_lambda;
  r.s_max = fit.valid ? std::exp(fit.log_peak) : ss[best];
  r.log_curvature = fit.valid ? fit.curvature / (spacing * spacing) : kNaN;
  r.depth = pass;
  return r;
}

double sampled_fwhm(const FidelitySweep& sw, Eigen::Index row, Eigen::Index k) {
  const Eigen::Index K = sw.size();
  if (row < 0 || row >= sw.dim() || k < 0 || k >= K) throw Error(ErrorKind::InvalidParameter, "sampled_fwhm: index out of range");
  const double half = 0.5 * sw.S(row, k);
  auto lam = [&](Eigen::Index i) { return sw.lambda_grid[static_cast<std::size_t>(i)]; };
  auto crossing = [&](Eigen::Index inner, Eigen::Index outer) {
    const double a = sw.S(row, inner), b = sw.S(row, outer);
    return lam(inner) + (a - half) / (a - b) * (lam(outer) - lam(inner));
  };
  Eigen::Index l = k;
  while (l > 0 && sw.S(row, l - 1) > half) --l;
  Eigen::Index r = k;
  while (r + 1 < K && sw.S(row, r + 1) > half) ++r;
  if (l == 0 || r + 1 == K) return kNaN;
  return crossing(r, r + 1) - crossing(l, l - 1);
}

double width_from_peak(double s_max) {
  if (!(s_max > 0.0)) throw Error(ErrorKind::InvalidParameter, "width_from_peak: s_max must be positive");
  return 1.0 / std::sqrt(2.0 * s_max);
}

// ---------------------------------------------------------------------------
// Pairing

namespace {

Eigen::Index nearest_grid_index(const FidelitySweep& sw, double lambda) {
  const double pos = (lambda - sw.lambda_grid.front()) / sw.step;
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(pos)), 0, sw.size() - 1);
}

// Gap between rows lo and hi (or around lo alone) from a values-only snapshot at lambda.
double gap_at(const FidelitySweep& sw, double lambda, Eigen::Index lo, Eigen::Index hi, bool paired) {
  const Eigen::VectorXd v = spectrum_values_at(sw.spec, lambda);
  const auto d = v.size();
  Eigen::Index shift = 0;
  if (sw.kind == SpectrumKind::Circular) {
    const Eigen::VectorXd rows = sw.energies.col(nearest_grid_index(sw, lambda));
    shift = circular_alignment(rows, v);
  }
  const auto a = (lo + shift) % d;
  if (!paired) return nearest_gap(std::span<const double>(v.data(), static_cast<std::size_t>(d)), sw.kind, a);
  const auto b = (hi + shift) % d;
  return sw.kind == SpectrumKind::Circular ? circular_distance(v(a), v(b)) : std::abs(v(b) - v(a));
}

}  // namespace

std::vector<ACEvent> pair_and_estimate(const std::vector<RefinedPeak>& peaks, const FidelitySweep& sw) {
  const auto d = sw.dim();
  const bool circular = sw.kind == SpectrumKind::Circular;
  const auto tolerance = [&](const RefinedPeak& p) {
    const double hw = p.half_width();
    return std::isfinite(hw) ? std::max(sw.step, 0.25 * hw) : sw.step;
  };

  struct Candidate {
    double distance;
    std::size_t lower;  // peak on row n
    std::size_t upper;  // peak on row n+1
  };
  std::vector<std::vector<std::size_t>> by_level(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < peaks.size(); ++i) by_level[static_cast<std::size_t>(peaks[i].level)].push_back(i);

  std::vector<Candidate> candidates;
  const Eigen::Index level_pairs = circular && d > 2 ? d : d - 1;
  for (Eigen::Index n = 0; n < level_pairs; ++n) {
    const auto m = (n + 1) % d;
    for (auto i : by_level[static_cast<std::size_t>(n)])
      for (auto j : by_level[static_cast<std::size_t>(m)]) {
        const double dist = std::abs(peaks[i].lambda_star - peaks[j].lambda_star);
        if (dist < std::max(tolerance(peaks[i]), tolerance(peaks[j]))) candidates.push_back({dist, i, j});
      }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });

  std::vector<char> used(peaks.size(), 0);
  std::vector<ACEvent> events;
  for (const auto& c : candidates) {
    if (used[c.lower] || used[c.upper]) continue;
    used[c.lower] = used[c.upper] = 1;
    const auto& a = peaks[c.lower];
    const auto& b = peaks[c.upper];
    ACEvent e;
    e.level_lo = a.level;
    e.level_hi = b.level;
    e.paired = true;
    e.lambda_star = 0.5 * (a.lambda_star + b.lambda_star);
    e.s_max = 0.5 * (a.s_max + b.s_max);
    e.refinement_depth = std::max(a.depth, b.depth);
    events.push_back(e);
  }
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (used[i]) continue;
    ACEvent e;
    e.level_lo = e.level_hi = peaks[i].level;
    e.paired = false;
    e.lambda_star = peaks[i].lambda_star;
    e.s_max = peaks[i].s_max;
    e.refinement_depth = peaks[i].depth;
    events.push_back(e);
  }
  std::sort(events.begin(), events.end(), [](const ACEvent& a, const ACEvent& b) {
    if (a.lambda_star != b.lambda_star) return a.lambda_star < b.lambda_star;
    return a.level_lo < b.level_lo;
  });
  for (auto& e : events) {
    e.lambda_star = std::clamp(e.lambda_star, sw.lambda_grid.front(), sw.lambda_grid.back());
    e.c_est = width_from_peak(e.s_max);
    e.grid_index = nearest_grid_index(sw, e.lambda_star);
    e.gap = gap_at(sw, e.lambda_star, e.level_lo, e.level_hi, e.paired);
  }
  return events;
}

std::size_t DetectionResult::paired_count() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const ACEvent& e) { return e.paired; }));
}

DetectionResult detect_avoided_crossings(const FidelitySweep& sw, const DetectOptions& options) {
  DetectionResult result;
  result.threshold = options.threshold.value_or(default_threshold(sw));
  const auto raw = detect_peaks(sw, result.threshold);
  result.raw_peaks = raw.size();

  std::vector<RefinedPeak> refined(raw.size());
  std::vector<char> failed(raw.size(), 0), did_refine(raw.size(), 0);
  detail::parallel_for(static_cast<std::ptrdiff_t>(raw.size()), options.workers, [&](std::ptrdiff_t i) {
    const auto& p = raw[static_cast<std::size_t>(i)];
    bool refine = options.refine == RefineMode::Always;
    if (options.refine == RefineMode::Unresolved) {
      const double s = sw.S(p.level, p.k);
      refine = std::min(sw.S(p.level, p.k - 1), sw.S(p.level, p.k + 1)) < options.resolved_ratio * s;
    }
    if (!refine) {
      refined[static_cast<std::size_t>(i)] = coarse_peak_fit(sw, p);
      return;
    }
    did_refine[static_cast<std::size_t>(i)] = 1;
    try {
      auto r = refine_peak(sw.spec, sw.sorted_index(p.level, p.k), sw.lambda_grid[static_cast<std::size_t>(p.k - 1)],
                           sw.lambda_grid[static_cast<std::size_t>(p.k + 1)], sw.delta_lambda, options.refine_options);
      r.level = p.level;
      r.grid_index = p.k;
      refined[static_cast<std::size_t>(i)] = r;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RefinementDiverged) throw;
      failed[static_cast<std::size_t>(i)] = 1;
    }
  });

  std::vector<RefinedPeak> kept;
  kept.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    result.refined_peaks += static_cast<std::size_t>(did_refine[i]);
    if (failed[i]) {
      ++result.refinement_failures;
      continue;
    }
    kept.push_back(refined[i]);
  }
  if (result.refinement_failures > 0)
    result.warnings.push_back("refinement diverged for " + std::to_string(result.refinement_failures) +
                              " peaks; events dropped");
  result.events = pair_and_estimate(kept, sw);
  return result;
}

ACDensityHistogram ac_density(const std::vector<ACEvent>& events, std::vector<double> bin_edges,
                              Eigen::Index dim_hilbert) {
  if (bin_edges.size() < 2) throw Error(ErrorKind::InvalidParameter, "ac_density: need at least one bin");
  if (dim_hilbert < 1) throw Error(ErrorKind::InvalidParameter, "ac_density: dim_hilbert must be positive");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1]))
      throw Error(ErrorKind::InvalidParameter, "ac_density: bin edges must be strictly increasing");

  ACDensityHistogram h;
  h.dim_hilbert = dim_hilbert;
  h.counts.assign(bin_edges.size() - 1, 0);
  for (const auto& e : events) {
    const double x = e.lambda_star;
    if (!(x >= bin_edges.front() && x <= bin_edges.back())) {
      ++h.overflow;
      continue;
    }
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
    auto bin = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
    bin = std::min(bin, h.counts.size() - 1);  // right edge belongs to the last bin
    ++h.counts[bin];
  }
  h.density.resize(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    h.density[i] = static_cast<double>(h.counts[i]) /
                   (static_cast<double>(dim_hilbert) * (bin_edges[i + 1] - bin_edges[i]));
  h.bin_edges = std::move(bin_edges);
  return h;
}

}  // namespace acfid
