#include "acfid/stats.hpp"

#include "acfid/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace acfid {

namespace {

const double kSqrtPi = std::sqrt(std::numbers::pi);

void require_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::InvalidParameter, "gamma must lie in (0, 1]");
}

}  // namespace

NormalizedWidths normalize_unit_mean(const std::vector<double>& widths) {
  if (widths.empty()) throw Error(ErrorKind::InvalidParameter, "normalize_unit_mean: empty sample");
  for (double w : widths)
    if (!(w > 0.0) || !std::isfinite(w))
      throw Error(ErrorKind::InvalidParameter, "normalize_unit_mean: widths must be positive and finite");
  NormalizedWidths out;
  out.c_bar = std::accumulate(widths.begin(), widths.end(), 0.0) / static_cast<double>(widths.size());
  out.widths.reserve(widths.size());
  for (double w : widths) out.widths.push_back(w / out.c_bar);
  return out;
}

double goe_width_cdf(double c) {
  if (!(c >= 0.0)) throw Error(ErrorKind::InvalidParameter, "goe_width_cdf: c must be non-negative");
  return std::erf(c / kSqrtPi);
}

double mixture_cdf(double c, double gamma) {
  require_gamma(gamma);
  if (!(c >= 0.0)) throw Error(ErrorKind::InvalidParameter, "mixture_cdf: c must be non-negative");
  return 1.0 - gamma + gamma * std::erf(gamma * c / kSqrtPi);
}

double mixture_pdf(double c, double gamma, double c_bar) {
  require_gamma(gamma);
  if (!(c_bar > 0.0)) throw Error(ErrorKind::InvalidParameter, "mixture_pdf: c_bar must be positive");
  if (c == 0.0)
    throw Error(ErrorKind::AtomAtZero, "mixture_pdf: c = 0 carries an atom of weight 1 - gamma; use mixture_cdf");
  if (!(c > 0.0)) throw Error(ErrorKind::InvalidParameter, "mixture_pdf: c must be positive");
  const double x = gamma * c / c_bar;
  return 2.0 * gamma * gamma / (std::numbers::pi * c_bar) * std::exp(-x * x / std::numbers::pi);
}

const char* to_string(FitMethod m) noexcept { return m == FitMethod::GridScan ? "GridScan" : "GoldenSection"; }

MixtureFit fit_gamma(const std::vector<double>& normalized_widths, double c_bar) {
  if (normalized_widths.size() < 50) throw Error(ErrorKind::InvalidParameter, "fit_gamma: need at least 50 widths");
  std::vector<double> c = normalized_widths;
  std::sort(c.begin(), c.end());
  if (!(c.front() >= 0.0)) throw Error(ErrorKind::InvalidParameter, "fit_gamma: widths must be non-negative");
  if (c.front() == c.back()) throw Error(ErrorKind::FitFailure, "fit_gamma: all widths are equal");

  // Right-continuous ECDF at each sample point (ties share the upper value).
  const auto n = c.size();
  std::vector<double> ecdf(n);
  for (std::size_t i = n; i-- > 0;)
    ecdf[i] = (i + 1 < n && c[i + 1] == c[i]) ? ecdf[i + 1] : static_cast<double>(i + 1) / static_cast<double>(n);

  const auto objective = [&](double g) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ecdf[i] - (1.0 - g + g * std::erf(g * c[i] / kSqrtPi));
      s += r * r;
    }
    return s;
  };
  const auto scan = [&](double lo, double hi, double step, double& best_g, double& best_v) {
    const auto count = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= count; ++i) {
      const double g = std::clamp(lo + i * step, 1e-4, 1.0);
      const double v = objective(g);
      if (v < best_v) {
        best_v = v;
        best_g = g;
      }
    }
  };

  // 1e-4 resolution reached hierarchically: 1e-2 over (0,1], then 1e-4 around the best.
  double best_g = 1.0, best_v = objective(1.0);
  scan(0.01, 1.0, 0.01, best_g, best_v);
  scan(std::max(1e-4, best_g - 0.02), std::min(1.0, best_g + 0.02), 1e-4, best_g, best_v);

  MixtureFit fit;
  fit.c_bar = c_bar;
  fit.n_widths = n;
  fit.gamma = best_g;
  fit.objective = best_v;
  fit.method = FitMethod::GridScan;

  // Golden-section polish inside the neighbouring grid cells.
  double a = std::max(1e-4, best_g - 1e-4), b = std::min(1.0, best_g + 1e-4);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 40 && b - a > 1e-9; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = objective(x2);
    }
  }
  const double g = 0.5 * (a + b);
  const double v = objective(g);
  if (v < fit.objective) {
    fit.gamma = g;
    fit.objective = v;
    fit.method = FitMethod::GoldenSection;
  }
  return fit;
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorKind::InvalidParameter, "ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

SpacingSample unfold_spacings(const Eigen::VectorXd& values, SpectrumKind kind) {
  const auto d = values.size();
  if (d < 20) throw Error(ErrorKind::InvalidParameter, "unfold_spacings: need at least 20 levels");
  std::vector<double> v(values.data(), values.data() + d);
  std::sort(v.begin(), v.end());
  SpacingSample out;
  if (kind == SpectrumKind::Circular) {
    const double mean = 2.0 * std::numbers::pi / static_cast<double>(d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) out.spacings.push_back((v[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(i)]) / mean);
    out.spacings.push_back((v.front() + 2.0 * std::numbers::pi - v.back()) / mean);
  } else {
    constexpr Eigen::Index window = 11;
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
      Eigen::Index lo = std::clamp<Eigen::Index>(i - window / 2, 0, d - window);
      const Eigen::Index hi = lo + window - 1;
      const double local = (v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)]) / static_cast<double>(window - 1);
      if (!(local > 0.0)) throw Error(ErrorKind::DegenerateGap, "unfold_spacings: zero local spacing");
      out.spacings.push_back((v[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(i)]) / local);
    }
  }
  const double mean = std::accumulate(out.spacings.begin(), out.spacings.end(), 0.0) / static_cast<double>(out.spacings.size());
  if (!(mean > 0.0)) throw Error(ErrorKind::DegenerateGap, "unfold_spacings: fully degenerate spectrum");
  for (auto& s : out.spacings) s /= mean;
  return out;
}

SpacingSample unfold_spacings(const SpectrumSnapshot& s) { return unfold_spacings(s.values, s.kind); }

SpacingSample pool(const std::vector<SpacingSample>& samples) {
  SpacingSample out;
  for (const auto& s : samples) out.spacings.insert(out.spacings.end(), s.spacings.begin(), s.spacings.end());
  return out;
}

double wigner_surmise_cdf(double s) {
  if (!(s >= 0.0)) return 0.0;
  return -std::expm1(-std::numbers::pi * s * s / 4.0);
}

Chi2Result wigner_chi2(const SpacingSample& sample, int bins) {
  if (bins < 2) throw Error(ErrorKind::InvalidParameter, "wigner_chi2: need at least 2 bins");
  const auto n = sample.spacings.size();
  if (n < static_cast<std::size_t>(10 * bins))
    throw Error(ErrorKind::InvalidParameter, "wigner_chi2: sample must hold at least 10 * bins spacings");

  constexpr double top = 3.0;
  std::vector<double> obs(static_cast<std::size_t>(bins) + 1, 0.0), exp(static_cast<std::size_t>(bins) + 1, 0.0);
  const double width = top / bins;
  for (double s : sample.spacings) {
    const auto b = s >= top ? static_cast<std::size_t>(bins) : static_cast<std::size_t>(std::floor(s / width));
    obs[std::min(b, static_cast<std::size_t>(bins))] += 1.0;
  }
  for (int b = 0; b < bins; ++b)
    exp[static_cast<std::size_t>(b)] =
        static_cast<double>(n) * (wigner_surmise_cdf((b + 1) * width) - wigner_surmise_cdf(b * width));
  exp.back() = static_cast<double>(n) * (1.0 - wigner_surmise_cdf(top));

  Chi2Result r;
  // Merge under-populated bins into their left neighbour (the first bin merges to the right).
  std::vector<double> o2, e2;
  for (std::size_t b = 0; b < obs.size(); ++b) {
    o2.push_back(obs[b]);
    e2.push_back(exp[b]);
    while (e2.size() > 1 && e2.back() < 1.0) {
      const double eo = o2.back(), ee = e2.back();
      o2.pop_back();
      e2.pop_back();
      o2.back() += eo;
      e2.back() += ee;
      r.merged = true;
    }
  }
  if (e2.size() > 1 && e2.front() < 1.0) {
    o2[1] += o2[0];
    e2[1] += e2[0];
    o2.erase(o2.begin());
    e2.erase(e2.begin());
    r.merged = true;
  }
  for (std::size_t b = 0; b < o2.size(); ++b) r.chi2 += (o2[b] - e2[b]) * (o2[b] - e2[b]) / e2[b];
  r.bins_used = static_cast<int>(o2.size());
  r.dof = std::max(1, r.bins_used - 1);
  r.chi2_per_dof = r.chi2 / r.dof;
  r.observed = std::move(o2);
  r.expected = std::move(e2);
  return r;
}

std::vector<double> sample_width_mixture(double gamma, std::size_t n, std::uint64_t seed, double atom_width) {
  require_gamma(gamma);
  if (!(atom_width > 0.0)) throw Error(ErrorKind::InvalidParameter, "sample_width_mixture: atom width must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  // continuous part (2 gamma / pi) exp(-gamma^2 c^2 / pi) is half-normal with sigma^2 = pi / (2 gamma^2)
  const double sigma = std::sqrt(std::numbers::pi / 2.0) / gamma;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool atom = u(rng) >= gamma;
    const double c = std::abs(sigma * z(rng));
    out.push_back(atom ? atom_width : c);
  }
  return out;
}

}  // namespace acfid
