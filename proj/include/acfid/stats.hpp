#pragma once

#include "acfid/spectral.hpp"

#include <functional>
#include <string>
#include <vector>

namespace acfid {

struct NormalizedWidths {
  std::vector<double> widths;
  double c_bar = 0.0;
};

NormalizedWidths normalize_unit_mean(const std::vector<double>& widths);

/// erf(c / sqrt(pi)): CDF of the GOE avoided-crossing width law P(c) = (2/pi) exp(-c^2/pi).
double goe_width_cdf(double c);
/// 1 - gamma + gamma erf(gamma c / sqrt(pi)), unit-mean units.
double mixture_cdf(double c, double gamma);
/// Continuous part (2 gamma^2 / (pi c_bar)) exp(-gamma^2 c^2 / (pi c_bar^2)); the atom of
/// weight 1 - gamma at c = 0 is not a density value and raises AtomAtZero.
double mixture_pdf(double c, double gamma, double c_bar = 1.0);

enum class FitMethod { GridScan, GoldenSection };
const char* to_string(FitMethod m) noexcept;

struct MixtureFit {
  double gamma = 1.0;
  double c_bar = 1.0;
  double objective = 0.0;
  FitMethod method = FitMethod::GoldenSection;
  std::size_t n_widths = 0;
};

/// Unweighted least squares between the empirical CDF and mixture_cdf over gamma in (0, 1].
MixtureFit fit_gamma(const std::vector<double>& normalized_widths, double c_bar = 1.0);

/// sup |ECDF - cdf|.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

struct SpacingSample {
  std::vector<double> spacings;
};

SpacingSample unfold_spacings(const Eigen::VectorXd& values, SpectrumKind kind);
SpacingSample unfold_spacings(const SpectrumSnapshot& s);
SpacingSample pool(const std::vector<SpacingSample>& samples);

/// Wigner surmise P(s) = (pi/2) s exp(-pi s^2 / 4) and its CDF.
double wigner_surmise_cdf(double s);

struct Chi2Result {
  double chi2 = 0.0;
  int dof = 0;
  double chi2_per_dof = 0.0;
  int bins_used = 0;
  bool merged = false;
  std::vector<double> observed;
  std::vector<double> expected;
};

/// B equal bins on [0, 3] plus an overflow bin; bins expecting < 1 count are merged into a neighbour.
Chi2Result wigner_chi2(const SpacingSample& sample, int bins = 10);

/// Draws from the regular/chaotic width mixture with unit mean. Atoms (probability 1 - gamma)
/// are returned as `atom_width`, a width below any detection resolution.
std::vector<double> sample_width_mixture(double gamma, std::size_t n, std::uint64_t seed, double atom_width = 1e-9);

}  // namespace acfid
