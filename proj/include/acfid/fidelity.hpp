#pragma once

#include "acfid/hamiltonians.hpp"
#include "acfid/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acfid {

/// 1 - f below this is indistinguishable from rounding noise; such points report S = 0.
inline constexpr double kPrecisionFloor = 1e-14;

struct FidelityChange {
  double value = 0.0;  // S_n = (1 - f_n) / dlambda^2
  double fidelity = 1.0;
  bool below_precision_floor = false;
};

/// |<n(lambda)|n(lambda + dlambda)>| for the n-th value-ordered eigenstate.
double fidelity(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda, Eigen::Index n);
FidelityChange fidelity_change(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda,
                               Eigen::Index n);

/// Per-level fidelities between two snapshots. For circular spectra the second snapshot is
/// relabeled cyclically so that level n keeps its identity across the branch cut.
struct FidelityColumn {
  Eigen::VectorXd fidelity;
  Eigen::VectorXd one_minus_f;
  Eigen::VectorXd S;
  std::vector<std::uint8_t> floored;
  double completeness_defect = 0.0;  // max_n |sum_m |<m(a)|n(b)>|^2 - 1|
};

FidelityColumn fidelity_column(const SpectrumSnapshot& a, const SpectrumSnapshot& b, double delta_lambda);

struct DeltaCheck {
  double lambda = 0.0;
  Eigen::Index level = 0;
  double rel_change = 0.0;
  bool ok = true;
  bool precision_limited = false;  // one of the two probes hit the precision floor
};

DeltaCheck validate_delta(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda, Eigen::Index n);
std::vector<DeltaCheck> validate_delta_all(const ParametricHamiltonianSpec& spec, double lambda, double delta_lambda);

/// Second-order perturbative S_n = 1/2 sum_{m != n} |<m|dH|n>|^2 / (E_n - E_m)^2 (full sum).
double pt_fidelity_change(const SpectrumSnapshot& snapshot, const HermitianMatrix& dH, Eigen::Index n);

struct SweepOptions {
  std::optional<double> delta_lambda;  // default: step / 100, clamped to >= 1e-8
  bool with_curvature = false;
  int workers = 1;
  int delta_check_points = 5;
};

/// S_n, f_n and values on a uniform grid for every level.
/// Matrices are (dim x K); for circular spectra row r at column k is sorted level
/// (r + label_offset[k]) mod dim, so that rows follow levels through the branch cut.
struct FidelitySweep {
  ParametricHamiltonianSpec spec;
  SpectrumKind kind = SpectrumKind::Linear;
  std::vector<double> lambda_grid;
  double step = 0.0;
  double delta_lambda = 0.0;
  Eigen::MatrixXd S;
  Eigen::MatrixXd f;
  Eigen::MatrixXd energies;
  std::optional<Eigen::MatrixXd> curvature;
  std::vector<Eigen::Index> label_offset;
  std::size_t floored_points = 0;
  double max_completeness_defect = 0.0;
  std::vector<DeltaCheck> delta_checks;
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return S.rows(); }
  Eigen::Index size() const { return S.cols(); }
  Eigen::Index sorted_index(Eigen::Index row, Eigen::Index k) const;
};

FidelitySweep sweep(const ParametricHamiltonianSpec& spec, double lambda_min, double lambda_max, Eigen::Index K,
                    const SweepOptions& options = {});

/// 1 / (2 dbar^2), dbar the mean level spacing over the sweep (2 pi / dim on the circle)
/// expressed on the lambda axis: dbar = 2 * spacing / (mean |slope difference| of adjacent levels).
/// For the two-level convention (slope difference 2) this is the energy spacing itself.
double default_threshold(const FidelitySweep& sw);

struct RawPeak {
  Eigen::Index level = 0;
  Eigen::Index k = 0;
  bool operator==(const RawPeak&) const = default;
};

/// Local maxima S[n,k] >= threshold with S[n,k] > S[n,k-1] and S[n,k] >= S[n,k+1].
std::vector<RawPeak> detect_peaks(const FidelitySweep& sw, double s_threshold);

struct RefinedPeak {
  Eigen::Index level = 0;      // row label in the sweep
  Eigen::Index grid_index = 0;
  double lambda_star = 0.0;
  double s_max = 0.0;
  double log_curvature = 0.0;  // d^2 log S / dlambda^2 at the peak; NaN when unavailable
  int depth = 0;               // refinement passes performed (0 = coarse fit only)

  double half_width() const;   // HWHM of a squared-Lorentzian peak with this curvature
};

/// S of a single level at x. Real symmetric families take a one-eigenvector path; circular
/// families need `reference` (sorted values at the level's defining point) to keep the label.
double single_level_change(const ParametricHamiltonianSpec& spec, Eigen::Index level, double x, double delta_lambda,
                           const Eigen::VectorXd& reference = {});

struct RefineOptions {
  int max_passes = 4;
  int factor = 10;
  double move_tolerance = 1e-3;  // relative to the initial bracket width
};

/// Recursive grid refinement of the maximum of S_level on [lo, hi]; final position and height
/// from a parabola through the best three points in log S. For circular families `level` is
/// the sorted index at the bracket center.
RefinedPeak refine_peak(const ParametricHamiltonianSpec& spec, Eigen::Index level, double lo, double hi,
                        double delta_lambda, const RefineOptions& options = {});

/// Parabola through the three samples around coarse grid point k, in log S.
RefinedPeak coarse_peak_fit(const FidelitySweep& sw, const RawPeak& peak);

struct ACEvent {
  Eigen::Index level_lo = 0;
  Eigen::Index level_hi = 0;
  bool paired = true;
  double lambda_star = 0.0;
  double s_max = 0.0;
  double c_est = 0.0;
  double gap = 0.0;
  Eigen::Index grid_index = 0;
  int refinement_depth = 0;
};

/// Full width at half maximum of the sampled peak of `row` at grid index k, with linear
/// interpolation between grid points. NaN when the row does not fall below half maximum on
/// both sides.
double sampled_fwhm(const FidelitySweep& sw, Eigen::Index row, Eigen::Index k);

/// c = (2 S_max)^(-1/2), the width of the two-level crossing with peak height S_max.
double width_from_peak(double s_max);

/// Merge peaks of adjacent rows that sit within max(step, HWHM/4) of each other into one event.
std::vector<ACEvent> pair_and_estimate(const std::vector<RefinedPeak>& peaks, const FidelitySweep& sw);

enum class RefineMode { Always, Unresolved, Never };

struct DetectOptions {
  std::optional<double> threshold;
  RefineMode refine = RefineMode::Unresolved;
  double resolved_ratio = 0.5;  // Unresolved: refine when a coarse neighbour is below ratio * peak
  RefineOptions refine_options;
  int workers = 1;
};

struct DetectionResult {
  std::vector<ACEvent> events;
  double threshold = 0.0;
  std::size_t raw_peaks = 0;
  std::size_t refined_peaks = 0;
  std::size_t refinement_failures = 0;
  std::vector<std::string> warnings;

  std::size_t paired_count() const;
};

DetectionResult detect_avoided_crossings(const FidelitySweep& sw, const DetectOptions& options = {});

struct ACDensityHistogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t overflow = 0;
  Eigen::Index dim_hilbert = 0;
  std::vector<double> density;
};

ACDensityHistogram ac_density(const std::vector<ACEvent>& events, std::vector<double> bin_edges,
                              Eigen::Index dim_hilbert);

}  // namespace acfid
