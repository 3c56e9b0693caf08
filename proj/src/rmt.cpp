#include "acfid/rmt.hpp"

#include "acfid/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace acfid {

HermitianMatrix sample_goe(const GoeSampleConfig& cfg) {
  if (cfg.dim < 2) throw Error(ErrorKind::InvalidParameter, "sample_goe: dim must be at least 2");
  if (!(cfg.variance_scale > 0.0)) throw Error(ErrorKind::InvalidParameter, "sample_goe: variance_scale must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double off = std::sqrt(cfg.variance_scale);
  const double diag = std::sqrt(2.0 * cfg.variance_scale);
  Eigen::MatrixXd m(cfg.dim, cfg.dim);
  for (Eigen::Index i = 0; i < cfg.dim; ++i)
    for (Eigen::Index j = i; j < cfg.dim; ++j) {
      const double x = z(rng);
      if (i == j) {
        m(i, i) = diag * x;
      } else {
        m(i, j) = off * x;
        m(j, i) = m(i, j);
      }
    }
  return HermitianMatrix(std::move(m));
}

Eigen::Index default_rmt_grid(Eigen::Index dim) { return 40 * dim; }

nlohmann::json WidthEnsemble::to_json() const {
  return {{"widths", widths}, {"mean_width", mean_width}, {"n_widths", widths.size()},
          {"failed_pairs", failed_pairs}, {"provenance", provenance}};
}

WidthEnsemble WidthEnsemble::from_json(const nlohmann::json& doc) {
  try {
    WidthEnsemble e;
    e.widths = doc.at("widths").get<std::vector<double>>();
    e.mean_width = doc.at("mean_width").get<double>();
    e.failed_pairs = doc.value("failed_pairs", std::size_t{0});
    e.provenance = doc.value("provenance", nlohmann::json::array());
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Parse, std::string("width ensemble: ") + ex.what());
  }
}

WidthEnsemble run_ensemble(const EnsembleConfig& cfg) {
  if (cfg.dim < 2) throw Error(ErrorKind::InvalidParameter, "run_ensemble: dim must be at least 2");
  if (cfg.n_pairs < 1) throw Error(ErrorKind::InvalidParameter, "run_ensemble: need at least one pair");
  const Eigen::Index K = cfg.grid > 0 ? cfg.grid : default_rmt_grid(cfg.dim);
  if (K < 3) throw Error(ErrorKind::InvalidParameter, "run_ensemble: grid too small");
  // K points on [0, pi): the right end is excluded because the family is pi-antiperiodic.
  const double lambda_max = std::numbers::pi * static_cast<double>(K - 1) / static_cast<double>(K);

  WidthEnsemble out;
  for (int p = 0; p < cfg.n_pairs; ++p) {
    const std::uint64_t s1 = cfg.base_seed + 2 * static_cast<std::uint64_t>(p);
    const std::uint64_t s2 = s1 + 1;
    nlohmann::json prov = {{"pair", p},
                           {"seeds", {s1, s2}},
                           {"dim", cfg.dim},
                           {"variance_scale", cfg.variance_scale},
                           {"lambda_range", {0.0, std::numbers::pi}},
                           {"grid", K},
                           {"prng", kPrngId}};
    try {
      const auto spec = build_goe_interp(sample_goe({cfg.dim, s1, cfg.variance_scale}),
                                         sample_goe({cfg.dim, s2, cfg.variance_scale}));
      SweepOptions so;
      so.delta_lambda = cfg.delta_lambda;
      so.workers = cfg.workers;
      const auto sw = sweep(spec, 0.0, lambda_max, K, so);
      DetectOptions dop;
      dop.threshold = cfg.threshold;
      dop.refine = cfg.refine;
      dop.workers = cfg.workers;
      const auto det = detect_avoided_crossings(sw, dop);
      std::size_t paired = 0;
      for (const auto& e : det.events)
        if (e.paired) {
          out.widths.push_back(e.c_est);
          ++paired;
        }
      prov["delta_lambda"] = sw.delta_lambda;
      prov["threshold"] = det.threshold;
      prov["raw_peaks"] = det.raw_peaks;
      prov["refined_peaks"] = det.refined_peaks;
      prov["refinement_failures"] = det.refinement_failures;
      prov["events"] = det.events.size();
      prov["paired_events"] = paired;
      prov["warnings"] = sw.warnings;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidParameter || e.kind() == ErrorKind::Resource) throw;
      ++out.failed_pairs;
      prov["error"] = std::string(to_string(e.kind())) + ": " + e.what();
    }
    out.provenance.push_back(std::move(prov));
  }
  if (out.failed_pairs == static_cast<std::size_t>(cfg.n_pairs))
    throw Error(ErrorKind::Convergence, "run_ensemble: every pair failed");
  if (!out.widths.empty())
    out.mean_width = std::accumulate(out.widths.begin(), out.widths.end(), 0.0) / static_cast<double>(out.widths.size());
  return out;
}

}  // namespace acfid
