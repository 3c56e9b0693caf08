#pragma once

#include "acfid/fidelity.hpp"
#include "acfid/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace acfid {

/// Identifier of the pseudo-random stream recorded in provenance.
inline constexpr const char* kPrngId = "mt19937_64+std::normal_distribution(libstdc++)";

struct GoeSampleConfig {
  Eigen::Index dim = 2;
  std::uint64_t seed = 0;
  double variance_scale = 1.0;
};

/// Real symmetric GOE draw: off-diagonal variance s, diagonal variance 2 s.
HermitianMatrix sample_goe(const GoeSampleConfig& cfg);

struct EnsembleConfig {
  Eigen::Index dim = 128;
  int n_pairs = 40;
  Eigen::Index grid = 0;                // 0: 40 * dim points over [0, pi)
  std::optional<double> delta_lambda;   // default: step / 100
  std::optional<double> threshold;      // default: default_threshold() per pair
  std::uint64_t base_seed = 0;
  double variance_scale = 1.0;
  RefineMode refine = RefineMode::Unresolved;
  int workers = 1;
};

struct WidthEnsemble {
  std::vector<double> widths;  // c_est of paired events, raw units, pair order then lambda order
  double mean_width = 0.0;
  nlohmann::json provenance = nlohmann::json::array();
  std::size_t failed_pairs = 0;

  nlohmann::json to_json() const;
  static WidthEnsemble from_json(const nlohmann::json& doc);
};

Eigen::Index default_rmt_grid(Eigen::Index dim);

WidthEnsemble run_ensemble(const EnsembleConfig& cfg);

}  // namespace acfid
