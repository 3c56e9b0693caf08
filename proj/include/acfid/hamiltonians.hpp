#pragma once

#include "acfid/matrix.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace acfid {

enum class ModelKind { TwoLevel, Triple, GoeInterp, LinearPair, BoseHubbardFloquet, BoseHubbardHardwall };
enum class SpectrumKind { Linear, Circular };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(const std::string& name);

// Implementation side of a one-parameter family. Instances are immutable and
// shared between workers.
class ParametricModel {
 public:
  virtual ~ParametricModel() = default;

  virtual ModelKind kind() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual SpectrumKind spectrum_kind() const { return SpectrumKind::Linear; }

  virtual HermitianMatrix evaluate(double lambda) const = 0;
  virtual HermitianMatrix derivative(double lambda) const = 0;
  virtual UnitaryMatrix evaluate_unitary(double lambda) const;

  // kind-specific constants (and matrix payloads) for serialization
  virtual nlohmann::json params() const = 0;
};

/// Declarative handle on a parametric family H(lambda): a kind tag, fixed constants,
/// and the matrix dimension. Cheap to copy.
class ParametricHamiltonianSpec {
 public:
  ParametricHamiltonianSpec() = default;
  explicit ParametricHamiltonianSpec(std::shared_ptr<const ParametricModel> model,
                                     std::vector<std::string> warnings = {});

  ModelKind kind() const { return model().kind(); }
  Eigen::Index dim() const { return model().dim(); }
  SpectrumKind spectrum_kind() const { return model().spectrum_kind(); }

  /// H(lambda); Linear families only.
  HermitianMatrix evaluate(double lambda) const;
  /// dH/dlambda, exact; Linear families only.
  HermitianMatrix derivative_matrix(double lambda) const;
  /// Circular families only.
  UnitaryMatrix evaluate_unitary(double lambda) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  const ParametricModel& model() const;

  nlohmann::json to_json() const;

 private:
  std::shared_ptr<const ParametricModel> model_;
  std::vector<std::string> warnings_;
};

ParametricHamiltonianSpec build_two_level(double g);
ParametricHamiltonianSpec build_triple(double a, double b, double c_coupling);
ParametricHamiltonianSpec build_goe_interp(HermitianMatrix h1, HermitianMatrix h2);
ParametricHamiltonianSpec build_linear_pair(HermitianMatrix h1, HermitianMatrix h2);

/// Inverse of ParametricHamiltonianSpec::to_json for every model kind.
ParametricHamiltonianSpec spec_from_json(const nlohmann::json& doc);

HermitianMatrix evaluate(const ParametricHamiltonianSpec& spec, double lambda);
HermitianMatrix derivative_matrix(const ParametricHamiltonianSpec& spec, double lambda);

/// Closed-form results for the isolated two-level crossing lambda*sigma_z + g*sigma_x.
struct TwoLevelAnalytic {
  double S;
  double C;
  double fwhm;
  std::pair<double, double> energies;  // (lower, upper)
};

TwoLevelAnalytic analytic_two_level(double g, double lambda);

// Matrix JSON payloads: real matrices as arrays of rows, complex as {"re": rows, "im": rows}.
nlohmann::json matrix_to_json(const HermitianMatrix& m);
HermitianMatrix matrix_from_json(const nlohmann::json& doc);

}  // namespace acfid
