#include "acfid/hamiltonians.hpp"

#include "acfid/bose_hubbard.hpp"
#include "acfid/error.hpp"

#include <cmath>

namespace acfid {

namespace {

void require_finite_lambda(double lambda) {
  if (!std::isfinite(lambda)) throw Error(ErrorKind::InvalidParameter, "lambda must be finite");
}

Eigen::MatrixXd pauli_x() { return (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished(); }
Eigen::MatrixXd pauli_z() { return (Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished(); }

class TwoLevelModel final : public ParametricModel {
 public:
  explicit TwoLevelModel(double g) : g_(g) {}
  ModelKind kind() const override { return ModelKind::TwoLevel; }
  Eigen::Index dim() const override { return 2; }
  HermitianMatrix evaluate(double lambda) const override {
    // same arithmetic as LinearPair(g*sigma_x, sigma_z) so both agree bitwise
    Eigen::MatrixXd h1 = g_ * pauli_x();
    return HermitianMatrix(Eigen::MatrixXd(h1 + lambda * pauli_z()));
  }
  HermitianMatrix derivative(double) const override { return HermitianMatrix(pauli_z()); }
  nlohmann::json params() const override { return {{"g", g_}}; }

 private:
  double g_;
};

class TripleModel final : public ParametricModel {
 public:
  TripleModel(double a, double b, double c) : a_(a), b_(b), c_(c) {}
  ModelKind kind() const override { return ModelKind::Triple; }
  Eigen::Index dim() const override { return 3; }
  HermitianMatrix evaluate(double lambda) const override {
    Eigen::MatrixXd m(3, 3);
    m << -lambda, a_, b_,
         a_, 0.0, c_,
         b_, c_, lambda;
    return HermitianMatrix(std::move(m));
  }
  HermitianMatrix derivative(double) const override {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 0) = -1.0;
    m(2, 2) = 1.0;
    return HermitianMatrix(std::move(m));
  }
  nlohmann::json params() const override { return {{"a", a_}, {"b", b_}, {"c_coupling", c_}}; }

 private:
  double a_, b_, c_;
};

// Shared by GoeInterp and LinearPair: H(lambda) = w1(lambda) h1 + w2(lambda) h2.
class PairModel : public ParametricModel {
 public:
  PairModel(HermitianMatrix h1, HermitianMatrix h2) : h1_(std::move(h1)), h2_(std::move(h2)) {}
  Eigen::Index dim() const override { return h1_.dim(); }
  nlohmann::json params() const override {
    return {{"h1", matrix_to_json(h1_)}, {"h2", matrix_to_json(h2_)}};
  }

 protected:
  HermitianMatrix combine(double w1, double w2) const {
    if (h1_.is_real() && h2_.is_real()) return HermitianMatrix(Eigen::MatrixXd(w1 * h1_.real() + w2 * h2_.real()));
    return HermitianMatrix(Eigen::MatrixXcd(w1 * h1_.to_complex() + w2 * h2_.to_complex()));
  }
  HermitianMatrix h1_, h2_;
};

class GoeInterpModel final : public PairModel {
 public:
  using PairModel::PairModel;
  ModelKind kind() const override { return ModelKind::GoeInterp; }
  HermitianMatrix evaluate(double lambda) const override {
    return combine(std::cos(lambda), std::sin(lambda));
  }
  HermitianMatrix derivative(double lambda) const override {
    return combine(-std::sin(lambda), std::cos(lambda));
  }
};

class LinearPairModel final : public PairModel {
 public:
  using PairModel::PairModel;
  ModelKind kind() const override { return ModelKind::LinearPair; }
  HermitianMatrix evaluate(double lambda) const override {
    if (h1_.is_real() && h2_.is_real()) return HermitianMatrix(Eigen::MatrixXd(h1_.real() + lambda * h2_.real()));
    return HermitianMatrix(Eigen::MatrixXcd(h1_.to_complex() + lambda * h2_.to_complex()));
  }
  HermitianMatrix derivative(double) const override { return h2_; }
};

void check_pair(const HermitianMatrix& h1, const HermitianMatrix& h2, const char* who) {
  if (h1.dim() == 0 || h1.dim() != h2.dim())
    throw Error(ErrorKind::InvalidParameter, std::string(who) + ": h1 and h2 must have equal nonzero dimension");
  for (const auto* m : {&h1, &h2}) {
    if (m->hermiticity_defect() > 1e-12 * (1.0 + m->max_norm()))
      throw Error(ErrorKind::InvalidParameter, std::string(who) + ": input matrix is not Hermitian");
  }
}

}  // namespace

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::TwoLevel: return "TwoLevel";
    case ModelKind::Triple: return "Triple";
    case ModelKind::GoeInterp: return "GoeInterp";
    case ModelKind::LinearPair: return "LinearPair";
    case ModelKind::BoseHubbardFloquet: return "BoseHubbardFloquet";
    case ModelKind::BoseHubbardHardwall: return "BoseHubbardHardwall";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::TwoLevel, ModelKind::Triple, ModelKind::GoeInterp, ModelKind::LinearPair,
                 ModelKind::BoseHubbardFloquet, ModelKind::BoseHubbardHardwall}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::Parse, "unknown model kind '" + name + "'");
}

UnitaryMatrix ParametricModel::evaluate_unitary(double) const {
  throw Error(ErrorKind::Unsupported, std::string(to_string(kind())) + " is not a unitary family");
}

ParametricHamiltonianSpec::ParametricHamiltonianSpec(std::shared_ptr<const ParametricModel> model,
                                                     std::vector<std::string> warnings)
    : model_(std::move(model)), warnings_(std::move(warnings)) {}

const ParametricModel& ParametricHamiltonianSpec::model() const {
  if (!model_) throw Error(ErrorKind::InvalidParameter, "empty ParametricHamiltonianSpec");
  return *model_;
}

HermitianMatrix ParametricHamiltonianSpec::evaluate(double lambda) const {
  require_finite_lambda(lambda);
  if (spectrum_kind() != SpectrumKind::Linear)
    throw Error(ErrorKind::Unsupported, std::string(to_string(kind())) + " evaluates to a unitary, not a Hamiltonian");
  return model().evaluate(lambda);
}

HermitianMatrix ParametricHamiltonianSpec::derivative_matrix(double lambda) const {
  require_finite_lambda(lambda);
  if (spectrum_kind() != SpectrumKind::Linear)
    throw Error(ErrorKind::Unsupported, std::string(to_string(kind())) + " has no analytic derivative");
  return model().derivative(lambda);
}

UnitaryMatrix ParametricHamiltonianSpec::evaluate_unitary(double lambda) const {
  require_finite_lambda(lambda);
  return model().evaluate_unitary(lambda);
}

nlohmann::json ParametricHamiltonianSpec::to_json() const {
  return {{"kind", to_string(kind())}, {"dim", dim()}, {"params", model().params()}};
}

ParametricHamiltonianSpec build_two_level(double g) {
  if (!std::isfinite(g) || g <= 0.0)
    throw Error(ErrorKind::InvalidParameter, "two-level coupling g must be finite and > 0");
  return ParametricHamiltonianSpec(std::make_shared<TwoLevelModel>(g));
}

ParametricHamiltonianSpec build_triple(double a, double b, double c_coupling) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c_coupling))
    throw Error(ErrorKind::InvalidParameter, "triple couplings must be finite");
  std::vector<std::string> warnings;
  if (a == 0.0 && b == 0.0 && c_coupling == 0.0)
    warnings.emplace_back("degenerate-model: all couplings zero, levels cross exactly at lambda=0");
  return ParametricHamiltonianSpec(std::make_shared<TripleModel>(a, b, c_coupling), std::move(warnings));
}

ParametricHamiltonianSpec build_goe_interp(HermitianMatrix h1, HermitianMatrix h2) {
  check_pair(h1, h2, "build_goe_interp");
  if (!h1.is_real() || !h2.is_real())
    throw Error(ErrorKind::InvalidParameter, "build_goe_interp: h1 and h2 must be real symmetric");
  return ParametricHamiltonianSpec(std::make_shared<GoeInterpModel>(std::move(h1), std::move(h2)));
}

ParametricHamiltonianSpec build_linear_pair(HermitianMatrix h1, HermitianMatrix h2) {
  check_pair(h1, h2, "build_linear_pair");
  return ParametricHamiltonianSpec(std::make_shared<LinearPairModel>(std::move(h1), std::move(h2)));
}

HermitianMatrix evaluate(const ParametricHamiltonianSpec& spec, double lambda) { return spec.evaluate(lambda); }

HermitianMatrix derivative_matrix(const ParametricHamiltonianSpec& spec, double lambda) {
  return spec.derivative_matrix(lambda);
}

TwoLevelAnalytic analytic_two_level(double g, double lambda) {
  if (!std::isfinite(g) || g <= 0.0) throw Error(ErrorKind::InvalidParameter, "g must be finite and > 0");
  require_finite_lambda(lambda);
  const double lorentz = g / (g * g + lambda * lambda);
  const double s = 0.125 * lorentz * lorentz;
  const double e = std::hypot(lambda, g);
  return {s, 4.0 * s, 2.0 * g * std::sqrt(std::sqrt(2.0) - 1.0), {-e, e}};
}

nlohmann::json matrix_to_json(const HermitianMatrix& m) {
  const auto n = m.dim();
  auto rows = [n](auto&& at) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(at(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  if (m.is_real()) return rows([&](auto i, auto j) { return m.real()(i, j); });
  return {{"re", rows([&](auto i, auto j) { return m.complex()(i, j).real(); })},
          {"im", rows([&](auto i, auto j) { return m.complex()(i, j).imag(); })}};
}

HermitianMatrix matrix_from_json(const nlohmann::json& doc) {
  auto read = [](const nlohmann::json& rows) {
    if (!rows.is_array()) throw Error(ErrorKind::Parse, "matrix payload must be an array of rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
        throw Error(ErrorKind::Parse, "matrix payload row " + std::to_string(i) + " has wrong length");
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return m;
  };
  if (doc.is_object()) {
    Eigen::MatrixXd re = read(doc.at("re"));
    Eigen::MatrixXd im = read(doc.at("im"));
    if (re.rows() != im.rows()) throw Error(ErrorKind::Parse, "matrix payload re/im size mismatch");
    Eigen::MatrixXcd m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    return HermitianMatrix(std::move(m));
  }
  return HermitianMatrix(read(doc));
}

ParametricHamiltonianSpec spec_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = model_kind_from_string(doc.at("kind").get<std::string>());
    const auto& p = doc.at("params");
    switch (kind) {
      case ModelKind::TwoLevel: return build_two_level(p.at("g").get<double>());
      case ModelKind::Triple:
        return build_triple(p.at("a").get<double>(), p.at("b").get<double>(), p.at("c_coupling").get<double>());
      case ModelKind::GoeInterp: return build_goe_interp(matrix_from_json(p.at("h1")), matrix_from_json(p.at("h2")));
      case ModelKind::LinearPair:
        return build_linear_pair(matrix_from_json(p.at("h1")), matrix_from_json(p.at("h2")));
      case ModelKind::BoseHubbardFloquet:
      case ModelKind::BoseHubbardHardwall:
        return bose_hubbard_spec_from_json(kind, p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model spec: ") + e.what());
  }
  throw Error(ErrorKind::Parse, "model spec: unhandled kind");
}

}  // namespace acfid
