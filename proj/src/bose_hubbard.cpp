#include "acfid/bose_hubbard.hpp"

#include "acfid/error.hpp"
#include "acfid/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <list>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

namespace acfid {

// ---------------------------------------------------------------------------
// Fock basis and translation sectors

std::uint64_t fock_dimension(int N, int L) {
  if (N < 0 || L < 1) return 0;
  const auto n = static_cast<unsigned __int128>(N + L - 1);
  const auto k = static_cast<unsigned __int128>(std::min(N, L - 1));
  unsigned __int128 r = 1;
  for (unsigned __int128 i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // exact: r is C(n-k+i, i) after each step
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

Eigen::Index FockBasis::index_of(const Occupation& s) const {
  const auto it = index.find(s);
  if (it == index.end()) throw Error(ErrorKind::InvalidParameter, "FockBasis: occupation not in basis");
  return it->second;
}

FockBasis build_fock_basis(int N, int L, Eigen::Index max_states) {
  if (N < 1 || L < 2) throw Error(ErrorKind::InvalidParameter, "build_fock_basis: need N >= 1 and L >= 2");
  const auto count = fock_dimension(N, L);
  if (count > static_cast<std::uint64_t>(max_states))
    throw Error(ErrorKind::Resource, "build_fock_basis: dimension " + std::to_string(count) + " for N=" +
                                         std::to_string(N) + ", L=" + std::to_string(L) + " exceeds the cap of " +
                                         std::to_string(max_states) + " states");
  FockBasis b;
  b.N = N;
  b.L = L;
  b.states.reserve(static_cast<std::size_t>(count));
  Occupation cur(static_cast<std::size_t>(L), 0);
  // depth-first with the leftmost occupation running from N down to 0
  auto fill = [&](auto&& self, int site, int left) -> void {
    if (site == L - 1) {
      cur[static_cast<std::size_t>(site)] = left;
      b.states.push_back(cur);
      return;
    }
    for (int x = left; x >= 0; --x) {
      cur[static_cast<std::size_t>(site)] = x;
      self(self, site + 1, left - x);
    }
  };
  fill(fill, 0, N);
  for (std::size_t i = 0; i < b.states.size(); ++i) b.index.emplace(b.states[i], static_cast<Eigen::Index>(i));
  return b;
}

Occupation translate(const Occupation& s, int shift) {
  const int L = static_cast<int>(s.size());
  Occupation out(s.size());
  for (int l = 0; l < L; ++l) out[static_cast<std::size_t>(((l + shift) % L + L) % L)] = s[static_cast<std::size_t>(l)];
  return out;
}

double SymmetrySector::kappa(int L) const { return 2.0 * std::numbers::pi * kappa_index / L; }

SymmetrySector build_kappa_sector(const FockBasis& basis, int k) {
  if (k < 0 || k >= basis.L) throw Error(ErrorKind::InvalidParameter, "build_kappa_sector: need 0 <= k < L");
  SymmetrySector sec;
  sec.kappa_index = k;
  std::vector<char> seen(basis.states.size(), 0);
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    if (seen[static_cast<std::size_t>(i)]) continue;
    std::vector<Eigen::Index> orbit;
    Occupation t = basis.states[static_cast<std::size_t>(i)];
    do {
      const auto idx = basis.index_of(t);
      seen[static_cast<std::size_t>(idx)] = 1;
      orbit.push_back(idx);
      t = translate(t);
    } while (t != basis.states[static_cast<std::size_t>(i)]);
    const int ell = static_cast<int>(orbit.size());
    if ((k * ell) % basis.L != 0) continue;
    const auto a = sec.dim();
    sec.states.push_back({i, ell});
    for (int j = 0; j < ell; ++j) sec.orbit_of.emplace(orbit[static_cast<std::size_t>(j)], std::make_pair(a, j));
  }
  return sec;
}

Eigen::MatrixXcd sector_embedding(const FockBasis& basis, const SymmetrySector& sector) {
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(basis.size(), sector.dim());
  const double kappa = sector.kappa(basis.L);
  for (Eigen::Index a = 0; a < sector.dim(); ++a) {
    const auto& st = sector.states[static_cast<std::size_t>(a)];
    Occupation t = basis.states[static_cast<std::size_t>(st.representative)];
    const double norm = 1.0 / std::sqrt(static_cast<double>(st.cycle_length));
    for (int j = 0; j < st.cycle_length; ++j) {
      e(basis.index_of(t), a) += std::polar(norm, -kappa * j);
      t = translate(t);
    }
  }
  return e;
}

Eigen::MatrixXd translation_matrix(const FockBasis& basis) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  for (Eigen::Index i = 0; i < basis.size(); ++i)
    t(basis.index_of(translate(basis.states[static_cast<std::size_t>(i)])), i) = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Operators

double BhParams::bloch_period() const { return 2.0 * std::numbers::pi / F; }

void BhParams::validate() const {
  if (!(J >= 0.0) || !(U >= 0.0) || !std::isfinite(J) || !std::isfinite(U))
    throw Error(ErrorKind::InvalidParameter, "BhParams: J and U must be finite and non-negative");
  if (!(F > 0.0) || !std::isfinite(F)) throw Error(ErrorKind::InvalidParameter, "BhParams: F must be positive");
}

namespace {

struct HopTerm {
  Occupation target;
  double amplitude;
};

// a^dagger_{l+1} a_l |s> for every bond; the bond L -> 1 only with periodic boundaries.
std::vector<HopTerm> hop_terms(const Occupation& s, bool periodic) {
  const int L = static_cast<int>(s.size());
  std::vector<HopTerm> out;
  for (int l = 0; l < L; ++l) {
    int lp = l + 1;
    if (lp == L) {
      if (!periodic) continue;
      lp = 0;
    }
    if (s[static_cast<std::size_t>(l)] == 0) continue;
    Occupation t = s;
    const double amp = std::sqrt(static_cast<double>(t[static_cast<std::size_t>(l)])) *
                       std::sqrt(static_cast<double>(t[static_cast<std::size_t>(lp)] + 1));
    --t[static_cast<std::size_t>(l)];
    ++t[static_cast<std::size_t>(lp)];
    out.push_back({std::move(t), amp});
  }
  return out;
}

double interaction_energy(const Occupation& s) {
  double e = 0.0;
  for (int n : s) e += 0.5 * n * (n - 1);
  return e;
}

double site_moment(const Occupation& s) {
  double m = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) m += static_cast<double>(l + 1) * s[l];
  return m;
}

Eigen::MatrixXcd unitary_step(const Eigen::MatrixXcd& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::IntegrationFailure, "propagate: eigensolver failed on a step Hamiltonian");
  const Eigen::VectorXcd phases = (es.eigenvalues() * (-dt)).unaryExpr([](double x) { return std::polar(1.0, x); });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

BhOperators full_operators(const FockBasis& basis, bool periodic) {
  BhOperators ops;
  ops.N = basis.N;
  ops.L = basis.L;
  const auto d = basis.size();
  ops.hop = Eigen::MatrixXcd::Zero(d, d);
  ops.interaction.resize(d);
  ops.site_moment.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& s = basis.states[static_cast<std::size_t>(i)];
    for (const auto& term : hop_terms(s, periodic)) ops.hop(basis.index_of(term.target), i) += term.amplitude;
    ops.interaction(i) = interaction_energy(s);
    ops.site_moment(i) = site_moment(s);
  }
  return ops;
}

BhOperators sector_operators(const FockBasis& basis, const SymmetrySector& sector) {
  BhOperators ops;
  ops.N = basis.N;
  ops.L = basis.L;
  const auto d = sector.dim();
  const double kappa = sector.kappa(basis.L);
  ops.hop = Eigen::MatrixXcd::Zero(d, d);
  ops.interaction.resize(d);
  ops.site_moment.resize(d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const auto& sb = sector.states[static_cast<std::size_t>(b)];
    const auto& rep = basis.states[static_cast<std::size_t>(sb.representative)];
    // <a|K|b> = sqrt(ell_b / ell_a) sum_t h_t exp(i kappa j_t), where K|r_b> = sum_t h_t T^{j_t}|r_a>
    for (const auto& term : hop_terms(rep, true)) {
      const auto it = sector.orbit_of.find(basis.index_of(term.target));
      if (it == sector.orbit_of.end()) continue;  // orbit absent from this sector: contributions cancel
      const auto [a, j] = it->second;
      const auto& sa = sector.states[static_cast<std::size_t>(a)];
      const double w = term.amplitude * std::sqrt(static_cast<double>(sb.cycle_length) / sa.cycle_length);
      ops.hop(a, b) += std::polar(w, kappa * j);
    }
    ops.interaction(b) = interaction_energy(rep);
    ops.site_moment(b) = site_moment(rep);
  }
  return ops;
}

HermitianMatrix hamiltonian_at_time(const BhParams& params, double t, const BhOperators& ops) {
  params.validate();
  const cplx phase = std::polar(1.0, params.F * t);
  Eigen::MatrixXcd h = (-0.5 * params.J) * (phase * ops.hop + std::conj(phase) * ops.hop.adjoint());
  h.diagonal() += (params.U * ops.interaction).cast<cplx>();
  return HermitianMatrix(std::move(h));
}

HermitianMatrix hamiltonian_at_time(const BhParams& params, double t, const FockBasis& basis,
                                    const SymmetrySector& sector) {
  return hamiltonian_at_time(params, t, sector_operators(basis, sector));
}

// ---------------------------------------------------------------------------
// Floquet propagation

const char* to_string(FloquetScheme s) noexcept {
  return s == FloquetScheme::Midpoint ? "midpoint" : "magnus4";
}

FloquetScheme floquet_scheme_from_string(const std::string& name) {
  if (name == "midpoint") return FloquetScheme::Midpoint;
  if (name == "magnus4") return FloquetScheme::Magnus4;
  throw Error(ErrorKind::InvalidParameter, "unknown Floquet scheme '" + name + "' (midpoint | magnus4)");
}

UnitaryMatrix propagate(const BhParams& params, const BhOperators& ops, int steps, const FloquetOptions& options) {
  params.validate();
  if (steps < 1) throw Error(ErrorKind::InvalidParameter, "propagate: need at least one step");
  if (options.reduced_period && ops.N % ops.L != 0)
    throw Error(ErrorKind::InvalidParameter, "propagate: the reduced period needs N divisible by L");

  const auto d = ops.dim();
  const double period = options.reduced_period ? params.bloch_period() / ops.L : params.bloch_period();
  const double dt = period / steps;
  const Eigen::MatrixXcd hop_adj = ops.hop.adjoint();
  const Eigen::VectorXcd diag = (params.U * ops.interaction).cast<cplx>();
  const auto h_at = [&](double t) {
    const cplx phase = std::polar(1.0, params.F * t);
    Eigen::MatrixXcd h = (-0.5 * params.J) * (phase * ops.hop + std::conj(phase) * hop_adj);
    h.diagonal() += diag;
    return h;
  };

  // Fourth-order commutator-free Magnus: two exponentials per step built from the
  // Gauss-Legendre nodes; the earlier node dominates the first factor applied.
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
  const double a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;

  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd tmp(d, d);
  for (int m = 0; m < steps; ++m) {
    const double t = options.time_origin + m * dt;
    if (options.scheme == FloquetScheme::Midpoint) {
      tmp.noalias() = unitary_step(h_at(t + 0.5 * dt), dt) * u;
    } else {
      const Eigen::MatrixXcd h1 = h_at(t + c1 * dt);
      const Eigen::MatrixXcd h2 = h_at(t + c2 * dt);
      const Eigen::MatrixXcd first = unitary_step(a2 * h1 + a1 * h2, dt);
      const Eigen::MatrixXcd second = unitary_step(a1 * h1 + a2 * h2, dt);
      tmp.noalias() = first * u;
      u.noalias() = second * tmp;
      continue;
    }
    u.swap(tmp);
  }
  if (options.reduced_period) {
    // W = B^dagger U(T_B / L), B = exp(i (2 pi / L) sum_l l n_l); then U(T_B) = W^L.
    const double k = 2.0 * std::numbers::pi / ops.L;
    for (Eigen::Index i = 0; i < d; ++i) u.row(i) *= std::polar(1.0, -k * ops.site_moment(i));
  }
  return UnitaryMatrix(std::move(u));
}

double eigenphase_distance(const UnitaryMatrix& a, const UnitaryMatrix& b) {
  const Eigen::VectorXd pa = eigenphase_values(a);
  const Eigen::VectorXd pb = eigenphase_values(b);
  const auto r = circular_alignment(pa, pb);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pa.size(); ++i)
    worst = std::max(worst, circular_distance(pa(i), pb((i + r) % pb.size())));
  return worst;
}

namespace {
std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}
}  // namespace

FloquetResult floquet_operator(const BhParams& params, const BhOperators& ops, int steps,
                               const FloquetOptions& options) {
  if (steps < 16) throw Error(ErrorKind::InvalidParameter, "floquet_operator: need at least 16 steps per period");
  FloquetResult res;
  res.U = propagate(params, ops, steps, options);
  res.steps = steps;
  if (options.auto_refine) {
    while (true) {
      if (2L * res.steps > options.max_steps)
        throw Error(ErrorKind::IntegrationFailure,
                    "floquet_operator: no convergence within " + std::to_string(options.max_steps) +
                        " steps (eigenphase residual " + format_residual(res.residual) + ")");
      auto finer = propagate(params, ops, 2 * res.steps, options);
      res.residual = eigenphase_distance(res.U, finer);
      res.U = std::move(finer);
      res.steps *= 2;
      if (res.residual < options.tolerance) break;
    }
  }
  const double defect = res.U.unitarity_defect();
  if (!(defect < 1e-9))
    throw Error(ErrorKind::NonUnitary, "floquet_operator: unitarity defect " + std::to_string(defect));
  return res;
}

FloquetResult floquet_operator(const BhParams& params, const FockBasis& basis, const SymmetrySector& sector,
                               int steps, const FloquetOptions& options) {
  return floquet_operator(params, sector_operators(basis, sector), steps, options);
}

// ---------------------------------------------------------------------------
// Families over lambda = 1/F

namespace {

double checked_inverse(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorKind::InvalidParameter, "Bose-Hubbard family: lambda = 1/F must be positive and finite");
  return 1.0 / lambda;
}

class FloquetFamily final : public ParametricModel {
 public:
  explicit FloquetFamily(FloquetFamilyConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.min_steps < 16) throw Error(ErrorKind::InvalidParameter, "Floquet family: min_steps must be >= 16");
    const auto basis = build_fock_basis(cfg_.N, cfg_.L, cfg_.max_states);
    sector_dim_ = build_kappa_sector(basis, cfg_.kappa_index).dim();
    if (sector_dim_ == 0) throw Error(ErrorKind::InvalidParameter, "Floquet family: empty quasimomentum sector");
    ops_ = sector_operators(basis, build_kappa_sector(basis, cfg_.kappa_index));
    if (cfg_.floquet.reduced_period && cfg_.N % cfg_.L != 0)
      throw Error(ErrorKind::InvalidParameter, "Floquet family: the reduced period needs N divisible by L");
    if (cfg_.reduce_when_commensurate && cfg_.N % cfg_.L == 0) cfg_.floquet.reduced_period = true;
    const std::size_t entry = static_cast<std::size_t>(sector_dim_ * sector_dim_) * sizeof(cplx);
    cache_capacity_ = cfg_.cache_bytes / entry;
    if (!(cfg_.max_time_step > 0.0)) calibrate();
  }

  ModelKind kind() const override { return ModelKind::BoseHubbardFloquet; }
  Eigen::Index dim() const override { return sector_dim_; }
  SpectrumKind spectrum_kind() const override { return SpectrumKind::Circular; }

  HermitianMatrix evaluate(double) const override {
    throw Error(ErrorKind::Unsupported, "Floquet family has a circular spectrum; use evaluate_unitary");
  }
  HermitianMatrix derivative(double) const override {
    throw Error(ErrorKind::Unsupported, "Floquet family has no Hamiltonian derivative");
  }

  UnitaryMatrix evaluate_unitary(double lambda) const override {
    const auto key = std::bit_cast<std::uint64_t>(lambda);
    if (cache_capacity_ > 0) {
      std::lock_guard lock(cache_mutex_);
      if (auto it = cache_index_.find(key); it != cache_index_.end()) {
        cache_.splice(cache_.begin(), cache_, it->second);
        return it->second->second;
      }
    }
    const BhParams p{cfg_.J, cfg_.U, checked_inverse(lambda)};
    const int m = steps_for(lambda);
    FloquetOptions opt = cfg_.floquet;
    opt.auto_refine = false;
    UnitaryMatrix u = propagate(p, ops_, m, opt);
    if (opt.reduced_period) u = UnitaryMatrix(power(u.matrix(), cfg_.L));
    if (cache_capacity_ > 0) {
      std::lock_guard lock(cache_mutex_);
      if (cache_index_.find(key) == cache_index_.end()) {
        cache_.emplace_front(key, u);
        cache_index_[key] = cache_.begin();
        if (cache_.size() > cache_capacity_) {
          cache_index_.erase(cache_.back().first);
          cache_.pop_back();
        }
      }
    }
    return u;
  }

  nlohmann::json params() const override {
    return {{"N", cfg_.N},
            {"L", cfg_.L},
            {"J", cfg_.J},
            {"U", cfg_.U},
            {"kappa_index", cfg_.kappa_index},
            {"scheme", to_string(cfg_.floquet.scheme)},
            {"tolerance", cfg_.floquet.tolerance},
            {"max_steps", cfg_.floquet.max_steps},
            {"time_origin", cfg_.floquet.time_origin},
            {"reduced_period", cfg_.floquet.reduced_period},
            {"reduce_when_commensurate", cfg_.reduce_when_commensurate},
            {"min_steps", cfg_.min_steps},
            {"lambda_calibration", cfg_.lambda_calibration},
            {"max_time_step", cfg_.max_time_step},
            {"max_states", cfg_.max_states},
            {"boundary", "periodic"}};
  }

 private:
  double period(double lambda) const {
    const double tb = 2.0 * std::numbers::pi * lambda;
    return cfg_.floquet.reduced_period ? tb / cfg_.L : tb;
  }

  int steps_for(double lambda) const {
    const double m = std::max<double>(cfg_.min_steps, std::ceil(period(lambda) / cfg_.max_time_step - 1e-9));
    if (m > cfg_.floquet.max_steps)
      throw Error(ErrorKind::IntegrationFailure, "Floquet family: lambda=" + std::to_string(lambda) + " needs " +
                                                     std::to_string(m) + " steps, above the cap");
    return static_cast<int>(m);
  }

  static Eigen::MatrixXcd power(const Eigen::MatrixXcd& w, int n) {
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(w.rows(), w.cols());
    Eigen::MatrixXcd base = w;
    for (; n > 0; n >>= 1) {
      if (n & 1) result = result * base;
      if (n > 1) base = base * base;
    }
    return result;
  }

  void calibrate() {
    const BhParams p{cfg_.J, cfg_.U, checked_inverse(cfg_.lambda_calibration)};
    FloquetOptions opt = cfg_.floquet;
    opt.auto_refine = true;
    // Phase errors of W add up L times in W^L.
    if (opt.reduced_period) opt.tolerance /= cfg_.L;
    const auto res = floquet_operator(p, ops_, cfg_.min_steps, opt);
    cfg_.max_time_step = period(cfg_.lambda_calibration) / res.steps;
  }

  FloquetFamilyConfig cfg_;
  BhOperators ops_;
  Eigen::Index sector_dim_ = 0;

  using CacheList = std::list<std::pair<std::uint64_t, UnitaryMatrix>>;
  std::size_t cache_capacity_ = 0;
  mutable std::mutex cache_mutex_;
  mutable CacheList cache_;
  mutable std::unordered_map<std::uint64_t, CacheList::iterator> cache_index_;
};

class HardwallFamily final : public ParametricModel {
 public:
  explicit HardwallFamily(HardwallConfig cfg) : cfg_(cfg) {
    if (!(cfg_.J >= 0.0) || !(cfg_.U >= 0.0))
      throw Error(ErrorKind::InvalidParameter, "hard-wall family: J and U must be non-negative");
    const auto basis = build_fock_basis(cfg_.N, cfg_.L, cfg_.max_states);
    const auto ops = full_operators(basis, /*periodic=*/false);
    const Eigen::MatrixXd k = ops.hop.real();
    h0_ = -0.5 * cfg_.J * (k + k.transpose());
    h0_.diagonal() += cfg_.U * ops.interaction;
    tilt_ = ops.site_moment;
  }

  ModelKind kind() const override { return ModelKind::BoseHubbardHardwall; }
  Eigen::Index dim() const override { return h0_.rows(); }

  HermitianMatrix evaluate(double lambda) const override {
    Eigen::MatrixXd h = h0_;
    h.diagonal() += checked_inverse(lambda) * tilt_;
    return HermitianMatrix(std::move(h));
  }

  HermitianMatrix derivative(double lambda) const override {
    const double f = checked_inverse(lambda);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim(), dim());
    d.diagonal() = -f * f * tilt_;
    return HermitianMatrix(std::move(d));
  }

  nlohmann::json params() const override {
    return {{"N", cfg_.N}, {"L", cfg_.L}, {"J", cfg_.J}, {"U", cfg_.U}, {"max_states", cfg_.max_states},
            {"boundary", "hardwall"}};
  }

 private:
  HardwallConfig cfg_;
  Eigen::MatrixXd h0_;
  Eigen::VectorXd tilt_;
};

}  // namespace

ParametricHamiltonianSpec build_floquet_family(const FloquetFamilyConfig& config) {
  return ParametricHamiltonianSpec(std::make_shared<FloquetFamily>(config));
}

ParametricHamiltonianSpec build_hardwall_tilted(const HardwallConfig& config) {
  return ParametricHamiltonianSpec(std::make_shared<HardwallFamily>(config));
}

ParametricHamiltonianSpec bose_hubbard_spec_from_json(ModelKind kind, const nlohmann::json& p) {
  if (kind == ModelKind::BoseHubbardHardwall) {
    HardwallConfig c;
    c.N = p.at("N").get<int>();
    c.L = p.at("L").get<int>();
    c.J = p.at("J").get<double>();
    c.U = p.at("U").get<double>();
    c.max_states = p.value("max_states", kDefaultMaxStates);
    return build_hardwall_tilted(c);
  }
  FloquetFamilyConfig c;
  c.N = p.at("N").get<int>();
  c.L = p.at("L").get<int>();
  c.J = p.at("J").get<double>();
  c.U = p.at("U").get<double>();
  c.kappa_index = p.value("kappa_index", 0);
  c.floquet.scheme = floquet_scheme_from_string(p.value("scheme", std::string("magnus4")));
  c.floquet.tolerance = p.value("tolerance", 1e-9);
  c.floquet.max_steps = p.value("max_steps", 1 << 17);
  c.floquet.time_origin = p.value("time_origin", 0.0);
  c.floquet.reduced_period = p.value("reduced_period", false);
  c.reduce_when_commensurate = p.value("reduce_when_commensurate", true);
  c.min_steps = p.value("min_steps", 16);
  c.lambda_calibration = p.value("lambda_calibration", 40.0);
  c.max_time_step = p.value("max_time_step", 0.0);
  c.max_states = p.value("max_states", kDefaultMaxStates);
  return build_floquet_family(c);
}

}  // namespace acfid
