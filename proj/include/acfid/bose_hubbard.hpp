#pragma once

#include "acfid/hamiltonians.hpp"
#include "acfid/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <vector>

namespace acfid {

using Occupation = std::vector<int>;

/// Fock states of N bosons on L sites in descending lexicographic order, e.g. (1,0) before (0,1).
struct FockBasis {
  int N = 0;
  int L = 0;
  std::vector<Occupation> states;
  std::map<Occupation, Eigen::Index> index;

  Eigen::Index size() const { return static_cast<Eigen::Index>(states.size()); }
  Eigen::Index index_of(const Occupation& s) const;
};

/// binomial(N + L - 1, N); saturates at UINT64_MAX instead of overflowing.
std::uint64_t fock_dimension(int N, int L);

inline constexpr Eigen::Index kDefaultMaxStates = 20000;

FockBasis build_fock_basis(int N, int L, Eigen::Index max_states = kDefaultMaxStates);

/// Cyclic shift to the right: (T n)_l = n_{l-1}, site L wraps to site 1.
Occupation translate(const Occupation& s, int shift = 1);

struct SectorState {
  Eigen::Index representative;  // index into the Fock basis (first orbit member in basis order)
  int cycle_length;
};

/// Quasimomentum kappa = 2 pi k / L. Basis vectors
/// |a> = ell_a^(-1/2) sum_{j < ell_a} exp(-i kappa j) T^j |r_a>.
struct SymmetrySector {
  int kappa_index = 0;
  std::vector<SectorState> states;
  std::map<Eigen::Index, std::pair<Eigen::Index, int>> orbit_of;  // Fock index -> (sector index, shift j)

  Eigen::Index dim() const { return static_cast<Eigen::Index>(states.size()); }
  double kappa(int L) const;
};

SymmetrySector build_kappa_sector(const FockBasis& basis, int k);

/// Columns are the sector basis vectors written in the Fock basis.
Eigen::MatrixXcd sector_embedding(const FockBasis& basis, const SymmetrySector& sector);

/// Translation operator T in the full Fock basis.
Eigen::MatrixXd translation_matrix(const FockBasis& basis);

struct BhParams {
  double J = 0.038;
  double U = 0.032;
  double F = 1.0;

  double bloch_period() const;
  void validate() const;
};

/// The pieces of the tilted Hamiltonian in a fixed basis:
/// H(t) = -(J/2)(e^{iFt} K + e^{-iFt} K^dagger) + U V, with K = sum_l a^dagger_{l+1} a_l.
struct BhOperators {
  int N = 0;
  int L = 0;
  Eigen::MatrixXcd hop;
  Eigen::VectorXd interaction;  // (1/2) sum_l n_l (n_l - 1)
  Eigen::VectorXd site_moment;  // sum_l l n_l with l = 1..L; constant on translation orbits mod L when L | N

  Eigen::Index dim() const { return interaction.size(); }
};

BhOperators full_operators(const FockBasis& basis, bool periodic = true);
BhOperators sector_operators(const FockBasis& basis, const SymmetrySector& sector);

HermitianMatrix hamiltonian_at_time(const BhParams& params, double t, const BhOperators& ops);
HermitianMatrix hamiltonian_at_time(const BhParams& params, double t, const FockBasis& basis,
                                    const SymmetrySector& sector);

enum class FloquetScheme { Midpoint, Magnus4 };

const char* to_string(FloquetScheme s) noexcept;
FloquetScheme floquet_scheme_from_string(const std::string& name);

struct FloquetOptions {
  FloquetScheme scheme = FloquetScheme::Magnus4;
  double tolerance = 1e-9;        // eigenphase agreement between M and 2M steps
  int max_steps = 1 << 17;
  bool auto_refine = true;        // double M until converged
  double time_origin = 0.0;
  bool reduced_period = false;    // one-L-th period propagator combined with the boost (needs L | N)
};

struct FloquetResult {
  UnitaryMatrix U;
  int steps = 0;
  double residual = 0.0;  // eigenphase change at the last doubling (0 when not refined)
};

/// Exact-per-step exponential product over one period (or one L-th of it, see FloquetOptions).
UnitaryMatrix propagate(const BhParams& params, const BhOperators& ops, int steps, const FloquetOptions& options);

FloquetResult floquet_operator(const BhParams& params, const BhOperators& ops, int steps,
                               const FloquetOptions& options = {});
FloquetResult floquet_operator(const BhParams& params, const FockBasis& basis, const SymmetrySector& sector,
                               int steps, const FloquetOptions& options = {});

/// Largest circular distance between the sorted eigenphases of two unitaries after cyclic alignment.
double eigenphase_distance(const UnitaryMatrix& a, const UnitaryMatrix& b);

struct FloquetFamilyConfig {
  int N = 5;
  int L = 5;
  double J = 0.038;
  double U = 0.032;
  int kappa_index = 0;
  FloquetOptions floquet;
  int min_steps = 16;
  double lambda_calibration = 40.0;    // largest 1/F the family will be evaluated at
  double max_time_step = 0.0;          // 0: calibrate at lambda_calibration
  Eigen::Index max_states = kDefaultMaxStates;
  bool reduce_when_commensurate = true;  // integrate T_B / L and raise to the L-th power when L | N
  std::size_t cache_bytes = 64u << 20;   // memo of recent operators (refinement revisits points)
};

/// lambda = 1/F -> U_F(T_B). The step size is calibrated once (auto-doubling at
/// lambda_calibration) and then held fixed, so M grows linearly with lambda. With the reduced
/// period the family still returns U_F = W^L; W is calibrated to tolerance / L.
ParametricHamiltonianSpec build_floquet_family(const FloquetFamilyConfig& config);

struct HardwallConfig {
  int N = 5;
  int L = 5;
  double J = 0.038;
  double U = 0.032;
  Eigen::Index max_states = kDefaultMaxStates;
};

/// Static open chain with a linear tilt F sum_l l n_l, parameterized by lambda = 1/F.
ParametricHamiltonianSpec build_hardwall_tilted(const HardwallConfig& config);

ParametricHamiltonianSpec bose_hubbard_spec_from_json(ModelKind kind, const nlohmann::json& params);

}  // namespace acfid
