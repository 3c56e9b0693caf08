#include "acfid/bose_hubbard.hpp"
#include "acfid/error.hpp"
#include "acfid/fidelity.hpp"
#include "acfid/hamiltonians.hpp"
#include "acfid/io.hpp"
#include "acfid/rmt.hpp"
#include "acfid/spectral.hpp"
#include "acfid/stats.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace acfid;

namespace {

py::dict event_dict(const ACEvent& e) {
  py::dict d;
  d["level_lo"] = e.level_lo;
  d["level_hi"] = e.level_hi;
  d["paired"] = e.paired;
  d["lambda_star"] = e.lambda_star;
  d["s_max"] = e.s_max;
  d["c_est"] = e.c_est;
  d["gap"] = e.gap;
  d["grid_index"] = e.grid_index;
  d["refinement_depth"] = e.refinement_depth;
  return d;
}

RefineMode refine_mode(const std::string& name) {
  if (name == "always") return RefineMode::Always;
  if (name == "unresolved") return RefineMode::Unresolved;
  if (name == "never") return RefineMode::Never;
  throw Error(ErrorKind::InvalidParameter, "refine must be always, unresolved or never");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Avoided-crossing detection from the fidelity change of eigenstates";
  m.attr("__version__") = version();

  static py::exception<Error> acfid_error(m, "AcfidError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(acfid_error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<SpectrumKind>(m, "SpectrumKind")
      .value("Linear", SpectrumKind::Linear)
      .value("Circular", SpectrumKind::Circular);

  py::class_<ParametricHamiltonianSpec>(m, "Spec")
      .def_property_readonly("dim", &ParametricHamiltonianSpec::dim)
      .def_property_readonly("kind", [](const ParametricHamiltonianSpec& s) { return std::string(to_string(s.kind())); })
      .def_property_readonly("spectrum_kind", &ParametricHamiltonianSpec::spectrum_kind)
      .def_property_readonly("warnings", &ParametricHamiltonianSpec::warnings)
      .def("spectrum", [](const ParametricHamiltonianSpec& s, double lam) { return spectrum_values_at(s, lam); },
           py::arg("lam"))
      .def("to_json", [](const ParametricHamiltonianSpec& s) { return s.to_json().dump(); });

  m.def("two_level", &build_two_level, py::arg("g"));
  m.def("triple", &build_triple, py::arg("a"), py::arg("b"), py::arg("c"));
  m.def("goe_interp", [](const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2) {
    return build_goe_interp(HermitianMatrix(h1), HermitianMatrix(h2));
  }, py::arg("h1"), py::arg("h2"));
  m.def("linear_pair", [](const Eigen::MatrixXcd& h1, const Eigen::MatrixXcd& h2) {
    return build_linear_pair(HermitianMatrix::compact(h1), HermitianMatrix::compact(h2));
  }, py::arg("h1"), py::arg("h2"));
  m.def("floquet_family", [](int N, int L, double J, double U, int kappa, double lambda_calibration) {
    FloquetFamilyConfig c;
    c.N = N;
    c.L = L;
    c.J = J;
    c.U = U;
    c.kappa_index = kappa;
    c.lambda_calibration = lambda_calibration;
    return build_floquet_family(c);
  }, py::arg("N"), py::arg("L"), py::arg("J") = 0.038, py::arg("U") = 0.032, py::arg("kappa") = 0,
        py::arg("lambda_calibration") = 40.0);
  m.def("hardwall_tilted", [](int N, int L, double J, double U) {
    HardwallConfig c;
    c.N = N;
    c.L = L;
    c.J = J;
    c.U = U;
    return build_hardwall_tilted(c);
  }, py::arg("N"), py::arg("L"), py::arg("J") = 0.038, py::arg("U") = 0.032);

  m.def("fidelity_change", [](const ParametricHamiltonianSpec& s, double lam, double dl, Eigen::Index n) {
    return fidelity_change(s, lam, dl, n).value;
  }, py::arg("spec"), py::arg("lam"), py::arg("delta_lambda"), py::arg("n"));

  py::class_<FidelitySweep>(m, "Sweep")
      .def_readonly("spec", &FidelitySweep::spec)
      .def_readonly("delta_lambda", &FidelitySweep::delta_lambda)
      .def_readonly("step", &FidelitySweep::step)
      .def_readonly("warnings", &FidelitySweep::warnings)
      .def_property_readonly("lambdas", [](const FidelitySweep& s) { return s.lambda_grid; })
      .def_property_readonly("S", [](const FidelitySweep& s) { return s.S; })
      .def_property_readonly("energies", [](const FidelitySweep& s) { return s.energies; })
      .def_property_readonly("curvature", [](const FidelitySweep& s) { return s.curvature; })
      .def_property_readonly("default_threshold", [](const FidelitySweep& s) { return default_threshold(s); });

  m.def("sweep", [](const ParametricHamiltonianSpec& spec, double lo, double hi, Eigen::Index K,
                    std::optional<double> delta_lambda, bool curvature, int workers) {
    SweepOptions o;
    o.delta_lambda = delta_lambda;
    o.with_curvature = curvature;
    o.workers = workers;
    py::gil_scoped_release release;
    return sweep(spec, lo, hi, K, o);
  }, py::arg("spec"), py::arg("lambda_min"), py::arg("lambda_max"), py::arg("K"), py::arg("delta_lambda") = py::none(),
        py::arg("curvature") = false, py::arg("workers") = 1);

  m.def("detect", [](const FidelitySweep& sw, std::optional<double> threshold, const std::string& refine, int workers) {
    DetectOptions o;
    o.threshold = threshold;
    o.refine = refine_mode(refine);
    o.workers = workers;
    DetectionResult r;
    {
      py::gil_scoped_release release;
      r = detect_avoided_crossings(sw, o);
    }
    py::list events;
    for (const auto& e : r.events) events.append(event_dict(e));
    return events;
  }, py::arg("sweep"), py::arg("threshold") = py::none(), py::arg("refine") = "unresolved", py::arg("workers") = 1);

  m.def("width_from_peak", &width_from_peak, py::arg("s_max"));

  m.def("sample_goe", [](Eigen::Index dim, std::uint64_t seed, double s) {
    return sample_goe({dim, seed, s}).real();
  }, py::arg("dim"), py::arg("seed"), py::arg("variance_scale") = 1.0);

  m.def("run_ensemble", [](Eigen::Index dim, int pairs, Eigen::Index grid, std::uint64_t seed, int workers) {
    EnsembleConfig c;
    c.dim = dim;
    c.n_pairs = pairs;
    c.grid = grid;
    c.base_seed = seed;
    c.workers = workers;
    WidthEnsemble e;
    {
      py::gil_scoped_release release;
      e = run_ensemble(c);
    }
    return std::make_pair(e.widths, e.to_json().dump());
  }, py::arg("dim"), py::arg("pairs"), py::arg("grid") = 0, py::arg("seed") = 0, py::arg("workers") = 1,
        "Returns (widths, ensemble JSON text).");

  m.def("normalize_unit_mean", [](const std::vector<double>& w) {
    auto r = normalize_unit_mean(w);
    return std::make_pair(r.widths, r.c_bar);
  }, py::arg("widths"));
  m.def("goe_width_cdf", &goe_width_cdf, py::arg("c"));
  m.def("mixture_cdf", &mixture_cdf, py::arg("c"), py::arg("gamma"));
  m.def("mixture_pdf", &mixture_pdf, py::arg("c"), py::arg("gamma"), py::arg("c_bar") = 1.0);
  m.def("fit_gamma", [](const std::vector<double>& w) { return fit_gamma(w).gamma; }, py::arg("normalized_widths"));
  m.def("ks_distance", &ks_distance, py::arg("sample"), py::arg("cdf"));
  m.def("sample_width_mixture", &sample_width_mixture, py::arg("gamma"), py::arg("n"), py::arg("seed"),
        py::arg("atom_width") = 1e-9);
  m.def("unfold_spacings", [](const Eigen::VectorXd& values, SpectrumKind kind) {
    return unfold_spacings(values, kind).spacings;
  }, py::arg("values"), py::arg("kind"));
  m.def("wigner_chi2_per_dof", [](const std::vector<double>& s, int bins) {
    return wigner_chi2({s}, bins).chi2_per_dof;
  }, py::arg("spacings"), py::arg("bins") = 10);

  m.def("fock_dimension", &fock_dimension, py::arg("N"), py::arg("L"));
  m.def("sector_dims", [](int N, int L) {
    const auto b = build_fock_basis(N, L);
    std::vector<Eigen::Index> dims;
    for (int k = 0; k < L; ++k) dims.push_back(build_kappa_sector(b, k).dim());
    return dims;
  }, py::arg("N"), py::arg("L"));
}
