// acfid: command-line front end for avoided-crossing detection runs.
//
// Every subcommand writes its artifacts into --out together with manifest.json. JSON artifacts
// carry the tool version and a hash of the run configuration; worker count and output
// directory are excluded from that hash, so reruns with a different --workers produce
// byte-identical files.

#include "acfid/bose_hubbard.hpp"
#include "acfid/error.hpp"
#include "acfid/fidelity.hpp"
#include "acfid/hamiltonians.hpp"
#include "acfid/io.hpp"
#include "acfid/rmt.hpp"
#include "acfid/stats.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acfid;

namespace {

struct Globals {
  std::string out = "acfid-out";
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<double> delta_lambda;
  std::optional<Eigen::Index> grid;
  std::optional<double> threshold;
  std::string refine = "unresolved";
  bool verbose = false;
};

struct TwoLevelArgs {
  double g = 1.0;
  double lambda_min = -5.0;
  double lambda_max = 5.0;
};

struct TripleArgs {
  double a = 0.0;
  double b = 2.0;
  double c = 3.0;
  double lambda_min = -6.0;
  double lambda_max = 6.0;
};

struct RmtArgs {
  Eigen::Index dim = 128;
  int pairs = 40;
  double variance_scale = 1.0;
  int hist_bins = 30;
};

struct BhArgs {
  int N = 5;
  int L = 5;
  double J = 0.038;
  double U = 0.032;
  double inv_f_min = 5.0;
  double inv_f_max = 40.0;
  int sector = 0;
  std::string boundary = "periodic";
  int min_steps = 16;
  double tolerance = 1e-9;
  std::string scheme = "magnus4";
  bool full_period = false;
  Eigen::Index max_states = kDefaultMaxStates;
  int density_bins = 35;
  std::vector<double> chi2_edges{5, 10, 15, 20, 25, 30, 35, 40};
  int chi2_bins = 10;
  bool fit = false;
  int hist_bins = 20;
};

struct AnalyzeArgs {
  std::string sweep;
  std::string sidecar;
  std::string ensemble;
  int density_bins = 0;
  int hist_bins = 30;
};

RefineMode refine_mode(const std::string& s) {
  if (s == "always") return RefineMode::Always;
  if (s == "unresolved") return RefineMode::Unresolved;
  if (s == "never") return RefineMode::Never;
  throw Error(ErrorKind::InvalidParameter, "unknown refine mode " + s);
}

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[acfid] " << msg << '\n';
}

json globals_json(const Globals& g) {
  json j = {{"out", g.out}, {"seed", g.seed}, {"workers", g.workers}, {"refine", g.refine}};
  j["delta_lambda"] = g.delta_lambda ? json(*g.delta_lambda) : json(nullptr);
  j["grid"] = g.grid ? json(*g.grid) : json(nullptr);
  j["threshold"] = g.threshold ? json(*g.threshold) : json(nullptr);
  return j;
}

class Run {
 public:
  Run(const Globals& g, const std::string& command, json config)
      : dir_(g.out), manifest_(command, std::move(config)) {
    fs::create_directories(dir_);
  }

  const Stamp& stamp() const { return manifest_.stamp(); }

  void json_file(const std::string& name, const std::string& role, json doc) {
    write_json_file(dir_ / name, doc);
    manifest_.add(dir_ / name, role);
  }

  std::ofstream text_file(const std::string& name, const std::string& role) {
    std::ofstream os(dir_ / name);
    if (!os) throw Error(ErrorKind::Resource, "cannot write " + (dir_ / name).string());
    manifest_.add(dir_ / name, role);
    return os;
  }

  void finish() { write_json_file(dir_ / "manifest.json", manifest_.to_json()); }

 private:
  fs::path dir_;
  Manifest manifest_;
};

void write_sweep(Run& run, const FidelitySweep& sw) {
  auto os = run.text_file("sweep.csv", "sweep");
  write_sweep_csv(os, sw, run.stamp());
  run.json_file("sweep.json", "sweep-sidecar", sweep_sidecar(sw, run.stamp()));
}

DetectOptions detect_options(const Globals& g) {
  DetectOptions o;
  o.threshold = g.threshold;
  o.refine = refine_mode(g.refine);
  o.workers = g.workers;
  return o;
}

// The events document is stamped with a hash of (sweep hash, detection settings) so that an
// inline run and a later `analyze` with the same settings produce identical bytes.
json events_document(const DetectionResult& det, const std::string& sweep_hash, const Globals& g) {
  const json settings = {{"threshold", det.threshold}, {"refine", g.refine}};
  Stamp st;
  st.config_hash = config_hash({{"sweep", sweep_hash}, {"detection", settings}});
  return {{"stamp", st.to_json()},
          {"sweep_config_hash", sweep_hash},
          {"detection", settings},
          {"summary",
           {{"events", det.events.size()},
            {"paired", det.paired_count()},
            {"raw_peaks", det.raw_peaks},
            {"refined_peaks", det.refined_peaks},
            {"refinement_failures", det.refinement_failures},
            {"warnings", det.warnings}}},
          {"events", events_to_json(det.events)}};
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  e.back() = hi;
  return e;
}

void write_density(Run& run, const std::vector<ACEvent>& events, const FidelitySweep& sw, int bins) {
  const std::vector<ACEvent> paired = [&] {
    std::vector<ACEvent> p;
    std::copy_if(events.begin(), events.end(), std::back_inserter(p), [](const ACEvent& e) { return e.paired; });
    return p;
  }();
  const auto h = ac_density(paired, uniform_edges(sw.lambda_grid.front(), sw.lambda_grid.back(), bins), sw.dim());
  std::vector<double> centers;
  for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i) centers.push_back(0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]));
  auto os = run.text_file("density.csv", "ac-density");
  write_xy_csv(os, run.stamp(), "bin_center", "density", centers, h.density);
  json doc = density_to_json(h);
  doc["stamp"] = run.stamp().to_json();
  run.json_file("density.json", "ac-density", doc);
}

// Width histogram (density normalized), ECDF and model curve of unit-mean widths.
json write_width_statistics(Run& run, const std::vector<double>& raw, int bins, bool fit) {
  const auto norm = normalize_unit_mean(raw);
  std::vector<double> sorted = norm.widths;
  std::sort(sorted.begin(), sorted.end());
  const double top = std::max(3.0, sorted.back());
  const double w = top / bins;
  std::vector<double> centers(static_cast<std::size_t>(bins)), hist(static_cast<std::size_t>(bins), 0.0),
      model(static_cast<std::size_t>(bins));
  for (double c : sorted) hist[std::min<std::size_t>(static_cast<std::size_t>(c / w), hist.size() - 1)] += 1.0;
  for (int b = 0; b < bins; ++b) {
    const auto i = static_cast<std::size_t>(b);
    centers[i] = (b + 0.5) * w;
    hist[i] /= static_cast<double>(sorted.size()) * w;
    model[i] = (goe_width_cdf((b + 1) * w) - goe_width_cdf(b * w)) / w;
  }
  {
    auto os = run.text_file("width_histogram.csv", "width-histogram");
    write_xy_csv(os, run.stamp(), "bin_center", "value", centers, hist);
  }
  {
    auto os = run.text_file("width_histogram_goe.csv", "width-histogram-model");
    write_xy_csv(os, run.stamp(), "bin_center", "value", centers, model);
  }
  std::vector<double> ecdf(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) ecdf[i] = static_cast<double>(i + 1) / static_cast<double>(sorted.size());
  {
    auto os = run.text_file("width_ecdf.csv", "width-ecdf");
    write_xy_csv(os, run.stamp(), "width", "ecdf", sorted, ecdf);
  }
  double var = 0.0;
  for (double c : norm.widths) var += (c - 1.0) * (c - 1.0);
  var /= static_cast<double>(norm.widths.size() - 1);
  json report = {{"n_widths", norm.widths.size()},
                 {"c_bar", norm.c_bar},
                 {"normalized_variance", var},
                 {"goe_variance", std::numbers::pi / 2 - 1},
                 {"ks_distance_goe", ks_distance(norm.widths, goe_width_cdf)}};
  if (fit) {
    const auto f = fit_gamma(norm.widths, norm.c_bar);
    report["fit"] = {{"gamma", f.gamma},
                     {"c_bar", f.c_bar},
                     {"objective", f.objective},
                     {"method", to_string(f.method)},
                     {"n_widths", f.n_widths},
                     {"ks_distance", ks_distance(norm.widths, [&](double c) { return mixture_cdf(c, f.gamma); })}};
  }
  return report;
}

json delta_report(const FidelitySweep& sw) {
  json arr = json::array();
  for (const auto& c : sw.delta_checks) {
    if (!c.ok) arr.push_back({{"lambda", c.lambda}, {"level", c.level}, {"rel_change", c.rel_change}});
  }
  return arr;
}

int cmd_two_level(const Globals& g, const TwoLevelArgs& a) {
  json cfg = globals_json(g);
  cfg["g"] = a.g;
  cfg["lambda_range"] = {a.lambda_min, a.lambda_max};
  const Eigen::Index K = g.grid.value_or(2001);
  cfg["grid"] = K;
  Run run(g, "two-level", cfg);

  const auto spec = build_two_level(a.g);
  SweepOptions so;
  so.delta_lambda = g.delta_lambda;
  so.workers = g.workers;
  const auto sw = sweep(spec, a.lambda_min, a.lambda_max, K, so);
  write_sweep(run, sw);
  const auto det = detect_avoided_crossings(sw, detect_options(g));
  run.json_file("events.json", "events", events_document(det, run.stamp().config_hash, g));

  double max_rel = 0.0;
  Eigen::Index kpeak = 0;
  for (Eigen::Index k = 0; k < sw.size(); ++k) {
    // S on the grid compares lambda_k with lambda_k + dl; it samples the midpoint.
    const double exact = analytic_two_level(a.g, sw.lambda_grid[static_cast<std::size_t>(k)] + 0.5 * sw.delta_lambda).S;
    for (Eigen::Index n = 0; n < 2; ++n) max_rel = std::max(max_rel, std::abs(sw.S(n, k) - exact) / exact);
    if (sw.S(0, k) > sw.S(0, kpeak)) kpeak = k;
  }
  const double fwhm_exact = analytic_two_level(a.g, 0.0).fwhm;
  const double fwhm_data = sampled_fwhm(sw, 0, kpeak);
  constexpr double kOracleTolerance = 1e-5;
  json report = {{"stamp", run.stamp().to_json()},
                 {"g", a.g},
                 {"max_relative_error_S", max_rel},
                 {"oracle_tolerance", kOracleTolerance},
                 {"oracle_ok", max_rel < kOracleTolerance},
                 {"fwhm_data", fwhm_data},
                 {"fwhm_exact", fwhm_exact},
                 {"width_exact", 2 * a.g},
                 {"s_max_exact", analytic_two_level(a.g, 0.0).S},
                 {"events", events_to_json(det.events)},
                 {"delta_lambda", sw.delta_lambda},
                 {"delta_check_failures", delta_report(sw)},
                 {"warnings", sw.warnings}};
  run.json_file("report.json", "oracle-report", report);
  run.finish();

  std::cout << "two-level g=" << a.g << ": max rel. error of S " << max_rel << ", events " << det.events.size();
  if (!det.events.empty()) std::cout << ", c_est " << det.events.front().c_est << ", S_max " << det.events.front().s_max;
  std::cout << ", FWHM " << fwhm_data << " (exact " << fwhm_exact << ")\n";
  for (const auto& w : sw.warnings) std::cout << "warning: " << w << '\n';
  if (max_rel >= kOracleTolerance) {
    std::cerr << "oracle comparison failed: " << max_rel << " >= " << kOracleTolerance << '\n';
    return 2;
  }
  return 0;
}

int cmd_triple(const Globals& g, const TripleArgs& a) {
  json cfg = globals_json(g);
  cfg["couplings"] = {a.a, a.b, a.c};
  cfg["lambda_range"] = {a.lambda_min, a.lambda_max};
  const Eigen::Index K = g.grid.value_or(1201);
  cfg["grid"] = K;
  Run run(g, "triple", cfg);

  const auto spec = build_triple(a.a, a.b, a.c);
  for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << '\n';
  SweepOptions so;
  so.delta_lambda = g.delta_lambda;
  so.workers = g.workers;
  so.with_curvature = true;
  const auto sw = sweep(spec, a.lambda_min, a.lambda_max, K, so);
  write_sweep(run, sw);
  {
    auto os = run.text_file("curvature.csv", "curvature");
    os << "# acfid " << run.stamp().tool_version << " config " << run.stamp().config_hash << '\n';
    os << "lambda,C_0,C_1,C_2\n";
    for (Eigen::Index k = 0; k < sw.size(); ++k) {
      os << format_double(sw.lambda_grid[static_cast<std::size_t>(k)]);
      for (Eigen::Index n = 0; n < 3; ++n) os << ',' << format_double((*sw.curvature)(n, k));
      os << '\n';
    }
  }
  const auto det = detect_avoided_crossings(sw, detect_options(g));
  run.json_file("events.json", "events", events_document(det, run.stamp().config_hash, g));
  run.finish();

  std::cout << "triple (" << a.a << ", " << a.b << ", " << a.c << "): " << det.events.size() << " events\n";
  for (const auto& e : det.events) {
    std::cout << "  levels " << e.level_lo << '-' << e.level_hi << " at " << e.lambda_star << ", S_max " << e.s_max
              << ", c_est " << e.c_est << ", gap " << e.gap << '\n';
  }
  return 0;
}

int cmd_rmt(const Globals& g, const RmtArgs& a) {
  EnsembleConfig ec;
  ec.dim = a.dim;
  ec.n_pairs = a.pairs;
  ec.grid = g.grid.value_or(0);
  ec.delta_lambda = g.delta_lambda;
  ec.threshold = g.threshold;
  ec.base_seed = g.seed;
  ec.variance_scale = a.variance_scale;
  ec.refine = refine_mode(g.refine);
  ec.workers = g.workers;
  json cfg = globals_json(g);
  cfg["dim"] = a.dim;
  cfg["pairs"] = a.pairs;
  cfg["variance_scale"] = a.variance_scale;
  cfg["hist_bins"] = a.hist_bins;
  Run run(g, "rmt", cfg);

  log(g, "running " + std::to_string(a.pairs) + " GOE pairs of dimension " + std::to_string(a.dim));
  const auto ens = run_ensemble(ec);
  json doc = ens.to_json();
  doc["stamp"] = run.stamp().to_json();
  run.json_file("ensemble.json", "width-ensemble", doc);
  json report = write_width_statistics(run, ens.widths, a.hist_bins, true);
  report["stamp"] = run.stamp().to_json();
  report["failed_pairs"] = ens.failed_pairs;
  run.json_file("report.json", "width-report", report);
  run.finish();

  std::cout << "rmt: " << ens.widths.size() << " widths, KS distance to erf(c/sqrt(pi)) "
            << report["ks_distance_goe"].get<double>() << ", normalized variance "
            << report["normalized_variance"].get<double>() << " (GOE " << std::numbers::pi / 2 - 1 << ")\n";
  return 0;
}

ParametricHamiltonianSpec bh_spec(const BhArgs& a, const Globals& g) {
  if (a.boundary == "hardwall") {
    HardwallConfig hc;
    hc.N = a.N;
    hc.L = a.L;
    hc.J = a.J;
    hc.U = a.U;
    hc.max_states = a.max_states;
    return build_hardwall_tilted(hc);
  }
  if (a.boundary != "periodic") throw Error(ErrorKind::InvalidParameter, "boundary must be periodic or hardwall");
  FloquetFamilyConfig fc;
  fc.N = a.N;
  fc.L = a.L;
  fc.J = a.J;
  fc.U = a.U;
  fc.kappa_index = a.sector;
  fc.min_steps = a.min_steps;
  fc.floquet.tolerance = a.tolerance;
  fc.floquet.scheme = floquet_scheme_from_string(a.scheme);
  fc.reduce_when_commensurate = !a.full_period;
  fc.lambda_calibration = a.inv_f_max;
  fc.max_states = a.max_states;
  log(g, "calibrating the Floquet step size at 1/F = " + std::to_string(a.inv_f_max));
  return build_floquet_family(fc);
}

json chi2_windows(const FidelitySweep& sw, const std::vector<double>& edges, int bins) {
  json out = json::array();
  for (std::size_t w = 0; w + 1 < edges.size(); ++w) {
    std::vector<SpacingSample> parts;
    for (Eigen::Index k = 0; k < sw.size(); ++k) {
      const double lam = sw.lambda_grid[static_cast<std::size_t>(k)];
      if (lam < edges[w] || lam > edges[w + 1]) continue;
      parts.push_back(unfold_spacings(Eigen::VectorXd(sw.energies.col(k)), sw.kind));
    }
    json entry = {{"window", {edges[w], edges[w + 1]}}, {"columns", parts.size()}};
    try {
      const auto r = wigner_chi2(pool(parts), bins);
      entry["chi2"] = r.chi2;
      entry["dof"] = r.dof;
      entry["chi2_per_dof"] = r.chi2_per_dof;
      entry["merged_bins"] = r.merged;
    } catch (const Error& e) {
      entry["error"] = e.what();
    }
    out.push_back(entry);
  }
  return out;
}

int cmd_bose_hubbard(const Globals& g, BhArgs a) {
  json cfg = globals_json(g);
  const Eigen::Index K = g.grid.value_or(1400);
  cfg["grid"] = K;
  cfg["N"] = a.N;
  cfg["L"] = a.L;
  cfg["J"] = a.J;
  cfg["U"] = a.U;
  cfg["inv_f_range"] = {a.inv_f_min, a.inv_f_max};
  cfg["sector"] = a.sector;
  cfg["boundary"] = a.boundary;
  cfg["min_steps"] = a.min_steps;
  cfg["tolerance"] = a.tolerance;
  cfg["scheme"] = a.scheme;
  cfg["full_period"] = a.full_period;
  cfg["density_bins"] = a.density_bins;
  cfg["chi2_edges"] = a.chi2_edges;
  cfg["chi2_bins"] = a.chi2_bins;
  cfg["fit_gamma"] = a.fit;
  Run run(g, "bose-hubbard", cfg);

  const auto spec = bh_spec(a, g);
  log(g, "sweeping " + std::to_string(K) + " points, dimension " + std::to_string(spec.dim()));
  SweepOptions so;
  so.delta_lambda = g.delta_lambda;
  so.workers = g.workers;
  const auto sw = sweep(spec, a.inv_f_min, a.inv_f_max, K, so);
  write_sweep(run, sw);
  const auto det = detect_avoided_crossings(sw, detect_options(g));
  run.json_file("events.json", "events", events_document(det, run.stamp().config_hash, g));
  write_density(run, det.events, sw, a.density_bins);

  json chi = {{"stamp", run.stamp().to_json()}, {"bins", a.chi2_bins}, {"windows", chi2_windows(sw, a.chi2_edges, a.chi2_bins)}};
  run.json_file("chi2.json", "wigner-chi2", chi);

  std::vector<double> widths;
  for (const auto& e : det.events)
    if (e.paired) widths.push_back(e.c_est);
  if (a.fit) {
    json report = write_width_statistics(run, widths, a.hist_bins, true);
    report["stamp"] = run.stamp().to_json();
    run.json_file("fit.json", "gamma-fit", report);
    std::cout << "gamma = " << report["fit"]["gamma"].get<double>() << '\n';
  }
  run.finish();

  std::cout << "bose-hubbard N=" << a.N << " L=" << a.L << " (" << a.boundary << ", dim " << spec.dim()
            << "): " << det.paired_count() << " paired events of " << det.events.size() << '\n';
  for (const auto& w : chi["windows"]) {
    if (w.contains("chi2_per_dof")) {
      std::cout << "  chi2/dof on [" << w["window"][0].get<double>() << ", " << w["window"][1].get<double>()
                << "]: " << w["chi2_per_dof"].get<double>() << '\n';
    }
  }
  return 0;
}

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  if (a.sweep.empty() && a.ensemble.empty()) throw CLI::ValidationError("analyze", "need --sweep or --ensemble");
  json cfg = globals_json(g);
  cfg["sweep"] = a.sweep;
  cfg["ensemble"] = a.ensemble;
  cfg["density_bins"] = a.density_bins;
  cfg["hist_bins"] = a.hist_bins;
  Run run(g, "analyze", cfg);

  if (!a.sweep.empty()) {
    const fs::path csv = a.sweep;
    const fs::path side = a.sidecar.empty() ? fs::path(csv).replace_extension(".json") : fs::path(a.sidecar);
    const json sidecar = read_json_file(side);
    std::ifstream in(csv);
    if (!in) throw Error(ErrorKind::Parse, "cannot open " + csv.string());
    const auto sw = read_sweep(in, sidecar, csv.string());
    const std::string sweep_hash = sidecar.at("stamp").at("config_hash").get<std::string>();
    const auto det = detect_avoided_crossings(sw, detect_options(g));
    run.json_file("events.json", "events", events_document(det, sweep_hash, g));
    if (a.density_bins > 0) write_density(run, det.events, sw, a.density_bins);
    std::cout << "analyze: " << det.events.size() << " events (" << det.paired_count() << " paired) at threshold "
              << det.threshold << '\n';
  }
  if (!a.ensemble.empty()) {
    const auto ens = WidthEnsemble::from_json(read_json_file(a.ensemble));
    json report = write_width_statistics(run, ens.widths, a.hist_bins, true);
    report["stamp"] = run.stamp().to_json();
    run.json_file("fit.json", "gamma-fit", report);
    std::cout << "analyze: " << ens.widths.size() << " widths, gamma " << report["fit"]["gamma"].get<double>()
              << ", KS to GOE " << report["ks_distance_goe"].get<double>() << '\n';
  }
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Avoided-crossing detection via the fidelity change S_n = (1 - f_n) / dlambda^2"};
  app.set_version_flag("--version", std::string(acfid::version()));
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; [two-level], [rmt], ... sections hold subcommand options");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Base seed for random ensembles")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--delta-lambda", g.delta_lambda, "Probe step (default: grid step / 100)")->check(CLI::PositiveNumber);
  app.add_option("--grid", g.grid, "Grid points")->check(CLI::Range(Eigen::Index{3}, Eigen::Index{1} << 40));
  app.add_option("--threshold", g.threshold, "Peak threshold on S (default: 1 / (2 dbar^2))")->check(CLI::PositiveNumber);
  app.add_option("--refine", g.refine, "Peak refinement: always, unresolved, never")
      ->check(CLI::IsMember({"always", "unresolved", "never"}))
      ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

  TwoLevelArgs tl;
  auto* two = app.add_subcommand("two-level", "Isolated two-level crossing with analytic comparison");
  two->add_option("--g", tl.g, "Coupling g")->capture_default_str();
  two->add_option("--lambda-min", tl.lambda_min)->capture_default_str();
  two->add_option("--lambda-max", tl.lambda_max)->capture_default_str();

  TripleArgs tr;
  auto* tri = app.add_subcommand("triple", "Three-level model with couplings a, b, c");
  tri->add_option("--a", tr.a)->capture_default_str();
  tri->add_option("--b", tr.b)->capture_default_str();
  tri->add_option("--c", tr.c)->capture_default_str();
  tri->add_option("--lambda-min", tr.lambda_min)->capture_default_str();
  tri->add_option("--lambda-max", tr.lambda_max)->capture_default_str();

  RmtArgs rm;
  auto* rmt = app.add_subcommand("rmt", "GOE interpolation ensemble and width statistics");
  rmt->add_option("--dim", rm.dim)->check(CLI::Range(Eigen::Index{2}, Eigen::Index{1} << 16))->capture_default_str();
  rmt->add_option("--pairs", rm.pairs)->check(CLI::PositiveNumber)->capture_default_str();
  rmt->add_option("--variance-scale", rm.variance_scale)->check(CLI::PositiveNumber)->capture_default_str();
  rmt->add_option("--hist-bins", rm.hist_bins)->check(CLI::PositiveNumber)->capture_default_str();

  BhArgs bh;
  auto* bhc = app.add_subcommand("bose-hubbard", "Tilted Bose-Hubbard chain swept over 1/F");
  bhc->add_option("--N", bh.N)->capture_default_str();
  bhc->add_option("--L", bh.L)->capture_default_str();
  bhc->add_option("--J", bh.J)->capture_default_str();
  bhc->add_option("--U", bh.U)->capture_default_str();
  bhc->add_option("--inv-f-min", bh.inv_f_min)->capture_default_str();
  bhc->add_option("--inv-f-max", bh.inv_f_max)->capture_default_str();
  bhc->add_option("--sector", bh.sector, "Quasimomentum index k (kappa = 2 pi k / L)")->capture_default_str();
  bhc->add_option("--boundary", bh.boundary)->check(CLI::IsMember({"periodic", "hardwall"}))->capture_default_str();
  bhc->add_option("--min-steps", bh.min_steps, "Floor on time steps per period")->capture_default_str();
  bhc->add_option("--tolerance", bh.tolerance, "Eigenphase convergence tolerance")->capture_default_str();
  bhc->add_option("--scheme", bh.scheme)->check(CLI::IsMember({"midpoint", "magnus4"}))->capture_default_str();
  bhc->add_flag("--full-period", bh.full_period,
                "Integrate the whole Bloch period even when L divides N (default: T_B / L, then the L-th power)");
  bhc->add_option("--max-states", bh.max_states, "Fock dimension cap")->capture_default_str();
  bhc->add_option("--density-bins", bh.density_bins)->check(CLI::PositiveNumber)->capture_default_str();
  bhc->add_option("--chi2-edges", bh.chi2_edges, "Window edges in 1/F for the spacing test")->delimiter(',');
  bhc->add_option("--chi2-bins", bh.chi2_bins)->capture_default_str();
  bhc->add_flag("--fit-gamma", bh.fit, "Fit the regular/chaotic width mixture");
  bhc->add_option("--hist-bins", bh.hist_bins)->capture_default_str();

  AnalyzeArgs an;
  auto* ana = app.add_subcommand("analyze", "Re-run detection or fits on persisted data");
  ana->add_option("--sweep", an.sweep, "sweep.csv from an earlier run")->check(CLI::ExistingFile);
  ana->add_option("--sidecar", an.sidecar, "Sidecar JSON (default: the CSV path with .json)");
  ana->add_option("--ensemble", an.ensemble, "ensemble.json from an rmt run")->check(CLI::ExistingFile);
  ana->add_option("--density-bins", an.density_bins, "Emit the AC density with this many bins")->capture_default_str();
  ana->add_option("--hist-bins", an.hist_bins)->capture_default_str();

  for (auto* sub : {two, tri, rmt, bhc, ana}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*two) return cmd_two_level(g, tl);
    if (*tri) return cmd_triple(g, tr);
    if (*rmt) return cmd_rmt(g, rm);
    if (*bhc) return cmd_bose_hubbard(g, bh);
    return cmd_analyze(g, an);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const acfid::Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
