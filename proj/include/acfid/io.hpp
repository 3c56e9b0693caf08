#pragma once

#include "acfid/fidelity.hpp"
#include "acfid/spectral.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace acfid {

const char* version() noexcept;

/// FNV-1a (64 bit) of the canonical dump of `config`, skipping keys that cannot change results
/// (worker count, output directory, verbosity). Hex encoded.
std::string config_hash(const nlohmann::json& config);

/// Tool version and run configuration hash carried by every artifact.
struct Stamp {
  std::string tool_version = version();
  std::string config_hash;

  nlohmann::json to_json() const;
};

// ---- sweeps ----

/// `# acfid <version> config <hash>` line, header `lambda,E_0..E_{d-1},S_0..S_{d-1}`, then one
/// row per grid point with every value printed to 17 significant digits.
void write_sweep_csv(std::ostream& os, const FidelitySweep& sw, const Stamp& stamp);
nlohmann::json sweep_sidecar(const FidelitySweep& sw, const Stamp& stamp);

/// Rebuilds a sweep from its CSV and sidecar. f is restored as 1 - S dl^2 and curvature is not
/// persisted. Malformed input raises a Parse error naming the line and field.
FidelitySweep read_sweep(std::istream& csv, const nlohmann::json& sidecar, const std::string& source = "<csv>");
FidelitySweep load_sweep(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path);

/// Row per (lambda, level): `lambda,index,value`.
void write_spectrum_csv(std::ostream& os, const FidelitySweep& sw, const Stamp& stamp);

/// Debug dump of a snapshot with vectors row-major, real and imaginary parts interleaved.
nlohmann::json snapshot_to_json(const SpectrumSnapshot& s);

// ---- events ----

nlohmann::json event_to_json(const ACEvent& e);
ACEvent event_from_json(const nlohmann::json& j);
nlohmann::json events_to_json(const std::vector<ACEvent>& events);
std::vector<ACEvent> events_from_json(const nlohmann::json& doc);

nlohmann::json density_to_json(const ACDensityHistogram& h);

// ---- generic helpers ----

/// Two-column plot data with the stamp comment line.
void write_xy_csv(std::ostream& os, const Stamp& stamp, const std::string& x_name, const std::string& y_name,
                  const std::vector<double>& x, const std::vector<double>& y);

/// Reads a JSON file, wrapping syntax errors as Parse errors with the file name.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

std::string format_double(double v);

/// List of all artifacts written by one run.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::json config);

  void add(const std::filesystem::path& file, const std::string& role);
  nlohmann::json to_json() const;
  const Stamp& stamp() const { return stamp_; }

 private:
  std::string command_;
  nlohmann::json config_;
  Stamp stamp_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace acfid
