#include "acfid/io.hpp"

#include "acfid/error.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef ACFID_VERSION
#define ACFID_VERSION "0.0.0"
#endif

namespace acfid {

namespace {

using nlohmann::json;

json strip_volatile(const json& j) {
  if (!j.is_object()) return j;
  json out = json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "workers" || key == "out" || key == "verbose") continue;
    out[key] = strip_volatile(value);
  }
  return out;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, std::size_t field, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": line " << line;
  if (field > 0) msg << ", field " << field;
  msg << ": " << what;
  throw Error(ErrorKind::Parse, msg.str());
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view text, const std::string& source, std::size_t line, std::size_t field) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) parse_error(source, line, field, "not a number: '" + std::string(text) + "'");
  return v;
}

template <typename T>
T require(const json& doc, const char* key, const std::string& source) {
  if (!doc.contains(key)) throw Error(ErrorKind::Parse, source + ": missing key '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, source + ": key '" + key + "': " + e.what());
  }
}

void write_stamp_line(std::ostream& os, const Stamp& stamp) {
  os << "# acfid " << stamp.tool_version << " config " << stamp.config_hash << '\n';
}

}  // namespace

const char* version() noexcept { return ACFID_VERSION; }

std::string config_hash(const nlohmann::json& config) {
  const std::string text = strip_volatile(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json Stamp::to_json() const { return {{"tool_version", tool_version}, {"config_hash", config_hash}}; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sweep_csv(std::ostream& os, const FidelitySweep& sw, const Stamp& stamp) {
  const Eigen::Index d = sw.dim();
  write_stamp_line(os, stamp);
  os << "lambda";
  for (Eigen::Index n = 0; n < d; ++n) os << ",E_" << n;
  for (Eigen::Index n = 0; n < d; ++n) os << ",S_" << n;
  os << '\n';
  for (Eigen::Index k = 0; k < sw.size(); ++k) {
    os << format_double(sw.lambda_grid[static_cast<std::size_t>(k)]);
    for (Eigen::Index n = 0; n < d; ++n) os << ',' << format_double(sw.energies(n, k));
    for (Eigen::Index n = 0; n < d; ++n) os << ',' << format_double(sw.S(n, k));
    os << '\n';
  }
}

nlohmann::json sweep_sidecar(const FidelitySweep& sw, const Stamp& stamp) {
  json checks = json::array();
  for (const auto& c : sw.delta_checks) {
    checks.push_back({{"lambda", c.lambda},
                      {"level", c.level},
                      {"rel_change", c.rel_change},
                      {"ok", c.ok},
                      {"precision_limited", c.precision_limited}});
  }
  return {{"stamp", stamp.to_json()},
          {"spec", sw.spec.to_json()},
          {"spectrum_kind", sw.kind == SpectrumKind::Linear ? "linear" : "circular"},
          {"dim", sw.dim()},
          {"K", sw.size()},
          {"lambda_min", sw.lambda_grid.front()},
          {"lambda_max", sw.lambda_grid.back()},
          {"step", sw.step},
          {"delta_lambda", sw.delta_lambda},
          {"label_offset", sw.label_offset},
          {"floored_points", sw.floored_points},
          {"max_completeness_defect", sw.max_completeness_defect},
          {"delta_checks", checks},
          {"warnings", sw.warnings}};
}

FidelitySweep read_sweep(std::istream& csv, const nlohmann::json& sidecar, const std::string& source) {
  const std::string side = source + " (sidecar)";
  FidelitySweep sw;
  const auto d = require<Eigen::Index>(sidecar, "dim", side);
  const auto K = require<Eigen::Index>(sidecar, "K", side);
  if (d < 1 || K < 3) throw Error(ErrorKind::Parse, side + ": implausible dim/K");
  const auto kind = require<std::string>(sidecar, "spectrum_kind", side);
  if (kind != "linear" && kind != "circular") throw Error(ErrorKind::Parse, side + ": unknown spectrum_kind " + kind);
  sw.kind = kind == "linear" ? SpectrumKind::Linear : SpectrumKind::Circular;
  sw.step = require<double>(sidecar, "step", side);
  sw.delta_lambda = require<double>(sidecar, "delta_lambda", side);
  sw.label_offset = require<std::vector<Eigen::Index>>(sidecar, "label_offset", side);
  sw.floored_points = require<std::size_t>(sidecar, "floored_points", side);
  sw.max_completeness_defect = require<double>(sidecar, "max_completeness_defect", side);
  sw.warnings = require<std::vector<std::string>>(sidecar, "warnings", side);
  for (const auto& c : require<json>(sidecar, "delta_checks", side)) {
    DeltaCheck dc;
    dc.lambda = require<double>(c, "lambda", side);
    dc.level = require<Eigen::Index>(c, "level", side);
    dc.rel_change = require<double>(c, "rel_change", side);
    dc.ok = require<bool>(c, "ok", side);
    dc.precision_limited = require<bool>(c, "precision_limited", side);
    sw.delta_checks.push_back(dc);
  }
  try {
    sw.spec = spec_from_json(require<json>(sidecar, "spec", side));
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, side + ": spec: " + e.what());
  }
  if (sw.spec.dim() != d) throw Error(ErrorKind::Parse, side + ": spec dimension does not match dim");

  sw.S.resize(d, K);
  sw.energies.resize(d, K);
  sw.lambda_grid.resize(static_cast<std::size_t>(K));

  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  Eigen::Index k = 0;
  while (std::getline(csv, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_commas(line);
    if (fields.size() != static_cast<std::size_t>(1 + 2 * d)) {
      parse_error(source, lineno, 0,
                  "expected " + std::to_string(1 + 2 * d) + " fields, found " + std::to_string(fields.size()));
    }
    if (!header_seen) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string want = i == 0 ? "lambda"
                           : i <= static_cast<std::size_t>(d)
                               ? "E_" + std::to_string(i - 1)
                               : "S_" + std::to_string(i - 1 - static_cast<std::size_t>(d));
        if (fields[i] != want) parse_error(source, lineno, i + 1, "expected header '" + want + "'");
      }
      header_seen = true;
      continue;
    }
    if (k >= K) parse_error(source, lineno, 0, "more rows than K=" + std::to_string(K));
    sw.lambda_grid[static_cast<std::size_t>(k)] = parse_double(fields[0], source, lineno, 1);
    for (Eigen::Index n = 0; n < d; ++n) {
      const auto i = static_cast<std::size_t>(1 + n);
      sw.energies(n, k) = parse_double(fields[i], source, lineno, i + 1);
      const auto j = static_cast<std::size_t>(1 + d + n);
      const double s = parse_double(fields[j], source, lineno, j + 1);
      if (s < 0.0) parse_error(source, lineno, j + 1, "negative S");
      sw.S(n, k) = s;
    }
    ++k;
  }
  if (!header_seen) parse_error(source, lineno, 0, "missing header row");
  if (k != K) parse_error(source, lineno, 0, "found " + std::to_string(k) + " rows, expected " + std::to_string(K));
  if (sw.kind == SpectrumKind::Circular && static_cast<Eigen::Index>(sw.label_offset.size()) != K) {
    throw Error(ErrorKind::Parse, side + ": label_offset must have K entries for circular sweeps");
  }
  sw.f = (1.0 - sw.S.array() * (sw.delta_lambda * sw.delta_lambda)).matrix();
  return sw;
}

FidelitySweep load_sweep(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + csv_path.string());
  return read_sweep(in, read_json_file(sidecar_path), csv_path.string());
}

void write_spectrum_csv(std::ostream& os, const FidelitySweep& sw, const Stamp& stamp) {
  write_stamp_line(os, stamp);
  os << "lambda,index,value\n";
  for (Eigen::Index k = 0; k < sw.size(); ++k) {
    const auto lam = format_double(sw.lambda_grid[static_cast<std::size_t>(k)]);
    for (Eigen::Index n = 0; n < sw.dim(); ++n) os << lam << ',' << n << ',' << format_double(sw.energies(n, k)) << '\n';
  }
}

nlohmann::json snapshot_to_json(const SpectrumSnapshot& s) {
  const Eigen::MatrixXcd v = s.complex_vectors();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(2 * v.size()));
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      flat.push_back(v(i, j).real());
      flat.push_back(v(i, j).imag());
    }
  }
  return {{"lambda", s.lambda},
          {"kind", s.kind == SpectrumKind::Linear ? "linear" : "circular"},
          {"dim", s.dim()},
          {"values", std::vector<double>(s.values.data(), s.values.data() + s.values.size())},
          {"vectors_row_major_re_im", flat}};
}

nlohmann::json event_to_json(const ACEvent& e) {
  return {{"level_lo", e.level_lo},       {"level_hi", e.level_hi}, {"paired", e.paired},
          {"lambda_star", e.lambda_star}, {"s_max", e.s_max},       {"c_est", e.c_est},
          {"gap", e.gap},                 {"grid_index", e.grid_index}, {"refinement_depth", e.refinement_depth}};
}

ACEvent event_from_json(const nlohmann::json& j) {
  const std::string src = "event";
  ACEvent e;
  e.level_lo = require<Eigen::Index>(j, "level_lo", src);
  e.level_hi = require<Eigen::Index>(j, "level_hi", src);
  e.paired = require<bool>(j, "paired", src);
  e.lambda_star = require<double>(j, "lambda_star", src);
  e.s_max = require<double>(j, "s_max", src);
  e.c_est = require<double>(j, "c_est", src);
  e.gap = require<double>(j, "gap", src);
  e.grid_index = require<Eigen::Index>(j, "grid_index", src);
  e.refinement_depth = require<int>(j, "refinement_depth", src);
  return e;
}

nlohmann::json events_to_json(const std::vector<ACEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  return arr;
}

std::vector<ACEvent> events_from_json(const nlohmann::json& doc) {
  const json& arr = doc.is_object() ? require<json>(doc, "events", "events document") : doc;
  if (!arr.is_array()) throw Error(ErrorKind::Parse, "events document: expected an array");
  std::vector<ACEvent> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      out.push_back(event_from_json(arr[i]));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, "events[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

nlohmann::json density_to_json(const ACDensityHistogram& h) {
  return {{"bin_edges", h.bin_edges},
          {"counts", h.counts},
          {"overflow", h.overflow},
          {"dim_hilbert", h.dim_hilbert},
          {"density", h.density}};
}

void write_xy_csv(std::ostream& os, const Stamp& stamp, const std::string& x_name, const std::string& y_name,
                  const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidParameter, "write_xy_csv: column length mismatch");
  write_stamp_line(os, stamp);
  os << x_name << ',' << y_name << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) os << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Resource, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

Manifest::Manifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)) {
  stamp_.config_hash = config_hash(config_);
}

void Manifest::add(const std::filesystem::path& file, const std::string& role) {
  entries_.emplace_back(file.filename().string(), role);
}

nlohmann::json Manifest::to_json() const {
  json files = json::array();
  for (const auto& [path, role] : entries_) files.push_back({{"path", path}, {"role", role}});
  return {{"command", command_}, {"stamp", stamp_.to_json()}, {"config", strip_volatile(config_)}, {"artifacts", files}};
}

}  // namespace acfid
