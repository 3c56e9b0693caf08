#include "acfid/io.hpp"
#include "acfid/hamiltonians.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace acfid;

namespace {

FidelitySweep small_sweep() { return sweep(build_two_level(0.3), -2.0, 2.0, 81); }

std::string csv_of(const FidelitySweep& sw) {
  std::ostringstream os;
  write_sweep_csv(os, sw, Stamp{version(), "0123456789abcdef"});
  return os.str();
}

std::string parse_message(const std::string& csv, const nlohmann::json& side) {
  std::istringstream in(csv);
  try {
    read_sweep(in, side, "t.csv");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("sweep CSV round trip") {
  const auto sw = small_sweep();
  const Stamp stamp{version(), "0123456789abcdef"};
  const auto text = csv_of(sw);
  CHECK(text.rfind("# acfid ", 0) == 0);
  CHECK(text.find("lambda,E_0,E_1,S_0,S_1\n") != std::string::npos);

  const auto side = nlohmann::json::parse(sweep_sidecar(sw, stamp).dump());
  CHECK(side["stamp"]["config_hash"] == "0123456789abcdef");
  std::istringstream in(text);
  const auto back = read_sweep(in, side);
  CHECK(back.lambda_grid == sw.lambda_grid);
  CHECK(back.S == sw.S);
  CHECK(back.energies == sw.energies);
  CHECK(back.delta_lambda == sw.delta_lambda);
  CHECK(back.step == sw.step);
  CHECK(back.kind == SpectrumKind::Linear);
  CHECK(back.spec.kind() == ModelKind::TwoLevel);

  const auto a = detect_avoided_crossings(sw);
  const auto b = detect_avoided_crossings(back);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].lambda_star == b.events[i].lambda_star);
    CHECK(a.events[i].s_max == b.events[i].s_max);
  }
}

TEST_CASE("sweep files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "acfid_test_io";
  std::filesystem::create_directories(dir);
  const auto sw = small_sweep();
  const Stamp stamp{version(), "feed"};
  {
    std::ofstream csv(dir / "sweep.csv");
    write_sweep_csv(csv, sw, stamp);
  }
  write_json_file(dir / "sweep.json", sweep_sidecar(sw, stamp));
  const auto back = load_sweep(dir / "sweep.csv", dir / "sweep.json");
  CHECK(back.S == sw.S);
  CHECK(test::error_kind_of([&] { load_sweep(dir / "missing.csv", dir / "sweep.json"); }) == ErrorKind::Parse);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{ not json";
  }
  CHECK(test::error_kind_of([&] { read_json_file(dir / "bad.json"); }) == ErrorKind::Parse);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed sweep CSV names line and field") {
  const auto sw = small_sweep();
  const auto side = sweep_sidecar(sw, Stamp{version(), "x"});
  const auto text = csv_of(sw);

  SUBCASE("bad number") {
    // line 1 stamp, line 2 header, line 3 first row; corrupt its third field.
    std::istringstream in(text);
    std::string out, line;
    int n = 0;
    while (std::getline(in, line)) {
      if (++n == 3) {
        const auto p1 = line.find(',');
        const auto p2 = line.find(',', p1 + 1);
        const auto p3 = line.find(',', p2 + 1);
        line = line.substr(0, p2 + 1) + "abc" + line.substr(p3);
      }
      out += line + "\n";
    }
    const auto msg = parse_message(out, side);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("field 3") != std::string::npos);
  }

  SUBCASE("wrong header") {
    auto bad = text;
    bad.replace(bad.find("S_0"), 3, "Q_0");
    const auto msg = parse_message(bad, side);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("field 4") != std::string::npos);
  }

  SUBCASE("short row") {
    auto bad = text;
    bad += "0.5,1\n";
    CHECK(parse_message(bad, side).find("fields") != std::string::npos);
  }

  SUBCASE("sidecar missing keys") {
    auto broken = side;
    broken.erase("delta_lambda");
    std::istringstream in(text);
    CHECK(test::error_kind_of([&] { read_sweep(in, broken); }) == ErrorKind::Parse);
  }
}

TEST_CASE("events round trip") {
  ACEvent e;
  e.level_lo = 3;
  e.level_hi = 4;
  e.paired = false;
  e.lambda_star = 0.1234567890123;
  e.s_max = 1e7;
  e.c_est = 2.2e-4;
  e.gap = 3.1e-4;
  e.grid_index = 17;
  e.refinement_depth = 2;
  const auto doc = events_to_json({e, e});
  const auto back = events_from_json(nlohmann::json::parse(doc.dump()));
  REQUIRE(back.size() == 2);
  CHECK(back[0].level_lo == 3);
  CHECK(back[0].level_hi == 4);
  CHECK(!back[0].paired);
  CHECK(back[0].lambda_star == e.lambda_star);
  CHECK(back[0].s_max == e.s_max);
  CHECK(back[0].c_est == e.c_est);
  CHECK(back[0].gap == e.gap);
  CHECK(back[0].grid_index == 17);
  CHECK(back[0].refinement_depth == 2);

  const auto wrapped = events_from_json(nlohmann::json{{"events", doc}});
  CHECK(wrapped.size() == 2);
  CHECK(test::error_kind_of([] { events_from_json(nlohmann::json{{"events", 3}}); }) == ErrorKind::Parse);
  CHECK(test::error_kind_of([] { events_from_json(nlohmann::json::array({{{"lambda_star", "x"}}})); }) ==
        ErrorKind::Parse);
}

TEST_CASE("config hash ignores settings that cannot change results") {
  const nlohmann::json base = {{"command", "rmt"}, {"seed", 1}, {"dim", 128}};
  auto busy = base;
  busy["workers"] = 8;
  busy["out"] = "/tmp/elsewhere";
  busy["verbose"] = true;
  CHECK(config_hash(base) == config_hash(busy));
  auto other = base;
  other["seed"] = 2;
  CHECK(config_hash(base) != config_hash(other));
  CHECK(config_hash(base).size() == 16);
}

TEST_CASE("manifest lists artifacts") {
  Manifest m("two-level", {{"g", 1.0}, {"workers", 3}});
  m.add("sweep.csv", "sweep");
  m.add("events.json", "events");
  const auto j = m.to_json();
  CHECK(j["command"] == "two-level");
  CHECK(j["artifacts"].size() == 2);
  CHECK(!j["config"].contains("workers"));
  CHECK(j["stamp"]["tool_version"] == version());
  CHECK(j["stamp"]["config_hash"] == config_hash({{"g", 1.0}}));
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3, 6.02214076e23, -2.5e-300}) CHECK(std::stod(format_double(v)) == v);
}
