#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fnse/config.hpp"
#include "fnse/io.hpp"
#include "fnse/runner.hpp"
#include "fnse/spectral.hpp"

using namespace fnse;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto p = fs::temp_directory_path() / "fnse_io_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("field dump / load round trip is bit exact") {
  const PeriodicGrid g(2, 16);
  const auto f = band_limited_field(g, 2, 5, 44);
  const auto path = temp_dir() / "roundtrip.f64";
  dump_field(f, -0.375, path);
  const auto loaded = load_field(path);
  CHECK(loaded.time == -0.375);
  CHECK(loaded.field.grid() == g);
  CHECK(loaded.field.comps() == 2);
  CHECK(loaded.field.values() == f.values());
}

TEST_CASE("csv writer produces a verifiable checksum trailer") {
  const auto path = temp_dir() / "report.csv";
  std::uint64_t written = 0;
  {
    CsvWriter csv(path, {"a", "b"});
    csv.row({"1", "2"});
    csv.row({"3.5", "x"});
    written = csv.finish();
  }
  bool matches = false;
  const auto read = read_csv_checksum(path, &matches);
  CHECK(read == written);
  CHECK(matches);
  CHECK_THROWS_AS(CsvWriter(path, {"a"}).row({"1", "2"}), std::invalid_argument);
}

TEST_CASE("csv field export covers 1-d and 2-d only") {
  const PeriodicGrid g2(2, 8);
  export_field_csv(taylor_green(g2), temp_dir() / "tg.csv");
  bool ok = false;
  read_csv_checksum(temp_dir() / "tg.csv", &ok);
  CHECK(ok);
  const PeriodicGrid g3(3, 4);
  CHECK_THROWS_AS(export_field_csv(PeriodicField::zero(g3, 1), temp_dir() / "bad.csv"),
                  std::invalid_argument);
}

TEST_CASE("minimal solve config gets documented defaults") {
  const auto cfg = parse_config(
      "command = solve\n"
      "n = 16\n"
      "alpha = 1.5\n"
      "viscosity = 2\n"
      "u0 = single-mode k=0,1 e=1,0 amp=0.05\n");
  CHECK(cfg.command == Command::solve);
  CHECK(cfg.solve.grid.n == 16);
  CHECK(cfg.solve.grid.dim == 2);
  CHECK(cfg.solve.viscosity == 2.0);
  CHECK(cfg.solve.samples_per_node == 2000);
  CHECK(cfg.solve.dt == 1e-3);
  CHECK(cfg.solve.p == 4.0);
  CHECK(cfg.master_seed == 1);
  const auto u0 = build_u0(cfg);
  CHECK(u0.comps() == 2);
  CHECK(max_divergence(u0) <= 1e-12);
}

TEST_CASE("alpha range error names both ranges and the line") {
  try {
    parse_config("command = solve\nalpha = 2.5\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    const std::string msg = e.what();
    CHECK(msg.find("(0,2)") != std::string::npos);
    CHECK(msg.find("(1,2)") != std::string::npos);
  }
}

TEST_CASE("alpha acceptable for symbol work is rejected for solver commands") {
  CHECK_NOTHROW(parse_config("command = verify-levy\nalpha = 0.8\n"));
  CHECK_THROWS_AS(parse_config("command = solve\nalpha = 0.8\n"), ConfigError);
}

TEST_CASE("p constraint error cites the bound") {
  try {
    parse_config("command = solve\nalpha = 1.5\np = 2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2d/alpha") != std::string::npos);
    CHECK(msg.find("2.66") != std::string::npos);
  }
}

TEST_CASE("unknown keys and malformed lines are rejected with line numbers") {
  try {
    parse_config("command = solve\n# fine comment\nbogus_key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("command = solve\nnot a pair\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 16\n"), ConfigError);  // missing command
  CHECK_THROWS_AS(parse_config("command = solve\nn = 17\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("command = compare\n"), ConfigError);  // needs dirs
}

TEST_CASE("runner: continuation from zero data writes dumps and manifests") {
  auto cfg = parse_config(
      "command = continue\nn = 16\nu0 = zero\nhorizon = -2.2\nsamples = 50\n");
  const auto dir = temp_dir() / "continue_zero";
  cfg.output_dir = dir.string();
  CHECK(run(cfg) == 0);
  CHECK(fs::exists(dir / "manifest.csv"));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "u_slice_0000.f64"));
  const auto loaded = load_field(dir / "u_slice_0000.f64");
  CHECK(loaded.field.max_abs() == 0.0);
  bool ok = false;
  read_csv_checksum(dir / "manifest.csv", &ok);
  CHECK(ok);
}

TEST_CASE("runner: compare flags mismatched runs") {
  const auto dir = temp_dir() / "cmp";
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  const PeriodicGrid g(2, 8);
  dump_field(taylor_green(g), 0.0, dir / "a" / "u_slice_0000.f64");
  dump_field(taylor_green(g), -0.5, dir / "a" / "u_slice_0001.f64");
  dump_field(taylor_green(g), 0.0, dir / "b" / "u_slice_0000.f64");
  dump_field(taylor_green(g, 0.5), -0.5, dir / "b" / "u_slice_0001.f64");

  auto cfg = parse_config("command = compare\ncompare_a = " + (dir / "a").string() +
                          "\ncompare_b = " + (dir / "b").string() + "\ncompare_budget = 0.05\n");
  cfg.output_dir = (dir / "out").string();
  CHECK(run(cfg) == 1);  // second slice differs by 50%

  cfg.compare_budget = 0.6;
  cfg.output_dir = (dir / "out2").string();
  CHECK(run(cfg) == 0);
}

TEST_CASE("u0 presets") {
  auto zero = parse_config("command = solve\nu0 = zero\n");
  CHECK(build_u0(zero).max_abs() == 0.0);

  auto tg = parse_config("command = solve\nu0 = taylor-green amp=0.5\n");
  CHECK(build_u0(tg).max_abs() == doctest::Approx(0.5).epsilon(1e-6));

  CHECK_THROWS_AS(parse_config("command = solve\nu0 = single-mode k=0,1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("command = solve\nu0 = pancake\n"), ConfigError);

  // file round trip
  const auto dir = temp_dir();
  auto cfg = parse_config("command = solve\nn = 16\nu0 = taylor-green\n");
  dump_field(build_u0(cfg), 0.0, dir / "u0.f64");
  auto from_file =
      parse_config("command = solve\nn = 16\nu0 = file:" + (dir / "u0.f64").string() + "\n");
  CHECK((build_u0(from_file).values() - build_u0(cfg).values()).cwiseAbs().maxCoeff() == 0.0);
}
