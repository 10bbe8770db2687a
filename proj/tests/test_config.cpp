#include "doctest.h"

#include "floodopt/config.hpp"
#include "floodopt/io.hpp"
#include "scenarios.hpp"

#include <fstream>

using namespace floodopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("floodopt_cfg_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

const char* kMinimal = R"(
[terrain]
synthetic = "channel_with_branch"

[hydrograph]
samples = [[0, 300], [1800, 300], [3600, 1500], [5400, 1500], [7200, 300], [9000, 300]]
t_qs = 1800
t_qe = 9000
)";

Error config_error(const std::string& text, const fs::path& base = fs::temp_directory_path()) {
  try {
    parse_config(text, base, "test.toml");
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorKind::Config, "");
}

bool mentions(const Error& e, const std::string& s) {
  return std::string(e.what()).find(s) != std::string::npos;
}

}  // namespace

TEST_CASE("minimal synthetic config echoes its defaults") {
  const RunConfig c = parse_config(kMinimal, "/data/runs", "minimal.toml");
  const std::string dump = dump_config(c);
  CHECK(dump.find("\ncfl = 0.5\n") != std::string::npos);
  CHECK(dump.find("\nh_dry = 0.001\n") != std::string::npos);
  CHECK(dump.find("\nprobe_dx = 100.0\n") != std::string::npos);
  CHECK(dump.find("\nprobe_dy = 100.0\n") != std::string::npos);
  CHECK(dump.find("\nkind = \"normal_flow\"\n") != std::string::npos);
  CHECK(dump.find("\nout_dir = \"/data/runs/out\"\n") != std::string::npos);
  CHECK(c.t_end == 9000.0);
  // Terrain-derived geometry is spelled out.
  CHECK(c.gauge.has_value());
  CHECK(c.search_region.has_value());
  CHECK(c.starts.size() == 1);
}

TEST_CASE("normalized dump reloads to the same config") {
  const RunConfig c = parse_config(kMinimal, "/data/runs");
  const std::string dump = dump_config(c);
  const RunConfig again = parse_config(dump, "/elsewhere");
  CHECK(dump_config(again) == dump);
}

TEST_CASE("synthetic scenario matches the hand-built flood problem") {
  const Scenario sc = build_scenario(parse_config(kMinimal, "/tmp"));
  const FloodProblem ref = scenario::branch_flood();
  const FloodProblem& p = sc.problem;
  CHECK((p.grid.bed == ref.grid.bed).all());
  CHECK((p.grid.manning == ref.grid.manning).all());
  CHECK(p.gauge.a == ref.gauge.a);
  CHECK(p.gauge.b == ref.gauge.b);
  CHECK(p.source.cells.size() == ref.source.cells.size());
  CHECK((p.initial.h == ref.initial.h).all());
  CHECK((p.initial.hu == ref.initial.hu).all());
  CHECK(p.hydrograph.t_qs() == ref.hydrograph.t_qs());
  CHECK(sc.probe.delta_x == 100.0);
  CHECK(sc.map_spacing == 100.0);
  CHECK(sc.t_end == 9000.0);
}

TEST_CASE("terrain sources are exclusive") {
  const fs::path dir = scratch("exclusive");
  write(dir / "t.asc", "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\n1 2\n3 4\n");
  const Error e = config_error(R"(
[terrain]
dem = "t.asc"
synthetic = "channel_with_branch"
[hydrograph]
samples = [[0, 1], [10, 1]]
t_qs = 0
t_qe = 10
)",
                               dir);
  CHECK(e.kind() == ErrorKind::Config);
  CHECK(mentions(e, "exactly one of dem or synthetic"));
  CHECK(exit_code(e.kind()) == 2);
}

TEST_CASE("missing hydrograph file is a load error naming the path") {
  const fs::path dir = scratch("missing");
  const Error e = config_error(R"(
[terrain]
synthetic = "channel_with_branch"
[hydrograph]
file = "nope/flood.csv"
t_qs = 0
t_qe = 10
)",
                               dir);
  CHECK(e.kind() == ErrorKind::Io);
  CHECK(mentions(e, (dir / "nope/flood.csv").string()));
}

TEST_CASE("all violations are reported together") {
  const Error e = config_error(R"(
[terrain]
synthetic = "channel_with_branch"
[hydrograph]
samples = [[0, 1], [10, 1]]
t_qs = 0
t_qe = 10
[physics]
cfl = 1.5
h_dry = "small"
[solver]
order = 3
limiter = "superbee"
[dam]
crest = -1
[extra]
x = 1
)");
  CHECK(e.kind() == ErrorKind::Config);
  for (const char* s : {"cfl", "physics.h_dry: expected a number", "order", "solver.limiter",
                        "dam.crest", "unknown key 'extra'"})
    CHECK_MESSAGE(mentions(e, s), s);
  CHECK(mentions(e, "line 10:"));  // h_dry
}

TEST_CASE("syntax errors carry line and column") {
  const Error e = config_error("[terrain]\nsynthetic = \"channel_with_branch\"\nbad = = 1\n");
  CHECK(e.kind() == ErrorKind::Config);
  CHECK(mentions(e, "test.toml:3:"));
}

TEST_CASE("DEM config needs explicit geometry and resolves relative paths") {
  const fs::path dir = scratch("dem");
  fs::create_directories(dir / "data");
  SimGrid g = SimGrid::uniform(20, 10, 10.0, 10.0, 0.0, 0.03);
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 10; ++j) g.bed(i, j) = 0.1 * double(j);
  write_dem(g, dir / "data" / "bed.asc");
  write(dir / "data" / "q.csv", "t_s,q_m3s\n0,0\n600,0\n");

  const Error e = config_error(R"(
[terrain]
dem = "data/bed.asc"
[hydrograph]
file = "data/q.csv"
t_qs = 0
t_qe = 600
)",
                               dir);
  CHECK(mentions(e, "source.polygon: required"));
  CHECK(mentions(e, "gauge.a / gauge.b: required"));

  const std::string good = R"(
[terrain]
dem = "data/bed.asc"
manning = 0.025
[hydrograph]
file = "data/q.csv"
t_qs = 0
t_qe = 600
[source]
polygon = [[0, 0], [20, 0], [20, 100], [0, 100]]
[gauge]
a = [100, 0]
b = [100, 100]
positive_side = "right"
[search]
region = [[50, 20], [150, 20], [150, 80], [50, 80]]
centerline = [[0, 50], [200, 50]]
[initial]
kind = "still_water"
level = 0.5
[boundaries]
west = "wall"
east = "wall"
south = "wall"
north = "wall"
)";
  write(dir / "run.toml", good);
  const RunConfig c = load_config(dir / "run.toml");
  CHECK(*c.dem == dir / "data" / "bed.asc");
  CHECK(c.probe->delta_x == 20.0);
  CHECK(c.starts.front() == Point(100.0, 50.0));
  const Scenario sc = build_scenario(c);
  CHECK(sc.problem.grid.manning(0, 0) == 0.025);
  CHECK(sc.problem.initial.h(3, 2) == doctest::Approx(0.3));
  CHECK(sc.problem.solver.boundaries.west == Boundary::Wall);
  CHECK(sc.out_dir == dir / "out");

  // The dump survives a round trip through a file in another directory.
  const fs::path other = scratch("dem_dump");
  write(other / "dump.toml", dump_config(c));
  CHECK(dump_config(load_config(other / "dump.toml")) == dump_config(c));
}

TEST_CASE("geometry problems surface when the scenario is built") {
  const std::string text = std::string(kMinimal) + "[gauge]\na = [100, 100]\nb = [100, 9000]\n";
  try {
    build_scenario(parse_config(text, "/tmp"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
    CHECK(exit_code(e.kind()) == 5);
  }
}

TEST_CASE("snapshot initial state must match the grid and the start time") {
  const fs::path dir = scratch("snap");
  const RunConfig base = parse_config(kMinimal, dir);
  const Scenario sc = build_scenario(base);
  write_snapshot(sc.problem.initial, sc.problem.grid, dir / "init.bin");
  const std::string text =
      std::string(kMinimal) + "[initial]\nkind = \"snapshot\"\nsnapshot = \"init.bin\"\n";
  const Scenario again = build_scenario(parse_config(text, dir));
  CHECK((again.problem.initial.h == sc.problem.initial.h).all());

  write_snapshot(FlowState::dry(3, 3), SimGrid::uniform(3, 3, 1.0, 1.0, 0.0, 0.03),
                 dir / "init.bin");
  CHECK_THROWS_AS(build_scenario(parse_config(text, dir)), Error);
}
