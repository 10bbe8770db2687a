#include "doctest.h"

#include "floodopt/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace floodopt;

namespace {

const char* kSmallDem =
    "ncols 3\n"
    "nrows 3\n"
    "xllcorner 1000\n"
    "yllcorner 2000\n"
    "cellsize 50\n"
    "NODATA_value -9999\n"
    "1 2 3\n"
    "4 -9999 6\n"
    "7 8 9.5\n";

DemErrorKind dem_failure(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse_dem(text);
  } catch (const DemError& e) {
    if (line) *line = e.line();
    CHECK(e.kind() == ErrorKind::Format);
    return e.dem_kind();
  }
  FAIL("expected a DemError");
  return DemErrorKind::Header;
}

std::set<std::pair<Index, Index>> as_set(const std::vector<std::pair<Index, Index>>& v) {
  return {v.begin(), v.end()};
}

bool eight_connected_chain(std::vector<std::pair<Index, Index>> cells) {
  if (cells.empty()) return false;
  std::set<std::pair<Index, Index>> todo(cells.begin(), cells.end());
  std::vector<std::pair<Index, Index>> stack{cells.front()};
  todo.erase(cells.front());
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    for (Index di = -1; di <= 1; ++di)
      for (Index dj = -1; dj <= 1; ++dj) {
        auto it = todo.find({i + di, j + dj});
        if (it != todo.end()) {
          stack.push_back(*it);
          todo.erase(it);
        }
      }
  }
  return todo.empty();
}

}  // namespace

TEST_CASE("parse_dem maps header and rows") {
  const SimGrid g = parse_dem(kSmallDem);
  CHECK(g.nx == 3);
  CHECK(g.ny == 3);
  CHECK(g.dx == 50.0);
  CHECK(g.dy == 50.0);
  CHECK(g.origin_x == 1000.0);
  CHECK(g.origin_y == 2000.0);
  // First file row is the northern edge.
  CHECK(g.bed(0, 2) == 1.0);
  CHECK(g.bed(2, 0) == 9.5);
  CHECK(g.bed(0, 0) == 7.0);
  CHECK(validate_grid(g).empty());
}

TEST_CASE("NODATA cells are flagged and raised") {
  DemOptions opts;
  opts.nodata_elevation = 500.0;
  const SimGrid g = parse_dem(kSmallDem, opts);
  REQUIRE(g.nodata.size() == 9);
  CHECK(g.nodata.count() == 1);
  CHECK(g.nodata(1, 1));
  CHECK(g.bed(1, 1) == 500.0);
}

TEST_CASE("header keys are case-insensitive and accept cell-center origins") {
  const SimGrid g = parse_dem("NCOLS 3\nNROWS 3\nXLLCENTER 25\nYLLCENTER 25\nCELLSIZE 50\n"
                              "0 0 0\n0 0 0\n0 0 0\n");
  CHECK(g.origin_x == 0.0);
  CHECK(g.origin_y == 0.0);
  CHECK(g.nodata.count() == 0);
}

TEST_CASE("DEM errors are distinct and carry line numbers") {
  std::size_t line = 0;
  CHECK(dem_failure("nrows 3\nxllcorner 0\nyllcorner 0\ncellsize 50\n1 2 3\n", &line) ==
        DemErrorKind::Header);
  CHECK(line == 5);

  CHECK(dem_failure("ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize abc\n1 2 3\n", &line) ==
        DemErrorKind::Header);
  CHECK(line == 5);

  CHECK(dem_failure("ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 5\n1 2 3\n1 2\n",
                    &line) == DemErrorKind::RowCount);
  CHECK(line == 7);

  CHECK(dem_failure("ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 5\n1 2 3\n1 2 3\n") ==
        DemErrorKind::RowCount);

  CHECK(dem_failure("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 5\n1 2\n3 4\n", &line) ==
        DemErrorKind::RowCount);
  CHECK(line == 7);

  CHECK(dem_failure("ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 5\n1 2 3\n4 x5 6\n",
                    &line) == DemErrorKind::Token);
  CHECK(line == 7);
}

TEST_CASE("read_dem on a missing file is an io error") {
  try {
    read_dem("/nonexistent/dem.asc");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("DEM write then read is bit-exact") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-50.0, 3000.0);
  SimGrid g = SimGrid::uniform(17, 11, 12.5, 12.5, 0.0, 0.03);
  g.origin_x = 512345.678;
  g.origin_y = -0.1;
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) g.bed(i, j) = u(rng);
  g.bed(3, 4) = 1e-300;
  g.bed(5, 6) = -0.0;
  g.nodata = Mask::Constant(g.nx, g.ny, false);
  g.nodata(2, 2) = true;

  const auto path = std::filesystem::temp_directory_path() / "floodopt_roundtrip.asc";
  write_dem(g, path);
  const SimGrid r = read_dem(path, {g.bed(2, 2), 0.03});
  std::filesystem::remove(path);

  CHECK(r.nx == g.nx);
  CHECK(r.ny == g.ny);
  CHECK(r.origin_x == g.origin_x);
  CHECK(r.origin_y == g.origin_y);
  CHECK(r.dx == g.dx);
  CHECK((r.nodata == g.nodata).all());
  CHECK((r.bed == g.bed).all());
}

TEST_CASE("north-flowing channel gives a 7-cell east-west wall") {
  const SimGrid g = SimGrid::uniform(21, 21, 50.0, 50.0, 10.0, 0.03);
  const Centerline cl({{525.0, 0.0}, {525.0, 1050.0}});
  DamSpec dam;
  dam.center = g.cell_center(10, 10);
  dam.length = 300.0;
  dam.crest = 5.0;

  // Footprint by hand: cell centres on the segment are 50 m apart, the next
  // ones out sit 50 m beyond an endpoint, farther than half a diagonal (35.4 m).
  std::set<std::pair<Index, Index>> expected;
  for (Index i = 7; i <= 13; ++i) expected.insert({i, 10});
  const auto cells = dam_footprint(g, dam, cl);
  CHECK(as_set(cells) == expected);
  // Ordered along the axis, which points west for a northward tangent.
  CHECK(cells.front().first == 13);
  CHECK(cells.back().first == 7);

  const SimGrid out = rasterize_dam(g, dam, cl);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i)
      CHECK(out.bed(i, j) == (expected.count({i, j}) ? 15.0 : 10.0));
  CHECK((g.bed == 10.0).all());
}

TEST_CASE("short dam still raises the center cell") {
  const SimGrid g = SimGrid::uniform(9, 9, 50.0, 50.0, 0.0, 0.03);
  const Centerline cl({{0.0, 225.0}, {450.0, 225.0}});
  for (const Point c : {Point(225.0, 225.0), Point(200.0, 200.0), Point(249.0, 201.0)}) {
    DamSpec dam;
    dam.center = c;
    dam.length = 10.0;
    const auto cells = dam_footprint(g, dam, cl);
    CHECK(as_set(cells).count(*g.locate(c)) == 1);
  }
}

TEST_CASE("dam reaching past the edge is a geometry error") {
  const SimGrid g = SimGrid::uniform(9, 9, 50.0, 50.0, 0.0, 0.03);
  const Centerline cl({{0.0, 225.0}, {450.0, 225.0}});
  DamSpec dam;
  dam.center = {225.0, 100.0};
  dam.length = 300.0;
  try {
    rasterize_dam(g, dam, cl);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }
}

TEST_CASE("rasterize_dam properties on random terrain") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> bed(0.0, 20.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimGrid g = SimGrid::uniform(40, 40, 50.0, 50.0, 0.0, 0.03);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) g.bed(i, j) = bed(rng);

  for (int trial = 0; trial < 200; ++trial) {
    const double ang = 2.0 * M_PI * unit(rng);
    const Point tangent(std::cos(ang), std::sin(ang));
    DamSpec dam;
    dam.center = {700.0 + 600.0 * unit(rng), 700.0 + 600.0 * unit(rng)};
    dam.length = 20.0 + 480.0 * unit(rng);
    dam.crest = 0.5 + 5.0 * unit(rng);
    const Centerline cl({dam.center - 300.0 * tangent, dam.center + 300.0 * tangent});

    const SimGrid out = rasterize_dam(g, dam, cl);
    CHECK((out.bed >= g.bed).all());
    CHECK((rasterize_dam(g, dam, cl).bed == out.bed).all());

    const auto cells = dam_footprint(g, dam, cl);
    CHECK(eight_connected_chain(cells));
    const Point axis(-tangent.y(), tangent.x());
    double smin = 1e300, smax = -1e300;
    for (auto [i, j] : cells) {
      const double s = (g.cell_center(i, j) - dam.center).dot(axis);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    // A cell past an endpoint can still be within half a diagonal of it, so
    // oblique dams may overshoot by up to one diagonal.
    CHECK(std::abs((smax - smin) - dam.length) <= std::hypot(g.dx, g.dy));

    // Footprint raised to reference + crest, nothing else touched.
    double ref = -1e300;
    for (auto [i, j] : cells) ref = std::max(ref, g.bed(i, j));
    const auto fp = as_set(cells);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i)
        if (fp.count({i, j}))
          CHECK(out.bed(i, j) == std::max(g.bed(i, j), ref + dam.crest));
        else
          CHECK(out.bed(i, j) == g.bed(i, j));
  }
}

TEST_CASE("cell-centred dams of whole-cell length span exactly their length") {
  const SimGrid g = SimGrid::uniform(40, 40, 50.0, 50.0, 0.0, 0.03);
  for (int k = 1; k <= 12; ++k)
    for (const Point tangent : {Point(1.0, 0.0), Point(0.0, 1.0), Point(-1.0, 0.0)}) {
      DamSpec dam;
      dam.center = g.cell_center(20, 20);
      dam.length = 50.0 * k;
      const Centerline cl({dam.center - 300.0 * tangent, dam.center + 300.0 * tangent});
      const auto cells = dam_footprint(g, dam, cl);
      // Odd multiples end on a cell edge, 25 m from the next centre outward.
      const int extra = k % 2;
      CHECK(cells.size() == std::size_t(k + 1 + extra));
      const Point axis(-tangent.y(), tangent.x());
      const double span = (g.cell_center(cells.back().first, cells.back().second) -
                           g.cell_center(cells.front().first, cells.front().second))
                              .dot(axis);
      CHECK(span == doctest::Approx(dam.length + 50.0 * extra));
    }
}

TEST_CASE("rotating the centerline by 90 degrees rotates the footprint") {
  // Square grid symmetric about its center; rotation (x, y) -> (-y, x) about
  // the center maps cell (i, j) to (n-1-j, i).
  const Index n = 31;
  const SimGrid g = SimGrid::uniform(n, n, 50.0, 50.0, 0.0, 0.03);
  const Point mid(0.5 * g.width(), 0.5 * g.height());
  auto rot = [&](const Point& p) { return Point(mid.x() - (p.y() - mid.y()), mid.y() + (p.x() - mid.x())); };

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double ang = M_PI * unit(rng);
    const Point t(std::cos(ang), std::sin(ang));
    DamSpec dam;
    // Cell-centered positions keep the rotated dam on the same lattice.
    dam.center = g.cell_center(10 + Index(10 * unit(rng)), 10 + Index(10 * unit(rng)));
    dam.length = 50.0 + 400.0 * unit(rng);
    const Centerline cl({dam.center - 200.0 * t, dam.center + 200.0 * t});

    DamSpec turned = dam;
    turned.center = rot(dam.center);
    const Centerline cl_turned({rot(cl.points()[0]), rot(cl.points()[1])});

    std::set<std::pair<Index, Index>> mapped;
    for (auto [i, j] : dam_footprint(g, dam, cl)) mapped.insert({n - 1 - j, i});
    CHECK(as_set(dam_footprint(g, turned, cl_turned)) == mapped);
  }
}

TEST_CASE("axis override replaces the perpendicular") {
  const SimGrid g = SimGrid::uniform(21, 21, 50.0, 50.0, 0.0, 0.03);
  const Centerline cl({{0.0, 525.0}, {1050.0, 525.0}});
  DamSpec dam;
  dam.center = g.cell_center(10, 10);
  CHECK(dam_axis(dam, cl).isApprox(Point(0.0, 1.0)));
  dam.axis = Point(3.0, 0.0);
  CHECK(dam_axis(dam, cl) == Point(1.0, 0.0));
  std::set<std::pair<Index, Index>> row;
  for (Index i = 7; i <= 13; ++i) row.insert({i, 10});
  CHECK(as_set(dam_footprint(g, dam, cl)) == row);
}

TEST_CASE("centerline tangent uses the nearest segment") {
  const Centerline cl({{0.0, 0.0}, {100.0, 0.0}, {100.0, 100.0}});
  CHECK(cl.tangent_near({50.0, -5.0}) == Point(1.0, 0.0));
  CHECK(cl.tangent_near({105.0, 60.0}) == Point(0.0, 1.0));
  CHECK_THROWS_AS(Centerline({{1.0, 1.0}, {1.0, 1.0}}), Error);
  CHECK_THROWS_AS(Centerline({{1.0, 1.0}}), Error);
}

TEST_CASE("synthetic channel with branch") {
  const ChannelBranchParams p;
  const SyntheticTerrain t = synth_channel_with_branch(p);
  CHECK(validate_grid(t.grid).empty());
  CHECK(t.branch_sill > t.thalweg_at_mouth);

  SUBCASE("bed along the centerline never rises downstream") {
    double prev = std::numeric_limits<double>::infinity();
    for (double x = 25.0; x < t.grid.width(); x += 25.0) {
      const auto c = t.grid.locate({x, p.channel_y - 1.0});
      const double z = t.grid.bed(c->first, c->second);
      CHECK(z <= prev);
      prev = z;
    }
  }
  SUBCASE("gauge crosses the branch and its bed is lower than the floodplain") {
    const auto c = t.grid.locate(0.5 * (t.gauge.a + t.gauge.b));
    REQUIRE(c);
    const double fp = p.floodplain_level - p.slope * p.branch_x;
    CHECK(t.grid.bed(c->first, c->second) < fp);
    CHECK(t.grid.bed(c->first, c->second) > t.thalweg_at_mouth);
  }
  SUBCASE("search region sits on the main channel") {
    CHECK(validate_polygon(t.search_region.polygon).empty());
    CHECK(t.search_region.contains({p.branch_x, p.channel_y}));
    CHECK_FALSE(t.search_region.contains({p.branch_x, p.channel_y + p.channel_width}));
  }
  SUBCASE("degenerate parameters") {
    ChannelBranchParams bad = p;
    bad.branch_width = 0.0;
    CHECK_THROWS_AS(synth_channel_with_branch(bad), Error);
    bad = p;
    bad.branch_width = p.channel_width + 1.0;
    CHECK_THROWS_AS(synth_channel_with_branch(bad), Error);
  }
  SUBCASE("normal flow carries the requested discharge in every column") {
    const double Q = 800.0;
    const FlowState s = channel_normal_flow(t, p, Q);
    for (Index i = 0; i < t.grid.nx; ++i) {
      double q = 0.0;
      for (Index j = 0; j < t.grid.ny; ++j) q += s.hu(i, j) * t.grid.dy;
      CHECK(q == doctest::Approx(Q).epsilon(1e-9));
    }
    CHECK((s.hv == 0.0).all());
    CHECK((s.h >= 0.0).all());
  }
}
