#include "doctest.h"

#include "floodopt/core.hpp"
#include "floodopt/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace floodopt;

TEST_CASE("validate_grid") {
  SimGrid g = SimGrid::uniform(3, 3, 50.0, 50.0, 0.0, 0.02);
  CHECK(validate_grid(g).empty());

  SUBCASE("zero manning names its cell") {
    g.manning(1, 2) = 0.0;
    const auto v = validate_grid(g);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("manning(1,2)") != std::string::npos);
  }
  SUBCASE("non-finite bed") {
    g.bed(0, 1) = std::numeric_limits<double>::infinity();
    const auto v = validate_grid(g);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("bed(0,1)") != std::string::npos);
  }
  SUBCASE("too small and bad spacing") {
    SimGrid t = SimGrid::uniform(2, 3, -1.0, 50.0, 0.0, 0.02);
    CHECK(validate_grid(t).size() == 2);
  }
}

TEST_CASE("hydrograph interpolation") {
  Hydrograph hg({{0, 5000}, {86400, 25000}}, 0, 86400);
  CHECK(hg.at(43200) == 15000.0);
  CHECK(hg.at(0) == 5000.0);
  CHECK(hg.at(86400) == 25000.0);
  CHECK_THROWS_AS(hg.at(-1.0), Error);
  CHECK_THROWS_AS(hg.at(86401.0), Error);

  // Trapezoid plateau: evaluated straight from its definition.
  const double base = 800, peak = 3000;
  auto trap = Hydrograph::trapezoid(base, peak, 0, 3600, 7200, 14400, 18000, 21600, 3600, 18000);
  auto definition = [&](double t) {
    if (t <= 3600) return base;
    if (t <= 7200) return base + (peak - base) * (t - 3600) / 3600;
    if (t <= 14400) return peak;
    if (t <= 18000) return peak - (peak - base) * (t - 14400) / 3600;
    return base;
  };
  for (double t : {0.0, 1800.0, 5000.0, 7200.0, 10000.0, 16000.0, 20000.0})
    CHECK(trap.at(t) == doctest::Approx(definition(t)).epsilon(1e-14));
}

TEST_CASE("hydrograph invariants are enforced") {
  CHECK_THROWS_AS(Hydrograph({{0, 1}, {0, 2}}, 0, 0.5), Error);
  CHECK_THROWS_AS(Hydrograph({{0, 1}, {10, -2}}, 0, 5), Error);
  CHECK_THROWS_AS(Hydrograph({{0, 1}, {10, 2}}, 5, 5), Error);
  CHECK_THROWS_AS(Hydrograph({{0, 1}, {10, 2}}, 2, 11), Error);
}

TEST_CASE("interpolation is monotone within a segment") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> q(0, 1000), u(0, 1);
  std::vector<HydrographSample> s;
  for (int k = 0; k < 20; ++k) s.push_back({100.0 * k, q(rng)});
  Hydrograph hg(s, 0, 1900);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = int(u(rng) * 19);
    double a = s[k].t + 100 * u(rng), b = s[k].t + 100 * u(rng);
    if (a > b) std::swap(a, b);
    const double qa = hg.at(a), qb = hg.at(b);
    if (s[k + 1].q >= s[k].q) CHECK(qa <= qb);
    else CHECK(qa >= qb);
  }
}

TEST_CASE("polygons and source regions") {
  Polygon sq = Polygon::rectangle(0, 0, 100, 50);
  CHECK(sq.area() == 5000.0);
  CHECK(sq.contains({50, 25}));
  CHECK(sq.contains({0, 10}));
  CHECK_FALSE(sq.contains({101, 10}));
  CHECK(validate_polygon(sq).empty());
  Polygon bow({{0, 0}, {10, 10}, {10, 0}, {0, 10}});
  CHECK_FALSE(validate_polygon(bow).empty());

  SimGrid g = SimGrid::uniform(10, 10, 10.0, 10.0, 0.0, 0.02);
  const auto src = source_from_polygon(g, Polygon::rectangle(0, 0, 30, 20));
  CHECK(src.cells.size() == 6);
  CHECK(src.validate().empty());
  CHECK_THROWS_AS(source_from_polygon(g, Polygon::rectangle(200, 200, 300, 300)), Error);
}

TEST_CASE("still water constructor satisfies the state invariants") {
  SimGrid g = SimGrid::uniform(5, 4, 1.0, 1.0, 0.0, 0.02);
  for (Index i = 0; i < 5; ++i) g.bed.row(i).setConstant(double(i));
  auto s = FlowState::still_water(g, 2.5);
  CHECK(s.h.minCoeff() >= 0.0);
  CHECK(s.h(0, 0) == 2.5);
  CHECK(s.h(4, 0) == 0.0);
  CHECK(s.hu.abs().maxCoeff() == 0.0);
  CHECK(validate_grid(g).empty());
}

TEST_CASE("exit code families") {
  CHECK(exit_code(ErrorKind::Config) == 2);
  CHECK(exit_code(ErrorKind::Io) == 3);
  CHECK(exit_code(ErrorKind::Numeric) == 4);
  CHECK(exit_code(ErrorKind::Domain) == 5);
}
