#include "doctest.h"

#include "floodopt/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

using namespace floodopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("floodopt_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_bits(const Field<double>& a, const Field<double>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * std::size_t(a.size())) == 0;
}

}  // namespace

TEST_CASE("hydrograph CSV") {
  const auto s = parse_hydrograph_csv("t_s,q_m3s\n0,300\n1800, 300\n3600,1.5e3\n\n");
  REQUIRE(s.size() == 3);
  CHECK(s[1].t == 1800.0);
  CHECK(s[2].q == 1500.0);
  CHECK(format_hydrograph_csv(s) == "t_s,q_m3s\n0,300\n1800,300\n3600,1500\n");

  SUBCASE("header is required") {
    CHECK_THROWS_WITH_AS(parse_hydrograph_csv("0,300\n1,300\n", "q.csv"),
                         "q.csv:1: header must be t_s,q_m3s", Error);
    CHECK_THROWS_AS(parse_hydrograph_csv(""), Error);
  }
  SUBCASE("bad rows name their line") {
    CHECK_THROWS_WITH_AS(parse_hydrograph_csv("t_s,q_m3s\n0,1\n5,abc\n", "q.csv"),
                         "q.csv:3: bad discharge 'abc'", Error);
    CHECK_THROWS_WITH_AS(parse_hydrograph_csv("t_s,q_m3s\n0,1,2\n", "q.csv"),
                         "q.csv:2: expected two comma-separated columns", Error);
  }
  SUBCASE("missing file is an io error") {
    try {
      read_hydrograph_csv("/nonexistent/q.csv");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
      CHECK(std::string(e.what()).find("/nonexistent/q.csv") != std::string::npos);
    }
  }
}

TEST_CASE("snapshot round trip is bitwise") {
  SimGrid g = SimGrid::uniform(13, 7, 12.5, 7.25, 0.0, 0.03);
  g.origin_x = -1234.5;
  g.origin_y = 0.1;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  FlowState s = FlowState::dry(13, 7, 3601.25);
  for (auto* f : {&s.h, &s.hu, &s.hv})
    for (Index k = 0; k < f->size(); ++k) (*f)(k) = u(rng) * std::pow(10.0, double(k % 40) - 20);
  s.h(0) = -0.0;
  s.hu(1) = std::numeric_limits<double>::denorm_min();
  s.hv(2) = std::numeric_limits<double>::max();

  const std::string bytes = encode_snapshot(s, g);
  CHECK(bytes.substr(0, 8) == "FLOODSNP");
  CHECK(bytes.size() == 8 + 4 + 2 * 8 + 5 * 8 + 3 * 8 * 13 * 7);
  const Snapshot back = decode_snapshot(bytes);
  CHECK(back.header.matches(g));
  CHECK(back.state.t == s.t);
  CHECK(same_bits(back.state.h, s.h));
  CHECK(same_bits(back.state.hu, s.hu));
  CHECK(same_bits(back.state.hv, s.hv));
  CHECK(std::signbit(back.state.h(0)));

  const fs::path dir = scratch("roundtrip");
  write_snapshot(s, g, dir / "s.bin");
  const FlowState f = read_snapshot(dir / "s.bin", g);
  CHECK(same_bits(f.h, s.h));
  CHECK(same_bits(f.hv, s.hv));
}

TEST_CASE("snapshot byte layout is little-endian") {
  const SimGrid g = SimGrid::uniform(1, 1, 2.0, 2.0, 0.0, 0.03);
  FlowState s = FlowState::dry(1, 1);
  s.h(0) = 1.0;  // 0x3ff0000000000000
  const std::string b = encode_snapshot(s, g);
  CHECK(b[8] == 1);  // version
  CHECK(b[12] == 1);  // nx
  const std::size_t h = 8 + 4 + 16 + 40;
  CHECK(static_cast<unsigned char>(b[h + 7]) == 0x3f);
  CHECK(static_cast<unsigned char>(b[h + 6]) == 0xf0);
  CHECK(b[h] == 0);
}

TEST_CASE("all-dry snapshot reads back all-dry") {
  const SimGrid g = SimGrid::uniform(5, 4, 10.0, 10.0, 0.0, 0.03);
  const Snapshot s = decode_snapshot(encode_snapshot(FlowState::dry(5, 4), g));
  CHECK((s.state.h == 0.0).all());
  CHECK((s.state.hu == 0.0).all());
  CHECK((s.state.hv == 0.0).all());
}

TEST_CASE("snapshot errors") {
  const SimGrid g = SimGrid::uniform(5, 4, 10.0, 10.0, 0.0, 0.03);
  const fs::path dir = scratch("errors");
  write_snapshot(FlowState::dry(5, 4), g, dir / "s.bin");

  const SimGrid other = SimGrid::uniform(4, 5, 10.0, 10.0, 0.0, 0.03);
  try {
    read_snapshot(dir / "s.bin", other);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
  SimGrid shifted = g;
  shifted.origin_x = 5.0;
  CHECK_THROWS_AS(read_snapshot(dir / "s.bin", shifted), Error);

  std::string bytes = encode_snapshot(FlowState::dry(5, 4), g);
  CHECK_THROWS_AS(decode_snapshot(bytes.substr(0, bytes.size() - 1)), Error);
  CHECK_THROWS_AS(decode_snapshot(bytes + "x"), Error);
  bytes[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_snapshot(bytes, "s.bin"), "s.bin: not a snapshot", Error);
  CHECK_THROWS_AS(encode_snapshot(FlowState::dry(4, 5), g), Error);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.bin"), Error);
}

TEST_CASE("snapshot set") {
  const SimGrid g = SimGrid::uniform(3, 3, 10.0, 10.0, 0.0, 0.03);
  const fs::path dir = scratch("set") / "snaps";
  SnapshotSet set(dir, g);
  set.add(FlowState::dry(3, 3, 10.0));
  set.add(FlowState::dry(3, 3, 20.5));
  CHECK_THROWS_AS(set.add(FlowState::dry(3, 3, 20.5)), Error);
  set.add_final(FlowState::dry(3, 3, 25.0));
  CHECK(set.times() == std::vector<double>{10.0, 20.5});
  CHECK(read_snapshot(dir / "snap_00001.bin").header.t == 20.5);
  std::ifstream in(dir / "index.csv");
  const std::string index{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  CHECK(index == "file,t_s\nsnap_00000.bin,10\nsnap_00001.bin,20.5\nfinal.bin,25\n");
}
