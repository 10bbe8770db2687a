#include "floodopt/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace floodopt {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// --- little-endian packing ---

template <typename T>
void put(std::string& out, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = std::bit_cast<U>(v);
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    out.push_back(char(u & 0xff));
    u >>= 8;
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& name) : b_(bytes), name_(name) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
      u |= U(static_cast<unsigned char>(b_[pos_ + k])) << (8 * k);
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view v(b_.data() + pos_, n);
    pos_ += n;
    return v;
  }

  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error(ErrorKind::Format, name_ + ": truncated snapshot");
  }

  const std::string& b_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "FLOODSNP";
constexpr std::uint32_t kVersion = 1;

}  // namespace

// --- Hydrograph CSV ---------------------------------------------------------

std::vector<HydrographSample> parse_hydrograph_csv(const std::string& text,
                                                   const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<HydrographSample> out;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::Format, name + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view l = trim(line);
    if (l.empty()) continue;
    const auto comma = l.find(',');
    if (comma == std::string_view::npos || l.find(',', comma + 1) != std::string_view::npos)
      fail("expected two comma-separated columns");
    const auto a = trim(l.substr(0, comma)), b = trim(l.substr(comma + 1));
    if (!header) {
      if (a != "t_s" || b != "q_m3s") fail("header must be t_s,q_m3s");
      header = true;
      continue;
    }
    const auto t = parse_number(a), q = parse_number(b);
    if (!t) fail("bad time '" + std::string(a) + "'");
    if (!q) fail("bad discharge '" + std::string(b) + "'");
    out.push_back({*t, *q});
  }
  if (!header) throw Error(ErrorKind::Format, name + ": missing header t_s,q_m3s");
  return out;
}

std::vector<HydrographSample> read_hydrograph_csv(const std::filesystem::path& path) {
  return parse_hydrograph_csv(read_file(path), path.string());
}

std::string format_hydrograph_csv(const std::vector<HydrographSample>& samples) {
  std::string out = "t_s,q_m3s\n";
  for (const auto& s : samples) out += format_number(s.t) + "," + format_number(s.q) + "\n";
  return out;
}

// --- Snapshots --------------------------------------------------------------

SnapshotHeader SnapshotHeader::of(const SimGrid& grid, double t) {
  return {grid.nx, grid.ny, grid.dx, grid.dy, grid.origin_x, grid.origin_y, t};
}

bool SnapshotHeader::matches(const SimGrid& g) const {
  return nx == g.nx && ny == g.ny && dx == g.dx && dy == g.dy && origin_x == g.origin_x &&
         origin_y == g.origin_y;
}

std::string encode_snapshot(const FlowState& s, const SimGrid& grid) {
  if (s.nx() != grid.nx || s.ny() != grid.ny)
    throw Error(ErrorKind::Format, "snapshot: state shape does not match the grid");
  std::string out(kMagic);
  put(out, kVersion);
  put(out, std::int64_t(grid.nx));
  put(out, std::int64_t(grid.ny));
  for (double v : {grid.dx, grid.dy, grid.origin_x, grid.origin_y, s.t}) put(out, v);
  out.reserve(out.size() + 3 * 8 * std::size_t(grid.nx * grid.ny));
  for (const auto* f : {&s.h, &s.hu, &s.hv})
    for (Index k = 0; k < f->size(); ++k) put(out, (*f)(k));
  return out;
}

Snapshot decode_snapshot(const std::string& bytes, const std::string& name) {
  Reader r(bytes, name);
  if (r.take(kMagic.size()) != kMagic) throw Error(ErrorKind::Format, name + ": not a snapshot");
  if (const auto v = r.get<std::uint32_t>(); v != kVersion)
    throw Error(ErrorKind::Format, name + ": unsupported version " + std::to_string(v));
  Snapshot snap;
  auto& h = snap.header;
  h.nx = Index(r.get<std::int64_t>());
  h.ny = Index(r.get<std::int64_t>());
  h.dx = r.get<double>();
  h.dy = r.get<double>();
  h.origin_x = r.get<double>();
  h.origin_y = r.get<double>();
  h.t = r.get<double>();
  if (h.nx <= 0 || h.ny <= 0 || r.remaining() != 3 * 8 * std::size_t(h.nx) * std::size_t(h.ny))
    throw Error(ErrorKind::Format, name + ": size does not match " + std::to_string(h.nx) + " x " +
                                       std::to_string(h.ny) + " cells");
  snap.state = FlowState::dry(h.nx, h.ny, h.t);
  for (auto* f : {&snap.state.h, &snap.state.hu, &snap.state.hv})
    for (Index k = 0; k < f->size(); ++k) (*f)(k) = r.get<double>();
  return snap;
}

void write_snapshot(const FlowState& state, const SimGrid& grid, const std::filesystem::path& path) {
  write_file(path, encode_snapshot(state, grid));
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  return decode_snapshot(read_file(path), path.string());
}

FlowState read_snapshot(const std::filesystem::path& path, const SimGrid& grid) {
  Snapshot s = read_snapshot(path);
  if (!s.header.matches(grid)) {
    std::ostringstream msg;
    msg << path.string() << ": snapshot grid " << s.header.nx << " x " << s.header.ny << " (dx "
        << s.header.dx << ") does not match the active grid " << grid.nx << " x " << grid.ny
        << " (dx " << grid.dx << ")";
    throw Error(ErrorKind::Format, msg.str());
  }
  return std::move(s.state);
}

SnapshotSet::SnapshotSet(std::filesystem::path dir, const SimGrid& grid)
    : dir_(std::move(dir)), grid_(grid) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir_.string() + ": " + ec.message());
}

void SnapshotSet::add(const FlowState& state) {
  if (!times_.empty() && !(state.t > times_.back()))
    throw Error(ErrorKind::Validation, "snapshots: times must increase strictly");
  char name[32];
  std::snprintf(name, sizeof name, "snap_%05zu.bin", times_.size());
  write_snapshot(state, grid_, dir_ / name);
  times_.push_back(state.t);
  files_.emplace_back(name);
  write_index();
}

void SnapshotSet::add_final(const FlowState& state) {
  write_snapshot(state, grid_, dir_ / "final.bin");
  final_t_ = state.t;
  write_index();
}

void SnapshotSet::write_index() const {
  std::string out = "file,t_s\n";
  for (std::size_t k = 0; k < files_.size(); ++k)
    out += files_[k] + "," + format_number(times_[k]) + "\n";
  if (final_t_) out += "final.bin," + format_number(*final_t_) + "\n";
  write_file(dir_ / "index.csv", out);
}

}  // namespace floodopt
