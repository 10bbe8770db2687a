#include "floodopt/terrain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace floodopt {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    const std::size_t b = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > b) out.push_back(line.substr(b, k - b));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_numeric(std::string_view tok) {
  const char c = tok.front();
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

std::string line_tag(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

SimGrid parse_dem(const std::string& text, const DemOptions& opts) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }

  struct HeaderValue {
    double value;
    std::size_t line;
  };
  std::map<std::string, HeaderValue> header;
  std::size_t k = 0;
  for (; k < lines.size(); ++k) {
    const auto tok = split_ws(lines[k]);
    if (tok.empty()) continue;
    if (starts_numeric(tok[0])) break;
    if (tok.size() != 2)
      throw DemError(DemErrorKind::Header, k + 1,
                     line_tag(k + 1) + "header entry '" + std::string(tok[0]) +
                         "' needs exactly one value");
    const auto v = parse_number(tok[1]);
    if (!v)
      throw DemError(DemErrorKind::Header, k + 1,
                     line_tag(k + 1) + "header value '" + std::string(tok[1]) + "' is not a number");
    const std::string key = lower(tok[0]);
    if (header.count(key))
      throw DemError(DemErrorKind::Header, k + 1, line_tag(k + 1) + "duplicate key " + key);
    header[key] = {*v, k + 1};
  }

  const std::size_t first_data = k;
  auto require = [&](const char* key) -> HeaderValue {
    auto it = header.find(key);
    if (it == header.end())
      throw DemError(DemErrorKind::Header, first_data + 1,
                     line_tag(first_data + 1) + "header is missing " + key);
    return it->second;
  };
  auto count = [&](const char* key) {
    const HeaderValue hv = require(key);
    if (!(hv.value >= 1) || hv.value != std::floor(hv.value) || hv.value > 1e8)
      throw DemError(DemErrorKind::Header, hv.line,
                     line_tag(hv.line) + std::string(key) + " must be a positive integer");
    return Index(hv.value);
  };

  const Index ncols = count("ncols");
  const Index nrows = count("nrows");
  const HeaderValue cs = require("cellsize");
  if (!(cs.value > 0) || !std::isfinite(cs.value))
    throw DemError(DemErrorKind::Header, cs.line, line_tag(cs.line) + "cellsize must be > 0");

  auto origin = [&](const char* corner, const char* center) {
    const bool has_corner = header.count(corner) != 0;
    const bool has_center = header.count(center) != 0;
    if (has_corner == has_center)
      throw DemError(DemErrorKind::Header, first_data + 1,
                     line_tag(first_data + 1) + "header needs exactly one of " + corner + ", " +
                         center);
    return has_corner ? header[corner].value : header[center].value - 0.5 * cs.value;
  };
  const double x0 = origin("xllcorner", "xllcenter");
  const double y0 = origin("yllcorner", "yllcenter");
  std::optional<double> nodata;
  if (auto it = header.find("nodata_value"); it != header.end()) nodata = it->second.value;
  for (const auto& [key, hv] : header)
    if (key != "ncols" && key != "nrows" && key != "cellsize" && key != "xllcorner" &&
        key != "xllcenter" && key != "yllcorner" && key != "yllcenter" && key != "nodata_value")
      throw DemError(DemErrorKind::Header, hv.line, line_tag(hv.line) + "unknown key " + key);

  SimGrid grid = SimGrid::uniform(ncols, nrows, cs.value, cs.value, 0.0, opts.manning);
  grid.origin_x = x0;
  grid.origin_y = y0;
  grid.nodata = Mask::Constant(ncols, nrows, false);

  Index row = 0;
  for (k = first_data; k < lines.size(); ++k) {
    const auto tok = split_ws(lines[k]);
    if (tok.empty()) continue;
    if (row == nrows)
      throw DemError(DemErrorKind::RowCount, k + 1,
                     line_tag(k + 1) + "more than nrows = " + std::to_string(nrows) + " rows");
    if (Index(tok.size()) != ncols)
      throw DemError(DemErrorKind::RowCount, k + 1,
                     line_tag(k + 1) + "row has " + std::to_string(tok.size()) +
                         " values, expected ncols = " + std::to_string(ncols));
    const Index j = nrows - 1 - row;
    for (Index i = 0; i < ncols; ++i) {
      const auto v = parse_number(tok[std::size_t(i)]);
      if (!v || !std::isfinite(*v))
        throw DemError(DemErrorKind::Token, k + 1,
                       line_tag(k + 1) + "cannot parse '" + std::string(tok[std::size_t(i)]) +
                           "' in column " + std::to_string(i + 1));
      if (nodata && *v == *nodata) {
        grid.nodata(i, j) = true;
        grid.bed(i, j) = opts.nodata_elevation;
      } else {
        grid.bed(i, j) = *v;
      }
    }
    ++row;
  }
  if (row != nrows)
    throw DemError(DemErrorKind::RowCount, 0,
                   "end of file: found " + std::to_string(row) + " rows, expected nrows = " +
                       std::to_string(nrows));
  return grid;
}

SimGrid read_dem(const std::filesystem::path& path, const DemOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open DEM " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dem(buf.str(), opts);
}

std::string format_dem(const SimGrid& grid, double nodata_value) {
  if (grid.dx != grid.dy)
    throw Error(ErrorKind::Domain, "ESRI ASCII grids need square cells");
  std::string out;
  out += "ncols " + std::to_string(grid.nx) + "\n";
  out += "nrows " + std::to_string(grid.ny) + "\n";
  out += "xllcorner " + format_number(grid.origin_x) + "\n";
  out += "yllcorner " + format_number(grid.origin_y) + "\n";
  out += "cellsize " + format_number(grid.dx) + "\n";
  out += "NODATA_value " + format_number(nodata_value) + "\n";
  const bool flagged = grid.nodata.size() == grid.bed.size();
  for (Index j = grid.ny - 1; j >= 0; --j) {
    for (Index i = 0; i < grid.nx; ++i) {
      if (i > 0) out += ' ';
      out += format_number(flagged && grid.nodata(i, j) ? nodata_value : grid.bed(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_dem(const SimGrid& grid, const std::filesystem::path& path, double nodata_value) {
  const std::string text = format_dem(grid, nodata_value);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write DEM " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

// --- Dam --------------------------------------------------------------------

Centerline::Centerline(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.size() < 2)
    throw Error(ErrorKind::Validation, "centerline: needs at least two points");
  for (std::size_t k = 1; k < points_.size(); ++k)
    if (points_[k] == points_[k - 1])
      throw Error(ErrorKind::Validation,
                  "centerline: points " + std::to_string(k - 1) + " and " + std::to_string(k) +
                      " coincide");
}

Point Centerline::tangent_near(const Point& p) const {
  if (points_.size() < 2) throw Error(ErrorKind::Geometry, "centerline is empty");
  std::size_t best = 0;
  double best_d = distance_to_segment(p, points_[0], points_[1]);
  for (std::size_t k = 1; k + 1 < points_.size(); ++k) {
    const double d = distance_to_segment(p, points_[k], points_[k + 1]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return (points_[best + 1] - points_[best]).normalized();
}

Point SearchRegion::project(const Point& p) const {
  if (contains(p)) return p;
  const auto& v = polygon.vertices();
  Point best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Point& a = v[k];
    const Point& b = v[(k + 1) % v.size()];
    const Point d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    // Endpoints exactly, so axis-aligned edges clamp without rounding.
    const Point q = t == 0.0 ? a : t == 1.0 ? b : Point(a + t * d);
    const double dist = (p - q).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = q;
    }
  }
  return best;
}

Point dam_axis(const DamSpec& dam, const Centerline& centerline) {
  if (dam.axis) {
    const double n = dam.axis->norm();
    if (!(n > 0)) throw Error(ErrorKind::Geometry, "dam axis override has zero length");
    return *dam.axis / n;
  }
  const Point t = centerline.tangent_near(dam.center);
  return {-t.y(), t.x()};
}

std::vector<std::pair<Index, Index>> dam_footprint(const SimGrid& grid, const DamSpec& dam,
                                                   const Centerline& centerline) {
  if (!(dam.length > 0)) throw Error(ErrorKind::Validation, "dam: length must be > 0");
  if (!(dam.crest > 0)) throw Error(ErrorKind::Validation, "dam: crest must be > 0");
  const Point axis = dam_axis(dam, centerline);
  const Point a = dam.center - 0.5 * dam.length * axis;
  const Point b = dam.center + 0.5 * dam.length * axis;
  if (!grid.contains(a) || !grid.contains(b)) {
    std::ostringstream msg;
    msg << "dam at (" << dam.center.x() << ", " << dam.center.y() << ") extends outside the grid";
    throw Error(ErrorKind::Geometry, msg.str());
  }

  // Ties at exactly half a diagonal would thicken 45 degree dams to three cells.
  const double reach = 0.5 * std::hypot(grid.dx, grid.dy) * (1.0 - 1e-9);
  const auto home = grid.locate(dam.center);
  const auto lo = grid.locate(Point(std::min(a.x(), b.x()) - reach, std::min(a.y(), b.y()) - reach)
                                  .cwiseMax(Point(grid.origin_x, grid.origin_y)));
  const auto hi = grid.locate(
      Point(std::max(a.x(), b.x()) + reach, std::max(a.y(), b.y()) + reach)
          .cwiseMin(Point(grid.origin_x + grid.width(), grid.origin_y + grid.height())));

  std::vector<std::pair<double, std::pair<Index, Index>>> cells;
  for (Index j = lo->second; j <= hi->second; ++j)
    for (Index i = lo->first; i <= hi->first; ++i) {
      const Point c = grid.cell_center(i, j);
      if (distance_to_segment(c, a, b) < reach || (i == home->first && j == home->second))
        cells.push_back({(c - dam.center).dot(axis), {i, j}});
    }
  std::sort(cells.begin(), cells.end());
  std::vector<std::pair<Index, Index>> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.second);
  return out;
}

SimGrid rasterize_dam(const SimGrid& grid, const DamSpec& dam, const Centerline& centerline) {
  const auto cells = dam_footprint(grid, dam, centerline);
  double reference = 0.0;
  if (dam.reference_level) {
    reference = *dam.reference_level;
  } else {
    reference = -std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : cells) reference = std::max(reference, grid.bed(i, j));
  }
  const double top = reference + dam.crest;
  SimGrid out = grid;
  for (const auto& [i, j] : cells) out.bed(i, j) = std::max(out.bed(i, j), top);
  return out;
}

// --- Synthetic terrain ------------------------------------------------------

std::vector<std::string> ChannelBranchParams::validate() const {
  std::vector<std::string> out;
  const double W = cell * double(nx);
  const double H = cell * double(ny);
  if (!(cell > 0)) out.push_back("cell: must be > 0");
  if (nx < 3 || ny < 3) out.push_back("nx, ny: must be >= 3");
  if (!(slope >= 0)) out.push_back("slope: must be >= 0");
  if (!(branch_slope >= 0)) out.push_back("branch_slope: must be >= 0");
  if (!(channel_width > 0)) out.push_back("channel_width: must be > 0");
  if (!(channel_depth > 0)) out.push_back("channel_depth: must be > 0");
  if (!(branch_width > 0)) out.push_back("branch_width: must be > 0");
  if (branch_width >= channel_width) out.push_back("branch_width: must be narrower than the channel");
  if (!(sill_height > 0 && sill_height < channel_depth))
    out.push_back("sill_height: must lie in (0, channel_depth)");
  if (!(channel_y - 0.5 * channel_width > 0 && channel_y + 0.5 * channel_width < H))
    out.push_back("channel_y: channel must fit inside the domain");
  if (!(branch_x - 0.5 * branch_width > 0 && branch_x + 0.5 * branch_width < W))
    out.push_back("branch_x: branch must fit inside the domain");
  if (!(manning_channel > 0 && manning_channel <= 1)) out.push_back("manning_channel: must lie in (0, 1]");
  if (!(manning_floodplain > 0 && manning_floodplain <= 1))
    out.push_back("manning_floodplain: must lie in (0, 1]");
  if (!(source_length >= cell && source_length < branch_x - 0.5 * branch_width))
    out.push_back("source_length: must cover a cell and end before the branch");
  if (!(gauge_offset > 0 && channel_y + 0.5 * channel_width + gauge_offset < H))
    out.push_back("gauge_offset: gauge must lie inside the branch");
  if (!(region_upstream > 0 && region_downstream > 0)) out.push_back("region extents: must be > 0");
  return out;
}

namespace {

double snap(double v, double cell) { return std::round(v / cell) * cell; }

}  // namespace

SyntheticTerrain synth_channel_with_branch(const ChannelBranchParams& p) {
  if (auto errs = p.validate(); !errs.empty()) {
    std::string msg = "synthetic terrain:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw Error(ErrorKind::Validation, msg);
  }
  const double half = 0.5 * p.channel_width;
  const double bank_y = p.channel_y + half;
  const double W = p.cell * double(p.nx);
  auto floodplain = [&](double x) { return p.floodplain_level - p.slope * x; };

  SyntheticTerrain t;
  t.thalweg_at_mouth = floodplain(p.branch_x) - p.channel_depth;
  t.branch_sill = t.thalweg_at_mouth + p.sill_height;

  SimGrid& g = t.grid;
  g = SimGrid::uniform(p.nx, p.ny, p.cell, p.cell, 0.0, p.manning_floodplain);
  for (Index j = 0; j < p.ny; ++j)
    for (Index i = 0; i < p.nx; ++i) {
      const Point c = g.cell_center(i, j);
      double z = floodplain(c.x());
      bool wet_bed = false;
      const double r = std::abs(c.y() - p.channel_y) / half;
      if (r < 1.0) {
        z -= p.channel_depth * (1.0 - r * r);
        wet_bed = true;
      }
      if (std::abs(c.x() - p.branch_x) < 0.5 * p.branch_width && c.y() > p.channel_y) {
        const double zb = t.branch_sill - p.branch_slope * std::max(0.0, c.y() - bank_y);
        if (zb < z) {
          z = zb;
          wet_bed = true;
        }
      }
      g.bed(i, j) = z;
      if (wet_bed) g.manning(i, j) = p.manning_channel;
    }

  t.centerline = Centerline({{0.0, p.channel_y}, {W, p.channel_y}});

  const double bx0 = snap(p.branch_x - 0.5 * p.branch_width, p.cell) - p.cell;
  const double bx1 = snap(p.branch_x + 0.5 * p.branch_width, p.cell) + p.cell;
  const double gy = snap(bank_y + p.gauge_offset, p.cell);
  t.gauge = {{bx0, gy}, {bx1, gy}, Side::Left};  // northward flow counts positive

  t.source_region = Polygon::rectangle(0.0, p.channel_y - half, p.source_length, p.channel_y + half);
  t.search_region.polygon =
      Polygon::rectangle(p.branch_x - p.region_upstream, p.channel_y - 0.5 * half,
                         std::min(p.branch_x + p.region_downstream, W - p.cell),
                         p.channel_y + 0.5 * half);
  t.boundaries = {Boundary::Wall, Boundary::Waterfall, Boundary::Wall, Boundary::Waterfall};
  return t;
}

FlowState channel_normal_flow(const SyntheticTerrain& terrain, const ChannelBranchParams& p,
                              double discharge) {
  const SimGrid& g = terrain.grid;
  FlowState s = FlowState::dry(g.nx, g.ny);
  if (!(discharge >= 0)) throw Error(ErrorKind::Domain, "normal flow: discharge must be >= 0");
  if (discharge == 0.0) return s;
  if (!(p.slope > 0)) throw Error(ErrorKind::Domain, "normal flow: needs a positive slope");
  const double half = 0.5 * p.channel_width;
  const double sqrt_s = std::sqrt(p.slope);

  for (Index i = 0; i < g.nx; ++i) {
    std::vector<Index> rows;
    double lo = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < g.ny; ++j)
      if (std::abs(g.cell_center(i, j).y() - p.channel_y) < half) {
        rows.push_back(j);
        lo = std::min(lo, g.bed(i, j));
      }
    auto flow = [&](double level) {
      double q = 0.0;
      for (Index j : rows) {
        const double h = std::max(level - g.bed(i, j), 0.0);
        q += std::pow(h, 5.0 / 3.0) * sqrt_s / g.manning(i, j) * g.dy;
      }
      return q;
    };
    double hi = lo + 1.0;
    while (flow(hi) < discharge) hi = lo + 2.0 * (hi - lo);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (flow(mid) < discharge ? lo : hi) = mid;
    }
    const double level = 0.5 * (lo + hi);
    for (Index j : rows) {
      const double h = std::max(level - g.bed(i, j), 0.0);
      s.h(i, j) = h;
      s.hu(i, j) = std::pow(h, 5.0 / 3.0) * sqrt_s / g.manning(i, j);
    }
  }
  return s;
}

}  // namespace floodopt
