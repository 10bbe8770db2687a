#include "floodopt/config.hpp"

#include "floodopt/io.hpp"

#include <toml.hpp>

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace floodopt {

namespace {

using Errors = std::vector<std::string>;

// Typed access to one TOML table. Type errors and unknown keys go to `errors`
// so that everything wrong with a file is reported in one go.
class Section {
 public:
  Section(const toml::table* tbl, std::string prefix, Errors& errors)
      : tbl_(tbl), prefix_(std::move(prefix)), errors_(errors) {}
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  ~Section() {
    if (!tbl_) return;
    for (auto&& [k, v] : *tbl_)
      if (!used_.count(std::string(k.str())))
        errors_.push_back(at(v) + "unknown key '" + name(std::string(k.str())) + "'");
  }

  Section sub(const std::string& key) {
    const toml::node* n = get(key);
    if (n && !n->is_table()) {
      bad(*n, key, "a table");
      return Section(nullptr, name(key), errors_);
    }
    return Section(n ? n->as_table() : nullptr, name(key), errors_);
  }

  bool has(const std::string& key) const { return tbl_ && tbl_->get(key); }

  std::optional<double> number(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (n->is_floating_point()) return n->as_floating_point()->get();
    if (n->is_integer()) return double(n->as_integer()->get());
    bad(*n, key, "a number");
    return std::nullopt;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (n->is_integer()) return n->as_integer()->get();
    bad(*n, key, "an integer");
    return std::nullopt;
  }

  std::optional<bool> boolean(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (n->is_boolean()) return n->as_boolean()->get();
    bad(*n, key, "true or false");
    return std::nullopt;
  }

  std::optional<std::string> string(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (n->is_string()) return n->as_string()->get();
    bad(*n, key, "a string");
    return std::nullopt;
  }

  std::optional<Point> point(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (auto p = to_point(*n)) return p;
    bad(*n, key, "[x, y]");
    return std::nullopt;
  }

  std::optional<std::vector<Point>> points(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    const toml::array* a = n->as_array();
    std::vector<Point> out;
    if (a)
      for (const toml::node& e : *a) {
        auto p = to_point(e);
        if (!p) {
          a = nullptr;
          break;
        }
        out.push_back(*p);
      }
    if (!a) {
      bad(*n, key, "a list of [x, y] pairs");
      return std::nullopt;
    }
    return out;
  }

  template <typename E>
  std::optional<E> choice(const std::string& key,
                          const std::vector<std::pair<const char*, E>>& options) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (n->is_string())
      for (const auto& [s, e] : options)
        if (n->as_string()->get() == s) return e;
    std::string list;
    for (const auto& [s, e] : options) list += (list.empty() ? "" : ", ") + std::string(s);
    bad(*n, key, "one of " + list);
    return std::nullopt;
  }

  template <typename T, typename V>
  void set(T& field, const std::optional<V>& v) {
    if (v) field = T(*v);
  }

 private:
  const toml::node* get(const std::string& key) {
    used_.insert(key);
    return tbl_ ? tbl_->get(key) : nullptr;
  }

  static std::optional<Point> to_point(const toml::node& n) {
    const toml::array* a = n.as_array();
    if (!a || a->size() != 2) return std::nullopt;
    double xy[2];
    for (std::size_t k = 0; k < 2; ++k) {
      const toml::node& e = *a->get(k);
      if (e.is_floating_point()) xy[k] = e.as_floating_point()->get();
      else if (e.is_integer()) xy[k] = double(e.as_integer()->get());
      else return std::nullopt;
    }
    return Point(xy[0], xy[1]);
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  static std::string at(const toml::node& n) {
    return "line " + std::to_string(n.source().begin.line) + ": ";
  }

  void bad(const toml::node& n, const std::string& key, const std::string& expected) {
    errors_.push_back(at(n) + name(key) + ": expected " + expected);
  }

  const toml::table* tbl_;
  std::string prefix_;
  Errors& errors_;
  std::set<std::string> used_;
};

const std::vector<std::pair<const char*, Boundary>> kBoundaries{{"wall", Boundary::Wall},
                                                                {"waterfall", Boundary::Waterfall}};
const std::vector<std::pair<const char*, Limiter>> kLimiters{
    {"minmod", Limiter::Minmod}, {"van_leer", Limiter::VanLeer}, {"mc", Limiter::MonotonizedCentral}};
const std::vector<std::pair<const char*, Side>> kSides{{"left", Side::Left}, {"right", Side::Right}};
const std::vector<std::pair<const char*, DischargeMode>> kModes{
    {"face_flux", DischargeMode::FaceFlux}, {"cell_mean", DischargeMode::CellMean}};
const std::vector<std::pair<const char*, InitialKind>> kInitial{
    {"dry", InitialKind::Dry},
    {"still_water", InitialKind::StillWater},
    {"normal_flow", InitialKind::NormalFlow},
    {"snapshot", InitialKind::Snapshot}};

template <typename E>
const char* name_of(const std::vector<std::pair<const char*, E>>& options, E e) {
  for (const auto& [s, v] : options)
    if (v == e) return s;
  return "?";
}

constexpr const char* kSyntheticName = "channel_with_branch";

void read_channel(Section s, ChannelBranchParams& p) {
  s.set(p.cell, s.number("cell"));
  s.set(p.nx, s.integer("nx"));
  s.set(p.ny, s.integer("ny"));
  s.set(p.floodplain_level, s.number("floodplain_level"));
  s.set(p.slope, s.number("slope"));
  s.set(p.channel_y, s.number("channel_y"));
  s.set(p.channel_width, s.number("channel_width"));
  s.set(p.channel_depth, s.number("channel_depth"));
  s.set(p.branch_x, s.number("branch_x"));
  s.set(p.branch_width, s.number("branch_width"));
  s.set(p.sill_height, s.number("sill_height"));
  s.set(p.branch_slope, s.number("branch_slope"));
  s.set(p.manning_channel, s.number("manning_channel"));
  s.set(p.manning_floodplain, s.number("manning_floodplain"));
  s.set(p.source_length, s.number("source_length"));
  s.set(p.gauge_offset, s.number("gauge_offset"));
  s.set(p.region_upstream, s.number("region_upstream"));
  s.set(p.region_downstream, s.number("region_downstream"));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

RunConfig extract(const toml::table& root, const std::filesystem::path& base, Errors& errors) {
  RunConfig c;
  c.out_dir = resolve(base, "out");
  Section top(&root, "", errors);
  {
    Section s = top.sub("terrain");
    if (auto v = s.string("dem")) c.dem = resolve(base, *v);
    c.synthetic = s.string("synthetic");
    s.set(c.dem_options.manning, s.number("manning"));
    s.set(c.dem_options.nodata_elevation, s.number("nodata_elevation"));
    read_channel(s.sub("channel"), c.channel);
  }
  {
    Section s = top.sub("hydrograph");
    if (auto v = s.string("file")) c.hydrograph_file = resolve(base, *v);
    if (auto v = s.points("samples"))
      for (const Point& p : *v) c.hydrograph_samples.push_back({p.x(), p.y()});
    const auto qs = s.number("t_qs"), qe = s.number("t_qe");
    if (!qs) errors.push_back("hydrograph.t_qs: required");
    if (!qe) errors.push_back("hydrograph.t_qe: required");
    c.t_qs = qs.value_or(0.0);
    c.t_qe = qe.value_or(0.0);
  }
  {
    Section s = top.sub("source");
    if (auto v = s.points("polygon")) c.source_region = Polygon(*v);
    s.set(c.source_velocity, s.point("velocity"));
  }
  {
    Section s = top.sub("gauge");
    const auto a = s.point("a"), b = s.point("b");
    const auto side = s.choice("positive_side", kSides);
    if (a && b) c.gauge = GaugeSection{*a, *b, side.value_or(Side::Left)};
    else if (a || b || side) errors.push_back("gauge: a and b are both required");
    s.set(c.discharge_mode, s.choice("mode", kModes));
  }
  {
    Section s = top.sub("search");
    if (auto v = s.points("region")) c.search_region = Polygon(*v);
    c.centerline = s.points("centerline");
  }
  {
    Section s = top.sub("initial");
    c.initial = s.choice("kind", kInitial);
    s.set(c.initial_level, s.number("level"));
    if (auto v = s.string("snapshot")) c.initial_snapshot = resolve(base, *v);
    if (c.initial == InitialKind::StillWater && !s.has("level"))
      errors.push_back("initial.level: required for still_water");
  }
  {
    Section s = top.sub("physics");
    auto& p = c.solver.physics;
    s.set(p.g, s.number("g"));
    s.set(p.omega_e, s.number("omega_e"));
    s.set(p.latitude_deg, s.number("latitude_deg"));
    s.set(p.cfl, s.number("cfl"));
    s.set(p.h_dry, s.number("h_dry"));
  }
  {
    Section s = top.sub("solver");
    s.set(c.solver.order, s.integer("order"));
    s.set(c.solver.limiter, s.choice("limiter", kLimiters));
    s.set(c.solver.max_dt, s.number("max_dt"));
    s.set(c.solver.friction, s.boolean("friction"));
    s.set(c.solver.coriolis, s.boolean("coriolis"));
  }
  if (top.has("boundaries")) {
    Section s = top.sub("boundaries");
    Boundaries b;
    s.set(b.west, s.choice("west", kBoundaries));
    s.set(b.east, s.choice("east", kBoundaries));
    s.set(b.south, s.choice("south", kBoundaries));
    s.set(b.north, s.choice("north", kBoundaries));
    c.boundaries = b;
  }
  {
    Section s = top.sub("dam");
    s.set(c.dam.length, s.number("length"));
    s.set(c.dam.crest, s.number("crest"));
    c.dam.reference_level = s.number("reference_level");
    c.dam.axis = s.point("axis");
    c.dam_center = s.point("center");
  }
  {
    Section s = top.sub("optimizer");
    s.set(c.starts, s.points("starts"));
    const auto dx = s.number("probe_dx"), dy = s.number("probe_dy");
    if (dx || dy) {
      if (dx && dy) c.probe = ProbeRule{*dx, *dy};
      else errors.push_back("optimizer: probe_dx and probe_dy go together");
    }
    const char* stop_keys[] = {"grad_tol", "k_max", "initial_step", "shrink", "min_step"};
    int given = 0;
    for (const char* k : stop_keys) given += s.has(k);
    if (given) {
      StoppingRule r;
      s.set(r.grad_tol, s.number("grad_tol"));
      s.set(r.k_max, s.integer("k_max"));
      s.set(r.initial_step, s.number("initial_step"));
      s.set(r.shrink, s.number("shrink"));
      s.set(r.min_step, s.number("min_step"));
      if (given < 5) errors.push_back("optimizer: give all of grad_tol, k_max, initial_step, "
                                      "shrink, min_step or none");
      c.stop = r;
    }
  }
  {
    Section s = top.sub("map");
    c.map_spacing = s.number("spacing");
    c.map_anchor = s.point("anchor");
  }
  {
    Section s = top.sub("run");
    c.t_end = s.number("t_end");
    s.set(c.snapshot_interval, s.number("snapshot_interval"));
    if (auto v = s.string("out_dir")) c.out_dir = resolve(base, *v);
  }
  return c;
}

void check_files(const RunConfig& c) {
  Errors missing;
  auto need = [&](const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::is_regular_file(*p))
      missing.push_back(std::string(what) + " file not found: " + p->string());
  };
  need(c.dem, "terrain.dem");
  need(c.hydrograph_file, "hydrograph");
  need(c.initial_snapshot, "initial snapshot");
  if (missing.empty()) return;
  std::string msg = missing.front();
  for (std::size_t k = 1; k < missing.size(); ++k) msg += "\n" + missing[k];
  throw Error(ErrorKind::Io, msg);
}

void append(Errors& out, const Errors& more, const std::string& prefix = "") {
  for (const auto& e : more) out.push_back(prefix + e);
}

// Checks that need no grid. Fills hydrograph samples from the file.
void check_values(RunConfig& c, Errors& errors) {
  if (c.dem.has_value() == c.synthetic.has_value())
    errors.push_back("terrain: give exactly one of dem or synthetic");
  if (c.synthetic && *c.synthetic != kSyntheticName)
    errors.push_back("terrain.synthetic: unknown generator '" + *c.synthetic + "' (known: " +
                     kSyntheticName + ")");
  if (c.synthetic) append(errors, c.channel.validate(), "terrain.channel: ");
  if (c.dem) {
    if (!(c.dem_options.manning > 0)) errors.push_back("terrain.manning: must be > 0");
    for (auto [have, what] : {std::pair{c.source_region.has_value(), "source.polygon"},
                              std::pair{c.gauge.has_value(), "gauge.a / gauge.b"},
                              std::pair{c.search_region.has_value(), "search.region"},
                              std::pair{c.centerline.has_value(), "search.centerline"}})
      if (!have) errors.push_back(std::string(what) + ": required with a DEM terrain");
  }

  if (c.hydrograph_file && !c.hydrograph_samples.empty())
    errors.push_back("hydrograph: give exactly one of file or samples");
  else if (c.hydrograph_file) {
    try {
      c.hydrograph_samples = read_hydrograph_csv(*c.hydrograph_file);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  } else if (c.hydrograph_samples.empty()) {
    errors.push_back("hydrograph: give exactly one of file or samples");
  }
  std::optional<Hydrograph> hg;
  if (!c.hydrograph_samples.empty()) {
    try {
      hg = Hydrograph(c.hydrograph_samples, c.t_qs, c.t_qe);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }

  if (c.source_region) append(errors, validate_polygon(*c.source_region), "source.polygon: ");
  if (!c.source_velocity.allFinite()) errors.push_back("source.velocity: must be finite");
  if (c.gauge && c.gauge->a == c.gauge->b) errors.push_back("gauge: a and b coincide");
  if (c.search_region) append(errors, validate_polygon(*c.search_region), "search.region: ");
  if (c.centerline && c.centerline->size() < 2)
    errors.push_back("search.centerline: needs at least two points");

  if (c.initial == InitialKind::NormalFlow && !c.synthetic)
    errors.push_back("initial.kind: normal_flow needs the synthetic terrain");
  if (c.initial == InitialKind::Snapshot && !c.initial_snapshot)
    errors.push_back("initial.snapshot: required for kind = snapshot");

  append(errors, c.solver.validate());
  if (!(c.dam.length > 0)) errors.push_back("dam.length: must be > 0");
  if (!(c.dam.crest > 0)) errors.push_back("dam.crest: must be > 0");
  if (c.dam.axis && !(c.dam.axis->norm() > 0)) errors.push_back("dam.axis: must be non-zero");
  if (c.probe) append(errors, c.probe->validate());
  if (c.stop) append(errors, c.stop->validate());
  if (c.map_spacing && !(*c.map_spacing > 0)) errors.push_back("map.spacing: must be > 0");
  if (!(c.snapshot_interval >= 0))
    errors.push_back("run.snapshot_interval: must be >= 0 (0 disables snapshots)");
  if (c.t_end && hg && !(*c.t_end > hg->t_begin() && *c.t_end <= hg->t_end()))
    errors.push_back("run.t_end: must lie in (" + format_number(hg->t_begin()) + ", " +
                     format_number(hg->t_end()) + "]");
}

// Spells out the defaults that depend on the terrain.
void normalize(RunConfig& c, Errors& errors) {
  SimGrid grid;
  if (c.synthetic) {
    const SyntheticTerrain t = synth_channel_with_branch(c.channel);
    grid = t.grid;
    if (!c.source_region) c.source_region = t.source_region;
    if (!c.gauge) c.gauge = t.gauge;
    if (!c.search_region) c.search_region = t.search_region.polygon;
    if (!c.centerline) c.centerline = t.centerline.points();
    if (!c.boundaries) c.boundaries = t.boundaries;
    if (!c.initial) c.initial = InitialKind::NormalFlow;
  } else {
    grid = read_dem(*c.dem, c.dem_options);
    if (!c.boundaries) c.boundaries = Boundaries{};
    if (!c.initial) c.initial = InitialKind::Dry;
  }
  if (!c.probe) c.probe = ProbeRule::for_grid(grid);
  if (!c.stop) c.stop = StoppingRule::for_grid(grid);
  if (!c.map_spacing) c.map_spacing = 2.0 * grid.dx;
  if (!c.t_end) c.t_end = c.hydrograph_samples.back().t;
  const SearchRegion region{*c.search_region};
  if (c.starts.empty()) {
    const Point mid = region.polygon.bounds().center();
    if (region.contains(mid)) c.starts.push_back(mid);
    else errors.push_back("optimizer.starts: region centre is outside the region; give starts");
  }
  for (const Point& p : c.starts)
    if (!region.contains(p))
      errors.push_back("optimizer.starts: (" + format_number(p.x()) + ", " + format_number(p.y()) +
                       ") is outside the search region");
  if (c.dam_center && !region.contains(*c.dam_center))
    errors.push_back("dam.center: outside the search region");
}

void raise(const Errors& errors, const std::string& name) {
  if (errors.empty()) return;
  std::string msg = name + ": " + std::to_string(errors.size()) + " problem(s)";
  for (const auto& e : errors) msg += "\n  " + e;
  throw Error(ErrorKind::Config, msg);
}

// --- dump ---

std::string num(double v) {
  std::string s = format_number(v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

std::string str(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string pt(const Point& p) { return "[" + num(p.x()) + ", " + num(p.y()) + "]"; }

std::string pts(const std::vector<Point>& v) {
  std::string out = "[";
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + pt(v[k]);
  return out + "]";
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::string& name) {
  toml::table root;
  try {
    root = toml::parse(text, name);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw Error(ErrorKind::Config, name + ":" + std::to_string(b.line) + ":" +
                                       std::to_string(b.column) + ": " +
                                       std::string(e.description()));
  }
  const std::filesystem::path base = std::filesystem::absolute(base_dir).lexically_normal();
  Errors errors;
  RunConfig c = extract(root, base, errors);
  check_files(c);
  check_values(c, errors);
  raise(errors, name);
  normalize(c, errors);
  raise(errors, name);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text, path.parent_path(), path.string());
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[terrain]\n";
  if (c.dem) {
    o << "dem = " << str(c.dem->string()) << "\n";
    o << "manning = " << num(c.dem_options.manning) << "\n";
    o << "nodata_elevation = " << num(c.dem_options.nodata_elevation) << "\n";
  }
  if (c.synthetic) {
    const auto& p = c.channel;
    o << "synthetic = " << str(*c.synthetic) << "\n\n[terrain.channel]\n";
    o << "cell = " << num(p.cell) << "\nnx = " << p.nx << "\nny = " << p.ny
      << "\nfloodplain_level = " << num(p.floodplain_level) << "\nslope = " << num(p.slope)
      << "\nchannel_y = " << num(p.channel_y) << "\nchannel_width = " << num(p.channel_width)
      << "\nchannel_depth = " << num(p.channel_depth) << "\nbranch_x = " << num(p.branch_x)
      << "\nbranch_width = " << num(p.branch_width) << "\nsill_height = " << num(p.sill_height)
      << "\nbranch_slope = " << num(p.branch_slope)
      << "\nmanning_channel = " << num(p.manning_channel)
      << "\nmanning_floodplain = " << num(p.manning_floodplain)
      << "\nsource_length = " << num(p.source_length) << "\ngauge_offset = " << num(p.gauge_offset)
      << "\nregion_upstream = " << num(p.region_upstream)
      << "\nregion_downstream = " << num(p.region_downstream) << "\n";
  }

  o << "\n[hydrograph]\n";
  if (c.hydrograph_file) {
    o << "file = " << str(c.hydrograph_file->string()) << "\n";
  } else {
    std::vector<Point> s;
    for (const auto& h : c.hydrograph_samples) s.emplace_back(h.t, h.q);
    o << "samples = " << pts(s) << "\n";
  }
  o << "t_qs = " << num(c.t_qs) << "\nt_qe = " << num(c.t_qe) << "\n";

  o << "\n[source]\npolygon = " << pts(c.source_region->vertices())
    << "\nvelocity = " << pt(c.source_velocity) << "\n";
  o << "\n[gauge]\na = " << pt(c.gauge->a) << "\nb = " << pt(c.gauge->b)
    << "\npositive_side = " << str(name_of(kSides, c.gauge->positive_side))
    << "\nmode = " << str(name_of(kModes, c.discharge_mode)) << "\n";
  o << "\n[search]\nregion = " << pts(c.search_region->vertices())
    << "\ncenterline = " << pts(*c.centerline) << "\n";

  o << "\n[initial]\nkind = " << str(name_of(kInitial, *c.initial)) << "\n";
  if (c.initial == InitialKind::StillWater) o << "level = " << num(c.initial_level) << "\n";
  if (c.initial_snapshot) o << "snapshot = " << str(c.initial_snapshot->string()) << "\n";

  const auto& ph = c.solver.physics;
  o << "\n[physics]\ng = " << num(ph.g) << "\nomega_e = " << num(ph.omega_e)
    << "\nlatitude_deg = " << num(ph.latitude_deg) << "\ncfl = " << num(ph.cfl)
    << "\nh_dry = " << num(ph.h_dry) << "\n";
  o << "\n[solver]\norder = " << c.solver.order
    << "\nlimiter = " << str(name_of(kLimiters, c.solver.limiter))
    << "\nmax_dt = " << num(c.solver.max_dt)
    << "\nfriction = " << (c.solver.friction ? "true" : "false")
    << "\ncoriolis = " << (c.solver.coriolis ? "true" : "false") << "\n";
  const Boundaries& b = *c.boundaries;
  o << "\n[boundaries]\nwest = " << str(name_of(kBoundaries, b.west))
    << "\neast = " << str(name_of(kBoundaries, b.east))
    << "\nsouth = " << str(name_of(kBoundaries, b.south))
    << "\nnorth = " << str(name_of(kBoundaries, b.north)) << "\n";

  o << "\n[dam]\nlength = " << num(c.dam.length) << "\ncrest = " << num(c.dam.crest) << "\n";
  if (c.dam.reference_level) o << "reference_level = " << num(*c.dam.reference_level) << "\n";
  if (c.dam.axis) o << "axis = " << pt(*c.dam.axis) << "\n";
  if (c.dam_center) o << "center = " << pt(*c.dam_center) << "\n";

  o << "\n[optimizer]\nstarts = " << pts(c.starts) << "\nprobe_dx = " << num(c.probe->delta_x)
    << "\nprobe_dy = " << num(c.probe->delta_y) << "\ngrad_tol = " << num(c.stop->grad_tol)
    << "\nk_max = " << c.stop->k_max << "\ninitial_step = " << num(c.stop->initial_step)
    << "\nshrink = " << num(c.stop->shrink) << "\nmin_step = " << num(c.stop->min_step) << "\n";
  o << "\n[map]\nspacing = " << num(*c.map_spacing) << "\n";
  if (c.map_anchor) o << "anchor = " << pt(*c.map_anchor) << "\n";

  o << "\n[run]\nt_end = " << num(*c.t_end) << "\nsnapshot_interval = " << num(c.snapshot_interval)
    << "\nout_dir = " << str(c.out_dir.string()) << "\n";
  return o.str();
}

Scenario build_scenario(const RunConfig& c) {
  Scenario sc;
  FloodProblem& p = sc.problem;
  std::optional<SyntheticTerrain> synth;
  if (c.synthetic) {
    synth = synth_channel_with_branch(c.channel);
    p.grid = synth->grid;
  } else {
    p.grid = read_dem(*c.dem, c.dem_options);
  }
  p.centerline = Centerline(*c.centerline);
  p.region = SearchRegion{*c.search_region};
  p.gauge = *c.gauge;
  p.source = source_from_polygon(p.grid, *c.source_region, c.source_velocity);
  p.hydrograph = Hydrograph(c.hydrograph_samples, c.t_qs, c.t_qe);
  p.solver = c.solver;
  p.solver.boundaries = *c.boundaries;
  p.dam = c.dam;
  p.mode = c.discharge_mode;

  const double t0 = p.hydrograph.t_begin();
  switch (*c.initial) {
    case InitialKind::Dry: p.initial = FlowState::dry(p.grid.nx, p.grid.ny, t0); break;
    case InitialKind::StillWater:
      p.initial = FlowState::still_water(p.grid, c.initial_level, t0);
      break;
    case InitialKind::NormalFlow:
      p.initial = channel_normal_flow(*synth, c.channel, p.hydrograph.at(t0));
      p.initial.t = t0;
      break;
    case InitialKind::Snapshot:
      p.initial = read_snapshot(*c.initial_snapshot, p.grid);
      if (p.initial.t != t0)
        throw Error(ErrorKind::Config, "initial snapshot time " + format_number(p.initial.t) +
                                           " differs from the hydrograph start " + format_number(t0));
      break;
  }

  Errors errors = p.validate();
  raise(errors, "scenario");
  rasterize_gauge(p.grid, p.gauge);  // geometry errors surface before any run
  if (c.dam_center) {
    DamSpec d = c.dam;
    d.center = *c.dam_center;
    dam_footprint(p.grid, d, p.centerline);
  }

  sc.dam_center = c.dam_center;
  sc.t_end = *c.t_end;
  sc.snapshot_interval = c.snapshot_interval;
  sc.starts = c.starts;
  sc.probe = *c.probe;
  sc.stop = *c.stop;
  sc.map_spacing = *c.map_spacing;
  sc.map_anchor = c.map_anchor;
  sc.out_dir = c.out_dir;
  return sc;
}

}  // namespace floodopt
