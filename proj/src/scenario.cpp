#include "buckrom/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    auto where = [&] {
      std::ostringstream os;
      os << origin << ":" << line << ": ";
      return os.str();
    };
    if (s.front() == '[') {
      if (s.back() != ']') config_error(where() + "unterminated section header");
      section = lower(trim(s.substr(1, s.size() - 2)));
      if (section.empty()) config_error(where() + "empty section name");
      doc.sections_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) config_error(where() + "expected 'key = value'");
    if (section.empty()) config_error(where() + "key outside of any [section]");
    const std::string key = lower(trim(s.substr(0, eq)));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) config_error(where() + "missing key");
    auto& sec = doc.sections_[section];
    if (sec.count(key)) {
      std::ostringstream os;
      os << where() << "duplicate key '" << key << "' in [" << section << "] (first on line "
         << sec[key].line << ")";
      config_error(os.str());
    }
    sec[key] = Entry{value, line, false};
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.string());
}

const ConfigDocument::Entry* ConfigDocument::find(const std::string& section,
                                                  const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  k->second.used = true;
  return &k->second;
}

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

void ConfigDocument::fail(const std::string& section, const std::string& key, const Entry* e,
                          const std::string& why) const {
  std::ostringstream os;
  os << origin_;
  if (e) os << ":" << e->line;
  os << ": [" << section << "] " << key << ": " << why;
  config_error(os.str());
}

std::string ConfigDocument::get_string(const std::string& section, const std::string& key,
                                       std::optional<std::string> fallback) const {
  const Entry* e = find(section, key);
  if (!e) {
    if (fallback) return *fallback;
    fail(section, key, nullptr, "required key is missing");
  }
  return e->value;
}

double ConfigDocument::get_double(const std::string& section, const std::string& key,
                                  std::optional<double> fallback) const {
  const Entry* e = find(section, key);
  if (!e) {
    if (fallback) return *fallback;
    fail(section, key, nullptr, "required key is missing");
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size() || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(section, key, e, "expected a finite number, got '" + e->value + "'");
  }
}

int ConfigDocument::get_int(const std::string& section, const std::string& key,
                            std::optional<int> fallback) const {
  const Entry* e = find(section, key);
  if (!e) {
    if (fallback) return *fallback;
    fail(section, key, nullptr, "required key is missing");
  }
  try {
    std::size_t pos = 0;
    const long v = std::stol(e->value, &pos);
    if (pos != e->value.size() || v < -2147483647L || v > 2147483647L) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    fail(section, key, e, "expected an integer, got '" + e->value + "'");
  }
}

bool ConfigDocument::get_bool(const std::string& section, const std::string& key,
                              std::optional<bool> fallback) const {
  const Entry* e = find(section, key);
  if (!e) {
    if (fallback) return *fallback;
    fail(section, key, nullptr, "required key is missing");
  }
  const std::string v = lower(e->value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(section, key, e, "expected true/false, got '" + e->value + "'");
}

std::vector<double> ConfigDocument::get_doubles(const std::string& section, const std::string& key,
                                                std::optional<std::vector<double>> fallback) const {
  const Entry* e = find(section, key);
  if (!e) {
    if (fallback) return *fallback;
    fail(section, key, nullptr, "required key is missing");
  }
  std::vector<double> out;
  std::string item;
  std::istringstream in(e->value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size() || !std::isfinite(v)) throw std::invalid_argument("");
      out.push_back(v);
    } catch (const std::exception&) {
      fail(section, key, e, "expected a comma-separated list of numbers, got '" + e->value + "'");
    }
  }
  return out;
}

void ConfigDocument::reject_unused() const {
  for (const auto& [sname, sec] : sections_) {
    for (const auto& [key, e] : sec) {
      if (!e.used) fail(sname, key, &e, "unknown key");
    }
  }
}

const char* geometry_kind_name(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::kBeam2d: return "beam2d";
    case GeometryKind::kBeam3d: return "beam3d";
    case GeometryKind::kTube: return "tube";
  }
  return "?";
}

namespace {

template <class T>
T pick(const ConfigDocument& doc, const std::string& section, const std::string& key,
       const std::vector<std::pair<std::string, T>>& options, T fallback) {
  if (!doc.has(section, key)) return fallback;
  const std::string v = lower(doc.get_string(section, key));
  for (const auto& [name, value] : options) {
    if (v == name) return value;
  }
  std::string allowed;
  for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
  config_error(doc.origin() + ": [" + section + "] " + key + ": '" + v + "' is not one of " +
               allowed);
}

std::optional<std::pair<double, double>> range(const ConfigDocument& doc, const std::string& section,
                                               const std::string& key) {
  if (!doc.has(section, key)) return std::nullopt;
  const auto v = doc.get_doubles(section, key);
  if (v.size() != 2) config_error(doc.origin() + ": [" + section + "] " + key + ": expected 'min, max'");
  return std::make_pair(v[0], v[1]);
}

}  // namespace

Scenario parse_scenario(const ConfigDocument& doc) {
  Scenario s;
  s.name = doc.get_string("scenario", "name", std::string("unnamed"));
  s.description = doc.get_string("scenario", "description", std::string());

  auto& g = s.geometry;
  g.kind = pick<GeometryKind>(doc, "geometry", "kind",
                              {{"beam2d", GeometryKind::kBeam2d},
                               {"beam3d", GeometryKind::kBeam3d},
                               {"tube", GeometryKind::kTube}},
                              GeometryKind::kBeam2d);
  const bool tube = g.kind == GeometryKind::kTube;
  g.length = doc.get_double("geometry", "length", tube ? 2.0 : 1.0);
  if (tube) {
    g.r_inner = doc.get_double("geometry", "r_inner", g.r_inner);
    g.r_outer = doc.get_double("geometry", "r_outer", g.r_outer);
    g.n_circ = doc.get_int("geometry", "n_circ", g.n_circ);
    g.n_rad = doc.get_int("geometry", "n_rad", g.n_rad);
    g.n_axial = doc.get_int("geometry", "n_axial", g.n_axial);
  } else {
    g.height = doc.get_double("geometry", "height", g.height);
    g.nx = doc.get_int("geometry", "nx", g.nx);
    g.ny = doc.get_int("geometry", "ny", g.ny);
    if (g.kind == GeometryKind::kBeam3d) {
      g.depth = doc.get_double("geometry", "depth", g.depth);
      g.nz = doc.get_int("geometry", "nz", g.nz);
    }
  }

  s.material = pick<MaterialKind>(doc, "material", "model",
                                  {{"svk", MaterialKind::kSvk},
                                   {"nh", MaterialKind::kNeoHookean},
                                   {"neo-hookean", MaterialKind::kNeoHookean}},
                                  MaterialKind::kSvk);
  s.young = doc.get_double("material", "young", s.young);
  s.poisson = doc.get_double("material", "poisson", s.poisson);
  s.young_range = range(doc, "material", "young_range");
  s.poisson_range = range(doc, "material", "poisson_range");

  s.loading.compression = pick<CompressionKind>(doc, "loading", "compression",
                                                {{"dirichlet", CompressionKind::kDirichlet},
                                                 {"neumann", CompressionKind::kNeumann}},
                                                CompressionKind::kDirichlet);
  s.loading.clamp_loaded_end = doc.get_bool("loading", "clamp_loaded_end", true);
  const auto b = doc.get_doubles("loading", "body_force", std::vector<double>{});
  if (b.size() > 3) config_error(doc.origin() + ": [loading] body_force: at most 3 components");
  for (std::size_t k = 0; k < b.size(); ++k) s.loading.body_force[k] = b[k];

  s.mu_min = doc.get_double("parameters", "mu_min", s.mu_min);
  s.mu_max = doc.get_double("parameters", "mu_max", s.mu_max);
  s.geometric = pick<GeometricMapKind>(doc, "parameters", "geometric",
                                       {{"none", GeometricMapKind::kNone},
                                        {"beam2d_semilength", GeometricMapKind::kBeam2dSemilength},
                                        {"tube_semilength", GeometricMapKind::kTubeSemilength}},
                                       GeometricMapKind::kNone);
  s.mu_g_min = doc.get_double("parameters", "mu_g_min", 0.0);
  s.mu_g_max = doc.get_double("parameters", "mu_g_max", s.mu_g_min);
  s.geometry_split = doc.get_double("parameters", "geometry_split", -1.0);
  s.geometry_reference_extent = doc.get_double("parameters", "geometry_reference_extent", -1.0);

  s.n_train = doc.get_int("offline", "n_train", s.n_train);
  s.train_geometry_count = doc.get_int("offline", "geometry_count", s.train_geometry_count);
  s.pod_tolerance = doc.get_double("offline", "pod_tolerance", s.pod_tolerance);
  s.tangent_snapshots = doc.get_bool("offline", "deim_tangent_snapshots", s.tangent_snapshots);

  auto& o = s.online;
  o.count = doc.get_int("online", "count", o.count);
  o.geometry_count = doc.get_int("online", "geometry_count", o.geometry_count);
  o.random_pairs = doc.get_int("online", "random_pairs", o.random_pairs);
  o.seed = static_cast<std::uint64_t>(doc.get_int("online", "seed", static_cast<int>(o.seed)));
  o.deim = doc.get_bool("online", "deim", o.deim);
  o.deim_tolerance = doc.get_double("online", "deim_tolerance", o.deim_tolerance);
  o.deim_modes = doc.get_int("online", "deim_modes", o.deim_modes);
  o.compare_full = doc.get_bool("online", "compare_full", o.compare_full);

  s.functional = pick<FunctionalKind>(doc, "output", "functional",
                                      {{"inf_norm_y", FunctionalKind::kInfNormY},
                                       {"inf_norm_z", FunctionalKind::kInfNormZ},
                                       {"sum_inf_xy", FunctionalKind::kSumInfXY}},
                                      FunctionalKind::kInfNormY);
  s.threshold = doc.get_double("output", "threshold", s.threshold);
  s.dump_states = doc.get_bool("output", "dump_states", s.dump_states);
  s.reference_train = doc.get_int("scenario", "reference_train", 0);
  s.reference_online = doc.get_int("scenario", "reference_online", 0);

  s.seed_enabled = doc.get_bool("seeding", "enabled", s.seed_enabled);
  s.seed_shape = pick<SeedShape>(doc, "seeding", "shape",
                                 {{"sine", SeedShape::kSine},
                                  {"clamped", SeedShape::kClamped},
                                  {"cantilever", SeedShape::kCantilever}},
                                 s.loading.compression == CompressionKind::kNeumann
                                     ? SeedShape::kCantilever
                                     : SeedShape::kClamped);
  s.seed_axis = doc.get_int("seeding", "axis", s.seed_axis);
  s.seed_amplitude = doc.get_double("seeding", "amplitude", s.seed_amplitude);
  s.seed_sign = doc.get_int("seeding", "sign", s.seed_sign);

  auto& n = s.newton;
  n.abs_tol = doc.get_double("newton", "abs_tol", n.abs_tol);
  n.rel_tol = doc.get_double("newton", "rel_tol", n.rel_tol);
  n.max_iter = doc.get_int("newton", "max_iter", n.max_iter);
  n.divergence_factor = doc.get_double("newton", "divergence_factor", n.divergence_factor);
  s.max_halvings = doc.get_int("newton", "max_halvings", s.max_halvings);

  doc.reject_unused();
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(ConfigDocument::load(path));
}

void validate_scenario(const Scenario& s) {
  auto bad = [&](const std::string& msg) { config_error("scenario '" + s.name + "': " + msg); };
  const auto& g = s.geometry;
  if (!(g.length > 0.0)) bad("length must be positive");
  if (g.kind == GeometryKind::kTube) {
    if (!(g.r_inner > 0.0 && g.r_outer > g.r_inner)) bad("tube radii must satisfy 0 < r_inner < r_outer");
    if (g.n_circ < 8 || g.n_rad < 1 || g.n_axial < 1) bad("tube resolution too small");
  } else {
    if (!(g.height > 0.0)) bad("height must be positive");
    if (g.nx < 1 || g.ny < 1) bad("resolution must be positive");
    if (g.kind == GeometryKind::kBeam3d && (!(g.depth > 0.0) || g.nz < 1)) {
      bad("depth and nz must be positive");
    }
  }
  if (!(s.young > 0.0)) bad("young must be positive");
  if (!(s.poisson > -1.0 && s.poisson < 0.5)) bad("poisson must lie in (-1, 0.5)");
  if (s.young_range && !(s.young_range->first > 0.0 && s.young_range->second >= s.young_range->first)) {
    bad("young_range must be a non-empty positive interval");
  }
  if (s.poisson_range && !(s.poisson_range->first > -1.0 && s.poisson_range->second < 0.5 &&
                           s.poisson_range->second >= s.poisson_range->first)) {
    bad("poisson_range must be a non-empty interval inside (-1, 0.5)");
  }
  if (s.young_range.has_value() != s.poisson_range.has_value()) {
    bad("young_range and poisson_range must be given together");
  }
  if (!(s.mu_max > s.mu_min)) bad("the mu range is empty (mu_max must exceed mu_min)");
  if (s.geometric != GeometricMapKind::kNone) {
    if ((s.geometric == GeometricMapKind::kTubeSemilength) != (g.kind == GeometryKind::kTube)) {
      bad("geometric map does not match the geometry kind");
    }
    if (g.kind == GeometryKind::kBeam3d) bad("no geometric map for the 3-D beam");
    if (!(s.mu_g_min > 0.0 && s.mu_g_max >= s.mu_g_min)) bad("mu_g range must be positive and non-empty");
    if (s.train_geometry_count < 1) bad("offline geometry_count must be >= 1");
  }
  if (s.n_train < 2) bad("n_train must be at least 2");
  if (s.online.count < 2) bad("online count must be at least 2");
  if (s.online.geometry_count < 0 || s.online.random_pairs < 0) bad("online counts must be non-negative");
  if (!(s.pod_tolerance >= 0.0)) bad("pod_tolerance must be non-negative");
  if (s.online.deim && s.online.deim_modes <= 0 && !(s.online.deim_tolerance > 0.0)) {
    bad("DEIM needs deim_modes > 0 or deim_tolerance > 0");
  }
  const int d = s.dim();
  if (s.functional == FunctionalKind::kInfNormZ && d < 3) {
    throw Error(ErrorCode::kInvalidFunctional, "inf_norm_z needs a 3-D geometry");
  }
  if (!(s.threshold > 0.0)) bad("threshold must be positive");
  if (s.seed_enabled) {
    const int axial = g.kind == GeometryKind::kTube ? 2 : 0;
    if (s.seed_axis < 0 || s.seed_axis >= d || s.seed_axis == axial) bad("seed axis must be transverse");
    if (s.seed_sign != 1 && s.seed_sign != -1) bad("seed sign must be +1 or -1");
    if (s.seed_amplitude < 0.0) bad("seed amplitude must be non-negative");
  }
  if (!(s.newton.abs_tol > 0.0) || !(s.newton.rel_tol > 0.0) || s.newton.max_iter < 1) {
    bad("invalid Newton settings");
  }
  if (s.max_halvings < 0) bad("max_halvings must be non-negative");
}

namespace {

int axial_axis(const Scenario& s) { return s.geometry.kind == GeometryKind::kTube ? 2 : 0; }

double resolved_split(const Scenario& s) {
  return s.geometry_split > 0.0 ? s.geometry_split : 0.5 * s.geometry.length;
}

double resolved_extent(const Scenario& s) {
  if (s.geometry_reference_extent > 0.0) return s.geometry_reference_extent;
  return s.geometry.length - resolved_split(s);
}

}  // namespace

std::shared_ptr<Mesh> build_mesh(const Scenario& s) {
  const auto& g = s.geometry;
  const BoundaryTag right = s.loading.compression == CompressionKind::kNeumann
                                ? BoundaryTag::kNeumannRight
                                : BoundaryTag::kDirichletRight;
  std::shared_ptr<Mesh> mesh;
  switch (g.kind) {
    case GeometryKind::kBeam2d:
      mesh = std::make_shared<Mesh>(build_beam_2d(g.length, g.height, g.nx, g.ny, right));
      break;
    case GeometryKind::kBeam3d:
      mesh = std::make_shared<Mesh>(build_beam_3d(g.length, g.height, g.depth, g.nx, g.ny, g.nz, right));
      break;
    case GeometryKind::kTube:
      mesh = std::make_shared<Mesh>(
          build_tube_3d(g.r_inner, g.r_outer, g.length, g.n_circ, g.n_rad, g.n_axial, right));
      break;
  }
  if (s.geometric != GeometricMapKind::kNone) mark_regions(*mesh, axial_axis(s), resolved_split(s));
  return mesh;
}

ProblemSpec build_problem_spec(const Scenario& s, std::shared_ptr<const Mesh> mesh) {
  ProblemSpec spec;
  spec.mesh = std::move(mesh);
  spec.material = s.material;
  spec.body_force = s.loading.body_force;
  const int d = s.dim();
  const int axial = axial_axis(s);

  DirichletCondition left;
  left.tag = BoundaryTag::kDirichletLeft;
  left.mask = {true, true, d == 3};
  spec.bcs.dirichlet.push_back(left);

  if (s.loading.compression == CompressionKind::kDirichlet) {
    DirichletCondition r;
    r.tag = BoundaryTag::kDirichletRight;
    r.mask = {false, false, false};
    for (int c = 0; c < d; ++c) r.mask[c] = s.loading.clamp_loaded_end || c == axial;
    r.per_mu[axial] = -1.0;
    spec.bcs.dirichlet.push_back(r);
  } else {
    NeumannCondition t;
    t.tag = BoundaryTag::kNeumannRight;
    t.per_mu[axial] = -1.0;
    spec.bcs.neumann.push_back(t);
  }
  if (s.geometric != GeometricMapKind::kNone) {
    spec.geometry = s.geometric;
    spec.geometry_split = resolved_split(s);
    spec.geometry_reference_extent = resolved_extent(s);
  }
  return spec;
}

ContinuationPlan make_plan(const Scenario& s, const HyperelasticProblem& problem,
                           const ParameterPoint& base, int count) {
  ContinuationPlan plan;
  plan.mu_start = s.mu_min;
  plan.count = count;
  plan.mu_step = (s.mu_max - s.mu_min) / (count - 1);
  plan.base = base;
  plan.functional = s.functional;
  plan.threshold = s.threshold;
  plan.max_halvings = s.max_halvings;
  if (s.seed_enabled) {
    plan.seed.enabled = true;
    plan.seed.sign = s.seed_sign;
    double amp = s.seed_amplitude;
    if (!(amp > 0.0)) {
      const auto& info = problem.mesh().info;
      amp = s.geometry.kind == GeometryKind::kTube ? 0.1 * s.geometry.r_outer
                                                    : 0.5 * info.extent[s.seed_axis];
    }
    plan.seed.amplitude = amp;
    plan.seed.direction = seed_direction(problem, s.seed_shape, s.seed_axis);
  }
  validate_plan(plan);
  return plan;
}

namespace {

ParameterPoint base_point(const Scenario& s) {
  ParameterPoint p;
  p.mu = s.mu_min;
  p.young = s.young;
  p.poisson = s.poisson;
  p.mu_g = s.geometric != GeometricMapKind::kNone ? s.mu_g_min : 0.0;
  return p;
}

std::vector<double> equispaced(double a, double b, int n) {
  std::vector<double> v;
  if (n <= 1) return {a};
  for (int k = 0; k < n; ++k) v.push_back(a + (b - a) * k / (n - 1));
  return v;
}

std::vector<ParameterPoint> material_vertices(const Scenario& s) {
  std::vector<ParameterPoint> pts;
  for (double E : {s.young_range->first, s.young_range->second}) {
    for (double nu : {s.poisson_range->first, s.poisson_range->second}) {
      ParameterPoint p = base_point(s);
      p.young = E;
      p.poisson = nu;
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace

std::vector<ParameterPoint> training_points(const Scenario& s) {
  if (s.young_range) return material_vertices(s);
  if (s.geometric != GeometricMapKind::kNone) {
    std::vector<ParameterPoint> pts;
    for (double g : equispaced(s.mu_g_min, s.mu_g_max, s.train_geometry_count)) {
      ParameterPoint p = base_point(s);
      p.mu_g = g;
      pts.push_back(p);
    }
    return pts;
  }
  return {base_point(s)};
}

std::vector<ParameterPoint> online_points(const Scenario& s) {
  if (s.young_range) {
    if (s.online.random_pairs == 0) return material_vertices(s);
    std::mt19937_64 rng(s.online.seed);
    std::uniform_real_distribution<double> E(s.young_range->first, s.young_range->second);
    std::uniform_real_distribution<double> nu(s.poisson_range->first, s.poisson_range->second);
    std::vector<ParameterPoint> pts;
    for (int k = 0; k < s.online.random_pairs; ++k) {
      ParameterPoint p = base_point(s);
      p.young = E(rng);
      p.poisson = nu(rng);
      pts.push_back(p);
    }
    return pts;
  }
  if (s.geometric != GeometricMapKind::kNone && s.online.geometry_count > 0) {
    std::vector<ParameterPoint> pts;
    for (double g : equispaced(s.mu_g_min, s.mu_g_max, s.online.geometry_count)) {
      ParameterPoint p = base_point(s);
      p.mu_g = g;
      pts.push_back(p);
    }
    return pts;
  }
  return training_points(s);
}

}  // namespace buckrom
