#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "buckrom/hyperreduction.hpp"

namespace buckrom {

/// Raw `[section]` / `key = value` document. Keys remember their line for
/// diagnostics.
class ConfigDocument {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  static ConfigDocument parse(const std::string& text, const std::string& origin);
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& section, const std::string& key,
                    std::optional<double> fallback = std::nullopt) const;
  int get_int(const std::string& section, const std::string& key,
              std::optional<int> fallback = std::nullopt) const;
  bool get_bool(const std::string& section, const std::string& key,
                std::optional<bool> fallback = std::nullopt) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::optional<std::vector<double>> fallback = std::nullopt) const;

  /// Throws a kConfig error naming the first key that was never read.
  void reject_unused() const;
  const std::string& origin() const { return origin_; }

 private:
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key, const Entry* e,
                         const std::string& why) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

enum class GeometryKind { kBeam2d, kBeam3d, kTube };
enum class CompressionKind { kDirichlet, kNeumann };

struct GeometrySpec {
  GeometryKind kind = GeometryKind::kBeam2d;
  double length = 1.0;
  double height = 0.1;  // beams: y extent
  double depth = 0.1;   // beam3d: z extent
  double r_inner = 0.28;
  double r_outer = 0.30;
  int nx = 40, ny = 4, nz = 2;
  int n_circ = 16, n_rad = 1, n_axial = 20;
};

struct LoadingSpec {
  CompressionKind compression = CompressionKind::kDirichlet;
  /// Dirichlet compression: also fix the transverse components on the
  /// loaded end.
  bool clamp_loaded_end = true;
  Vec3 body_force{0.0, 0.0, 0.0};
};

struct OnlineSpec {
  int count = 401;
  int geometry_count = 0;  // 0: use the training geometry values
  int random_pairs = 0;    // multi-parameter: random (E, nu) pairs
  std::uint64_t seed = 1234;
  bool deim = false;
  double deim_tolerance = 1e-10;
  int deim_modes = 0;
  bool compare_full = false;
};

/// Everything needed to rebuild a test case: discretization, material and
/// loading, parameter spaces and the offline/online plans.
struct Scenario {
  std::string name;
  std::string description;
  GeometrySpec geometry;
  MaterialKind material = MaterialKind::kSvk;
  double young = 1e6;
  double poisson = 0.3;
  std::optional<std::pair<double, double>> young_range;
  std::optional<std::pair<double, double>> poisson_range;
  LoadingSpec loading;

  double mu_min = 0.0;
  double mu_max = 0.2;
  GeometricMapKind geometric = GeometricMapKind::kNone;
  double mu_g_min = 0.0;
  double mu_g_max = 0.0;
  /// Start of the stretched subdomain and its reference length along the
  /// axial direction; <= 0 picks half the domain length for both.
  double geometry_split = -1.0;
  double geometry_reference_extent = -1.0;

  int n_train = 200;
  int train_geometry_count = 1;
  double pod_tolerance = 1e-8;
  bool tangent_snapshots = true;

  OnlineSpec online;

  FunctionalKind functional = FunctionalKind::kInfNormY;
  double threshold = 1e-3;

  bool seed_enabled = false;
  SeedShape seed_shape = SeedShape::kClamped;
  double seed_amplitude = 0.0;
  int seed_sign = 1;
  int seed_axis = 1;

  NewtonSettings newton;
  int max_halvings = 4;

  /// Also write every converged full state of the online branches.
  bool dump_states = false;
  /// Reference grid sizes used to report the desk scaling factor (0: unset).
  int reference_train = 0;
  int reference_online = 0;

  int dim() const { return geometry.kind == GeometryKind::kBeam2d ? 2 : 3; }
};

Scenario parse_scenario(const ConfigDocument& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Checks ranges, resolutions and functional/dimension compatibility.
void validate_scenario(const Scenario& s);

std::shared_ptr<Mesh> build_mesh(const Scenario& s);
ProblemSpec build_problem_spec(const Scenario& s, std::shared_ptr<const Mesh> mesh);

/// Continuation plan over [mu_min, mu_max] with `count` equispaced points for
/// one (E, nu, mu_g) point; the seed field is computed from the problem.
ContinuationPlan make_plan(const Scenario& s, const HyperelasticProblem& problem,
                           const ParameterPoint& base, int count);

/// Training branches: one per geometry value, or one per (E, nu) vertex.
std::vector<ParameterPoint> training_points(const Scenario& s);
/// Online branches: geometry values, random (E, nu) pairs, or the base point.
std::vector<ParameterPoint> online_points(const Scenario& s);

const char* geometry_kind_name(GeometryKind kind);

}  // namespace buckrom
