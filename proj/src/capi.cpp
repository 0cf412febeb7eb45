#include "buckrom/buckrom.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "buckrom/error.hpp"
#include "buckrom/pipeline.hpp"

struct brom_scenario {
  buckrom::Scenario s;
};

struct brom_mesh {
  buckrom::Mesh m;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
int guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return BROM_OK;
  } catch (const buckrom::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BROM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BROM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BROM_ERR_INTERNAL, "unknown failure");
  }
}

void copy_string(const std::string& s, char* buf, std::size_t cap) {
  if (!buf || cap == 0) return;
  const std::size_t n = std::min(cap - 1, s.size());
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

#define BROM_REQUIRE(cond, what) \
  if (!(cond)) return fail(BROM_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* brom_last_error(void) { return g_last_error.c_str(); }

const char* brom_status_name(int status) {
  if (status == BROM_OK) return "ok";
  if (status == BROM_ERR_INTERNAL) return "internal";
  if (status >= 1 && status <= 14) {
    return buckrom::error_code_name(static_cast<buckrom::ErrorCode>(status));
  }
  return "unknown";
}

int brom_scenario_load(const char* path, brom_scenario** out) {
  BROM_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guard([&] { *out = new brom_scenario{buckrom::load_scenario(path)}; });
}

int brom_scenario_parse(const char* text, brom_scenario** out) {
  BROM_REQUIRE(text && out, "null argument");
  *out = nullptr;
  return guard([&] {
    *out = new brom_scenario{
        buckrom::parse_scenario(buckrom::ConfigDocument::parse(text, "<string>"))};
  });
}

void brom_scenario_free(brom_scenario* s) { delete s; }

const char* brom_scenario_name(const brom_scenario* s) { return s ? s->s.name.c_str() : ""; }

int brom_scenario_dim(const brom_scenario* s) { return s ? s->s.dim() : 0; }

int brom_run_offline(const brom_scenario* s, const char* out_dir, brom_offline_info* info) {
  BROM_REQUIRE(s && out_dir, "null argument");
  return guard([&] {
    const auto r = buckrom::run_offline(s->s, out_dir);
    if (info) {
      info->branches = r.branches;
      info->snapshots = r.snapshots;
      info->basis_dimension = r.basis_dimension;
      info->deim_modes = r.deim_modes;
      info->wall_seconds = r.wall_seconds;
      info->t_hf_per_mu = r.full_seconds_per_mu;
    }
  });
}

int brom_run_online(const brom_scenario* s, const char* out_dir, brom_online_info* info) {
  BROM_REQUIRE(s && out_dir, "null argument");
  return guard([&] {
    const auto r = buckrom::run_online(s->s, out_dir);
    if (!info) return;
    *info = brom_online_info{};
    info->branches = static_cast<int>(r.branches.size());
    info->basis_dimension = r.basis_dimension;
    info->deim_support = r.deim_support;
    info->mu_step = r.mu_step;
    info->t_rb_per_mu = r.reduced_seconds_per_mu;
    info->t_deim_per_mu = r.deim_seconds_per_mu;
    info->t_hf_per_mu = r.full_seconds_per_mu;
    info->first_mu_star = std::numeric_limits<double>::quiet_NaN();
    if (!r.branches.empty() && r.branches[0].critical_reduced) {
      info->first_mu_star = *r.branches[0].critical_reduced;
    }
    info->all_converged = 1;
    double mean = 0.0;
    for (const auto& b : r.branches) {
      info->all_converged = info->all_converged && b.all_converged;
      info->deim_modes = std::max(info->deim_modes, b.deim_modes);
      info->max_error = std::max(info->max_error, b.max_error);
      info->max_deim_discrepancy = std::max(info->max_deim_discrepancy, b.deim_discrepancy);
      mean += b.mean_error;
    }
    if (!r.branches.empty()) info->mean_error = mean / static_cast<double>(r.branches.size());
  });
}

int brom_compare(const char* csv_a, const char* csv_b, double threshold, char* buf, size_t cap,
                 size_t* needed) {
  BROM_REQUIRE(csv_a && csv_b, "null argument");
  BROM_REQUIRE(threshold > 0.0, "threshold must be positive");
  return guard([&] {
    const auto c = buckrom::compare_diagrams(buckrom::read_diagram_csv(csv_a),
                                             buckrom::read_diagram_csv(csv_b), threshold);
    const std::string text = buckrom::compare_report_json(c);
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      if (cap < text.size() + 1) {
        copy_string(text, buf, cap);
        throw buckrom::Error(buckrom::ErrorCode::kInvalidArgument, "buffer too small for the report");
      }
      copy_string(text, buf, cap);
    }
  });
}

int brom_mesh_export(const brom_scenario* s, const char* out_dir, char* path_buf, size_t cap) {
  BROM_REQUIRE(s && out_dir, "null argument");
  return guard([&] { copy_string(buckrom::mesh_export(s->s, out_dir).string(), path_buf, cap); });
}

int brom_mesh_beam2d(double length, double height, int nx, int ny, brom_mesh** out) {
  BROM_REQUIRE(out, "null argument");
  *out = nullptr;
  return guard([&] { *out = new brom_mesh{buckrom::build_beam_2d(length, height, nx, ny)}; });
}

int brom_mesh_beam3d(double lx, double ly, double lz, int nx, int ny, int nz, brom_mesh** out) {
  BROM_REQUIRE(out, "null argument");
  *out = nullptr;
  return guard([&] { *out = new brom_mesh{buckrom::build_beam_3d(lx, ly, lz, nx, ny, nz)}; });
}

int brom_mesh_tube(double r_inner, double r_outer, double length, int n_circ, int n_rad,
                   int n_axial, brom_mesh** out) {
  BROM_REQUIRE(out, "null argument");
  *out = nullptr;
  return guard([&] {
    *out = new brom_mesh{buckrom::build_tube_3d(r_inner, r_outer, length, n_circ, n_rad, n_axial)};
  });
}

int brom_mesh_from_scenario(const brom_scenario* s, brom_mesh** out) {
  BROM_REQUIRE(s && out, "null argument");
  *out = nullptr;
  return guard([&] { *out = new brom_mesh{*buckrom::build_mesh(s->s)}; });
}

void brom_mesh_free(brom_mesh* m) { delete m; }
int brom_mesh_dim(const brom_mesh* m) { return m ? m->m.dim : 0; }
size_t brom_mesh_num_nodes(const brom_mesh* m) { return m ? m->m.num_nodes() : 0; }
size_t brom_mesh_num_elements(const brom_mesh* m) { return m ? m->m.num_elements() : 0; }
size_t brom_mesh_num_facets(const brom_mesh* m) { return m ? m->m.facets.size() : 0; }
double brom_mesh_volume(const brom_mesh* m) { return m ? m->m.total_measure() : 0.0; }
double brom_mesh_diameter_to_thickness(const brom_mesh* m) {
  return m ? m->m.info.diameter_to_thickness : 0.0;
}
uint64_t brom_mesh_fingerprint(const brom_mesh* m) { return m ? m->m.fingerprint() : 0; }

int brom_lame(double young, double poisson, double* lambda1, double* lambda2) {
  BROM_REQUIRE(lambda1 && lambda2, "null argument");
  return guard([&] {
    const auto l = buckrom::lame_from_young_poisson(young, poisson);
    *lambda1 = l.lambda1;
    *lambda2 = l.lambda2;
  });
}

int brom_basis_dims(const char* artifact_path, int64_t* dofs, int64_t* basis_dim, int* deim_modes) {
  BROM_REQUIRE(artifact_path, "null argument");
  return guard([&] {
    const auto b = buckrom::read_artifact(std::filesystem::path(artifact_path));
    if (dofs) *dofs = b.dofs;
    if (basis_dim) *basis_dim = b.basis.dimension();
    if (deim_modes) *deim_modes = b.deim ? b.deim->active : 0;
  });
}

}  // extern "C"
