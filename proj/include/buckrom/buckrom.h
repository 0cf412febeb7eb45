#ifndef BUCKROM_H
#define BUCKROM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BROM_API __declspec(dllexport)
#else
#define BROM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values are also the CLI exit codes. */
typedef enum brom_status {
  BROM_OK = 0,
  BROM_ERR_INVALID_ARGUMENT = 1,
  BROM_ERR_CONFIG = 2,
  BROM_ERR_INVALID_GEOMETRY = 3,
  BROM_ERR_INADMISSIBLE_STATE = 4,
  BROM_ERR_NON_CONVERGENCE = 5,
  BROM_ERR_SINGULAR_JACOBIAN = 6,
  BROM_ERR_IO = 7,
  BROM_ERR_STALE_ARTIFACT = 8,
  BROM_ERR_DEGENERATE = 9,
  BROM_ERR_GRID_MISMATCH = 10,
  BROM_ERR_EMPTY_BASIS = 11,
  BROM_ERR_INVALID_PLAN = 12,
  BROM_ERR_INVALID_FUNCTIONAL = 13,
  BROM_ERR_INCOMPRESSIBLE_LIMIT = 14,
  BROM_ERR_INTERNAL = 99
} brom_status;

typedef struct brom_scenario brom_scenario;
typedef struct brom_mesh brom_mesh;

typedef struct brom_offline_info {
  int branches;
  int snapshots;
  int basis_dimension;
  int deim_modes; /* 0 without DEIM */
  double wall_seconds;
  double t_hf_per_mu;
} brom_offline_info;

typedef struct brom_online_info {
  int branches;
  int basis_dimension;
  int all_converged;
  int deim_modes;       /* largest mode count used, 0 without DEIM */
  size_t deim_support;  /* elements assembled online by DEIM */
  double mu_step;
  double t_rb_per_mu;
  double t_deim_per_mu; /* 0 without DEIM */
  double t_hf_per_mu;   /* 0 unless the full model was compared */
  double first_mu_star; /* reduced mu* of the first branch, NaN if none */
  double max_error;     /* over branches, 0 unless compared */
  double mean_error;
  double max_deim_discrepancy;
} brom_online_info;

/* Message of the last failure on the calling thread ("" if none). */
BROM_API const char* brom_last_error(void);
BROM_API const char* brom_status_name(int status);

BROM_API int brom_scenario_load(const char* path, brom_scenario** out);
BROM_API int brom_scenario_parse(const char* text, brom_scenario** out);
BROM_API void brom_scenario_free(brom_scenario* s);
BROM_API const char* brom_scenario_name(const brom_scenario* s);
BROM_API int brom_scenario_dim(const brom_scenario* s);

BROM_API int brom_run_offline(const brom_scenario* s, const char* out_dir, brom_offline_info* info);
BROM_API int brom_run_online(const brom_scenario* s, const char* out_dir, brom_online_info* info);

/* Compares two diagram CSVs. The JSON report is copied into buf (NUL
 * terminated) when cap is large enough; *needed receives the size including
 * the terminator. buf may be NULL to query the size. */
BROM_API int brom_compare(const char* csv_a, const char* csv_b, double threshold, char* buf,
                          size_t cap, size_t* needed);

/* Writes <out_dir>/<name>.vtk; the path is copied into path_buf if given. */
BROM_API int brom_mesh_export(const brom_scenario* s, const char* out_dir, char* path_buf,
                              size_t cap);

BROM_API int brom_mesh_beam2d(double length, double height, int nx, int ny, brom_mesh** out);
BROM_API int brom_mesh_beam3d(double lx, double ly, double lz, int nx, int ny, int nz,
                              brom_mesh** out);
BROM_API int brom_mesh_tube(double r_inner, double r_outer, double length, int n_circ, int n_rad,
                            int n_axial, brom_mesh** out);
BROM_API int brom_mesh_from_scenario(const brom_scenario* s, brom_mesh** out);
BROM_API void brom_mesh_free(brom_mesh* m);
BROM_API int brom_mesh_dim(const brom_mesh* m);
BROM_API size_t brom_mesh_num_nodes(const brom_mesh* m);
BROM_API size_t brom_mesh_num_elements(const brom_mesh* m);
BROM_API size_t brom_mesh_num_facets(const brom_mesh* m);
BROM_API double brom_mesh_volume(const brom_mesh* m);
/* D/t for tubes, 0 otherwise. */
BROM_API double brom_mesh_diameter_to_thickness(const brom_mesh* m);
BROM_API uint64_t brom_mesh_fingerprint(const brom_mesh* m);

BROM_API int brom_lame(double young, double poisson, double* lambda1, double* lambda2);

/* Reads the sizes stored in an artifact file. */
BROM_API int brom_basis_dims(const char* artifact_path, int64_t* dofs, int64_t* basis_dim,
                             int* deim_modes);

#ifdef __cplusplus
}
#endif

#endif
