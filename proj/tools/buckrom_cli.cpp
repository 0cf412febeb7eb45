#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "buckrom/buckrom.h"

namespace {

int report_failure(int status, const char* what) {
  std::fprintf(stderr, "buckrom %s: %s error: %s\n", what, brom_status_name(status), brom_last_error());
  return status;
}

struct ScenarioHandle {
  brom_scenario* s = nullptr;
  ~ScenarioHandle() { brom_scenario_free(s); }
};

int cmd_offline(const std::string& cfg, const std::string& out) {
  ScenarioHandle h;
  if (int st = brom_scenario_load(cfg.c_str(), &h.s)) return report_failure(st, "offline");
  brom_offline_info info{};
  if (int st = brom_run_offline(h.s, out.c_str(), &info)) return report_failure(st, "offline");
  std::printf("scenario %s: %d branch(es), %d snapshots, basis N = %d", brom_scenario_name(h.s),
              info.branches, info.snapshots, info.basis_dimension);
  if (info.deim_modes > 0) std::printf(", DEIM m = %d", info.deim_modes);
  std::printf("\noffline %.2f s (%.4f s per high-fidelity point); artifacts in %s\n",
              info.wall_seconds, info.t_hf_per_mu, out.c_str());
  return 0;
}

int cmd_online(const std::string& cfg, const std::string& out) {
  ScenarioHandle h;
  if (int st = brom_scenario_load(cfg.c_str(), &h.s)) return report_failure(st, "online");
  brom_online_info info{};
  if (int st = brom_run_online(h.s, out.c_str(), &info)) return report_failure(st, "online");
  std::printf("scenario %s: %d branch(es), N = %d, step %.6g, all converged: %s\n",
              brom_scenario_name(h.s), info.branches, info.basis_dimension, info.mu_step,
              info.all_converged ? "yes" : "no");
  if (std::isnan(info.first_mu_star)) {
    std::printf("mu* (first branch): not reached\n");
  } else {
    std::printf("mu* (first branch): %.6g\n", info.first_mu_star);
  }
  std::printf("t_RB %.3g s per point", info.t_rb_per_mu);
  if (info.t_deim_per_mu > 0.0) {
    std::printf(", t_RB_DEIM %.3g s (m = %d, %zu support elements)", info.t_deim_per_mu,
                info.deim_modes, info.deim_support);
  }
  if (info.t_hf_per_mu > 0.0) std::printf(", t_HF %.3g s", info.t_hf_per_mu);
  std::printf("\n");
  if (info.t_hf_per_mu > 0.0) {
    std::printf("RB error: max %.3e, mean %.3e\n", info.max_error, info.mean_error);
  }
  if (info.t_deim_per_mu > 0.0) {
    std::printf("DEIM vs RB relative output discrepancy: %.3e\n", info.max_deim_discrepancy);
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, double threshold,
                const std::string& out) {
  std::size_t needed = 0;
  if (int st = brom_compare(a.c_str(), b.c_str(), threshold, nullptr, 0, &needed)) {
    return report_failure(st, "compare");
  }
  std::vector<char> buf(needed);
  if (int st = brom_compare(a.c_str(), b.c_str(), threshold, buf.data(), buf.size(), &needed)) {
    return report_failure(st, "compare");
  }
  if (out.empty()) {
    std::printf("%s\n", buf.data());
  } else {
    std::ofstream f(out);
    if (!f) {
      std::fprintf(stderr, "buckrom compare: cannot write %s\n", out.c_str());
      return BROM_ERR_IO;
    }
    f << buf.data() << '\n';
  }
  return 0;
}

int cmd_mesh_export(const std::string& cfg, const std::string& out) {
  ScenarioHandle h;
  if (int st = brom_scenario_load(cfg.c_str(), &h.s)) return report_failure(st, "mesh-export");
  char path[4096];
  if (int st = brom_mesh_export(h.s, out.c_str(), path, sizeof path)) {
    return report_failure(st, "mesh-export");
  }
  brom_mesh* m = nullptr;
  if (int st = brom_mesh_from_scenario(h.s, &m)) return report_failure(st, "mesh-export");
  std::printf("%s: %zu nodes, %zu elements, measure %.6g", path, brom_mesh_num_nodes(m),
              brom_mesh_num_elements(m), brom_mesh_volume(m));
  if (brom_mesh_diameter_to_thickness(m) > 0.0) {
    std::printf(", D/t = %.4g", brom_mesh_diameter_to_thickness(m));
  }
  std::printf("\n");
  brom_mesh_free(m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order buckling diagrams for hyperelastic beams and tubes"};
  app.require_subcommand(1);

  std::string cfg, out = "out", csv_a, csv_b, report;
  double threshold = 1e-3;

  auto* off = app.add_subcommand("offline", "high-fidelity training sweeps, POD and DEIM");
  off->add_option("config", cfg, "scenario file")->required()->check(CLI::ExistingFile);
  off->add_option("-o,--out", out, "output directory");

  auto* on = app.add_subcommand("online", "reduced sweeps with the stored artifacts");
  on->add_option("config", cfg, "scenario file")->required()->check(CLI::ExistingFile);
  on->add_option("-o,--out", out, "directory holding the offline artifacts");

  auto* cmp = app.add_subcommand("compare", "compare two diagram CSV files");
  cmp->add_option("a", csv_a, "first diagram")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", csv_b, "second diagram")->required()->check(CLI::ExistingFile);
  cmp->add_option("-t,--threshold", threshold, "buckling threshold on s")->check(CLI::PositiveNumber);
  cmp->add_option("-o,--out", report, "write the JSON report here instead of stdout");

  auto* mex = app.add_subcommand("mesh-export", "write the scenario mesh as legacy VTK");
  mex->add_option("config", cfg, "scenario file")->required()->check(CLI::ExistingFile);
  mex->add_option("-o,--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : BROM_ERR_INVALID_ARGUMENT;
  }

  if (*off) return cmd_offline(cfg, out);
  if (*on) return cmd_online(cfg, out);
  if (*cmp) return cmd_compare(csv_a, csv_b, threshold, report);
  if (*mex) return cmd_mesh_export(cfg, out);
  return BROM_ERR_INVALID_ARGUMENT;
}
