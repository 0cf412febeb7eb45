#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "buckrom/io.hpp"
#include "buckrom/scenario.hpp"

namespace buckrom {

/// File names inside an output directory for a given scenario name.
struct ArtifactPaths {
  std::filesystem::path artifact;       // <name>.brom
  std::filesystem::path sigma_csv;      // <name>_sigma.csv
  std::filesystem::path deim_sigma_csv; // <name>_deim_sigma.csv
  std::filesystem::path train_csv;      // <name>_train.csv
  std::filesystem::path reduced_csv;    // <name>_online_rb.csv
  std::filesystem::path deim_csv;       // <name>_online_deim.csv
  std::filesystem::path full_csv;       // <name>_online_hf.csv
  std::filesystem::path plot_svg;       // <name>_online.svg
  std::filesystem::path report_json;    // <name>_report.json

  std::filesystem::path error_csv(std::size_t branch) const;
  std::filesystem::path states_bin(std::size_t branch) const;

  ArtifactPaths(const std::filesystem::path& dir, const std::string& name);

 private:
  std::filesystem::path dir_;
  std::string name_;
};

struct OfflineSummary {
  int branches = 0;
  int snapshots = 0;
  int basis_dimension = 0;
  int deim_modes = 0;
  int deim_available = 0;
  double wall_seconds = 0.0;
  double full_seconds_per_mu = 0.0;
  std::vector<std::optional<double>> critical;  // per training branch
};

/// High-fidelity training sweeps, POD, optional DEIM; writes the artifact,
/// spectra, training diagram and the "offline" part of the report.
OfflineSummary run_offline(const Scenario& s, const std::filesystem::path& out_dir);

struct OnlineBranchSummary {
  ParameterPoint base;
  std::optional<double> critical_reduced;
  std::optional<double> critical_deim;
  std::optional<double> critical_full;
  double max_error = 0.0;
  double mean_error = 0.0;
  double argmax_mu = 0.0;
  double max_reference_norm = 0.0;
  /// max |s_deim - s_rb| / max |s_rb|.
  double deim_discrepancy = 0.0;
  int deim_modes = 0;
  bool all_converged = true;
};

struct OnlineSummary {
  std::vector<OnlineBranchSummary> branches;
  int basis_dimension = 0;
  std::size_t deim_support = 0;
  double mu_step = 0.0;
  double reduced_seconds_per_mu = 0.0;
  double deim_seconds_per_mu = 0.0;
  double full_seconds_per_mu = 0.0;  // 0 unless the full model was run
};

/// Reduced (and optionally DEIM / full-order) online sweeps over the
/// scenario's online grid using the artifact in `out_dir`. Throws
/// kStaleArtifact when the artifact belongs to another discretization.
OnlineSummary run_online(const Scenario& s, const std::filesystem::path& out_dir);

struct CompareSummary {
  std::vector<ParameterPoint> base_a, base_b;
  std::vector<std::optional<double>> critical_a, critical_b;
  /// Per branch pair: max |s_a - s_b| over the common grid.
  std::vector<double> max_abs_ds;
};

/// Branch-by-branch comparison of two diagrams on the same mu grid. Throws
/// kGridMismatch when the branch counts or the mu values differ.
CompareSummary compare_diagrams(const Diagram& a, const Diagram& b, double threshold);

/// JSON text of a comparison: per-branch mu*, ordering table and max |ds|.
std::string compare_report_json(const CompareSummary& c);

/// Reference mesh as legacy VTK in <out_dir>/<name>.vtk; returns the path.
std::filesystem::path mesh_export(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace buckrom
