#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "buckrom/hyperreduction.hpp"

namespace buckrom {

/// Which optional parameter columns a diagram carries.
struct DiagramColumns {
  bool mu_g = false;
  bool material = false;
};

/// Columns: mu[, mu_g][, E, nu], s, newton_iters, converged. Values are
/// written with 17 significant digits so files are reproducible bit-for-bit.
void write_diagram_csv(std::ostream& out, const std::vector<Branch>& branches,
                       const DiagramColumns& cols);

/// One row per point of a diagram file.
struct DiagramRow {
  double mu = 0.0;
  double mu_g = 0.0;
  double young = 0.0;
  double poisson = 0.0;
  double s = 0.0;
  int newton_iters = 0;
  bool converged = false;
};

struct Diagram {
  DiagramColumns cols;
  std::vector<DiagramRow> rows;
};

/// Parses a diagram CSV written by write_diagram_csv. Throws kIo on
/// malformed input.
Diagram read_diagram_csv(std::istream& in, const std::string& origin);
Diagram read_diagram_csv(const std::filesystem::path& path);

/// Splits a diagram into branches keyed by (mu_g, E, nu), in file order.
std::vector<Branch> diagram_branches(const Diagram& d);

/// Columns: mu, error, reference_norm, s_reduced, s_full.
void write_error_csv(std::ostream& out, const RbErrorReport& report);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Static SVG line chart with linear axes.
void write_svg_plot(std::ostream& out, const std::vector<PlotSeries>& series,
                    const std::string& title, const std::string& xlabel,
                    const std::string& ylabel);

/// Section-tagged little-endian container:
///   "BROMART1", u32 version, u32 section count,
///   per section: 8-byte ASCII tag, u64 payload bytes, payload.
/// Sections used here: FINGERPR, PODBASIS, DEIMMODL.
struct ArtifactBundle {
  std::uint64_t mesh_fingerprint = 0;
  std::int64_t dofs = 0;
  PodBasis basis;
  std::optional<DeimModel> deim;
};

void write_artifact(const std::filesystem::path& path, const ArtifactBundle& bundle);
ArtifactBundle read_artifact(const std::filesystem::path& path);
void write_artifact(std::ostream& out, const ArtifactBundle& bundle);
ArtifactBundle read_artifact(std::istream& in, const std::string& origin);

/// "BRSTATE1", u64 N, u64 count, then per converged point: f64 mu and N
/// f64 displacement values.
void write_branch_states(std::ostream& out, const Branch& branch);

struct BranchStates {
  std::vector<double> mu;
  std::vector<Vector> u;
};
BranchStates read_branch_states(std::istream& in);

}  // namespace buckrom
