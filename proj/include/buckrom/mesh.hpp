#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace buckrom {

enum class BoundaryTag : int {
  kDirichletLeft = 0,
  kDirichletRight = 1,
  kNeumannRight = 2,
  kFree = 3,
};

const char* boundary_tag_name(BoundaryTag tag);

using Point = std::array<double, 3>;

/// Node indices of a simplex. Triangles use the first three entries; the
/// fourth is -1.
using Cell = std::array<int, 4>;

struct BoundaryFacet {
  std::array<int, 3> nodes{-1, -1, -1};  // 2 nodes (edge) in 2-D, 3 in 3-D
  int element = -1;
  BoundaryTag tag = BoundaryTag::kFree;
};

/// Shape descriptors of the generated domain, kept next to the mesh so the
/// discretization defect and design ratios are visible to callers.
struct MeshGeometryInfo {
  std::string kind;               // "beam2d", "beam3d", "tube"
  std::array<double, 3> extent{};  // bounding lengths (x, y, z)
  double analytic_volume = 0.0;  // exact measure of the continuous domain
  double diameter_to_thickness = 0.0;  // D/t, tubes only
  int transverse_axis = 1;   // axis the beam buckles along by default
  int axial_axis = 0;        // compression axis
};

/// Simplicial mesh with tagged boundary facets. Immutable once built.
struct Mesh {
  int dim = 2;
  std::vector<Point> nodes;
  std::vector<Cell> elements;
  std::vector<BoundaryFacet> facets;
  /// Subdomain id per element (1 or 2); used by the geometric maps.
  std::vector<int> region;
  MeshGeometryInfo info;

  int nodes_per_element() const { return dim + 1; }
  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_elements() const { return elements.size(); }

  /// Signed measure (area or volume) of element `e`.
  double element_measure(std::size_t e) const;
  double total_measure() const;
  /// Measure (length or area) of boundary facet `f`.
  double facet_measure(std::size_t f) const;

  /// Nodes lying on a facet with the given tag, sorted and unique.
  std::vector<int> tagged_nodes(BoundaryTag tag) const;

  /// FNV-1a over coordinates, connectivity and tags. Used to detect artifacts
  /// that were produced for a different discretization.
  std::uint64_t fingerprint() const;
};

/// Structured [0,length]x[0,height] triangulation with 2*nx*ny triangles.
/// The diagonal direction is mirrored across mid-height (for even ny) so the
/// mesh is symmetric under y -> height - y.
Mesh build_beam_2d(double length, double height, int nx, int ny,
                   BoundaryTag right_tag = BoundaryTag::kDirichletRight);

/// Box [0,lx]x[0,ly]x[0,lz]; each hexahedron is split into 6 Kuhn tetrahedra.
/// The split is mirrored across mid-depth in z (for even nz).
Mesh build_beam_3d(double lx, double ly, double lz, int nx, int ny, int nz,
                   BoundaryTag right_tag = BoundaryTag::kDirichletRight);

/// Polygonal annulus r_inner <= r <= r_outer with n_circ sectors, extruded
/// along z over [0,length].
Mesh build_tube_3d(double r_inner, double r_outer, double length, int n_circ,
                   int n_rad, int n_axial,
                   BoundaryTag right_tag = BoundaryTag::kNeumannRight);

/// Assigns region 2 to elements whose centroid coordinate along `axis`
/// exceeds `split`, region 1 otherwise.
void mark_regions(Mesh& mesh, int axis, double split);

/// ASCII legacy VTK (UNSTRUCTURED_GRID). `displacement` may be empty; when
/// given it is written as point vectors (dim entries per node).
void write_vtk(std::ostream& out, const Mesh& mesh,
               std::span<const double> displacement = {});

}  // namespace buckrom
