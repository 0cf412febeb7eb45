#include "buckrom/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

const char* boundary_tag_name(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kDirichletLeft: return "DirichletLeft";
    case BoundaryTag::kDirichletRight: return "DirichletRight";
    case BoundaryTag::kNeumannRight: return "NeumannRight";
    case BoundaryTag::kFree: return "FreeBoundary";
  }
  return "?";
}

namespace {

double signed_measure(const Mesh& m, const Cell& c) {
  const auto& a = m.nodes[c[0]];
  const auto& b = m.nodes[c[1]];
  const auto& p = m.nodes[c[2]];
  if (m.dim == 2) {
    return 0.5 * ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]));
  }
  const auto& q = m.nodes[c[3]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  const double w[3] = {q[0] - a[0], q[1] - a[1], q[2] - a[2]};
  return (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) +
          u[2] * (v[0] * w[1] - v[1] * w[0])) /
         6.0;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive (got " << v << ")";
    throw Error(ErrorCode::kInvalidGeometry, os.str());
  }
}

void require_divisions(int n, int min, const char* what) {
  if (n < min) {
    std::ostringstream os;
    os << what << " must be >= " << min << " (got " << n << ")";
    throw Error(ErrorCode::kInvalidGeometry, os.str());
  }
}

// Flip inverted simplices so every element has positive measure.
void orient(Mesh& m) {
  for (auto& c : m.elements) {
    if (signed_measure(m, c) < 0.0) std::swap(c[0], c[1]);
  }
}

// Boundary facets are the element faces seen exactly once; `classify`
// assigns the tag from the facet's node coordinates.
template <typename Classify>
void extract_facets(Mesh& m, Classify classify) {
  const int nf = m.dim + 1;   // faces per simplex
  const int fn = m.dim;       // nodes per face
  std::map<std::array<int, 3>, std::pair<int, int>> seen;  // key -> (element, count)
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    for (int skip = 0; skip < nf; ++skip) {
      std::array<int, 3> key{-1, -1, -1};
      int k = 0;
      for (int i = 0; i < nf; ++i) {
        if (i != skip) key[k++] = m.elements[e][i];
      }
      std::sort(key.begin(), key.begin() + fn);
      auto [it, inserted] = seen.try_emplace(key, static_cast<int>(e), 0);
      ++it->second.second;
    }
  }
  m.facets.clear();
  for (const auto& [key, owner] : seen) {
    if (owner.second == 1) {
      BoundaryFacet f;
      f.nodes = key;
      f.element = owner.first;
      f.tag = classify(key);
      m.facets.push_back(f);
    } else if (owner.second != 2) {
      throw Error(ErrorCode::kInvalidGeometry, "non-manifold facet in generated mesh");
    }
  }
}

// Vertex offsets of the Kuhn tetrahedra of the unit cube: every monotone
// lattice path from (0,0,0) to (1,1,1).
constexpr int kKuhnPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

template <typename NodeAt>
void add_kuhn_cell(Mesh& m, NodeAt node_at, std::array<int, 3> flip) {
  for (const auto& perm : kKuhnPerms) {
    std::array<int, 3> b{0, 0, 0};
    Cell c{};
    for (int v = 0; v < 4; ++v) {
      if (v > 0) b[perm[v - 1]] = 1;
      c[v] = node_at(b[0] ^ flip[0], b[1] ^ flip[1], b[2] ^ flip[2]);
    }
    m.elements.push_back(c);
  }
}

}  // namespace

double Mesh::element_measure(std::size_t e) const { return signed_measure(*this, elements[e]); }

double Mesh::total_measure() const {
  double sum = 0.0;
  for (std::size_t e = 0; e < elements.size(); ++e) sum += element_measure(e);
  return sum;
}

double Mesh::facet_measure(std::size_t f) const {
  const auto& n = facets[f].nodes;
  const auto& a = nodes[n[0]];
  const auto& b = nodes[n[1]];
  if (dim == 2) return std::hypot(b[0] - a[0], b[1] - a[1]);
  const auto& c = nodes[n[2]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double x = u[1] * v[2] - u[2] * v[1];
  const double y = u[2] * v[0] - u[0] * v[2];
  const double z = u[0] * v[1] - u[1] * v[0];
  return 0.5 * std::sqrt(x * x + y * y + z * z);
}

std::vector<int> Mesh::tagged_nodes(BoundaryTag tag) const {
  std::vector<int> out;
  for (const auto& f : facets) {
    if (f.tag != tag) continue;
    for (int i = 0; i < dim; ++i) out.push_back(f.nodes[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t Mesh::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(dim));
  for (const auto& p : nodes) {
    for (int i = 0; i < dim; ++i) mix(std::bit_cast<std::uint64_t>(p[i]));
  }
  for (const auto& c : elements) {
    for (int i = 0; i <= dim; ++i) mix(static_cast<std::uint64_t>(c[i]));
  }
  for (const auto& f : facets) mix(static_cast<std::uint64_t>(f.tag));
  return h;
}

Mesh build_beam_2d(double length, double height, int nx, int ny, BoundaryTag right_tag) {
  require_positive(length, "beam length");
  require_positive(height, "beam height");
  require_divisions(nx, 1, "nx");
  require_divisions(ny, 1, "ny");

  Mesh m;
  m.dim = 2;
  m.info.kind = "beam2d";
  m.info.extent = {length, height, 0.0};
  m.info.analytic_volume = length * height;
  m.info.transverse_axis = 1;
  m.info.axial_axis = 0;
  m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      m.nodes.push_back({length * i / nx, height * j / ny, 0.0});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    const bool mirrored = 2 * j >= ny;  // upper half uses the reflected diagonal
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (!mirrored) {
        m.elements.push_back({a, b, c, -1});
        m.elements.push_back({a, c, d, -1});
      } else {
        m.elements.push_back({a, b, d, -1});
        m.elements.push_back({b, c, d, -1});
      }
    }
  }
  orient(m);
  const double tol = 1e-12 * length;
  extract_facets(m, [&](const std::array<int, 3>& key) {
    const double x0 = m.nodes[key[0]][0], x1 = m.nodes[key[1]][0];
    if (std::abs(x0) < tol && std::abs(x1) < tol) return BoundaryTag::kDirichletLeft;
    if (std::abs(x0 - length) < tol && std::abs(x1 - length) < tol) return right_tag;
    return BoundaryTag::kFree;
  });
  m.region.assign(m.elements.size(), 1);
  return m;
}

Mesh build_beam_3d(double lx, double ly, double lz, int nx, int ny, int nz, BoundaryTag right_tag) {
  require_positive(lx, "lx");
  require_positive(ly, "ly");
  require_positive(lz, "lz");
  require_divisions(nx, 1, "nx");
  require_divisions(ny, 1, "ny");
  require_divisions(nz, 1, "nz");

  Mesh m;
  m.dim = 3;
  m.info.kind = "beam3d";
  m.info.extent = {lx, ly, lz};
  m.info.analytic_volume = lx * ly * lz;
  m.info.transverse_axis = ly < lz ? 1 : 2;
  m.info.axial_axis = 0;
  auto id = [nx, ny](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k) {
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        m.nodes.push_back({lx * i / nx, ly * j / ny, lz * k / nz});
      }
    }
  }
  for (int k = 0; k < nz; ++k) {
    const int flip_z = (2 * k >= nz && nz > 1) ? 1 : 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        add_kuhn_cell(
            m, [&](int a, int b, int c) { return id(i + a, j + b, k + c); }, {0, 0, flip_z});
      }
    }
  }
  orient(m);
  const double tol = 1e-12 * lx;
  extract_facets(m, [&](const std::array<int, 3>& key) {
    bool left = true, right = true;
    for (int v : key) {
      left = left && std::abs(m.nodes[v][0]) < tol;
      right = right && std::abs(m.nodes[v][0] - lx) < tol;
    }
    if (left) return BoundaryTag::kDirichletLeft;
    if (right) return right_tag;
    return BoundaryTag::kFree;
  });
  m.region.assign(m.elements.size(), 1);
  return m;
}

Mesh build_tube_3d(double r_inner, double r_outer, double length, int n_circ, int n_rad,
                   int n_axial, BoundaryTag right_tag) {
  require_positive(r_inner, "inner radius");
  require_positive(length, "tube length");
  if (!(r_outer > r_inner)) {
    std::ostringstream os;
    os << "outer radius " << r_outer << " must exceed inner radius " << r_inner;
    throw Error(ErrorCode::kInvalidGeometry, os.str());
  }
  require_divisions(n_circ, 8, "n_circ");
  require_divisions(n_rad, 1, "n_rad");
  require_divisions(n_axial, 1, "n_axial");

  Mesh m;
  m.dim = 3;
  m.info.kind = "tube";
  m.info.extent = {2 * r_outer, 2 * r_outer, length};
  m.info.analytic_volume =
      std::numbers::pi * (r_outer * r_outer - r_inner * r_inner) * length;
  m.info.diameter_to_thickness = 2.0 * r_outer / (r_outer - r_inner);
  m.info.transverse_axis = 0;
  m.info.axial_axis = 2;
  auto id = [n_circ, n_rad](int i, int k, int l) {
    return (l * (n_rad + 1) + k) * n_circ + (i % n_circ);
  };
  for (int l = 0; l <= n_axial; ++l) {
    for (int k = 0; k <= n_rad; ++k) {
      const double r = r_inner + (r_outer - r_inner) * k / n_rad;
      for (int i = 0; i < n_circ; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n_circ;
        m.nodes.push_back({r * std::cos(t), r * std::sin(t), length * l / n_axial});
      }
    }
  }
  for (int l = 0; l < n_axial; ++l) {
    for (int k = 0; k < n_rad; ++k) {
      for (int i = 0; i < n_circ; ++i) {
        add_kuhn_cell(
            m, [&](int a, int b, int c) { return id(i + a, k + b, l + c); }, {0, 0, 0});
      }
    }
  }
  orient(m);
  const double tol = 1e-12 * length;
  extract_facets(m, [&](const std::array<int, 3>& key) {
    bool bottom = true, top = true;
    for (int v : key) {
      bottom = bottom && std::abs(m.nodes[v][2]) < tol;
      top = top && std::abs(m.nodes[v][2] - length) < tol;
    }
    if (bottom) return BoundaryTag::kDirichletLeft;
    if (top) return right_tag;
    return BoundaryTag::kFree;
  });
  m.region.assign(m.elements.size(), 1);
  return m;
}

void mark_regions(Mesh& mesh, int axis, double split) {
  if (axis < 0 || axis >= mesh.dim) {
    throw Error(ErrorCode::kInvalidArgument, "region axis out of range");
  }
  mesh.region.assign(mesh.elements.size(), 1);
  const int npe = mesh.nodes_per_element();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    double c = 0.0;
    for (int v = 0; v < npe; ++v) c += mesh.nodes[mesh.elements[e][v]][axis];
    if (c / npe > split) mesh.region[e] = 2;
  }
}

void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const double> displacement) {
  const int npe = mesh.nodes_per_element();
  out << "# vtk DataFile Version 3.0\nbuckrom " << mesh.info.kind << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  out.precision(17);
  for (const auto& p : mesh.nodes) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  out << "CELLS " << mesh.num_elements() << ' ' << mesh.num_elements() * (npe + 1) << '\n';
  for (const auto& c : mesh.elements) {
    out << npe;
    for (int v = 0; v < npe; ++v) out << ' ' << c[v];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) out << (mesh.dim == 2 ? 5 : 10) << '\n';
  out << "CELL_DATA " << mesh.num_elements() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int r : mesh.region) out << r << '\n';
  if (!displacement.empty()) {
    if (displacement.size() != mesh.num_nodes() * mesh.dim) {
      throw Error(ErrorCode::kInvalidArgument, "displacement size does not match mesh");
    }
    out << "POINT_DATA " << mesh.num_nodes() << "\nVECTORS displacement double\n";
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
      for (int c = 0; c < 3; ++c) {
        out << (c < mesh.dim ? displacement[n * mesh.dim + c] : 0.0) << (c < 2 ? ' ' : '\n');
      }
    }
  }
}

}  // namespace buckrom
