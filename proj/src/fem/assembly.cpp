#include "eyeheat/fem/assembly.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "eyeheat/error.hpp"

namespace eyeheat::fem {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct QuadPoint {
  std::array<double, 4> bary;
  double weight;  // fraction of the simplex measure
};

// Degree-5 rules: 3-point Gauss on segments, 7-point Dunavant on triangles.
const std::vector<QuadPoint>& segment_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const double s = 0.5 * std::sqrt(0.6);
    return std::vector<QuadPoint>{{{0.5 + s, 0.5 - s}, 5.0 / 18.0},
                                  {{0.5, 0.5}, 8.0 / 18.0},
                                  {{0.5 - s, 0.5 + s}, 5.0 / 18.0}};
  }();
  return rule;
}

const std::vector<QuadPoint>& triangle_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    const double w1 = 0.132394152788506, w2 = 0.125939180544827;
    return std::vector<QuadPoint>{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
                                  {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
                                  {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2}};
  }();
  return rule;
}

// Degree-2 rule on tetrahedra.
const std::vector<QuadPoint>& tetrahedron_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    return std::vector<QuadPoint>{{{a, b, b, b}, 0.25}, {{b, a, b, b}, 0.25},
                                  {{b, b, a, b}, 0.25}, {{b, b, b, a}, 0.25}};
  }();
  return rule;
}

const std::vector<QuadPoint>& facet_rule(int dim) { return dim == 2 ? segment_rule() : triangle_rule(); }
const std::vector<QuadPoint>& cell_rule(int dim) { return dim == 2 ? triangle_rule() : tetrahedron_rule(); }

mesh::Point map_point(const mesh::Mesh& mesh, std::span<const int> verts,
                      const std::array<double, 4>& bary) {
  mesh::Point p{0, 0, 0};
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto x = mesh.vertex(verts[i]);
    for (int d = 0; d < mesh.dimension(); ++d) p[d] += bary[i] * x[d];
  }
  return p;
}

// Gradients of the barycentric functions on cell c, row i = grad(lambda_i).
std::array<std::array<double, 3>, 4> barycentric_gradients(const mesh::Mesh& mesh, std::size_t c) {
  const int d = mesh.dimension();
  auto v = mesh.cell(c);
  auto x0 = mesh.vertex(v[0]);
  std::array<std::array<double, 3>, 4> g{};
  if (d == 2) {
    auto x1 = mesh.vertex(v[1]), x2 = mesh.vertex(v[2]);
    const double j00 = x1[0] - x0[0], j01 = x2[0] - x0[0];
    const double j10 = x1[1] - x0[1], j11 = x2[1] - x0[1];
    const double det = j00 * j11 - j01 * j10;
    // rows of J^{-1}
    g[1] = {j11 / det, -j01 / det, 0.0};
    g[2] = {-j10 / det, j00 / det, 0.0};
  } else {
    double j[3][3];
    for (int col = 0; col < 3; ++col) {
      auto x = mesh.vertex(v[col + 1]);
      for (int row = 0; row < 3; ++row) j[row][col] = x[row] - x0[row];
    }
    const double det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                       j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                       j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    // inverse via adjugate; row i of the inverse is grad(lambda_{i+1})
    double inv[3][3];
    inv[0][0] = (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det;
    inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det;
    inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det;
    inv[1][0] = (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det;
    inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det;
    inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det;
    inv[2][0] = (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det;
    inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det;
    inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det;
    for (int i = 0; i < 3; ++i) g[i + 1] = {inv[i][0], inv[i][1], inv[i][2]};
  }
  for (int k = 0; k < 3; ++k) g[0][k] = -(g[1][k] + g[2][k] + (d == 3 ? g[3][k] : 0.0));
  return g;
}

SparseMatrix build(const mesh::Mesh& mesh, const Triplets& t) {
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void add_cell_stiffness(const mesh::Mesh& mesh, std::size_t c, double k, Triplets& t) {
  const int npc = mesh.vertices_per_cell();
  const auto g = barycentric_gradients(mesh, c);
  const double vol = mesh.cell_measure(c);
  auto v = mesh.cell(c);
  for (int i = 0; i < npc; ++i)
    for (int j = 0; j < npc; ++j) {
      const double dot = g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2];
      t.emplace_back(v[i], v[j], k * vol * dot);
    }
}

}  // namespace

FacetFilter on_label(const mesh::Mesh& mesh, mesh::BoundaryLabel label) {
  return [&mesh, label](std::size_t f) { return mesh.facet_label(f) == label; };
}

SparseMatrix stiffness(const mesh::Mesh& mesh, std::span<const double> region_conductivity) {
  if (region_conductivity.size() < mesh.region_names().size())
    throw ValidationError("one conductivity per mesh region required");
  Triplets t;
  t.reserve(mesh.num_cells() * mesh.vertices_per_cell() * mesh.vertices_per_cell());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double k = region_conductivity[mesh.cell_region(c)];
    if (k != 0.0) add_cell_stiffness(mesh, c, k, t);
  }
  return build(mesh, t);
}

SparseMatrix region_stiffness(const mesh::Mesh& mesh, int region) {
  Triplets t;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    if (mesh.cell_region(c) == region) add_cell_stiffness(mesh, c, 1.0, t);
  return build(mesh, t);
}

SparseMatrix boundary_mass(const mesh::Mesh& mesh, const FacetFilter& select) {
  const int m = mesh.vertices_per_facet();
  // Exact P1 mass on a simplex of dimension m-1: |F|/(m(m+1)) * (1 + delta_ij).
  const double scale = 1.0 / (m * (m + 1));
  Triplets t;
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    if (!select(f)) continue;
    const double area = mesh.facet_measure(f);
    auto v = mesh.facet(f);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) t.emplace_back(v[i], v[j], area * scale * (i == j ? 2.0 : 1.0));
  }
  return build(mesh, t);
}

Vector boundary_load(const mesh::Mesh& mesh, const FacetFilter& select) {
  const int m = mesh.vertices_per_facet();
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    if (!select(f)) continue;
    const double share = mesh.facet_measure(f) / m;
    for (int v : mesh.facet(f)) b[v] += share;
  }
  return b;
}

Vector boundary_load(const mesh::Mesh& mesh, const FacetFilter& select, const SpatialFunction& g) {
  const int m = mesh.vertices_per_facet();
  const auto& rule = facet_rule(mesh.dimension());
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    if (!select(f)) continue;
    const double area = mesh.facet_measure(f);
    auto v = mesh.facet(f);
    for (const auto& q : rule) {
      const double gv = g(map_point(mesh, v, q.bary)) * q.weight * area;
      for (int i = 0; i < m; ++i) b[v[i]] += gv * q.bary[i];
    }
  }
  return b;
}

Vector source_load(const mesh::Mesh& mesh, const SpatialFunction& f) {
  const int npc = mesh.vertices_per_cell();
  const auto& rule = cell_rule(mesh.dimension());
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double vol = mesh.cell_measure(c);
    auto v = mesh.cell(c);
    for (const auto& q : rule) {
      const double fv = f(map_point(mesh, v, q.bary)) * q.weight * vol;
      for (int i = 0; i < npc; ++i) b[v[i]] += fv * q.bary[i];
    }
  }
  return b;
}

Vector region_integral(const mesh::Mesh& mesh, int region) {
  const int npc = mesh.vertices_per_cell();
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cell_region(c) != region) continue;
    const double share = mesh.cell_measure(c) / npc;
    for (int v : mesh.cell(c)) b[v] += share;
  }
  return b;
}

QuarticBoundaryTerm quartic_boundary_term(const mesh::Mesh& mesh, const FacetFilter& select,
                                          const Vector& T) {
  const int m = mesh.vertices_per_facet();
  const auto& rule = facet_rule(mesh.dimension());
  QuarticBoundaryTerm out{Vector::Zero(T.size()), {}};
  Triplets t;
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    if (!select(f)) continue;
    const double area = mesh.facet_measure(f);
    auto v = mesh.facet(f);
    for (const auto& q : rule) {
      double th = 0.0;
      for (int i = 0; i < m; ++i) th += q.bary[i] * T[v[i]];
      const double w = q.weight * area;
      const double t3 = th * th * th;
      for (int i = 0; i < m; ++i) {
        out.value[v[i]] += w * t3 * th * q.bary[i];
        for (int j = 0; j < m; ++j) t.emplace_back(v[i], v[j], w * 4.0 * t3 * q.bary[i] * q.bary[j]);
      }
    }
  }
  out.jacobian = build(mesh, t);
  return out;
}

}  // namespace eyeheat::fem
