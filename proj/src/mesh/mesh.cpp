#include "eyeheat/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "eyeheat/error.hpp"

namespace eyeheat::mesh {

std::string_view to_string(BoundaryLabel label) {
  return label == BoundaryLabel::amb ? "amb" : "body";
}

std::optional<BoundaryLabel> boundary_label_from_string(std::string_view name) {
  if (name == "amb") return BoundaryLabel::amb;
  if (name == "body") return BoundaryLabel::body;
  return std::nullopt;
}

const std::vector<std::string>& canonical_regions() {
  static const std::vector<std::string> names = {
      "cornea", "aqueousHumor", "lens",    "vitreousHumor", "iris",
      "retina", "choroid",      "sclera",  "lamina",        "opticNerve"};
  return names;
}

namespace {

using FacetKey = std::array<int, 3>;

FacetKey make_key(std::span<const int> verts) {
  FacetKey key{-1, -1, -1};
  std::copy(verts.begin(), verts.end(), key.begin());
  std::sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(verts.size()));
  return key;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

double triangle_area_3d(std::span<const double> a, std::span<const double> b,
                        std::span<const double> c) {
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double n[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                       u[0] * v[1] - u[1] * v[0]};
  return 0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

}  // namespace

Mesh::Mesh(int dimension, std::vector<double> coordinates, std::vector<int> cells,
           std::vector<int> cell_regions, std::vector<std::string> region_names,
           std::vector<int> facets, std::vector<BoundaryLabel> facet_labels)
    : dim_(dimension),
      coords_(std::move(coordinates)),
      cells_(std::move(cells)),
      cell_region_(std::move(cell_regions)),
      region_names_(std::move(region_names)),
      facets_(std::move(facets)),
      facet_label_(std::move(facet_labels)) {
  validate();
  std::uint64_t h = mix(0, static_cast<std::uint64_t>(dim_));
  h = mix(h, num_vertices());
  h = mix(h, num_cells());
  for (double x : coords_) h = mix(h, std::bit_cast<std::uint64_t>(x));
  for (int v : cells_) h = mix(h, static_cast<std::uint64_t>(v));
  fingerprint_ = h;
}

void Mesh::validate() const {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("mesh dimension must be 2 or 3");
  if (coords_.empty() || coords_.size() % dim_ != 0)
    throw ValidationError("coordinate array size is not a multiple of the dimension");
  const auto nv = static_cast<int>(num_vertices());
  const int npc = dim_ + 1;
  if (cells_.empty() || cells_.size() % npc != 0)
    throw ValidationError("cell array is empty or not a multiple of dimension+1");
  if (cell_region_.size() != cells_.size() / npc)
    throw ValidationError("one region index per cell required");
  if (facets_.size() % dim_ != 0 || facet_label_.size() != facets_.size() / dim_)
    throw ValidationError("one label per boundary facet required");
  for (std::size_t i = 0; i < region_names_.size(); ++i) {
    if (region_names_[i].empty()) throw ValidationError("empty region name");
    for (std::size_t j = 0; j < i; ++j)
      if (region_names_[i] == region_names_[j])
        throw ValidationError("duplicate region name '" + region_names_[i] + "'");
  }

  std::vector<char> used(nv, 0);
  for (std::size_t c = 0; c < num_cells(); ++c) {
    for (int v : cell(c)) {
      if (v < 0 || v >= nv)
        throw ValidationError("cell " + std::to_string(c) + " references vertex out of range");
      used[v] = 1;
    }
    const int r = cell_region_[c];
    if (r < 0 || r >= static_cast<int>(region_names_.size()))
      throw ValidationError("cell " + std::to_string(c) + " has no region label");
    if (!(cell_measure(c) > 0.0))
      throw ValidationError("cell " + std::to_string(c) + " has non-positive volume");
  }
  for (int v = 0; v < nv; ++v)
    if (!used[v]) throw ValidationError("vertex " + std::to_string(v) + " belongs to no cell");

  // Each facet of the cell complex is shared by one or two cells.
  std::vector<FacetKey> keys;
  keys.reserve(num_cells() * npc);
  std::array<int, 3> local{};
  for (std::size_t c = 0; c < num_cells(); ++c) {
    auto cv = cell(c);
    for (int skip = 0; skip < npc; ++skip) {
      int k = 0;
      for (int i = 0; i < npc; ++i)
        if (i != skip) local[k++] = cv[i];
      keys.push_back(make_key({local.data(), static_cast<std::size_t>(dim_)}));
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<FacetKey> boundary;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    if (j - i > 2) throw ValidationError("non-conforming mesh: facet shared by more than 2 cells");
    if (j - i == 1) boundary.push_back(keys[i]);
    i = j;
  }

  std::vector<std::pair<FacetKey, std::size_t>> labelled;
  labelled.reserve(num_facets());
  for (std::size_t f = 0; f < num_facets(); ++f) {
    for (int v : facet(f))
      if (v < 0 || v >= nv)
        throw ValidationError("facet " + std::to_string(f) + " references vertex out of range");
    labelled.emplace_back(make_key(facet(f)), f);
  }
  std::sort(labelled.begin(), labelled.end());
  for (std::size_t i = 1; i < labelled.size(); ++i)
    if (labelled[i].first == labelled[i - 1].first)
      throw ValidationError("boundary facet " + std::to_string(labelled[i].second) +
                            " listed twice");
  for (const auto& [key, f] : labelled)
    if (!std::binary_search(boundary.begin(), boundary.end(), key))
      throw ValidationError("facet " + std::to_string(f) +
                            " is not on the boundary of the cell complex");
  if (labelled.size() != boundary.size()) {
    for (const auto& key : boundary) {
      auto it = std::lower_bound(labelled.begin(), labelled.end(), std::make_pair(key, std::size_t{0}));
      if (it == labelled.end() || it->first != key) {
        std::string verts;
        for (int i = 0; i < dim_; ++i) verts += (i ? "," : "") + std::to_string(key[i]);
        throw ValidationError("unlabelled boundary facet with vertices (" + verts + ")");
      }
    }
  }
}

int Mesh::region_index(std::string_view name) const {
  for (std::size_t i = 0; i < region_names_.size(); ++i)
    if (region_names_[i] == name) return static_cast<int>(i);
  return -1;
}

double Mesh::cell_measure(std::size_t c) const {
  auto v = cell(c);
  if (dim_ == 2) {
    auto a = vertex(v[0]), b = vertex(v[1]), d = vertex(v[2]);
    return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
  }
  auto a = vertex(v[0]), b = vertex(v[1]), d = vertex(v[2]), e = vertex(v[3]);
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double w[3] = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
  const double z[3] = {e[0] - a[0], e[1] - a[1], e[2] - a[2]};
  const double det = u[0] * (w[1] * z[2] - w[2] * z[1]) - u[1] * (w[0] * z[2] - w[2] * z[0]) +
                     u[2] * (w[0] * z[1] - w[1] * z[0]);
  return det / 6.0;
}

double Mesh::facet_measure(std::size_t f) const {
  auto v = facet(f);
  if (dim_ == 2) {
    auto a = vertex(v[0]), b = vertex(v[1]);
    return std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  return triangle_area_3d(vertex(v[0]), vertex(v[1]), vertex(v[2]));
}

double Mesh::region_measure(int r) const {
  double sum = 0.0;
  for (std::size_t c = 0; c < num_cells(); ++c)
    if (cell_region_[c] == r) sum += cell_measure(c);
  return sum;
}

std::pair<Point, Point> Mesh::bounding_box() const {
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    lo[d] = std::numeric_limits<double>::infinity();
    hi[d] = -lo[d];
  }
  for (std::size_t v = 0; v < num_vertices(); ++v)
    for (int d = 0; d < dim_; ++d) {
      lo[d] = std::min(lo[d], vertex(v)[d]);
      hi[d] = std::max(hi[d], vertex(v)[d]);
    }
  return {lo, hi};
}

namespace {

std::array<double, 4> barycentric(const Mesh& mesh, std::size_t c, std::span<const double> x) {
  auto cv = mesh.cell(c);
  std::array<double, 4> lam{};
  if (mesh.dimension() == 2) {
    auto a = mesh.vertex(cv[0]), b = mesh.vertex(cv[1]), d = mesh.vertex(cv[2]);
    const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    const double px = x[0] - a[0], py = x[1] - a[1];
    lam[1] = (px * (d[1] - a[1]) - (d[0] - a[0]) * py) / det;
    lam[2] = ((b[0] - a[0]) * py - px * (b[1] - a[1])) / det;
    lam[0] = 1.0 - lam[1] - lam[2];
    return lam;
  }
  auto a = mesh.vertex(cv[0]);
  double m[3][3];
  for (int j = 0; j < 3; ++j) {
    auto p = mesh.vertex(cv[j + 1]);
    for (int i = 0; i < 3; ++i) m[i][j] = p[i] - a[i];
  }
  const double rhs[3] = {x[0] - a[0], x[1] - a[1], x[2] - a[2]};
  auto det3 = [](const double (&k)[3][3]) {
    return k[0][0] * (k[1][1] * k[2][2] - k[1][2] * k[2][1]) -
           k[0][1] * (k[1][0] * k[2][2] - k[1][2] * k[2][0]) +
           k[0][2] * (k[1][0] * k[2][1] - k[1][1] * k[2][0]);
  };
  const double det = det3(m);
  for (int j = 0; j < 3; ++j) {
    double k[3][3];
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) k[r][s] = (s == j) ? rhs[r] : m[r][s];
    lam[j + 1] = det3(k) / det;
  }
  lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
  return lam;
}

}  // namespace

Location locate_point(const Mesh& mesh, std::span<const double> x) {
  constexpr double tol = 1e-10;
  if (mesh.num_cells() == 0) throw ValidationError("cannot locate a point in an empty mesh");
  if (static_cast<int>(x.size()) < mesh.dimension())
    throw ValidationError("point has fewer coordinates than the mesh dimension");
  const int npc = mesh.vertices_per_cell();
  Location best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    auto lam = barycentric(mesh, c, x);
    double lo = lam[0];
    for (int i = 1; i < npc; ++i) lo = std::min(lo, lam[i]);
    if (lo >= -tol) return {c, lam, false};

    std::array<double, 4> clamped{};
    double sum = 0.0;
    for (int i = 0; i < npc; ++i) sum += clamped[i] = std::max(lam[i], 0.0);
    for (int i = 0; i < npc; ++i) clamped[i] /= sum;
    double dist2 = 0.0;
    for (int d = 0; d < mesh.dimension(); ++d) {
      double p = 0.0;
      for (int i = 0; i < npc; ++i) p += clamped[i] * mesh.vertex(mesh.cell(c)[i])[d];
      dist2 += (p - x[d]) * (p - x[d]);
    }
    if (dist2 < best_dist) {
      best_dist = dist2;
      best = {c, clamped, true};
    }
  }
  return best;
}

}  // namespace eyeheat::mesh
