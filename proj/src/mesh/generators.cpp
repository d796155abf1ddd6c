#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "eyeheat/error.hpp"
#include "eyeheat/mesh.hpp"

namespace eyeheat::mesh {

const Landmark* GeneratedEye::landmark(std::string_view name) const {
  for (const auto& l : landmarks)
    if (l.name == name) return &l;
  return nullptr;
}

namespace {

// Eye cross-section dimensions (m). Layers are concentric shells; the cornea
// replaces the sclera on the anterior cap.
constexpr double kOuterRadius = 12.5e-3;
constexpr double kShellInner = 11.9e-3;    // sclera / cornea inner radius
constexpr double kChoroidInner = 11.6e-3;  // choroid inner radius
constexpr double kRetinaInner = 11.3e-3;   // retina inner radius
constexpr double kCorneaHalfAngle = 0.5;   // rad from the optical axis
constexpr double kOraHalfAngle = 0.95;     // retina and choroid stop here
constexpr double kLensCenter = 6.9e-3;
constexpr double kLensHalfThickness = 2.0e-3;
constexpr double kLensHalfHeight = 4.5e-3;

enum Region { kCornea, kAqueous, kLens, kVitreous, kRetina, kChoroid, kSclera, kRegionCount };

const std::vector<std::string>& eye_region_names() {
  static const std::vector<std::string> names = {"cornea", "aqueousHumor", "lens",
                                                 "vitreousHumor", "retina", "choroid",
                                                 "sclera"};
  return names;
}

int classify(double x, double y) {
  const double r = std::hypot(x, y);
  const double theta = std::abs(std::atan2(y, x));
  if (r > kShellInner) return theta < kCorneaHalfAngle ? kCornea : kSclera;
  if (theta >= kOraHalfAngle) {
    if (r > kChoroidInner) return kChoroid;
    if (r > kRetinaInner) return kRetina;
  }
  const double lx = (x - kLensCenter) / kLensHalfThickness;
  const double ly = y / kLensHalfHeight;
  if (lx * lx + ly * ly < 1.0) return kLens;
  return x > kLensCenter ? kAqueous : kVitreous;
}

struct Ring {
  double radius;
  int count;
  int start;
};

}  // namespace

const std::vector<std::pair<std::string, std::string>>& eye_region_adjacency() {
  static const std::vector<std::pair<std::string, std::string>> pairs = [] {
    std::vector<std::pair<std::string, std::string>> p = {
        {"aqueousHumor", "cornea"},  {"cornea", "sclera"},         {"aqueousHumor", "sclera"},
        {"sclera", "vitreousHumor"}, {"choroid", "sclera"},        {"choroid", "retina"},
        {"retina", "vitreousHumor"}, {"aqueousHumor", "retina"},   {"aqueousHumor", "choroid"},
        {"choroid", "vitreousHumor"}, {"aqueousHumor", "lens"},    {"lens", "vitreousHumor"},
        {"aqueousHumor", "vitreousHumor"}};
    std::sort(p.begin(), p.end());
    return p;
  }();
  return pairs;
}

GeneratedEye generate_eye_2d(int refinement) {
  if (refinement < 1) throw ValidationError("refinement must be >= 1");
  const int scale = 1 << (refinement - 1);
  const int m = 8 * scale;
  const double h = kRetinaInner / m;

  std::vector<Ring> rings;
  std::vector<double> coords = {0.0, 0.0};
  auto add_ring = [&](double radius, int count) {
    rings.push_back({radius, count, static_cast<int>(coords.size() / 2)});
    for (int j = 0; j < count; ++j) {
      const double t = 2.0 * std::numbers::pi * j / count;
      coords.push_back(radius * std::cos(t));
      coords.push_back(j == 0 ? 0.0 : (2 * j == count ? 0.0 : radius * std::sin(t)));
    }
  };
  for (int i = 1; i <= m; ++i) add_ring(i * h, 6 * i);
  auto add_layer = [&](double from, double to, int divisions) {
    for (int k = 1; k <= divisions; ++k) add_ring(from + (to - from) * k / divisions, 6 * m);
  };
  add_layer(kRetinaInner, kChoroidInner, scale);
  add_layer(kChoroidInner, kShellInner, scale);
  add_layer(kShellInner, kOuterRadius, 2 * scale);

  std::vector<int> cells;
  auto push_triangle = [&](int a, int b, int c) {
    const double* pa = &coords[2 * a];
    const double* pb = &coords[2 * b];
    const double* pc = &coords[2 * c];
    const double det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    if (det < 0) std::swap(b, c);
    cells.insert(cells.end(), {a, b, c});
  };
  for (int j = 0; j < rings[0].count; ++j)
    push_triangle(0, rings[0].start + j, rings[0].start + (j + 1) % rings[0].count);
  for (std::size_t k = 1; k < rings.size(); ++k) {
    const Ring& in = rings[k - 1];
    const Ring& out = rings[k];
    int ia = 0, ib = 0;
    while (ia < in.count || ib < out.count) {
      const double ta = static_cast<double>(ia + 1) / in.count;
      const double tb = static_cast<double>(ib + 1) / out.count;
      const int a0 = in.start + ia % in.count;
      const int b0 = out.start + ib % out.count;
      if (ib == out.count || (ia < in.count && ta <= tb)) {
        push_triangle(a0, in.start + (ia + 1) % in.count, b0);
        ++ia;
      } else {
        push_triangle(a0, out.start + (ib + 1) % out.count, b0);
        ++ib;
      }
    }
  }

  std::vector<int> regions;
  regions.reserve(cells.size() / 3);
  for (std::size_t c = 0; c < cells.size(); c += 3) {
    const double cx = (coords[2 * cells[c]] + coords[2 * cells[c + 1]] + coords[2 * cells[c + 2]]) / 3;
    const double cy =
        (coords[2 * cells[c] + 1] + coords[2 * cells[c + 1] + 1] + coords[2 * cells[c + 2] + 1]) / 3;
    regions.push_back(classify(cx, cy));
  }

  std::vector<int> facets;
  std::vector<BoundaryLabel> labels;
  const Ring& outer = rings.back();
  for (int j = 0; j < outer.count; ++j) {
    const int a = outer.start + j, b = outer.start + (j + 1) % outer.count;
    facets.insert(facets.end(), {a, b});
    const double mx = coords[2 * a] + coords[2 * b], my = coords[2 * a + 1] + coords[2 * b + 1];
    labels.push_back(std::abs(std::atan2(my, mx)) < kCorneaHalfAngle ? BoundaryLabel::amb
                                                                      : BoundaryLabel::body);
  }

  const std::size_t nv = coords.size() / 2;
  std::vector<std::set<int>> touching(nv);
  for (std::size_t c = 0; c < regions.size(); ++c)
    for (int i = 0; i < 3; ++i) touching[cells[3 * c + i]].insert(regions[c]);
  // Interface vertex on the positive optical axis between two regions, or the
  // nominal position when the staircase interface misses the axis.
  auto axis_interface = [&](int r1, int r2, double nominal) {
    double best = nominal, dist = INFINITY;
    for (std::size_t v = 0; v < nv; ++v) {
      if (coords[2 * v + 1] != 0.0 || coords[2 * v] <= 0.0) continue;
      if (touching[v].count(r1) && touching[v].count(r2) &&
          std::abs(coords[2 * v] - nominal) < dist) {
        dist = std::abs(coords[2 * v] - nominal);
        best = coords[2 * v];
      }
    }
    return best;
  };

  std::vector<Landmark> landmarks = {
      {"O", {kOuterRadius, 0.0, 0.0}},
      {"B1", {axis_interface(kAqueous, kLens, kLensCenter + kLensHalfThickness), 0.0, 0.0}},
      {"C", {axis_interface(kLens, kVitreous, kLensCenter - kLensHalfThickness), 0.0, 0.0}},
      {"D1", {-kRetinaInner, 0.0, 0.0}},
      {"G", {-kOuterRadius, 0.0, 0.0}},
  };
  GeneratedEye eye{Mesh(2, std::move(coords), std::move(cells), std::move(regions),
                        eye_region_names(), std::move(facets), std::move(labels)),
                   std::move(landmarks)};
  return eye;
}

Mesh rectangle(int nx, int ny, double lx, double ly, double split_x, std::string region_left,
               std::string region_right, BoundaryLabel label) {
  if (nx < 1 || ny < 1) throw ValidationError("rectangle needs at least one cell per direction");
  std::vector<double> coords;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      coords.push_back(lx * i / nx);
      coords.push_back(ly * j / ny);
    }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<int> cells, regions;
  const bool two = region_left != region_right;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double cx = lx * (i + 0.5) / nx;
      const int r = (two && cx >= split_x) ? 1 : 0;
      cells.insert(cells.end(), {id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.insert(cells.end(), {id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      regions.insert(regions.end(), {r, r});
    }
  std::vector<int> facets;
  for (int i = 0; i < nx; ++i) {
    facets.insert(facets.end(), {id(i, 0), id(i + 1, 0)});
    facets.insert(facets.end(), {id(i, ny), id(i + 1, ny)});
  }
  for (int j = 0; j < ny; ++j) {
    facets.insert(facets.end(), {id(0, j), id(0, j + 1)});
    facets.insert(facets.end(), {id(nx, j), id(nx, j + 1)});
  }
  std::vector<BoundaryLabel> labels(facets.size() / 2, label);
  std::vector<std::string> names = {std::move(region_left)};
  if (two) names.push_back(std::move(region_right));
  return Mesh(2, std::move(coords), std::move(cells), std::move(regions), std::move(names),
              std::move(facets), std::move(labels));
}

Mesh unit_square(int n, std::string region, BoundaryLabel label) {
  return rectangle(n, n, 1.0, 1.0, 2.0, region, region, label);
}

}  // namespace eyeheat::mesh
