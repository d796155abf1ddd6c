#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "eyeheat/error.hpp"
#include "eyeheat/mesh.hpp"

using namespace eyeheat;
using mesh::BoundaryLabel;

namespace {

const char* square_msh(const char* boundary_name) {
  static std::string text;
  text = std::string("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n2\n1 1 \"") +
         boundary_name +
         "\"\n2 2 \"cornea\"\n$EndPhysicalNames\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n"
         "4 0 1 0\n$EndNodes\n$Elements\n6\n1 1 2 1 1 1 2\n2 1 2 1 1 2 3\n3 1 2 1 1 3 4\n"
         "4 1 2 1 1 4 1\n5 2 2 2 2 1 2 3\n6 2 2 2 2 1 3 4\n$EndElements\n";
  return text.c_str();
}

double segment_distance(std::span<const double> a, std::span<const double> b, const mesh::Point& p) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  double t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy);
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("two-triangle unit square") {
  const mesh::Mesh m(2, {0, 0, 1, 0, 1, 1, 0, 1}, {0, 1, 2, 0, 2, 3}, {0, 0}, {"cornea"},
                     {0, 1, 1, 2, 2, 3, 3, 0}, std::vector<BoundaryLabel>(4, BoundaryLabel::amb));
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_cells() == 2);
  CHECK(m.region_measure(0) == doctest::Approx(1.0));
  CHECK(m.facet_measure(0) == doctest::Approx(1.0));
}

TEST_CASE("invalid meshes are rejected") {
  // clockwise cell
  CHECK_THROWS_AS(mesh::Mesh(2, {0, 0, 1, 0, 0, 1}, {0, 2, 1}, {0}, {"r"}, {0, 1, 1, 2, 2, 0},
                             std::vector<BoundaryLabel>(3, BoundaryLabel::body)),
                  ValidationError);
  // boundary edge 2-0 missing
  CHECK_THROWS_AS(mesh::Mesh(2, {0, 0, 1, 0, 0, 1}, {0, 1, 2}, {0}, {"r"}, {0, 1, 1, 2},
                             std::vector<BoundaryLabel>(2, BoundaryLabel::body)),
                  ValidationError);
}

TEST_CASE("MSH without a format header is a parse error") {
  std::string text = square_msh("amb");
  text = text.substr(text.find("$PhysicalNames"));
  CHECK_THROWS_AS(mesh::parse_msh(text), ParseError);
}

TEST_CASE("alias map relabels external physical names") {
  const auto m = mesh::parse_msh(square_msh("outerWall"), {{"outerWall", "amb"}});
  CHECK(m.num_cells() == 2);
  CHECK(m.num_facets() == 4);
  for (std::size_t f = 0; f < m.num_facets(); ++f) CHECK(m.facet_label(f) == BoundaryLabel::amb);
  CHECK_THROWS(mesh::parse_msh(square_msh("outerWall")));
}

TEST_CASE("MSH write and read back") {
  const auto eye = mesh::generate_eye_2d(1);
  const auto text = mesh::format_msh(eye.mesh);
  const auto back = mesh::parse_msh(text);
  CHECK(back.num_vertices() == eye.mesh.num_vertices());
  CHECK(back.num_cells() == eye.mesh.num_cells());
  CHECK(back.num_facets() == eye.mesh.num_facets());
  for (const auto& name : eye.mesh.region_names()) {
    const int a = eye.mesh.region_index(name), b = back.region_index(name);
    REQUIRE(b >= 0);
    CHECK(back.region_measure(b) == doctest::Approx(eye.mesh.region_measure(a)).epsilon(1e-12));
  }
  CHECK(mesh::format_msh(back) == text);
}

TEST_CASE("generated eye at refinement 1") {
  const auto eye = mesh::generate_eye_2d(1);
  const auto& m = eye.mesh;
  CHECK(m.region_names().size() == 7);
  for (int r = 0; r < 7; ++r) CHECK(m.region_measure(r) > 0.0);
  const auto amb = std::count(m.facet_label_array().begin(), m.facet_label_array().end(),
                              BoundaryLabel::amb);
  CHECK(amb > 0);
  CHECK(amb < static_cast<long>(m.num_facets()));
  for (const char* name : {"O", "B1", "C", "D1", "G"}) CHECK(eye.landmark(name) != nullptr);
}

TEST_CASE("point O lies on an amb facet") {
  const auto eye = mesh::generate_eye_2d(2);
  const auto& m = eye.mesh;
  const auto O = eye.landmark("O")->position;
  double best = 1.0;
  for (std::size_t f = 0; f < m.num_facets(); ++f)
    if (m.facet_label(f) == BoundaryLabel::amb)
      best = std::min(best, segment_distance(m.vertex(m.facet(f)[0]), m.vertex(m.facet(f)[1]), O));
  CHECK(best < 1e-12);
}

TEST_CASE("refinement quadruples the cell count") {
  const double ratio = static_cast<double>(mesh::generate_eye_2d(3).mesh.num_cells()) /
                       static_cast<double>(mesh::generate_eye_2d(2).mesh.num_cells());
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("interior facets only join anatomically adjacent regions") {
  const auto m = mesh::generate_eye_2d(2).mesh;
  std::set<std::pair<std::string, std::string>> allowed(mesh::eye_region_adjacency().begin(),
                                                        mesh::eye_region_adjacency().end());
  std::map<std::pair<int, int>, std::vector<int>> edge_cells;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    const auto v = m.cell(c);
    for (int i = 0; i < 3; ++i) {
      const int a = v[i], b = v[(i + 1) % 3];
      edge_cells[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(c));
    }
  }
  std::size_t interfaces = 0;
  for (const auto& [edge, cells] : edge_cells) {
    if (cells.size() != 2) continue;
    auto a = m.region_names()[m.cell_region(cells[0])];
    auto b = m.region_names()[m.cell_region(cells[1])];
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    ++interfaces;
    CHECK_MESSAGE(allowed.count({a, b}) == 1, a << " touches " << b);
  }
  CHECK(interfaces > 0);
}

TEST_CASE("point location") {
  const auto eye = mesh::generate_eye_2d(2);
  const auto& m = eye.mesh;

  const int v0 = m.cell(7)[0];
  const auto at_vertex = mesh::locate_point(m, m.vertex(v0));
  CHECK_FALSE(at_vertex.snapped);
  const auto cell = m.cell(at_vertex.cell);
  const auto it = std::find(cell.begin(), cell.end(), v0);
  REQUIRE(it != cell.end());
  CHECK(at_vertex.barycentric[it - cell.begin()] == doctest::Approx(1.0));

  mesh::Point centroid{};
  for (int v : m.cell(5))
    for (int d = 0; d < 2; ++d) centroid[d] += m.vertex(v)[d] / 3.0;
  const auto at_centroid = mesh::locate_point(m, centroid);
  CHECK(at_centroid.cell == 5);
  for (int i = 0; i < 3; ++i) CHECK(at_centroid.barycentric[i] == doctest::Approx(1.0 / 3.0));

  // O is the anterior pole on the +x axis; step 1 micron outward
  auto outside = eye.landmark("O")->position;
  outside[0] += 1e-6;
  CHECK(mesh::locate_point(m, outside).snapped);
}

}
