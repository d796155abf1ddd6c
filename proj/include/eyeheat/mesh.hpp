#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eyeheat::mesh {

enum class BoundaryLabel : std::uint8_t { amb, body };

std::string_view to_string(BoundaryLabel label);
std::optional<BoundaryLabel> boundary_label_from_string(std::string_view name);

/// The ten anatomical region names understood by the default region table.
const std::vector<std::string>& canonical_regions();

using Point = std::array<double, 3>;

/// Region-tagged conforming simplicial mesh in 2D (triangles, line facets) or
/// 3D (tetrahedra, triangle facets). Coordinates are in meters.
///
/// The constructor checks every invariant and throws ValidationError on
/// failure, so a Mesh object is always valid. Immutable after construction.
class Mesh {
 public:
  Mesh(int dimension, std::vector<double> coordinates, std::vector<int> cells,
       std::vector<int> cell_regions, std::vector<std::string> region_names,
       std::vector<int> facets, std::vector<BoundaryLabel> facet_labels);

  int dimension() const noexcept { return dim_; }
  int vertices_per_cell() const noexcept { return dim_ + 1; }
  int vertices_per_facet() const noexcept { return dim_; }

  std::size_t num_vertices() const noexcept { return coords_.size() / dim_; }
  std::size_t num_cells() const noexcept { return cell_region_.size(); }
  std::size_t num_facets() const noexcept { return facet_label_.size(); }

  std::span<const double> vertex(std::size_t v) const {
    return {coords_.data() + v * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const int> cell(std::size_t c) const {
    return {cells_.data() + c * (dim_ + 1), static_cast<std::size_t>(dim_ + 1)};
  }
  std::span<const int> facet(std::size_t f) const {
    return {facets_.data() + f * dim_, static_cast<std::size_t>(dim_)};
  }

  int cell_region(std::size_t c) const { return cell_region_[c]; }
  BoundaryLabel facet_label(std::size_t f) const { return facet_label_[f]; }

  const std::vector<std::string>& region_names() const noexcept { return region_names_; }
  /// Index into region_names(), or -1.
  int region_index(std::string_view name) const;

  /// Signed measure (area/volume) of cell c under the stored ordering.
  double cell_measure(std::size_t c) const;
  /// Length (2D) or area (3D) of boundary facet f.
  double facet_measure(std::size_t f) const;
  /// Total measure of all cells carrying region index r.
  double region_measure(int r) const;

  const std::vector<double>& coordinates() const noexcept { return coords_; }
  const std::vector<int>& cell_array() const noexcept { return cells_; }
  const std::vector<int>& facet_array() const noexcept { return facets_; }
  const std::vector<int>& cell_region_array() const noexcept { return cell_region_; }
  const std::vector<BoundaryLabel>& facet_label_array() const noexcept { return facet_label_; }

  /// Lower and upper corners of the axis-aligned bounding box.
  std::pair<Point, Point> bounding_box() const;

  /// Cheap identity used to check that a field and a functional live on the
  /// same mesh (vertex count, cell count and a coordinate checksum).
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

 private:
  void validate() const;

  int dim_;
  std::vector<double> coords_;
  std::vector<int> cells_;
  std::vector<int> cell_region_;
  std::vector<std::string> region_names_;
  std::vector<int> facets_;
  std::vector<BoundaryLabel> facet_label_;
  std::uint64_t fingerprint_ = 0;
};

/// Result of point location.
struct Location {
  std::size_t cell = 0;
  std::array<double, 4> barycentric{};  ///< first dimension+1 entries used
  bool snapped = false;                 ///< point was outside every cell
};

/// Containing cell and barycentric coordinates of x. Points outside the mesh
/// snap to the cell whose clamped barycentric projection is closest.
Location locate_point(const Mesh& mesh, std::span<const double> x);

/// Physical-group name aliases: external name -> canonical region or
/// boundary name ("amb"/"body").
using AliasMap = std::map<std::string, std::string>;

/// Parse a Gmsh ASCII mesh (format 2.2 or 4.1).
Mesh load_msh(const std::string& path, const AliasMap& aliases = {});
Mesh parse_msh(std::string_view text, const AliasMap& aliases = {});

/// Write Gmsh ASCII 2.2 with one physical group per region and boundary label.
void write_msh(const Mesh& mesh, const std::string& path);
std::string format_msh(const Mesh& mesh);

/// Named point attached to a generated geometry (not a mesh entity).
struct Landmark {
  std::string name;
  Point position{};
};

/// Generated layered eye cross-section plus its output landmarks
/// O, B1, C, D1, G (anterior to posterior along the optical axis).
struct GeneratedEye {
  Mesh mesh;
  std::vector<Landmark> landmarks;

  const Landmark* landmark(std::string_view name) const;
};

/// Layered 2D eye cross-section of diameter 25 mm centred at the origin with
/// the optical axis along x (anterior pole at +x). Mesh size halves per
/// refinement increment.
GeneratedEye generate_eye_2d(int refinement);

/// Region pairs (sorted, by name) allowed to share an interior facet in
/// generate_eye_2d output.
const std::vector<std::pair<std::string, std::string>>& eye_region_adjacency();

/// Structured triangulation of the unit square, n x n squares each split in
/// two; single region `region`, every boundary edge labelled `label`.
Mesh unit_square(int n, std::string region = "domain", BoundaryLabel label = BoundaryLabel::body);

/// Structured triangulation of the rectangle [0,lx]x[0,ly]; cells with
/// centroid x < split_x get region_left, others region_right.
Mesh rectangle(int nx, int ny, double lx, double ly, double split_x, std::string region_left,
               std::string region_right, BoundaryLabel label = BoundaryLabel::body);

}  // namespace eyeheat::mesh
