#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <span>

#include "eyeheat/mesh.hpp"

namespace eyeheat::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Selects boundary facets by index.
using FacetFilter = std::function<bool(std::size_t facet)>;
/// Scalar function of position (unused trailing coordinates are zero).
using SpatialFunction = std::function<double(const mesh::Point&)>;

FacetFilter on_label(const mesh::Mesh& mesh, mesh::BoundaryLabel label);

/// P1 stiffness sum_K k_{region(K)} int_K grad(phi_i).grad(phi_j); one
/// conductivity per mesh region index.
SparseMatrix stiffness(const mesh::Mesh& mesh, std::span<const double> region_conductivity);

/// Unit-conductivity stiffness restricted to one region.
SparseMatrix region_stiffness(const mesh::Mesh& mesh, int region);

/// Exact P1 boundary mass int_F phi_i phi_j over selected facets.
SparseMatrix boundary_mass(const mesh::Mesh& mesh, const FacetFilter& select);

/// int_F phi_i over selected facets.
Vector boundary_load(const mesh::Mesh& mesh, const FacetFilter& select);

/// int_F g phi_i over selected facets (degree-5 facet quadrature).
Vector boundary_load(const mesh::Mesh& mesh, const FacetFilter& select, const SpatialFunction& g);

/// int_Omega f phi_i.
Vector source_load(const mesh::Mesh& mesh, const SpatialFunction& f);

/// int_K phi_i summed over cells of one region (exact).
Vector region_integral(const mesh::Mesh& mesh, int region);

/// Boundary radiation pieces for Newton on T^4:
/// value_i = int_F T_h^4 phi_i, jacobian_ij = int_F 4 T_h^3 phi_i phi_j.
struct QuarticBoundaryTerm {
  Vector value;
  SparseMatrix jacobian;
};
QuarticBoundaryTerm quartic_boundary_term(const mesh::Mesh& mesh, const FacetFilter& select,
                                          const Vector& T);

}  // namespace eyeheat::fem
