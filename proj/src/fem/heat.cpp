#include "eyeheat/fem/heat.hpp"

#include <cmath>
#include <ostream>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"

namespace eyeheat::fem {

DiscreteField::DiscreteField(Vector values, std::uint64_t mesh_fingerprint)
    : values_(std::move(values)), fingerprint_(mesh_fingerprint) {
  if (!values_.allFinite()) throw NumericalError("field contains non-finite values");
}

DiscreteField DiscreteField::constant(const mesh::Mesh& mesh, double value) {
  return {Vector::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), value), mesh};
}

OutputFunctional OutputFunctional::point(const mesh::Mesh& mesh, std::string name,
                                         const mesh::Point& location) {
  OutputFunctional out;
  out.name = std::move(name);
  out.kind = Kind::point;
  out.location = location;
  const auto loc = mesh::locate_point(mesh, {location.data(), 3});
  out.snapped = loc.snapped;
  out.weights = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  auto cell = mesh.cell(loc.cell);
  for (int i = 0; i < mesh.vertices_per_cell(); ++i) out.weights[cell[i]] += loc.barycentric[i];
  out.mesh_fingerprint = mesh.fingerprint();
  return out;
}

OutputFunctional OutputFunctional::region_mean(const mesh::Mesh& mesh, std::string name,
                                               const std::string& region) {
  const int r = mesh.region_index(region);
  if (r < 0) throw ValidationError("mesh has no region '" + region + "'");
  const double measure = mesh.region_measure(r);
  if (!(measure > 0.0)) throw ValidationError("region '" + region + "' is empty");
  OutputFunctional out;
  out.name = std::move(name);
  out.kind = Kind::region_mean;
  out.region = region;
  out.weights = region_integral(mesh, r) / measure;
  out.mesh_fingerprint = mesh.fingerprint();
  return out;
}

double evaluate_output(const DiscreteField& field, const OutputFunctional& out) {
  if (field.mesh_fingerprint() != out.mesh_fingerprint || field.size() != out.weights.size())
    throw ValidationError("output '" + out.name + "' and field are built on different meshes");
  return out.weights.dot(field.values());
}

std::vector<double> region_conductivities(const mesh::Mesh& mesh, const RegionTable& regions,
                                          const Parameter& mu) {
  std::vector<double> k;
  for (const auto& name : mesh.region_names()) {
    if (!regions.contains(name))
      throw ValidationError("mesh region '" + name + "' missing from region table");
    k.push_back(regions.conductivity(name, mu));
  }
  return k;
}

LinearSystem assemble_linear(const mesh::Mesh& mesh, const RegionTable& regions,
                             const PhysicalConstants& consts, const Parameter& mu) {
  consts.validate();
  const auto k = region_conductivities(mesh, regions, mu);
  const auto amb = on_label(mesh, mesh::BoundaryLabel::amb);
  const auto body = on_label(mesh, mesh::BoundaryLabel::body);
  LinearSystem sys;
  sys.A = stiffness(mesh, k) + (mu.h_amb + consts.h_r) * boundary_mass(mesh, amb) +
          mu.h_bl * boundary_mass(mesh, body);
  sys.f = (mu.h_amb * mu.T_amb + consts.h_r * mu.T_amb - mu.E) * boundary_load(mesh, amb) +
          mu.h_bl * mu.T_bl * boundary_load(mesh, body);
  return sys;
}

DiscreteField solve_linear(const SparseMatrix& A, const Vector& f, const mesh::Mesh& mesh,
                           const SolverOptions& options, SolveReport* report) {
  if (A.rows() != static_cast<Eigen::Index>(mesh.num_vertices()))
    throw ValidationError("operator size does not match the mesh");
  return {solve_spd(A, f, options, report), mesh};
}

NonlinearSolution solve_nonlinear(const mesh::Mesh& mesh, const RegionTable& regions,
                                  const PhysicalConstants& consts, const Parameter& mu,
                                  const DiscreteField& init, const NewtonOptions& options) {
  consts.validate();
  if (init.mesh_fingerprint() != mesh.fingerprint())
    throw ValidationError("initial guess lives on a different mesh");
  const auto k = region_conductivities(mesh, regions, mu);
  const auto amb = on_label(mesh, mesh::BoundaryLabel::amb);
  const auto body = on_label(mesh, mesh::BoundaryLabel::body);
  const double se = consts.sigma * consts.emissivity;

  const SparseMatrix A0 = stiffness(mesh, k) + mu.h_amb * boundary_mass(mesh, amb) +
                          mu.h_bl * boundary_mass(mesh, body);
  const double Ta4 = std::pow(mu.T_amb, 4);
  const Vector F = (mu.h_amb * mu.T_amb + se * Ta4 - mu.E) * boundary_load(mesh, amb) +
                   mu.h_bl * mu.T_bl * boundary_load(mesh, body);
  const double fnorm = F.norm() > 0.0 ? F.norm() : 1.0;

  Vector T = init.values();
  std::vector<double> history;
  for (int it = 0;; ++it) {
    const auto quartic = quartic_boundary_term(mesh, amb, T);
    const Vector R = se * quartic.value - residual(A0, T, F);
    const double rel = R.norm() / fnorm;
    history.push_back(rel);
    if (!std::isfinite(rel))
      throw NumericalError("Newton iteration diverged (non-finite residual)", history);
    if (rel <= options.relative_tolerance) return {DiscreteField(T, mesh), history, it};
    if (it == options.max_iterations)
      throw NumericalError("Newton did not converge in " + std::to_string(it) +
                               " iterations (relative residual " + io::format_double(rel) + ")",
                           history);
    const SparseMatrix J = A0 + se * quartic.jacobian;
    SolverOptions lin;
    lin.relative_tolerance = 1e-12;
    T -= solve_spd(J, R, lin);
  }
}

double relative_l2_difference(const mesh::Mesh& mesh, const Vector& a, const Vector& b) {
  const int n = mesh.vertices_per_cell();
  const double scale = 1.0 / (n * (n + 1));
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    auto v = mesh.cell(c);
    const double vol = mesh.cell_measure(c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double m = vol * scale * (i == j ? 2.0 : 1.0);
        num += m * (a[v[i]] - b[v[i]]) * (a[v[j]] - b[v[j]]);
        den += m * a[v[i]] * a[v[j]];
      }
  }
  return std::sqrt(num / den);
}

void DsaTable::write_csv(std::ostream& os) const {
  const auto idx = Parameter::index_of(parameter);
  os << parameter << " [" << Parameter::units()[idx] << "]";
  for (const auto& n : output_names) os << "," << io::csv_field(n + " [K]");
  os << ",status\n";
  for (const auto& row : rows) {
    os << io::format_double(row.value);
    for (std::size_t k = 0; k < output_names.size(); ++k)
      os << "," << (row.ok ? io::format_double(row.outputs[k]) : std::string("nan"));
    os << "," << (row.ok ? std::string("ok") : io::csv_field("failed: " + row.error)) << "\n";
  }
}

DsaTable dsa_sweep(const mesh::Mesh& mesh, const RegionTable& regions,
                   const PhysicalConstants& consts, const std::string& parameter,
                   const std::vector<double>& values, const Parameter& baseline,
                   const std::vector<OutputFunctional>& outputs, Model model) {
  const std::size_t idx = Parameter::index_of(parameter);
  DsaTable table;
  table.parameter = parameter;
  for (const auto& o : outputs) table.output_names.push_back(o.name);
  for (double value : values) {
    DsaRow row;
    row.value = value;
    try {
      const Parameter mu = baseline.with(idx, value);
      DiscreteField field = [&] {
        if (model == Model::linear) {
          const auto sys = assemble_linear(mesh, regions, consts, mu);
          return solve_linear(sys.A, sys.f, mesh);
        }
        return solve_nonlinear(mesh, regions, consts, mu, DiscreteField::constant(mesh, mu.T_bl))
            .field;
      }();
      for (const auto& o : outputs) row.outputs.push_back(evaluate_output(field, o));
      row.ok = true;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_field(std::ostream& os, const mesh::Mesh& mesh, const DiscreteField& field) {
  if (field.mesh_fingerprint() != mesh.fingerprint())
    throw ValidationError("field does not belong to this mesh");
  const int d = mesh.dimension();
  os << "# eyeheat-field 1\n# dimension " << d << "\n# vertices " << mesh.num_vertices() << "\n";
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    for (int k = 0; k < d; ++k) os << io::format_double(mesh.vertex(v)[k]) << " ";
    os << io::format_double(field.values()[static_cast<Eigen::Index>(v)]) << "\n";
  }
  os << "# cells " << mesh.num_cells() << "\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    for (int v : mesh.cell(c)) os << v << " ";
    os << mesh.region_names()[mesh.cell_region(c)] << "\n";
  }
}

}  // namespace eyeheat::fem
