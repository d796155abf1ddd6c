#include "eyeheat/affine.hpp"

#include "eyeheat/error.hpp"

namespace eyeheat::affine {

Beta beta(const fem::Parameter& mu, const fem::PhysicalConstants& consts) {
  return {{mu.k_lens, mu.h_amb, mu.h_bl, 1.0},
          {mu.h_amb * mu.T_amb + consts.h_r * mu.T_amb - mu.E, mu.h_bl * mu.T_bl}};
}

SparseMatrix AffineSystem::assemble_A(const fem::Parameter& mu) const {
  const auto b = beta(mu, consts);
  SparseMatrix out = b.a[0] * A[0];
  for (std::size_t q = 1; q < Qa; ++q) out += b.a[q] * A[q];
  return out;
}

Vector AffineSystem::assemble_f(const fem::Parameter& mu) const {
  const auto b = beta(mu, consts);
  return b.f[0] * f[0] + b.f[1] * f[1];
}

Vector AffineSystem::solve(const fem::Parameter& mu, const fem::SolverOptions& options) const {
  return fem::solve_spd(assemble_A(mu), assemble_f(mu), options);
}

AffineSystem build_affine(const mesh::Mesh& mesh, const fem::RegionTable& regions,
                          const fem::PhysicalConstants& consts,
                          const std::vector<fem::OutputFunctional>& outputs) {
  consts.validate();
  // Conductivities with the parametrized region zeroed give the fixed part.
  std::vector<double> fixed;
  int lens = -1;
  const auto& names = mesh.region_names();
  for (std::size_t r = 0; r < names.size(); ++r) {
    if (!regions.contains(names[r]))
      throw ValidationError("mesh region '" + names[r] + "' missing from region table");
    const bool param = names[r] == regions.parametrized_region();
    if (param) lens = static_cast<int>(r);
    fixed.push_back(param ? 0.0 : regions.conductivity(names[r]));
  }
  const auto amb = fem::on_label(mesh, mesh::BoundaryLabel::amb);
  const auto body = fem::on_label(mesh, mesh::BoundaryLabel::body);
  const SparseMatrix m_amb = fem::boundary_mass(mesh, amb);

  AffineSystem sys;
  sys.consts = consts;
  sys.mesh_fingerprint = mesh.fingerprint();
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  sys.A[0] = lens >= 0 ? fem::region_stiffness(mesh, lens) : SparseMatrix(n, n);
  sys.A[1] = m_amb;
  sys.A[2] = fem::boundary_mass(mesh, body);
  sys.A[3] = fem::stiffness(mesh, fixed) + consts.h_r * m_amb;
  sys.f[0] = fem::boundary_load(mesh, amb);
  sys.f[1] = fem::boundary_load(mesh, body);
  for (const auto& o : outputs) {
    if (o.mesh_fingerprint != sys.mesh_fingerprint)
      throw ValidationError("output '" + o.name + "' was built on a different mesh");
    sys.output_names.push_back(o.name);
    sys.outputs.push_back(o.weights);
  }
  return sys;
}

io::Container AffineSystem::to_container() const {
  io::Container c("affine-system");
  c.meta()["Qa"] = Qa;
  c.meta()["Qf"] = Qf;
  c.meta()["sigma"] = consts.sigma;
  c.meta()["emissivity"] = consts.emissivity;
  c.meta()["h_r"] = consts.h_r;
  c.meta()["mesh_fingerprint"] = mesh_fingerprint;
  c.meta()["outputs"] = output_names;
  for (std::size_t q = 0; q < Qa; ++q) c.put("A" + std::to_string(q + 1), A[q]);
  for (std::size_t p = 0; p < Qf; ++p) c.put("f" + std::to_string(p + 1), f[p]);
  for (std::size_t k = 0; k < outputs.size(); ++k) c.put("L" + std::to_string(k), outputs[k]);
  return c;
}

AffineSystem AffineSystem::from_container(const io::Container& c) {
  if (c.kind() != "affine-system")
    throw ValidationError("container holds '" + c.kind() + "', expected 'affine-system'");
  AffineSystem sys;
  try {
    sys.consts.sigma = c.meta().at("sigma").get<double>();
    sys.consts.emissivity = c.meta().at("emissivity").get<double>();
    sys.consts.h_r = c.meta().at("h_r").get<double>();
    sys.mesh_fingerprint = c.meta().at("mesh_fingerprint").get<std::uint64_t>();
    sys.output_names = c.meta().at("outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("affine system metadata: ") + e.what(), 0);
  }
  for (std::size_t q = 0; q < Qa; ++q) sys.A[q] = c.sparse("A" + std::to_string(q + 1));
  for (std::size_t p = 0; p < Qf; ++p) sys.f[p] = c.vector("f" + std::to_string(p + 1));
  for (std::size_t k = 0; k < sys.output_names.size(); ++k)
    sys.outputs.push_back(c.vector("L" + std::to_string(k)));
  return sys;
}

}  // namespace eyeheat::affine
