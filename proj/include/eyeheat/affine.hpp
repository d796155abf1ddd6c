#pragma once

#include <array>
#include <string>
#include <vector>

#include "eyeheat/container.hpp"
#include "eyeheat/fem/heat.hpp"

namespace eyeheat::affine {

using fem::SparseMatrix;
using fem::Vector;

inline constexpr std::size_t Qa = 4;
inline constexpr std::size_t Qf = 2;

/// Coefficient functions of the linearized problem.
struct Beta {
  std::array<double, Qa> a;  ///< (k_lens, h_amb, h_bl, 1)
  std::array<double, Qf> f;  ///< (h_amb T_amb + h_r T_amb - E, h_bl T_bl)
};

Beta beta(const fem::Parameter& mu, const fem::PhysicalConstants& consts);

/// A_L(mu) = sum_q beta_a^q(mu) A^q, f_L(mu) = sum_p beta_f^p(mu) f^p.
/// A^1 lens stiffness (unit k), A^2 amb boundary mass, A^3 body boundary mass,
/// A^4 = h_r * amb mass + fixed-conductivity stiffness. f^1 = int_amb phi,
/// f^2 = int_body phi. Outputs are parameter independent.
struct AffineSystem {
  std::array<SparseMatrix, Qa> A;
  std::array<Vector, Qf> f;
  std::vector<std::string> output_names;
  std::vector<Vector> outputs;
  fem::PhysicalConstants consts;
  std::uint64_t mesh_fingerprint = 0;

  Eigen::Index size() const noexcept { return A[0].rows(); }
  SparseMatrix assemble_A(const fem::Parameter& mu) const;
  Vector assemble_f(const fem::Parameter& mu) const;
  /// Full-order solve of the reconstructed linear system.
  Vector solve(const fem::Parameter& mu, const fem::SolverOptions& options = {}) const;

  io::Container to_container() const;
  static AffineSystem from_container(const io::Container& c);
};

AffineSystem build_affine(const mesh::Mesh& mesh, const fem::RegionTable& regions,
                          const fem::PhysicalConstants& consts,
                          const std::vector<fem::OutputFunctional>& outputs = {});

}  // namespace eyeheat::affine
