#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eyeheat/fem/assembly.hpp"
#include "eyeheat/fem/parameter.hpp"
#include "eyeheat/fem/solver.hpp"
#include "eyeheat/mesh.hpp"

namespace eyeheat::fem {

/// Nodal P1 temperature field (K), tied to a mesh by fingerprint.
class DiscreteField {
 public:
  DiscreteField(Vector values, std::uint64_t mesh_fingerprint);
  DiscreteField(Vector values, const mesh::Mesh& mesh)
      : DiscreteField(std::move(values), mesh.fingerprint()) {}

  /// Constant field on every vertex of mesh.
  static DiscreteField constant(const mesh::Mesh& mesh, double value);

  const Vector& values() const noexcept { return values_; }
  std::uint64_t mesh_fingerprint() const noexcept { return fingerprint_; }
  Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Vector values_;
  std::uint64_t fingerprint_;
};

/// Linear output functional s = L^T T. Point outputs evaluate the P1 field
/// by barycentric interpolation; region means integrate exactly.
struct OutputFunctional {
  enum class Kind { point, region_mean };

  std::string name;
  Kind kind = Kind::point;
  mesh::Point location{};
  std::string region;
  bool snapped = false;
  Vector weights;
  std::uint64_t mesh_fingerprint = 0;

  static OutputFunctional point(const mesh::Mesh& mesh, std::string name,
                                const mesh::Point& location);
  static OutputFunctional region_mean(const mesh::Mesh& mesh, std::string name,
                                      const std::string& region);
};

double evaluate_output(const DiscreteField& field, const OutputFunctional& out);

/// A_L(mu) T = f_L(mu).
struct LinearSystem {
  SparseMatrix A;
  Vector f;
};

/// Conductivity of every mesh region under mu; throws ValidationError naming
/// a mesh region absent from the table.
std::vector<double> region_conductivities(const mesh::Mesh& mesh, const RegionTable& regions,
                                          const Parameter& mu);

/// Linearized (Robin with h_r) heat problem.
LinearSystem assemble_linear(const mesh::Mesh& mesh, const RegionTable& regions,
                             const PhysicalConstants& consts, const Parameter& mu);

DiscreteField solve_linear(const SparseMatrix& A, const Vector& f, const mesh::Mesh& mesh,
                           const SolverOptions& options = {}, SolveReport* report = nullptr);

struct NewtonOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 50;
};

struct NonlinearSolution {
  DiscreteField field;
  /// Relative nonlinear residual before each Newton update and at exit.
  std::vector<double> residual_history;
  int iterations = 0;
};

/// Nonlinear model with the sigma*eps*(T^4 - T_amb^4) radiation term, solved
/// by Newton with the analytic boundary Jacobian.
NonlinearSolution solve_nonlinear(const mesh::Mesh& mesh, const RegionTable& regions,
                                  const PhysicalConstants& consts, const Parameter& mu,
                                  const DiscreteField& init, const NewtonOptions& options = {});

/// Relative L2(Omega) norm of a - b over a, using the exact P1 mass matrix.
double relative_l2_difference(const mesh::Mesh& mesh, const Vector& a, const Vector& b);

enum class Model { linear, nonlinear };

struct DsaRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  std::vector<double> outputs;
};

struct DsaTable {
  std::string parameter;
  std::vector<std::string> output_names;
  std::vector<DsaRow> rows;

  /// Header "<param> [unit],<output> [K],...,status".
  void write_csv(std::ostream& os) const;
};

/// One-at-a-time sweep: component `parameter` takes each value while the rest
/// stay at `baseline`. Failed rows are marked and the sweep continues.
DsaTable dsa_sweep(const mesh::Mesh& mesh, const RegionTable& regions,
                   const PhysicalConstants& consts, const std::string& parameter,
                   const std::vector<double>& values, const Parameter& baseline,
                   const std::vector<OutputFunctional>& outputs, Model model = Model::nonlinear);

/// Plain-text field dump:
///   # eyeheat-field 1
///   # dimension <d>
///   # vertices <n>
///   x y [z] T          (one line per vertex)
///   # cells <m>
///   v0 v1 v2 [v3] region   (0-based vertex indices, region name)
void write_field(std::ostream& os, const mesh::Mesh& mesh, const DiscreteField& field);

}  // namespace eyeheat::fem
