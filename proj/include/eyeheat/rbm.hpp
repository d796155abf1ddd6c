#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eyeheat/affine.hpp"

namespace eyeheat::rbm {

using Matrix = Eigen::MatrixXd;
using fem::Parameter;
using fem::SparseMatrix;
using fem::Vector;

/// X = A_L(mu_ref), the energy inner product at the reference parameter.
SparseMatrix x_inner_product(const affine::AffineSystem& affine,
                             const Parameter& reference = Parameter::baseline());
SparseMatrix x_inner_product(const mesh::Mesh& mesh, const fem::RegionTable& regions,
                             const fem::PhysicalConstants& consts,
                             const Parameter& reference = Parameter::baseline());

/// Min-theta lower bound of the coercivity constant in the X-norm:
/// min_q beta_a^q(mu) / beta_a^q(mu_ref). Throws ValidationError if any
/// coefficient at mu or mu_ref is not strictly positive.
double coercivity_lb(const Parameter& mu, const Parameter& reference,
                     const fem::PhysicalConstants& consts);

/// Appends v to the X-orthonormal columns of Z by modified Gram-Schmidt with
/// one reorthogonalization pass. Returns false (Z unchanged) when the
/// projected norm falls below 1e-10 times the original norm.
bool append_orthonormal(Matrix& Z, const Vector& v, const SparseMatrix& X);

/// X-orthonormal basis of the snapshots; indices of rejected snapshots are
/// written to `rejected` when given.
Matrix orthonormalize(const std::vector<Vector>& snapshots, const SparseMatrix& X,
                      std::vector<std::size_t>* rejected = nullptr);

struct ErrorCertificate {
  double residual_norm = 0.0;  ///< ||r(mu)||_{X'}
  double alpha_lb = 0.0;
  double delta = 0.0;          ///< field bound in the X-norm
  std::vector<double> delta_s; ///< one bound per output
};

struct OnlineSolution {
  Vector u;                     ///< reduced coefficients
  std::vector<double> outputs;  ///< s_{k,N}(mu)
  ErrorCertificate certificate;
  double solution_norm = 0.0;   ///< ||Z u||_X = ||u||_2
};

struct GreedyStep {
  std::size_t N = 0;             ///< basis size when the bound was evaluated
  double max_bound = 0.0;        ///< max over the training set of Delta_N
  std::size_t argmax = 0;        ///< training index attaining it
  Parameter selected;            ///< parameter of the N-th snapshot
};

/// Offline data of the certified reduced model. Immutable after
/// construction; online_solve is safe to call concurrently.
struct ReducedModel {
  Matrix Z;  ///< N_h x N, X-orthonormal
  std::array<Matrix, affine::Qa> A_N;
  std::array<Vector, affine::Qf> f_N;
  Matrix L_N;  ///< outputs x N
  std::vector<std::string> output_names;
  std::vector<double> output_dual_norms;  ///< ||L_k||_{X'}

  /// Residual data. Residual terms are ordered f^1, f^2, then A^1 xi_1 ..
  /// A^4 xi_1, A^1 xi_2, ... For coefficient vector theta of those terms,
  /// ||r||_{X'}^2 = theta^T G theta = ||C theta||^2 where C holds the
  /// coordinates of the Riesz representers in an X-orthonormal basis
  /// (upper trapezoidal, so truncating to N basis vectors keeps the leading
  /// 2 + 4N columns).
  Matrix residual_gram;
  Matrix residual_factor;

  Parameter reference;
  affine::Beta reference_beta{};
  fem::PhysicalConstants consts;
  std::uint64_t mesh_fingerprint = 0;
  std::vector<GreedyStep> history;
  std::string termination;

  std::size_t size() const noexcept { return static_cast<std::size_t>(Z.cols()); }
  double alpha_lb(const Parameter& mu) const;

  io::Container to_container() const;
  static ReducedModel from_container(const io::Container& c);
  void save(const std::string& path) const { to_container().save(path); }
  static ReducedModel load(const std::string& path);
};

/// Online stage: assemble and solve the N x N reduced system (the leading
/// n <= N basis vectors when given), outputs and certificate. Cost
/// independent of N_h.
OnlineSolution online_solve(const ReducedModel& rm, const Parameter& mu,
                            std::optional<std::size_t> n = std::nullopt);

/// Lifts reduced coefficients to the full nodal field Z u.
Vector reconstruct(const ReducedModel& rm, const Vector& u);

/// Builds the reduced model from an X-orthonormal basis Z: reduced operators,
/// Riesz representers (X solves to 1e-12) and the residual Gram data.
ReducedModel project(const affine::AffineSystem& affine, const Matrix& Z, const SparseMatrix& X,
                     const Parameter& reference = Parameter::baseline());

struct GreedyOptions {
  double tolerance = 1e-6;
  std::size_t max_size = 20;
  /// Compare Delta_N / ||u_N||_X against the tolerance; false compares the
  /// absolute bound Delta_N.
  bool relative = true;
  Parameter reference = Parameter::baseline();
};

/// Greedy basis construction: starts from train_set[0], then repeatedly adds
/// the snapshot at argmax Delta_N over the training set (lowest index wins
/// ties). Stops at the tolerance, at max_size, on a dependent snapshot or on
/// a FEM failure; the reason is stored in ReducedModel::termination and the
/// model built so far is returned.
ReducedModel greedy_train(const affine::AffineSystem& affine, const SparseMatrix& X,
                          const std::vector<Parameter>& train_set,
                          const GreedyOptions& options = {});

/// Training parameters: log-uniform h_amb, h_bl, E, k_lens and uniform
/// T_amb, T_bl over the parameter box.
std::vector<Parameter> training_set(std::size_t n, std::uint64_t seed);

}  // namespace eyeheat::rbm
