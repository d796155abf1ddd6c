#include "eyeheat/rbm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "eyeheat/error.hpp"
#include "eyeheat/parallel.hpp"

namespace eyeheat::rbm {

using affine::Qa;
using affine::Qf;

SparseMatrix x_inner_product(const affine::AffineSystem& affine, const Parameter& reference) {
  return affine.assemble_A(reference);
}

SparseMatrix x_inner_product(const mesh::Mesh& mesh, const fem::RegionTable& regions,
                             const fem::PhysicalConstants& consts, const Parameter& reference) {
  return fem::assemble_linear(mesh, regions, consts, reference).A;
}

namespace {

double min_theta(const affine::Beta& b, const affine::Beta& ref) {
  double lb = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < Qa; ++q) {
    if (!(b.a[q] > 0.0))
      throw ValidationError("coefficient beta_a^" + std::to_string(q + 1) +
                            " is not positive; the coercivity bound does not apply");
    lb = std::min(lb, b.a[q] / ref.a[q]);
  }
  return lb;
}

void check_reference(const affine::Beta& ref) {
  for (std::size_t q = 0; q < Qa; ++q)
    if (!(ref.a[q] > 0.0))
      throw ValidationError("reference parameter has a non-positive coefficient beta_a^" +
                            std::to_string(q + 1));
}

double x_norm(const Vector& v, const SparseMatrix& X) { return std::sqrt(v.dot(X * v)); }

// Incrementally maintained offline data. Residual representers are kept
// X-orthonormalized so that dual norms are evaluated as Euclidean norms of
// short coefficient vectors, without the cancellation of sqrt(theta^T G theta).
class Builder {
 public:
  Builder(const affine::AffineSystem& affine, const SparseMatrix& X, const Parameter& reference)
      : affine_(affine), X_(X), solver_(X, riesz_options()) {
    if (X.rows() != affine.size()) throw ValidationError("X does not match the affine system");
    rm_.reference = reference;
    rm_.reference_beta = affine::beta(reference, affine.consts);
    check_reference(rm_.reference_beta);
    rm_.consts = affine.consts;
    rm_.mesh_fingerprint = affine.mesh_fingerprint;
    rm_.output_names = affine.output_names;
    const auto nh = affine.size();
    rm_.Z.resize(nh, 0);
    for (auto& a : rm_.A_N) a.resize(0, 0);
    for (auto& f : rm_.f_N) f.resize(0);
    rm_.L_N.resize(static_cast<Eigen::Index>(affine.outputs.size()), 0);
    for (const auto& l : affine.outputs) rm_.output_dual_norms.push_back(std::sqrt(l.dot(riesz(l))));
    for (const auto& f : affine.f) add_residual_term(f);
  }

  void add_basis_vector(const Vector& xi) {
    const Eigen::Index n = rm_.Z.cols();
    rm_.Z.conservativeResize(Eigen::NoChange, n + 1);
    rm_.Z.col(n) = xi;
    for (std::size_t q = 0; q < Qa; ++q) {
      const Vector axi = affine_.A[q] * xi;
      const Vector col = rm_.Z.transpose() * axi;
      auto& a = rm_.A_N[q];
      a.conservativeResize(n + 1, n + 1);
      a.col(n) = col;
      a.row(n) = col.transpose();
    }
    for (std::size_t p = 0; p < Qf; ++p) {
      rm_.f_N[p].conservativeResize(n + 1);
      rm_.f_N[p][n] = xi.dot(affine_.f[p]);
    }
    rm_.L_N.conservativeResize(Eigen::NoChange, n + 1);
    for (std::size_t k = 0; k < affine_.outputs.size(); ++k)
      rm_.L_N(static_cast<Eigen::Index>(k), n) = affine_.outputs[k].dot(xi);
    for (std::size_t q = 0; q < Qa; ++q) add_residual_term(affine_.A[q] * xi);
  }

  const ReducedModel& model() const { return rm_; }
  ReducedModel& model() { return rm_; }

 private:
  static fem::SolverOptions riesz_options() {
    fem::SolverOptions o;
    o.relative_tolerance = 1e-12;
    return o;
  }

  Vector riesz(const Vector& g) const {
    if (g.norm() == 0.0) return Vector::Zero(g.size());
    return solver_.solve(g);
  }

  void add_residual_term(const Vector& g) {
    const Vector rho = riesz(g);
    const Eigen::Index m = static_cast<Eigen::Index>(rhs_.size());
    // Gram column: (rho_i, rho_j)_X = rho_i^T g_j.
    auto& G = rm_.residual_gram;
    G.conservativeResize(m + 1, m + 1);
    for (Eigen::Index i = 0; i < m; ++i) G(i, m) = G(m, i) = reps_[i].dot(g);
    G(m, m) = rho.dot(g);
    reps_.push_back(rho);
    rhs_.push_back(g);

    Vector w = rho;
    const Eigen::Index r = Q_.cols();
    Vector coords = Vector::Zero(r);
    const double original = std::sqrt(std::max(0.0, rho.dot(g)));
    for (int pass = 0; pass < 2 && r > 0; ++pass) {
      const Vector c = Q_.transpose() * (X_ * w);
      w -= Q_ * c;
      coords += c;
    }
    const double rest = x_norm(w, X_);
    auto& C = rm_.residual_factor;
    const bool grow = rest > 1e-13 * original && rest > 0.0;
    C.conservativeResize(r + (grow ? 1 : 0), m + 1);
    C.col(m).setZero();
    C.col(m).head(r) = coords;
    if (grow) {
      C.row(r).head(m).setZero();
      C(r, m) = rest;
      Q_.conservativeResize(w.size(), r + 1);
      Q_.col(r) = w / rest;
    }
  }

  const affine::AffineSystem& affine_;
  const SparseMatrix& X_;
  fem::SpdSolver solver_;
  ReducedModel rm_;
  Matrix Q_;
  std::vector<Vector> reps_, rhs_;
};

}  // namespace

double coercivity_lb(const Parameter& mu, const Parameter& reference,
                     const fem::PhysicalConstants& consts) {
  const auto ref = affine::beta(reference, consts);
  check_reference(ref);
  return min_theta(affine::beta(mu, consts), ref);
}

double ReducedModel::alpha_lb(const Parameter& mu) const {
  return min_theta(affine::beta(mu, consts), reference_beta);
}

bool append_orthonormal(Matrix& Z, const Vector& v, const SparseMatrix& X) {
  if (Z.rows() != v.size() && Z.cols() > 0)
    throw ValidationError("snapshot size does not match the basis");
  const double original = x_norm(v, X);
  if (!(original > 0.0)) return false;
  Vector w = v;
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
      const double c = Z.col(j).dot(X * w);
      w -= c * Z.col(j);
    }
  const double rest = x_norm(w, X);
  if (!(rest >= 1e-10 * original)) return false;
  Z.conservativeResize(v.size(), Z.cols() + 1);
  Z.col(Z.cols() - 1) = w / rest;
  return true;
}

Matrix orthonormalize(const std::vector<Vector>& snapshots, const SparseMatrix& X,
                      std::vector<std::size_t>* rejected) {
  Matrix Z(X.rows(), 0);
  for (std::size_t i = 0; i < snapshots.size(); ++i)
    if (!append_orthonormal(Z, snapshots[i], X) && rejected) rejected->push_back(i);
  return Z;
}

OnlineSolution online_solve(const ReducedModel& rm, const Parameter& mu,
                            std::optional<std::size_t> n_opt) {
  const std::size_t N = rm.size();
  const std::size_t n = n_opt.value_or(N);
  if (n == 0 || n > N)
    throw ValidationError("requested basis size " + std::to_string(n) + " outside [1, " +
                          std::to_string(N) + "]");
  const auto nn = static_cast<Eigen::Index>(n);
  const auto b = affine::beta(mu, rm.consts);

  Matrix A = b.a[0] * rm.A_N[0].topLeftCorner(nn, nn);
  for (std::size_t q = 1; q < Qa; ++q) A += b.a[q] * rm.A_N[q].topLeftCorner(nn, nn);
  Vector f = b.f[0] * rm.f_N[0].head(nn) + b.f[1] * rm.f_N[1].head(nn);
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("reduced operator is not positive definite at this parameter");

  OnlineSolution out;
  out.u = llt.solve(f);
  out.solution_norm = out.u.norm();
  const Vector s = rm.L_N.leftCols(nn) * out.u;
  out.outputs.assign(s.data(), s.data() + s.size());

  const Eigen::Index m = static_cast<Eigen::Index>(Qf + Qa * n);
  Vector theta(m);
  theta[0] = b.f[0];
  theta[1] = b.f[1];
  for (Eigen::Index j = 0; j < nn; ++j)
    for (std::size_t q = 0; q < Qa; ++q)
      theta[static_cast<Eigen::Index>(Qf + Qa * j + q)] = -b.a[q] * out.u[j];
  auto& cert = out.certificate;
  cert.residual_norm = (rm.residual_factor.leftCols(m) * theta).norm();
  cert.alpha_lb = rm.alpha_lb(mu);
  cert.delta = cert.residual_norm / cert.alpha_lb;
  for (double d : rm.output_dual_norms) cert.delta_s.push_back(d * cert.delta);
  return out;
}

Vector reconstruct(const ReducedModel& rm, const Vector& u) {
  return rm.Z.leftCols(u.size()) * u;
}

ReducedModel project(const affine::AffineSystem& affine, const Matrix& Z, const SparseMatrix& X,
                     const Parameter& reference) {
  if (Z.rows() != affine.size()) throw ValidationError("basis does not match the affine system");
  Builder builder(affine, X, reference);
  for (Eigen::Index j = 0; j < Z.cols(); ++j) builder.add_basis_vector(Z.col(j));
  builder.model().termination = "projected";
  return std::move(builder.model());
}

ReducedModel greedy_train(const affine::AffineSystem& affine, const SparseMatrix& X,
                          const std::vector<Parameter>& train_set, const GreedyOptions& options) {
  if (train_set.empty()) throw ValidationError("training set is empty");
  if (!(options.tolerance > 0.0)) throw ValidationError("greedy tolerance must be positive");
  if (options.max_size == 0) throw ValidationError("maximal basis size must be positive");
  Builder builder(affine, X, options.reference);
  ReducedModel& rm = builder.model();
  Matrix Z(X.rows(), 0);

  std::size_t next = 0;
  std::vector<double> bounds(train_set.size());
  for (;;) {
    const Parameter& mu = train_set[next];
    Vector snapshot;
    try {
      snapshot = affine.solve(mu);
    } catch (const Error& e) {
      rm.termination = std::string("FEM failure: ") + e.what();
      break;
    }
    if (!append_orthonormal(Z, snapshot, X)) {
      rm.termination = "dependent snapshot";
      break;
    }
    builder.add_basis_vector(Z.col(Z.cols() - 1));

    parallel_for(train_set.size(), [&](std::size_t i) {
      const auto sol = online_solve(rm, train_set[i]);
      bounds[i] = options.relative ? sol.certificate.delta / sol.solution_norm
                                   : sol.certificate.delta;
    });
    // max_element returns the first maximum: lowest index wins ties.
    const auto it = std::max_element(bounds.begin(), bounds.end());
    GreedyStep step;
    step.N = rm.size();
    step.max_bound = *it;
    step.argmax = static_cast<std::size_t>(it - bounds.begin());
    step.selected = mu;
    rm.history.push_back(step);
    if (step.max_bound <= options.tolerance) {
      rm.termination = "tolerance";
      break;
    }
    if (rm.size() >= options.max_size) {
      rm.termination = "max_size";
      break;
    }
    next = step.argmax;
  }
  return std::move(rm);
}

std::vector<Parameter> training_set(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& box = fem::parameter_domain();
  constexpr std::array<bool, Parameter::size> logscale = {false, false, true, true, true, true};
  std::vector<Parameter> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::array<double, Parameter::size> v{};
    for (std::size_t i = 0; i < Parameter::size; ++i) {
      const double u = unit(rng);
      v[i] = logscale[i] ? std::exp(std::log(box.lower[i]) +
                                    u * (std::log(box.upper[i]) - std::log(box.lower[i])))
                         : box.lower[i] + u * (box.upper[i] - box.lower[i]);
      v[i] = std::clamp(v[i], box.lower[i], box.upper[i]);
    }
    out.push_back(Parameter::make(v));
  }
  return out;
}

io::Container ReducedModel::to_container() const {
  io::Container c("reduced-model");
  auto& m = c.meta();
  m["N"] = size();
  m["outputs"] = output_names;
  m["output_dual_norms"] = output_dual_norms;
  m["reference"] = reference.to_array();
  m["sigma"] = consts.sigma;
  m["emissivity"] = consts.emissivity;
  m["h_r"] = consts.h_r;
  m["mesh_fingerprint"] = mesh_fingerprint;
  m["termination"] = termination;
  m["history"] = nlohmann::json::array();
  for (const auto& h : history)
    m["history"].push_back({{"N", h.N},
                            {"max_bound", h.max_bound},
                            {"argmax", h.argmax},
                            {"selected", h.selected.to_array()}});
  c.put("Z", Z);
  for (std::size_t q = 0; q < Qa; ++q) c.put("A_N" + std::to_string(q + 1), A_N[q]);
  for (std::size_t p = 0; p < Qf; ++p) c.put("f_N" + std::to_string(p + 1), f_N[p]);
  c.put("L_N", L_N);
  c.put("residual_gram", residual_gram);
  c.put("residual_factor", residual_factor);
  return c;
}

ReducedModel ReducedModel::from_container(const io::Container& c) {
  if (c.kind() != "reduced-model")
    throw ValidationError("container holds '" + c.kind() + "', expected 'reduced-model'");
  ReducedModel rm;
  try {
    const auto& m = c.meta();
    rm.output_names = m.at("outputs").get<std::vector<std::string>>();
    rm.output_dual_norms = m.at("output_dual_norms").get<std::vector<double>>();
    rm.reference = Parameter::relaxed(m.at("reference").get<std::array<double, Parameter::size>>());
    rm.consts.sigma = m.at("sigma").get<double>();
    rm.consts.emissivity = m.at("emissivity").get<double>();
    rm.consts.h_r = m.at("h_r").get<double>();
    rm.mesh_fingerprint = m.at("mesh_fingerprint").get<std::uint64_t>();
    rm.termination = m.at("termination").get<std::string>();
    for (const auto& h : m.at("history")) {
      GreedyStep s;
      s.N = h.at("N").get<std::size_t>();
      s.max_bound = h.at("max_bound").get<double>();
      s.argmax = h.at("argmax").get<std::size_t>();
      s.selected =
          Parameter::relaxed(h.at("selected").get<std::array<double, Parameter::size>>());
      rm.history.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("reduced model metadata: ") + e.what(), 0);
  }
  rm.reference_beta = affine::beta(rm.reference, rm.consts);
  rm.Z = c.matrix("Z");
  for (std::size_t q = 0; q < Qa; ++q) rm.A_N[q] = c.matrix("A_N" + std::to_string(q + 1));
  for (std::size_t p = 0; p < Qf; ++p) rm.f_N[p] = c.vector("f_N" + std::to_string(p + 1));
  rm.L_N = c.matrix("L_N");
  rm.residual_gram = c.matrix("residual_gram");
  rm.residual_factor = c.matrix("residual_factor");
  const auto N = rm.Z.cols();
  const auto M = static_cast<Eigen::Index>(Qf + Qa * N);
  bool ok = rm.L_N.cols() == N && rm.L_N.rows() == static_cast<Eigen::Index>(rm.output_names.size()) &&
            rm.output_dual_norms.size() == rm.output_names.size() &&
            rm.residual_factor.cols() == M && rm.residual_gram.rows() == M;
  for (const auto& a : rm.A_N) ok = ok && a.rows() == N && a.cols() == N;
  for (const auto& f : rm.f_N) ok = ok && f.size() == N;
  if (!ok) throw ValidationError("reduced model blocks have inconsistent sizes");
  return rm;
}

ReducedModel ReducedModel::load(const std::string& path) {
  return from_container(io::Container::load(path, "reduced-model"));
}

}  // namespace eyeheat::rbm
