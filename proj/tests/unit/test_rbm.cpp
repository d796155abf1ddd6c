#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "eyeheat/error.hpp"
#include "eyeheat/rbm.hpp"

using namespace eyeheat;
using fem::Parameter;
using rbm::Matrix;
using rbm::Vector;

namespace {

struct Eye {
  mesh::GeneratedEye eye = mesh::generate_eye_2d(2);
  fem::RegionTable regions = fem::RegionTable::eye_default();
  fem::PhysicalConstants consts;
  affine::AffineSystem sys;
  fem::SparseMatrix X;

  Eye() {
    std::vector<fem::OutputFunctional> outs;
    for (const auto& l : eye.landmarks)
      outs.push_back(fem::OutputFunctional::point(eye.mesh, l.name, l.position));
    sys = affine::build_affine(eye.mesh, regions, consts, outs);
    X = rbm::x_inner_product(sys);
  }

  double x_norm(const Vector& v) const { return std::sqrt(v.dot(X * v)); }
};

// Built once; the greedy is the expensive part.
const Eye& eye() {
  static const Eye e;
  return e;
}

const rbm::ReducedModel& model() {
  static const rbm::ReducedModel rm = [] {
    rbm::GreedyOptions g;
    g.max_size = 12;
    return rbm::greedy_train(eye().sys, eye().X, rbm::training_set(200, 3), g);
  }();
  return rm;
}

}  // namespace

TEST_SUITE("rbm") {

TEST_CASE("X inner product") {
  const auto& e = eye();
  CHECK((Matrix(e.X) - Matrix(e.X).transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Matrix(e.X).cwiseAbs().maxCoeff());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 5; ++t) {
    Vector v(e.X.rows());
    for (auto& x : v) x = n01(rng);
    CHECK(v.dot(e.X * v) > 0.0);
  }
}

TEST_CASE("coercivity lower bound") {
  const fem::PhysicalConstants c;
  const auto ref = Parameter::baseline();
  CHECK(rbm::coercivity_lb(ref, ref, c) == 1.0);
  CHECK(rbm::coercivity_lb(ref.with(5, 0.8), ref, c) == doctest::Approx(1.0));
  CHECK(rbm::coercivity_lb(ref.with(2, 8.0), ref, c) == doctest::Approx(0.8));
  CHECK(rbm::coercivity_lb(ref.with(3, 55.0), ref, c) == doctest::Approx(55.0 / 65.0));
  CHECK_THROWS_AS(rbm::coercivity_lb(ref.with(5, 0.0), ref, c), ValidationError);
}

TEST_CASE("X-orthonormalization") {
  const auto& e = eye();
  const Vector s0 = e.sys.solve(Parameter::baseline());
  const Matrix z1 = rbm::orthonormalize({s0}, e.X);
  CHECK((z1.col(0) - s0 / e.x_norm(s0)).cwiseAbs().maxCoeff() < 1e-12 * s0.cwiseAbs().maxCoeff() / e.x_norm(s0));

  std::vector<std::size_t> rejected;
  const Matrix dup = rbm::orthonormalize({s0, 2.0 * s0}, e.X, &rejected);
  CHECK(dup.cols() == 1);
  CHECK(rejected == std::vector<std::size_t>{1});

  std::vector<Vector> snaps;
  for (const auto& mu : rbm::training_set(5, 11)) snaps.push_back(e.sys.solve(mu));
  const Matrix Z = rbm::orthonormalize(snaps, e.X);
  REQUIRE(Z.cols() == 5);
  CHECK((Z.transpose() * (e.X * Z) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("N = 1 is the Galerkin projection onto one snapshot") {
  const auto& e = eye();
  const Vector s0 = e.sys.solve(Parameter::baseline());
  const Matrix Z = rbm::orthonormalize({s0}, e.X);
  const auto rm = rbm::project(e.sys, Z, e.X);
  const auto mu = Parameter::make({290, 309, 50, 80, 150, 0.3});
  const auto A = e.sys.assemble_A(mu);
  const Vector z = Z.col(0);
  const double expected = z.dot(e.sys.assemble_f(mu)) / z.dot(A * z);
  const auto sol = rbm::online_solve(rm, mu);
  REQUIRE(sol.u.size() == 1);
  CHECK(sol.u[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("residual dual norm matches the brute-force Riesz solve") {
  const auto& e = eye();
  const auto& rm = model();
  fem::SpdSolver Xs(e.X);
  for (const auto& mu : rbm::training_set(5, 99)) {
    for (std::size_t N : {std::size_t{1}, std::size_t{4}, rm.size()}) {
      const auto sol = rbm::online_solve(rm, mu, N);
      const Vector r = e.sys.assemble_f(mu) - e.sys.assemble_A(mu) * rbm::reconstruct(rm, sol.u);
      const double brute = std::sqrt(r.dot(Xs.solve(r)));
      CHECK(sol.certificate.residual_norm == doctest::Approx(brute).epsilon(1e-8));
    }
  }
}

TEST_CASE("residual Gram table equals the factor product") {
  const auto& rm = model();
  const Matrix CtC = rm.residual_factor.transpose() * rm.residual_factor;
  REQUIRE(CtC.rows() == rm.residual_gram.rows());
  CHECK((CtC - rm.residual_gram).cwiseAbs().maxCoeff() <= 1e-10 * rm.residual_gram.cwiseAbs().maxCoeff());
  CHECK(rm.residual_gram.cols() == static_cast<Eigen::Index>(2 + 4 * rm.size()));
}

TEST_CASE("snapshots are reproduced") {
  const auto& e = eye();
  const auto& rm = model();
  for (const auto& step : rm.history) {
    const auto sol = rbm::online_solve(rm, step.selected);
    CHECK(sol.certificate.delta <= 1e-8);
    const Vector u = e.sys.solve(step.selected);
    for (std::size_t k = 0; k < sol.outputs.size(); ++k)
      CHECK(std::abs(e.sys.outputs[k].dot(u) - sol.outputs[k]) <= 1e-8);
  }
}

TEST_CASE("Galerkin solution is optimal in the parameter energy norm") {
  const auto& e = eye();
  const auto& rm = model();
  const auto mu = Parameter::make({300, 311, 70, 100, 250, 0.25});
  const auto A = e.sys.assemble_A(mu);
  const Vector u = e.sys.solve(mu);
  const auto sol = rbm::online_solve(rm, mu, 3);
  auto energy = [&](const Vector& c) {
    const Vector err = u - rm.Z.leftCols(3) * c;
    return err.dot(A * err);
  };
  const double best = energy(sol.u);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 10; ++t) {
    Vector d(3);
    for (auto& x : d) x = 1e-3 * n01(rng) * sol.u.norm();
    CHECK(energy(sol.u + d) >= best);
  }
}

TEST_CASE("error bounds are rigorous on random parameters") {
  const auto& e = eye();
  const auto& rm = model();
  std::size_t failures = 0;
  for (const auto& mu : rbm::training_set(100, 2024)) {
    const Vector u = e.sys.solve(mu);
    for (std::size_t N = 2; N <= std::min<std::size_t>(12, rm.size()); N += 2) {
      const auto sol = rbm::online_solve(rm, mu, N);
      const double err = e.x_norm(u - rbm::reconstruct(rm, sol.u));
      if (sol.certificate.delta < err * (1 - 1e-8)) ++failures;
      for (std::size_t k = 0; k < sol.outputs.size(); ++k)
        if (std::abs(e.sys.outputs[k].dot(u) - sol.outputs[k]) > sol.certificate.delta_s[k]) ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("greedy termination") {
  const auto& e = eye();
  rbm::GreedyOptions g;
  g.tolerance = std::numeric_limits<double>::infinity();
  const auto one = rbm::greedy_train(e.sys, e.X, rbm::training_set(50, 1), g);
  CHECK(one.size() == 1);
  CHECK(one.termination == "tolerance");

  const auto& rm = model();
  CHECK(rm.size() <= 12);
  for (std::size_t i = 1; i < rm.history.size(); ++i)
    CHECK(rm.history[i].max_bound < rm.history[i - 1].max_bound);
}

TEST_CASE("eye greedy with the default tolerance stays within 20 basis functions") {
  const auto rm = rbm::greedy_train(eye().sys, eye().X, rbm::training_set(1000, 1));
  CHECK(rm.size() <= 20);
  CHECK(rm.termination == "tolerance");
}

TEST_CASE("training set is seeded and log-uniform inside the box") {
  const auto a = rbm::training_set(500, 42), b = rbm::training_set(500, 42);
  CHECK(a == b);
  CHECK_FALSE(a == rbm::training_set(500, 43));
  std::size_t below_geometric_mid = 0;
  for (const auto& mu : a) {
    CHECK(mu.in_domain());
    below_geometric_mid += mu.E < std::sqrt(20.0 * 320.0);
  }
  // log-uniform puts half the mass below the geometric midpoint
  CHECK(below_geometric_mid > 200);
  CHECK(below_geometric_mid < 300);
}

TEST_CASE("reduced model survives save and load") {
  const auto& rm = model();
  const auto path = (std::filesystem::temp_directory_path() / "eyeheat_rbm_test.rbm").string();
  rm.save(path);
  const auto back = rbm::ReducedModel::load(path);
  std::filesystem::remove(path);
  const auto mu = Parameter::make({295, 310.5, 15, 60, 35, 0.45});
  const auto a = rbm::online_solve(rm, mu), b = rbm::online_solve(back, mu);
  CHECK(a.u == b.u);
  CHECK(a.outputs == b.outputs);
  CHECK(a.certificate.delta == b.certificate.delta);
  CHECK(back.history.size() == rm.history.size());
  CHECK(back.termination == rm.termination);
  CHECK(back.output_names == rm.output_names);
}

}
