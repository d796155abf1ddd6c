#include <doctest.h>

#include <cmath>

#include "eyeheat/error.hpp"
#include "eyeheat/fem/heat.hpp"
#include "oracles.hpp"

using namespace eyeheat;
using fem::Parameter;

namespace {

mesh::Mesh single_triangle() {
  return mesh::Mesh(2, {0, 0, 1, 0, 0, 1}, {0, 1, 2}, {0}, {"cornea"}, {0, 1, 1, 2, 2, 0},
                    std::vector<mesh::BoundaryLabel>(3, mesh::BoundaryLabel::body));
}

fem::RegionTable table(const std::string& region, double k) {
  return fem::RegionTable({{region, k}, {"lens", 0.4}}, "lens");
}

// Robin coefficients and loads switched off.
Parameter insulated() { return Parameter::relaxed({298, 310, 0, 0, 0, 0.4}); }

fem::PhysicalConstants no_radiation() {
  fem::PhysicalConstants c;
  c.h_r = 0.0;
  return c;
}

double max_abs(const fem::SparseMatrix& A) {
  double m = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (fem::SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("single triangle stiffness matches the hand computation") {
  // grad phi = (-1,-1), (1,0), (0,1); area 1/2
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  const auto sys = fem::assemble_linear(single_triangle(), table("cornea", 1.0), no_radiation(),
                                        insulated());
  CHECK((Eigen::Matrix3d(Eigen::MatrixXd(sys.A)) - expected).norm() < 1e-15);
  CHECK(sys.f.norm() == 0.0);
}

TEST_CASE("boundary mass of one edge") {
  const auto m = single_triangle();
  const auto M = fem::boundary_mass(m, [](std::size_t f) { return f == 0; });
  // edge (0,0)-(1,0), length 1: L/6 [[2,1],[1,2]]
  CHECK(M.coeff(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(M.coeff(0, 1) == doctest::Approx(1.0 / 6));
  CHECK(M.coeff(1, 1) == doctest::Approx(1.0 / 3));
  CHECK(M.coeff(2, 2) == 0.0);
}

TEST_CASE("operator is linear in the conductivity") {
  const auto m = mesh::unit_square(6, "cornea");
  const auto a = fem::assemble_linear(m, table("cornea", 0.5), no_radiation(), insulated());
  const auto b = fem::assemble_linear(m, table("cornea", 1.0), no_radiation(), insulated());
  CHECK(max_abs(b.A - 2.0 * a.A) == 0.0);
}

TEST_CASE("missing region is reported by name") {
  const auto m = mesh::unit_square(2, "retina");
  try {
    fem::assemble_linear(m, table("cornea", 1.0), no_radiation(), Parameter::baseline());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("retina") != std::string::npos);
  }
}

TEST_CASE("SPD solve of A x = A 1 returns ones") {
  const auto m = mesh::unit_square(8);
  const double k = 1.0;
  fem::SparseMatrix A = fem::stiffness(m, std::span<const double>(&k, 1));
  A += fem::boundary_mass(m, [](std::size_t) { return true; });
  const fem::Vector one = fem::Vector::Ones(A.rows());
  fem::SolveReport report;
  const auto x = fem::solve_spd(A, A * one, {}, &report);
  CHECK((x - one).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(report.relative_residual < 1e-12);

  fem::SolverOptions cg;
  cg.direct_limit = 0;
  const auto y = fem::solve_spd(A, A * one, cg, &report);
  CHECK_FALSE(report.direct);
  CHECK((y - one).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("two-layer slab matches the series-resistance interface temperature") {
  const auto r = oracle::two_layer_slab(20);
  CHECK(std::abs(r.computed - r.exact) / r.exact < 1e-3);
  // a piecewise linear exact solution is reproduced to round-off
  CHECK(std::abs(r.computed - r.exact) < 1e-9);
}

TEST_CASE("manufactured solution converges at the P1 rates") {
  const auto a = oracle::mms_unit_square(8);
  const auto b = oracle::mms_unit_square(16);
  const auto c = oracle::mms_unit_square(32);
  const double l2 = std::log2(b.l2 / c.l2), h1 = std::log2(b.h1 / c.h1);
  CHECK(std::log2(a.l2 / b.l2) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(l2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(h1 == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("radiation coefficient") {
  const fem::PhysicalConstants c;
  const double hr = fem::linearize_hr(306.0, 298.0, c);
  CHECK(hr > 5.5);
  CHECK(hr < 6.5);
  const double T = 300.0;
  CHECK(fem::linearize_hr(T, T, c) == doctest::Approx(4 * c.sigma * c.emissivity * T * T * T));
  auto black = c;
  black.emissivity = 0.0;
  CHECK(fem::linearize_hr(306.0, 298.0, black) == 0.0);
}

TEST_CASE("output functionals") {
  const auto m = mesh::unit_square(4, "lens");
  CHECK(fem::evaluate_output(fem::DiscreteField::constant(m, 310.0),
                             fem::OutputFunctional::point(m, "p", {0.3, 0.7, 0})) ==
        doctest::Approx(310.0));

  fem::Vector lin(m.num_vertices());
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    lin[v] = 1.0 + 2.0 * m.vertex(v)[0] + 3.0 * m.vertex(v)[1];
  const fem::DiscreteField field(lin, m);
  // mean of a linear field over the square is its value at (1/2, 1/2)
  CHECK(std::abs(fem::evaluate_output(field, fem::OutputFunctional::region_mean(m, "mean", "lens")) -
                 3.5) < 1e-10);
  const auto at_vertex = fem::OutputFunctional::point(m, "v7", {m.vertex(7)[0], m.vertex(7)[1], 0});
  CHECK(fem::evaluate_output(field, at_vertex) == doctest::Approx(lin[7]));

  const auto other = mesh::unit_square(5, "lens");
  CHECK_THROWS(fem::evaluate_output(fem::DiscreteField::constant(other, 1.0), at_vertex));
}

TEST_CASE("zero emissivity makes the nonlinear model linear") {
  const auto eye = mesh::generate_eye_2d(1);
  const auto regions = fem::RegionTable::eye_default();
  fem::PhysicalConstants c;
  c.emissivity = 0.0;
  c.h_r = 0.0;
  const auto mu = Parameter::baseline();
  const auto sys = fem::assemble_linear(eye.mesh, regions, c, mu);
  const auto lin = fem::solve_linear(sys.A, sys.f, eye.mesh);
  const auto nl = fem::solve_nonlinear(eye.mesh, regions, c, mu,
                                       fem::DiscreteField::constant(eye.mesh, 310.0));
  CHECK((lin.values() - nl.field.values()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("baseline eye solution") {
  const auto eye = mesh::generate_eye_2d(2);
  const auto regions = fem::RegionTable::eye_default();
  const auto mu = Parameter::baseline();
  const fem::PhysicalConstants c;
  const auto nl = fem::solve_nonlinear(eye.mesh, regions, c, mu,
                                       fem::DiscreteField::constant(eye.mesh, mu.T_bl));
  CHECK(nl.iterations <= 10);
  const auto O = fem::OutputFunctional::point(eye.mesh, "O", eye.landmark("O")->position);
  const double TO = fem::evaluate_output(nl.field, O);
  CHECK(TO >= 303.0);
  CHECK(TO <= 310.0);

  // E_L with h_r taken at the nonlinear corneal mean
  const auto cornea = fem::OutputFunctional::region_mean(eye.mesh, "cornea", "cornea");
  auto lc = c;
  lc.h_r = fem::linearize_hr(fem::evaluate_output(nl.field, cornea), mu.T_amb, c);
  const auto sys = fem::assemble_linear(eye.mesh, regions, lc, mu);
  const auto lin = fem::solve_linear(sys.A, sys.f, eye.mesh);
  CHECK((lin.values() - nl.field.values()).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("one-at-a-time sweeps") {
  const auto eye = mesh::generate_eye_2d(2);
  const auto regions = fem::RegionTable::eye_default();
  const fem::PhysicalConstants c;
  const auto mu = Parameter::baseline();
  const std::vector<fem::OutputFunctional> outs = {
      fem::OutputFunctional::point(eye.mesh, "O", eye.landmark("O")->position)};

  const auto single = fem::dsa_sweep(eye.mesh, regions, c, "T_amb", {mu.T_amb}, mu, outs);
  const auto nl = fem::solve_nonlinear(eye.mesh, regions, c, mu,
                                       fem::DiscreteField::constant(eye.mesh, mu.T_bl));
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].outputs[0] == doctest::Approx(fem::evaluate_output(nl.field, outs[0])).epsilon(1e-12));

  const auto tamb =
      fem::dsa_sweep(eye.mesh, regions, c, "T_amb", {283.15, 288.15, 293.15, 298.15, 303.15}, mu, outs);
  for (std::size_t i = 1; i < tamb.rows.size(); ++i)
    CHECK(tamb.rows[i].outputs[0] > tamb.rows[i - 1].outputs[0]);

  const auto hamb = fem::dsa_sweep(eye.mesh, regions, c, "h_amb", {8.0, 100.0}, mu, outs);
  CHECK(hamb.rows[0].outputs[0] - hamb.rows[1].outputs[0] >= 3.0);

  const auto bad = fem::dsa_sweep(eye.mesh, regions, c, "h_bl", {-1.0, 65.0}, mu, outs);
  CHECK_FALSE(bad.rows[0].ok);
  CHECK_FALSE(bad.rows[0].error.empty());
  CHECK(bad.rows[1].ok);
}

TEST_CASE("parameter box") {
  CHECK_NOTHROW(Parameter::make({298, 310, 10, 65, 40, 0.4}));
  CHECK_THROWS_AS(Parameter::make({298, 310, 10, 65, 400, 0.4}), ValidationError);
  CHECK(Parameter::relaxed({298, 310, 10, 65, 400, 0.4}).E == 400.0);
  CHECK_THROWS_AS(Parameter::relaxed({298, 310, -1, 65, 40, 0.4}), ValidationError);
  CHECK(Parameter::index_of("k_lens") == 5);
  CHECK_THROWS_AS(Parameter::index_of("k_cornea"), ValidationError);
}

}
