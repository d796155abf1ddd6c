#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "eyeheat/error.hpp"
#include "eyeheat/uq.hpp"

using namespace eyeheat;
using uq::Marginal;

namespace {

double quadrature_mean(const Marginal& m) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate([&](double x) { return x * m.pdf(x); }, m.lower(),
                                              m.upper(), 15, 1e-12);
}

uq::InputDistribution uniform_box(std::size_t d, double lo, double hi) {
  uq::InputDistribution dist;
  for (std::size_t i = 0; i < d; ++i) {
    dist.names.push_back("x" + std::to_string(i + 1));
    dist.marginals.push_back(Marginal::uniform(lo, hi));
  }
  return dist;
}

uq::Model scalar(std::function<double(std::span<const double>)> f) {
  return {{"y"}, [f](std::span<const double> x) { return std::vector<double>{f(x)}; }};
}

double column_mean(const uq::Matrix& m, Eigen::Index c) { return m.col(c).mean(); }

const rbm::ReducedModel& small_model() {
  static const rbm::ReducedModel rm = [] {
    const auto eye = mesh::generate_eye_2d(1);
    std::vector<fem::OutputFunctional> outs;
    for (const auto& l : eye.landmarks)
      outs.push_back(fem::OutputFunctional::point(eye.mesh, l.name, l.position));
    const auto sys = affine::build_affine(eye.mesh, fem::RegionTable::eye_default(), {}, outs);
    return rbm::greedy_train(sys, rbm::x_inner_product(sys), rbm::training_set(100, 1));
  }();
  return rm;
}

}  // namespace

TEST_SUITE("uq") {

TEST_CASE("closed-form means agree with quadrature") {
  const auto dist = uq::InputDistribution::eye_default();
  for (std::size_t i = 0; i < dist.dimension(); ++i) {
    CAPTURE(dist.names[i]);
    CHECK(dist.marginals[i].mean() == doctest::Approx(quadrature_mean(dist.marginals[i])).epsilon(1e-9));
  }
  // the alternative reading of the evaporation law
  const auto alt = uq::InputDistribution::eye_default(0.15);
  CHECK(alt.marginals[4].mean() == doctest::Approx(quadrature_mean(alt.marginals[4])).epsilon(1e-9));
}

TEST_CASE("evaporation sample mean against the quadrature oracle") {
  const auto dist = uq::InputDistribution::eye_default();
  const auto x = dist.sample(1000000, 17);
  const double oracle = quadrature_mean(dist.marginals[4]);
  CHECK(std::abs(column_mean(x, 4) - oracle) / oracle < 0.01);
}

TEST_CASE("blood exchange coefficient mean") {
  const auto dist = uq::InputDistribution::eye_default();
  CHECK(std::abs(dist.marginals[3].mean() - 65.8) / 65.8 < 0.01);
  const auto x = dist.sample(200000, 3);
  CHECK(std::abs(column_mean(x, 3) - 65.8) / 65.8 < 0.01);
}

TEST_CASE("truncated draws stay inside their bounds") {
  const auto dist = uq::InputDistribution::eye_default();
  const auto x = dist.sample(100000, 5);
  for (std::size_t i = 0; i < dist.dimension(); ++i) {
    CHECK(x.col(i).minCoeff() >= dist.marginals[i].lower());
    CHECK(x.col(i).maxCoeff() <= dist.marginals[i].upper());
  }
  CHECK(x.col(0).minCoeff() >= 283.15);
  CHECK(x.col(0).maxCoeff() <= 303.15);
}

TEST_CASE("quantile inverts the cdf") {
  const auto m = Marginal::lognormal(std::log(40.0) - 0.245, 0.7, 20.0, 20.0, 130.0);
  for (double u : {0.0, 0.01, 0.3, 0.5, 0.9, 1.0}) CHECK(m.cdf(m.quantile(u)) == doctest::Approx(u));
  CHECK(m.quantile(0.0) == doctest::Approx(20.0));
  CHECK(m.quantile(1.0) == doctest::Approx(130.0));
  const auto c = Marginal::constant(3.0);
  CHECK(c.quantile(0.7) == 3.0);
  CHECK(c.mean() == 3.0);
}

TEST_CASE("distribution JSON round trip and error paths") {
  const auto dist = uq::InputDistribution::eye_default();
  const auto back = uq::InputDistribution::from_json(dist.to_json());
  CHECK(back.sample(10, 1) == dist.sample(10, 1));

  auto j = dist.to_json();
  j["inputs"]["E"]["sigma_log"] = -1.0;
  try {
    uq::InputDistribution::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path().rfind("inputs.E", 0) == 0);
  }
  auto missing = dist.to_json();
  missing["inputs"].erase("k_lens");
  CHECK_THROWS_AS(uq::InputDistribution::from_json(missing), ConfigError);
  CHECK_THROWS_AS(Marginal::lognormal(0.0, 1.0, 5.0, 1.0, 10.0), ValidationError);
}

TEST_CASE("constant inputs propagate to a single solve") {
  const auto& rm = small_model();
  const auto mu = fem::Parameter::baseline();
  uq::InputDistribution dist;
  for (std::size_t i = 0; i < fem::Parameter::size; ++i) {
    dist.names.emplace_back(fem::Parameter::names()[i]);
    dist.marginals.push_back(Marginal::constant(mu[i]));
  }
  const auto r = uq::propagate(uq::reduced_model(rm), dist, 100, 1);
  const auto ref = rbm::online_solve(rm, mu).outputs;
  CHECK(r.failed == 0);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(r.outputs[k].std == 0.0);
    CHECK(r.outputs[k].mean == doctest::Approx(ref[k]).epsilon(1e-14));
  }
}

TEST_CASE("chaos basis size") {
  const auto idx = uq::total_degree_indices(3, 3);
  CHECK(idx.size() == 20);
  CHECK(idx.front() == std::vector<int>{0, 0, 0});
  CHECK(uq::total_degree_indices(6, 3).size() == 84);
}

TEST_CASE("single-variable linear model") {
  const auto dist = uq::InputDistribution::eye_default();
  const auto fit = uq::pce_fit(scalar([](std::span<const double> x) { return x[0]; }), dist,
                               {200, 3, 1, 0});
  const auto& s = fit.sobol[0];
  CHECK(s.first[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.total[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 1; i < 6; ++i) {
    CHECK(std::abs(s.first[i]) < 1e-10);
    CHECK(std::abs(s.total[i]) < 1e-10);
  }
}

TEST_CASE("polynomials up to the fitted degree are reproduced") {
  const auto dist = uniform_box(3, -1.0, 2.0);
  const auto model = scalar([](std::span<const double> x) {
    return x[0] * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[2] * x[2] + 1.0;
  });
  const auto fit = uq::pce_fit(model, dist, {60, 3, 4, 0});
  CHECK(fit.sobol[0].q2 >= 1.0 - 1e-10);
  const std::array<double, 3> x{0.3, -0.7, 1.9};
  CHECK(fit.chaos.evaluate(x)[0] == doctest::Approx(model.evaluate(x)[0]).epsilon(1e-10));
  CHECK_THROWS_AS(uq::pce_fit(model, dist, {30, 3, 4, 0}), ValidationError);
}

TEST_CASE("Ishigami indices from the chaos expansion") {
  const double pi = std::numbers::pi, a = 7.0, b = 0.1;
  const auto dist = uniform_box(3, -pi, pi);
  const auto model = scalar([&](std::span<const double> x) {
    return std::sin(x[0]) + a * std::pow(std::sin(x[1]), 2) + b * std::pow(x[2], 4) * std::sin(x[0]);
  });
  // analytic decomposition
  const double V1 = 0.5 * std::pow(1 + b * std::pow(pi, 4) / 5, 2);
  const double V2 = a * a / 8;
  const double V13 = std::pow(b, 2) * std::pow(pi, 8) * (1.0 / 18 - 1.0 / 50);
  const double V = V1 + V2 + V13;
  const auto s = uq::pce_fit(model, dist, {2000, 9, 1, 0}).sobol[0];
  CHECK(std::abs(s.first[0] - V1 / V) < 0.02);
  CHECK(std::abs(s.first[1] - V2 / V) < 0.02);
  CHECK(std::abs(s.first[2]) < 0.02);
  CHECK(std::abs(s.total[0] - (V1 + V13) / V) < 0.02);
  CHECK(std::abs(s.total[1] - V2 / V) < 0.02);
  CHECK(std::abs(s.total[2] - V13 / V) < 0.02);
  CHECK(uq::sanity_violations(s).empty());
}

TEST_CASE("Saltelli on an additive linear model") {
  const auto dist = uniform_box(3, 0.0, 1.0);
  const auto model = scalar([](std::span<const double> x) { return x[0] + 2 * x[1] + 3 * x[2]; });
  const auto s = uq::saltelli_sobol(model, dist, {10000, 8, 100})[0];
  const double expected[3] = {1.0 / 14, 4.0 / 14, 9.0 / 14};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(s.first[i] - expected[i]) < 0.03);
    CHECK(std::abs(s.total[i] - expected[i]) < 0.03);
    CHECK(s.first_ci[i].lower <= s.first_ci[i].upper);
  }
  CHECK(s.evaluations == 10000 * 5);
  CHECK(std::isnan(s.q2));
}

TEST_CASE("constant output is flagged degenerate") {
  const auto dist = uniform_box(2, 0.0, 1.0);
  const auto model = scalar([](std::span<const double>) { return 310.0; });
  for (const auto& s : {uq::saltelli_sobol(model, dist, {1000, 1, 10})[0],
                        uq::pce_fit(model, dist, {40, 2, 1, 10}).sobol[0]}) {
    CHECK(s.degenerate);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(s.first[i] == 0.0);
      CHECK(s.total[i] == 0.0);
    }
  }
}

TEST_CASE("identical seeds reproduce results bit for bit") {
  const auto dist = uq::InputDistribution::eye_default();
  CHECK(dist.sample(1000, 9) == dist.sample(1000, 9));
  CHECK_FALSE(dist.sample(1000, 9) == dist.sample(1000, 10));
  const auto model = uq::reduced_model(small_model());
  const auto a = uq::propagate(model, dist, 2000, 9), b = uq::propagate(model, dist, 2000, 9);
  CHECK(a.samples == b.samples);
  CHECK(a.outputs[0].std == b.outputs[0].std);
  const auto p = uq::pce_fit(model, dist, {200, 3, 9, 20}), q = uq::pce_fit(model, dist, {200, 3, 9, 20});
  CHECK(p.sobol[0].total == q.sobol[0].total);
  CHECK(p.sobol[0].total_ci[0].lower == q.sobol[0].total_ci[0].lower);
}

TEST_CASE("convergence table") {
  const auto dist = uq::InputDistribution::eye_default();
  const auto rows = uq::sobol_convergence(uq::reduced_model(small_model()), dist, {200, 400, 1000},
                                          0, 3, 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows.back().max_deviation == 0.0);
  CHECK(rows[1].max_deviation <= 0.05);
}

}
