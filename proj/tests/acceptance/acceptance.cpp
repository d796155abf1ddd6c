// Acceptance run: one PASS/FAIL line per criterion, fixed seed.

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "eyeheat/uq.hpp"
#include "oracles.hpp"

using namespace eyeheat;
using fem::Parameter;

namespace {

constexpr std::uint64_t seed = 1;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail
            << std::endl;
  failures += !pass;
}

template <class F>
void criterion(int id, const std::string& title, F&& body) {
  try {
    std::ostringstream detail;
    detail.precision(4);
    const bool pass = body(detail);
    report(id, title, pass, detail.str());
  } catch (const std::exception& e) {
    report(id, title, false, std::string("exception: ") + e.what());
  }
}

std::vector<fem::OutputFunctional> eye_outputs(const mesh::GeneratedEye& eye) {
  std::vector<fem::OutputFunctional> outs;
  for (const auto& l : eye.landmarks)
    outs.push_back(fem::OutputFunctional::point(eye.mesh, l.name, l.position));
  return outs;
}

struct Reduced {
  mesh::GeneratedEye eye;
  affine::AffineSystem sys;
  fem::SparseMatrix X;
  rbm::ReducedModel rm;
};

Reduced reduce(int refinement) {
  Reduced r{mesh::generate_eye_2d(refinement)};
  r.sys = affine::build_affine(r.eye.mesh, fem::RegionTable::eye_default(), {}, eye_outputs(r.eye));
  r.X = rbm::x_inner_product(r.sys);
  r.rm = rbm::greedy_train(r.sys, r.X, rbm::training_set(1000, seed));
  return r;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
}

}  // namespace

int main() {
  std::cout.precision(4);

  criterion(1, "FEM convergence on a manufactured solution", [](std::ostream& d) {
    const auto t0 = Clock::now();
    std::vector<oracle::MmsErrors> e;
    for (int n : {8, 16, 32, 64}) e.push_back(oracle::mms_unit_square(n));
    const double t = since(t0);
    bool ok = t < 30.0;
    d << "rates L2/H1";
    for (std::size_t i = 1; i < e.size(); ++i) {
      const double l2 = std::log2(e[i - 1].l2 / e[i].l2), h1 = std::log2(e[i - 1].h1 / e[i].h1);
      ok = ok && std::abs(l2 - 2.0) <= 0.2 && std::abs(h1 - 1.0) <= 0.2;
      d << " " << l2 << "/" << h1;
    }
    d << ", " << t << " s";
    return ok;
  });

  criterion(2, "two-layer slab interface temperature", [](std::ostream& d) {
    const auto r = oracle::two_layer_slab(40);
    const double rel = std::abs(r.computed - r.exact) / r.exact;
    d << "computed " << std::setprecision(10) << r.computed << " K, closed form " << r.exact
      << " K, relative " << std::setprecision(3) << rel;
    return rel <= 1e-3;
  });

  const auto eye3 = mesh::generate_eye_2d(3);
  const auto regions = fem::RegionTable::eye_default();
  const auto mu_bar = Parameter::baseline();

  criterion(3, "linearized vs nonlinear model at the baseline", [&](std::ostream& d) {
    const fem::PhysicalConstants c;  // h_r = 6
    const auto nl = fem::solve_nonlinear(eye3.mesh, regions, c, mu_bar,
                                         fem::DiscreteField::constant(eye3.mesh, mu_bar.T_bl));
    const auto sys = fem::assemble_linear(eye3.mesh, regions, c, mu_bar);
    const auto lin = fem::solve_linear(sys.A, sys.f, eye3.mesh);
    const double rel = fem::relative_l2_difference(eye3.mesh, nl.field.values(), lin.values());
    const double max = (nl.field.values() - lin.values()).cwiseAbs().maxCoeff();
    d << "relative L2 " << rel << ", max nodal " << max << " K, Newton " << nl.iterations
      << " iterations (" << eye3.mesh.num_vertices() << " DOF)";
    return rel <= 1e-4 && max <= 0.01 && nl.iterations <= 10;
  });

  criterion(4, "baseline corneal-point temperature", [&](std::ostream& d) {
    const auto nl = fem::solve_nonlinear(eye3.mesh, regions, {}, mu_bar,
                                         fem::DiscreteField::constant(eye3.mesh, mu_bar.T_bl));
    const auto O = fem::OutputFunctional::point(eye3.mesh, "O", eye3.landmark("O")->position);
    const double T = fem::evaluate_output(nl.field, O);
    d << "T_O = " << std::setprecision(7) << T << " K";
    return T >= 303.0 && T <= 310.0;
  });

  const auto t_offline = Clock::now();
  const auto red = reduce(3);
  const double offline = since(t_offline);
  const auto test_set = rbm::training_set(100, seed + 1000);
  std::vector<fem::Vector> truth;
  for (const auto& mu : test_set) truth.push_back(red.sys.solve(mu));
  auto x_norm = [&](const fem::Vector& v) { return std::sqrt(v.dot(red.X * v)); };

  criterion(5, "error bounds are rigorous", [&](std::ostream& d) {
    std::size_t field = 0, output = 0, cases = 0;
    double eta_min = INFINITY;
    for (std::size_t i = 0; i < test_set.size(); ++i)
      for (std::size_t N = 2; N <= std::min<std::size_t>(12, red.rm.size()); N += 2) {
        const auto sol = rbm::online_solve(red.rm, test_set[i], N);
        const double err = x_norm(truth[i] - rbm::reconstruct(red.rm, sol.u));
        ++cases;
        if (err > 0) eta_min = std::min(eta_min, sol.certificate.delta / err);
        if (sol.certificate.delta < err * (1 - 1e-8)) ++field;
        for (std::size_t k = 0; k < sol.outputs.size(); ++k)
          if (std::abs(red.sys.outputs[k].dot(truth[i]) - sol.outputs[k]) > sol.certificate.delta_s[k])
            ++output;
      }
    d << cases << " cases, min effectivity " << eta_min << ", field violations " << field
      << ", output violations " << output;
    return field == 0 && output == 0 && red.rm.size() >= 12;
  });

  criterion(6, "reduced-basis convergence", [&](std::ostream& d) {
    auto mean_error = [&](std::size_t N) {
      double s = 0;
      for (std::size_t i = 0; i < test_set.size(); ++i)
        s += x_norm(truth[i] - rbm::reconstruct(red.rm, rbm::online_solve(red.rm, test_set[i], N).u));
      return s / static_cast<double>(test_set.size());
    };
    const double e2 = mean_error(2), e10 = mean_error(10);
    d << "mean X error N=2 " << e2 << ", N=10 " << e10 << " (ratio " << e2 / e10
      << "); greedy N = " << red.rm.size() << " (" << red.rm.termination << ", " << offline
      << " s offline)";
    return e2 / e10 >= 10.0 && red.rm.size() <= 20 && red.rm.termination == "tolerance";
  });

  criterion(7, "online speed-up on a fine mesh", [&](std::ostream& d) {
    const auto fine = reduce(4);
    const auto& m = fine.eye.mesh;
    const int fem_reps = 3;
    const auto t0 = Clock::now();
    for (int r = 0; r < fem_reps; ++r) {
      const auto sys = fem::assemble_linear(m, regions, {}, mu_bar);
      fem::solve_linear(sys.A, sys.f, m);
    }
    const double t_fem = since(t0) / fem_reps;
    const int reps = 10000;
    const auto t1 = Clock::now();
    double sink = 0;
    for (int r = 0; r < reps; ++r) sink += rbm::online_solve(fine.rm, mu_bar, 10).certificate.delta;
    const double t_online = since(t1) / reps;
    d << m.num_vertices() << " DOF, FEM " << t_fem << " s, online N=10 " << t_online
      << " s, speed-up " << t_fem / t_online;
    return m.num_vertices() >= 20000 && fine.rm.size() >= 10 && t_fem / t_online >= 100.0 &&
           t_online < 5e-3 && std::isfinite(sink);
  });

  criterion(8, "Ishigami Sobol indices", [](std::ostream& d) {
    const double pi = std::numbers::pi, a = 7.0, b = 0.1;
    uq::InputDistribution dist;
    for (int i = 0; i < 3; ++i) {
      dist.names.push_back("x" + std::to_string(i + 1));
      dist.marginals.push_back(uq::Marginal::uniform(-pi, pi));
    }
    const uq::Model model{{"y"}, [&](std::span<const double> x) {
                            return std::vector<double>{std::sin(x[0]) +
                                                       a * std::pow(std::sin(x[1]), 2) +
                                                       b * std::pow(x[2], 4) * std::sin(x[0])};
                          }};
    const double V1 = 0.5 * std::pow(1 + b * std::pow(pi, 4) / 5, 2), V2 = a * a / 8;
    const double V13 = b * b * std::pow(pi, 8) * (1.0 / 18 - 1.0 / 50), V = V1 + V2 + V13;
    const double first[3] = {V1 / V, V2 / V, 0.0}, total[3] = {(V1 + V13) / V, V2 / V, V13 / V};
    const auto t0 = Clock::now();
    const auto s = uq::pce_fit(model, dist, {2000, 9, seed, 0}).sobol[0];
    const double t = since(t0);
    double worst = 0;
    for (int i = 0; i < 3; ++i)
      worst = std::max({worst, std::abs(s.first[i] - first[i]), std::abs(s.total[i] - total[i])});
    d << "max deviation " << worst << ", " << t << " s";
    return worst <= 0.02 && t < 60.0;
  });

  const auto dist = uq::InputDistribution::eye_default();
  const auto model = uq::reduced_model(red.rm);
  const auto pce = uq::pce_fit(model, dist, {200, 3, seed, 0});
  const auto& names = red.rm.output_names;
  const std::vector<std::string> path = {"O", "B1", "C", "D1", "G"};
  const auto& sO = pce.sobol[index_of(names, "O")];
  const auto T_amb = index_of(dist.names, "T_amb"), T_bl = index_of(dist.names, "T_bl");

  criterion(9, "eye Sobol pattern", [&](std::ostream& d) {
    double strong = INFINITY, weak = 0;
    for (const char* n : {"T_amb", "h_amb", "E"}) strong = std::min(strong, sO.total[index_of(dist.names, n)]);
    for (const char* n : {"k_lens", "h_bl"}) weak = std::max(weak, sO.total[index_of(dist.names, n)]);
    bool ok = strong >= 3 * weak && sO.total[index_of(dist.names, "k_lens")] < 0.05 &&
              sO.total[index_of(dist.names, "h_bl")] < 0.05;
    d << "at O min strong S_tot " << strong << ", max weak S_tot " << weak << "; S_tot(T_amb)";
    for (std::size_t p = 0; p < path.size(); ++p) {
      const auto& s = pce.sobol[index_of(names, path[p])];
      d << " " << s.total[T_amb];
      if (p > 0) ok = ok && s.total[T_amb] < pce.sobol[index_of(names, path[p - 1])].total[T_amb];
    }
    d << "; S_tot(T_bl)";
    for (std::size_t p = 0; p < path.size(); ++p) {
      const auto& s = pce.sobol[index_of(names, path[p])];
      d << " " << s.total[T_bl];
      if (p > 0) ok = ok && s.total[T_bl] > pce.sobol[index_of(names, path[p - 1])].total[T_bl];
    }
    return ok;
  });

  criterion(10, "chaos predictivity and index convergence", [&](std::ostream& d) {
    const auto rows = uq::sobol_convergence(model, dist, {200, 400, 1000}, index_of(names, "O"), 3, seed);
    d << "Q2 at 200 = " << std::setprecision(5) << sO.q2 << ", deviation at 400 = "
      << std::setprecision(4) << rows[1].max_deviation;
    return sO.q2 >= 0.99 && rows[1].max_deviation <= 0.05;
  });

  criterion(11, "uncertainty propagation", [&](std::ostream& d) {
    const auto r = uq::propagate(model, dist, 10000, seed);
    const double std_O = r.outputs[index_of(names, "O")].std;
    const auto saltelli = uq::saltelli_sobol(model, dist, {10000, seed, 0});
    double worst = 0;
    for (std::size_t k = 0; k < saltelli.size(); ++k)
      for (std::size_t i = 0; i < dist.dimension(); ++i)
        worst = std::max({worst, std::abs(saltelli[k].first[i] - pce.sobol[k].first[i]),
                          std::abs(saltelli[k].total[i] - pce.sobol[k].total[i])});
    d << "10000 solves in " << r.wall_time << " s (" << r.failed << " failed), std at O " << std_O
      << " K, max PCE/Saltelli gap " << worst;
    return r.wall_time < 60.0 && r.failed == 0 && std_O >= 0.5 && std_O <= 5.0 && worst <= 0.05;
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
