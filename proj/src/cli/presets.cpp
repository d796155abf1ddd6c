#include <cmath>
#include <filesystem>
#include <map>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"
#include "internal.hpp"

namespace eyeheat::cli {

namespace {

namespace fs = std::filesystem;

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

std::vector<double> range(double first, double last, double step) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::llround((last - first) / step));
  for (int i = 0; i <= n; ++i) v.push_back(first + i * step);
  return v;
}

const std::map<std::string, Sweep>& sweeps() {
  static const std::map<std::string, Sweep> table = [] {
    std::map<std::string, Sweep> t;
    t["dsa-E"] = {"E", range(20, 320, 20)};
    auto hamb = range(20, 100, 10);
    hamb.insert(hamb.begin(), {8, 10});
    t["dsa-hamb"] = {"h_amb", hamb};
    auto hbl = range(80, 110, 10);
    hbl.insert(hbl.begin(), {50, 60, 65, 70});
    t["dsa-hbl"] = {"h_bl", hbl};
    t["dsa-klens"] = {"k_lens", {0.21, 0.3, 0.4, 0.5, 0.544}};
    t["dsa-Tamb"] = {"T_amb", range(283.15, 303.15, 2)};
    t["dsa-Tbl"] = {"T_bl", range(308, 312, 0.5)};
    return t;
  }();
  return table;
}

const std::vector<std::string> sobol_points = {"O", "cornea", "B1", "C", "D1", "G"};

// Reduced model shared by the RBM and UQ presets.
struct Offline {
  MeshSource src;
  fem::RegionTable regions = fem::RegionTable::eye_default();
  fem::PhysicalConstants consts;
  ReducedBuild build;
};

Offline offline(Context& ctx, const fs::path& dir) {
  auto& s = ctx.settings;
  Offline o{load_mesh_source(s)};
  o.regions = region_table(s);
  o.consts = physical_constants(s, fem::Parameter::baseline());
  rbm::GreedyOptions g;
  g.tolerance = s.number("tol", 1e-6);
  g.max_size = static_cast<std::size_t>(s.integer("nmax", 20, 1));
  const auto train = static_cast<std::size_t>(s.integer("train-size", 1000, 1));
  o.build = build_reduced(o.src, o.regions, o.consts, outputs(s, o.src), g, train, s.seed(),
                          ctx.out);
  ctx.manifest.timing("offline", o.build.offline_time);
  ctx.manifest.info()["N"] = o.build.model.size();
  ctx.manifest.info()["termination"] = o.build.model.termination;
  save_model(ctx, o.build.model, o.src, (dir / "model.rbm").string());
  write_artifact(ctx, (dir / "greedy_history.csv").string(), "greedy-history",
                 [&](std::ostream& os) { write_history_csv(os, o.build.model); });
  return o;
}

double x_norm(const fem::SparseMatrix& X, const fem::Vector& v) {
  return std::sqrt(std::max(0.0, v.dot(X * v)));
}

// Truth solutions on a test set drawn independently of the training set.
struct TestSet {
  std::vector<fem::Parameter> mu;
  std::vector<fem::Vector> u;
};

TestSet test_set(const Offline& o, std::uint64_t seed, std::size_t n) {
  TestSet t;
  t.mu = rbm::training_set(n, seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& mu : t.mu) t.u.push_back(o.build.affine.solve(mu));
  return t;
}

int preset_dsa(Context& ctx, const std::string& name, const fs::path& dir) {
  auto& s = ctx.settings;
  const auto& sweep = sweeps().at(name);
  const auto src = load_mesh_source(s);
  const auto regions = region_table(s);
  const auto baseline = parameters(s);
  const auto consts = physical_constants(s, baseline);
  const auto t0 = Clock::now();
  const auto table = fem::dsa_sweep(src.mesh, regions, consts, sweep.parameter, sweep.values,
                                    baseline, outputs(s, src), fem::Model::nonlinear);
  ctx.manifest.timing("sweep", seconds_since(t0));
  write_artifact(ctx, (dir / (name + ".csv")).string(), "dsa",
                 [&](std::ostream& os) { table.write_csv(os); });
  for (const auto& r : table.rows)
    if (!r.ok) ctx.out << "  " << sweep.parameter << " = " << r.value << " failed: " << r.error << "\n";
  return ok;
}

int preset_rbm_convergence(Context& ctx, const fs::path& dir) {
  const auto o = offline(ctx, dir);
  const auto& rm = o.build.model;
  const auto t = test_set(o, ctx.settings.seed(), 100);
  std::vector<std::vector<double>> rows;
  for (std::size_t N = 1; N <= rm.size(); ++N) {
    double err_sum = 0, err_max = 0, bound_sum = 0, bound_max = 0, rel_max = 0, out_max = 0;
    for (std::size_t i = 0; i < t.mu.size(); ++i) {
      const auto sol = rbm::online_solve(rm, t.mu[i], N);
      const fem::Vector e = t.u[i] - rbm::reconstruct(rm, sol.u);
      const double err = x_norm(o.build.X, e);
      err_sum += err;
      err_max = std::max(err_max, err);
      rel_max = std::max(rel_max, err / x_norm(o.build.X, t.u[i]));
      bound_sum += sol.certificate.delta;
      bound_max = std::max(bound_max, sol.certificate.delta);
      for (std::size_t k = 0; k < sol.outputs.size(); ++k)
        out_max = std::max(out_max, std::abs(o.build.affine.outputs[k].dot(t.u[i]) - sol.outputs[k]));
    }
    const double n = static_cast<double>(t.mu.size());
    rows.push_back({static_cast<double>(N), err_sum / n, err_max, rel_max, bound_sum / n,
                    bound_max, out_max});
  }
  write_artifact(ctx, (dir / "rbm_convergence.csv").string(), "rbm-convergence",
                 [&](std::ostream& os) {
                   os << "N,mean_error_X [-],max_error_X [-],max_relative_error_X [-],"
                         "mean_bound [-],max_bound [-],max_output_error [K]\n";
                   for (const auto& r : rows) {
                     os << static_cast<std::size_t>(r[0]);
                     for (std::size_t j = 1; j < r.size(); ++j) os << "," << io::format_double(r[j]);
                     os << "\n";
                   }
                 });
  record_timing_comparison(ctx, o.src, o.regions, o.consts, rm, std::min<std::size_t>(10, rm.size()));
  return ok;
}

int preset_effectivity(Context& ctx, const fs::path& dir) {
  const auto o = offline(ctx, dir);
  const auto& rm = o.build.model;
  const auto t = test_set(o, ctx.settings.seed(), 100);
  std::size_t violations = 0;
  write_artifact(ctx, (dir / "effectivity.csv").string(), "effectivity", [&](std::ostream& os) {
    os << "N,min_effectivity [-],mean_effectivity [-],max_effectivity [-],"
          "min_output_effectivity [-],output_bound_violations\n";
    for (std::size_t N = 2; N <= std::min<std::size_t>(12, rm.size()); N += 2) {
      double lo = INFINITY, hi = 0, sum = 0, out_lo = INFINITY;
      std::size_t count = 0, bad = 0;
      for (std::size_t i = 0; i < t.mu.size(); ++i) {
        const auto sol = rbm::online_solve(rm, t.mu[i], N);
        const double err = x_norm(o.build.X, t.u[i] - rbm::reconstruct(rm, sol.u));
        if (err > 0) {
          const double eta = sol.certificate.delta / err;
          lo = std::min(lo, eta);
          hi = std::max(hi, eta);
          sum += eta;
          ++count;
        }
        for (std::size_t k = 0; k < sol.outputs.size(); ++k) {
          const double es = std::abs(o.build.affine.outputs[k].dot(t.u[i]) - sol.outputs[k]);
          if (es > sol.certificate.delta_s[k]) ++bad;
          if (es > 0) out_lo = std::min(out_lo, sol.certificate.delta_s[k] / es);
        }
      }
      violations += bad;
      os << N << "," << io::format_double(lo) << ","
         << io::format_double(count ? sum / count : NAN) << "," << io::format_double(hi) << ","
         << io::format_double(out_lo) << "," << bad << "\n";
    }
  });
  ctx.manifest.info()["output_bound_violations"] = violations;
  return ok;
}

int preset_propagate(Context& ctx, const fs::path& dir) {
  const auto o = offline(ctx, dir);
  auto& s = ctx.settings;
  const auto r = uq::propagate(uq::reduced_model(o.build.model), distribution(s),
                               static_cast<std::size_t>(s.integer("n", 10000, 1)), s.seed(), 50);
  ctx.manifest.timing("propagate", r.wall_time);
  ctx.manifest.info()["failed"] = r.failed;
  for (const auto& out : r.outputs)
    ctx.out << "  " << out.name << ": mean " << out.mean << " K, std " << out.std << " K\n";
  write_artifact(ctx, (dir / "statistics.csv").string(), "statistics",
                 [&](std::ostream& os) { r.write_stats_csv(os); });
  write_artifact(ctx, (dir / "histogram.csv").string(), "histogram",
                 [&](std::ostream& os) { r.write_histogram_csv(os); });
  return ok;
}

int preset_sobol(Context& ctx, const std::string& point, const fs::path& dir) {
  const auto o = offline(ctx, dir);
  auto& s = ctx.settings;
  const auto model = uq::reduced_model(o.build.model);
  const auto dist = distribution(s);
  const auto seed = s.seed();
  const auto pce = uq::pce_fit(
      model, dist,
      {static_cast<std::size_t>(s.integer("nparam", 200, 2)),
       static_cast<int>(s.integer("degree", 3, 0)), seed,
       static_cast<std::size_t>(s.integer("bootstrap", 500, 0))});
  const auto saltelli = uq::saltelli_sobol(model, dist, {10000, seed, 200});
  std::vector<uq::SobolResult> rows;
  for (const auto* set : {&pce.sobol, &saltelli})
    for (const auto& r : *set)
      if (r.output == point) rows.push_back(r);
  if (rows.empty()) throw ConfigError("outputs", "model has no output named '" + point + "'");
  for (const auto& r : rows)
    for (const auto& v : uq::sanity_violations(r)) ctx.out << "  warning: " << v << "\n";
  ctx.manifest.info()["q2"] = rows.front().q2;
  write_artifact(ctx, (dir / ("sobol_" + point + ".csv")).string(), "sobol",
                 [&](std::ostream& os) { uq::write_sobol_csv(os, rows); });
  return ok;
}

int preset_sobol_convergence(Context& ctx, const fs::path& dir) {
  const auto o = offline(ctx, dir);
  auto& s = ctx.settings;
  const auto& names = o.build.model.output_names;
  const auto it = std::find(names.begin(), names.end(), "O");
  const std::size_t output = it == names.end() ? 0 : static_cast<std::size_t>(it - names.begin());
  const auto dist = distribution(s);
  const auto rows = uq::sobol_convergence(uq::reduced_model(o.build.model), dist,
                                          {200, 300, 400, 600, 800, 1000}, output,
                                          static_cast<int>(s.integer("degree", 3, 0)), s.seed());
  json timings = json::object();
  for (const auto& r : rows) timings[std::to_string(r.n_param)] = r.wall_time;
  ctx.manifest.info()["convergence_wall_times"] = timings;
  write_artifact(ctx, (dir / "sobol_convergence.csv").string(), "sobol-convergence",
                 [&](std::ostream& os) { uq::write_convergence_csv(os, dist.names, rows); });
  return ok;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, _] : sweeps()) n.push_back(k);
    n.push_back("rbm-convergence");
    n.push_back("effectivity");
    n.push_back("propagate-10k");
    for (const auto& p : sobol_points) n.push_back("sobol-" + p);
    n.push_back("sobol-convergence");
    return n;
  }();
  return names;
}

int cmd_reproduce(Context& ctx) {
  auto& s = ctx.settings;
  const auto name = s.string("preset");
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("preset", "unknown preset '" + name + "' (known: " + list + ")");
  }
  if (!s.has("mesh")) s.set_from_text("mesh", "gen:3");
  const fs::path dir = s.string_or("out-dir", "reproduce/" + name);
  fs::create_directories(dir);
  const auto seed = s.seed();
  ctx.manifest.seed(seed);
  ctx.manifest.info()["preset"] = name;
  ctx.out << "preset " << name << " -> " << dir.string() << "\n";
  if (sweeps().contains(name)) return preset_dsa(ctx, name, dir);
  if (name == "rbm-convergence") return preset_rbm_convergence(ctx, dir);
  if (name == "effectivity") return preset_effectivity(ctx, dir);
  if (name == "propagate-10k") return preset_propagate(ctx, dir);
  if (name == "sobol-convergence") return preset_sobol_convergence(ctx, dir);
  return preset_sobol(ctx, name.substr(6), dir);
}

}  // namespace eyeheat::cli
