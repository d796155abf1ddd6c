#include <filesystem>
#include <fstream>
#include <iomanip>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"
#include "internal.hpp"

namespace eyeheat::cli {

namespace {

fem::Model model_kind(const Settings& s) {
  const auto m = s.string_or("model", "nonlinear");
  if (m == "linear") return fem::Model::linear;
  if (m == "nonlinear") return fem::Model::nonlinear;
  throw ConfigError("model", "expected linear or nonlinear, got '" + m + "'");
}

rbm::ReducedModel load_model(const Settings& s) {
  const auto path = s.existing_path("model");
  try {
    return rbm::ReducedModel::load(path);
  } catch (const ParseError& e) {
    throw ConfigError("model", e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("model", e.what());
  }
}

}  // namespace

ReducedBuild build_reduced(const MeshSource& src, const fem::RegionTable& regions,
                           const fem::PhysicalConstants& consts,
                           const std::vector<fem::OutputFunctional>& outputs,
                           const rbm::GreedyOptions& options, std::size_t train_size,
                           std::uint64_t seed, std::ostream& log) {
  const auto t0 = Clock::now();
  ReducedBuild b;
  b.affine = affine::build_affine(src.mesh, regions, consts, outputs);
  b.X = rbm::x_inner_product(b.affine, options.reference);
  const auto train = rbm::training_set(train_size, seed);
  b.model = rbm::greedy_train(b.affine, b.X, train, options);
  b.offline_time = seconds_since(t0);
  log << "greedy: N = " << b.model.size() << " (" << b.model.termination << "), max bound "
      << (b.model.history.empty() ? 0.0 : b.model.history.back().max_bound) << ", "
      << std::setprecision(3) << b.offline_time << " s offline\n"
      << std::setprecision(6);
  return b;
}

void save_model(Context& ctx, const rbm::ReducedModel& rm, const MeshSource& src,
                const std::string& path) {
  auto c = rm.to_container();
  c.meta()["mesh"] = {{"description", src.description},
                      {"vertices", src.mesh.num_vertices()},
                      {"cells", src.mesh.num_cells()}};
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  c.save(path);
  ctx.manifest.artifact(path, "reduced-model");
  ctx.out << "wrote " << path << "\n";
}

void record_timing_comparison(Context& ctx, const MeshSource& src,
                              const fem::RegionTable& regions,
                              const fem::PhysicalConstants& consts, const rbm::ReducedModel& rm,
                              std::size_t n) {
  const auto mu = fem::Parameter::baseline();
  const int fem_reps = 3;
  const auto t0 = Clock::now();
  for (int r = 0; r < fem_reps; ++r) {
    const auto sys = fem::assemble_linear(src.mesh, regions, consts, mu);
    fem::solve_linear(sys.A, sys.f, src.mesh);
  }
  const double t_fem = seconds_since(t0) / fem_reps;
  const int online_reps = 10000;
  const auto t1 = Clock::now();
  for (int r = 0; r < online_reps; ++r) rbm::online_solve(rm, mu, n);
  const double t_online = seconds_since(t1) / online_reps;
  ctx.manifest.info()["timing_comparison"] = {{"dofs", src.mesh.num_vertices()},
                                              {"N", n},
                                              {"fem_solve_s", t_fem},
                                              {"online_solve_s", t_online},
                                              {"speedup", t_fem / t_online}};
  ctx.out << "FEM solve " << t_fem << " s, online (N = " << n << ") " << t_online
          << " s, speed-up " << t_fem / t_online << "\n";
}

void write_history_csv(std::ostream& os, const rbm::ReducedModel& rm) {
  os << "N,max_bound,argmax";
  for (std::size_t i = 0; i < fem::Parameter::size; ++i)
    os << ",selected_" << fem::Parameter::names()[i] << " [" << fem::Parameter::units()[i] << "]";
  os << "\n";
  for (const auto& h : rm.history) {
    os << h.N << "," << io::format_double(h.max_bound) << "," << h.argmax;
    for (double v : h.selected.to_array()) os << "," << io::format_double(v);
    os << "\n";
  }
}

int cmd_mesh_generate(Context& ctx) {
  auto& s = ctx.settings;
  const auto refinement = s.integer("refinement", 3, 1);
  if (refinement > 8) throw ConfigError("refinement", "must be at most 8");
  const auto out = s.string("out");
  const auto eye = mesh::generate_eye_2d(static_cast<int>(refinement));
  write_artifact(ctx, out, "mesh", [&](std::ostream& os) { os << mesh::format_msh(eye.mesh); });
  write_points_sidecar(out, eye.landmarks);
  ctx.manifest.artifact(points_sidecar(out), "points");
  ctx.out << "eye mesh: " << eye.mesh.num_vertices() << " vertices, " << eye.mesh.num_cells()
          << " cells\n";
  return ok;
}

int cmd_mesh_check(Context& ctx) {
  const auto src = load_mesh_source(ctx.settings);
  const auto& m = src.mesh;
  ctx.out << "mesh " << src.description << ": dimension " << m.dimension() << ", "
          << m.num_vertices() << " vertices, " << m.num_cells() << " cells, " << m.num_facets()
          << " boundary facets\n";
  for (std::size_t r = 0; r < m.region_names().size(); ++r)
    ctx.out << "  region " << m.region_names()[r] << ": measure "
            << m.region_measure(static_cast<int>(r)) << "\n";
  std::size_t amb = 0;
  for (std::size_t f = 0; f < m.num_facets(); ++f)
    amb += m.facet_label(f) == mesh::BoundaryLabel::amb;
  ctx.out << "  boundary amb: " << amb << " facets, body: " << m.num_facets() - amb
          << " facets\n";
  for (const auto& l : src.landmarks) ctx.out << "  point " << l.name << "\n";
  ctx.manifest.info()["mesh"] = {{"vertices", m.num_vertices()}, {"cells", m.num_cells()}};
  return ok;
}

int cmd_solve(Context& ctx) {
  auto& s = ctx.settings;
  const auto src = load_mesh_source(s);
  const auto regions = region_table(s);
  const auto mu = parameters(s);
  const auto consts = physical_constants(s, mu);
  const auto outs = outputs(s, src);
  const auto kind = model_kind(s);
  const auto t0 = Clock::now();
  std::optional<fem::DiscreteField> field;
  if (kind == fem::Model::linear) {
    const auto sys = fem::assemble_linear(src.mesh, regions, consts, mu);
    fem::SolveReport report;
    field = fem::solve_linear(sys.A, sys.f, src.mesh, {}, &report);
    ctx.manifest.info()["relative_residual"] = report.relative_residual;
  } else {
    auto sol = fem::solve_nonlinear(src.mesh, regions, consts, mu,
                                    fem::DiscreteField::constant(src.mesh, mu.T_bl));
    ctx.manifest.info()["newton_iterations"] = sol.iterations;
    ctx.manifest.info()["residual_history"] = sol.residual_history;
    ctx.out << "Newton converged in " << sol.iterations << " iterations\n";
    field = std::move(sol.field);
  }
  ctx.manifest.timing("solve", seconds_since(t0));
  ctx.manifest.info()["h_r"] = consts.h_r;
  std::vector<double> values;
  for (const auto& o : outs) {
    values.push_back(fem::evaluate_output(*field, o));
    ctx.out << "  " << o.name << " = " << std::setprecision(10) << values.back() << " K"
            << (o.snapped ? " (point snapped to the mesh)" : "") << "\n";
  }
  if (s.has("csv"))
    write_artifact(ctx, s.string("csv"), "outputs", [&](std::ostream& os) {
      os << "output,value [K]\n";
      for (std::size_t k = 0; k < outs.size(); ++k)
        os << io::csv_field(outs[k].name) << "," << io::format_double(values[k]) << "\n";
    });
  if (s.has("field-out"))
    write_artifact(ctx, s.string("field-out"), "field",
                   [&](std::ostream& os) { fem::write_field(os, src.mesh, *field); });
  return ok;
}

int cmd_dsa(Context& ctx) {
  auto& s = ctx.settings;
  const auto src = load_mesh_source(s);
  const auto regions = region_table(s);
  const auto baseline = parameters(s);
  const auto consts = physical_constants(s, baseline);
  const auto outs = outputs(s, src);
  const auto name = s.string("param");
  try {
    fem::Parameter::index_of(name);
  } catch (const ValidationError& e) {
    throw ConfigError("param", e.what());
  }
  const auto values = s.numbers("values");
  const auto t0 = Clock::now();
  const auto table =
      fem::dsa_sweep(src.mesh, regions, consts, name, values, baseline, outs, model_kind(s));
  ctx.manifest.timing("sweep", seconds_since(t0));
  std::size_t failed = 0;
  for (const auto& r : table.rows) failed += !r.ok;
  ctx.out << "DSA over " << name << ": " << table.rows.size() << " rows, " << failed
          << " failed\n";
  write_artifact(ctx, s.string("csv"), "dsa", [&](std::ostream& os) { table.write_csv(os); });
  return failed == table.rows.size() ? numerical_failure : ok;
}

int cmd_reduce(Context& ctx) {
  auto& s = ctx.settings;
  const auto src = load_mesh_source(s);
  const auto regions = region_table(s);
  const auto reference = fem::Parameter::baseline();
  const auto consts = physical_constants(s, reference);
  const auto outs = outputs(s, src);
  rbm::GreedyOptions g;
  g.tolerance = s.number("tol", 1e-6);
  if (!(g.tolerance > 0.0)) throw ConfigError("tol", "must be positive");
  g.max_size = static_cast<std::size_t>(s.integer("nmax", 20, 1));
  g.relative = !s.flag("absolute-tol");
  const auto train = static_cast<std::size_t>(s.integer("train-size", 1000, 1));
  const auto seed = s.seed();
  ctx.manifest.seed(seed);
  const auto b = build_reduced(src, regions, consts, outs, g, train, seed, ctx.out);
  ctx.manifest.timing("offline", b.offline_time);
  ctx.manifest.info()["N"] = b.model.size();
  ctx.manifest.info()["termination"] = b.model.termination;
  save_model(ctx, b.model, src, s.string("out"));
  if (s.has("history"))
    write_artifact(ctx, s.string("history"), "greedy-history",
                   [&](std::ostream& os) { write_history_csv(os, b.model); });
  if (s.has("affine-out")) {
    const auto path = s.string("affine-out");
    b.affine.to_container().save(path);
    ctx.manifest.artifact(path, "affine-system");
    ctx.out << "wrote " << path << "\n";
  }
  record_timing_comparison(ctx, src, regions, consts, b.model, std::min<std::size_t>(10, b.model.size()));
  return b.model.termination.rfind("FEM failure", 0) == 0 ? numerical_failure : ok;
}

int cmd_online(Context& ctx) {
  auto& s = ctx.settings;
  const auto rm = load_model(s);
  const auto mu = parameters(s);
  std::optional<std::size_t> n;
  if (s.has("n")) {
    n = static_cast<std::size_t>(s.integer("n", 1, 1));
    if (*n > rm.size())
      throw ConfigError("n", "model has only " + std::to_string(rm.size()) + " basis functions");
  }
  const auto t0 = Clock::now();
  const auto sol = rbm::online_solve(rm, mu, n);
  const double t_online = seconds_since(t0);
  ctx.manifest.timing("online", t_online);
  const auto& c = sol.certificate;
  ctx.out << "N = " << sol.u.size() << ", Delta_N = " << c.delta << ", alpha_lb = " << c.alpha_lb
          << ", " << t_online << " s\n";
  for (std::size_t k = 0; k < sol.outputs.size(); ++k)
    ctx.out << "  " << rm.output_names[k] << " = " << std::setprecision(10) << sol.outputs[k]
            << " +- " << std::setprecision(3) << c.delta_s[k] << " K\n"
            << std::setprecision(6);
  write_artifact(ctx, s.string("csv"), "online", [&](std::ostream& os) {
    os << "output,s_N [K],delta_s [K],delta_N [-],alpha_lb [-],residual_norm [-],N\n";
    for (std::size_t k = 0; k < sol.outputs.size(); ++k)
      os << io::csv_field(rm.output_names[k]) << "," << io::format_double(sol.outputs[k]) << ","
         << io::format_double(c.delta_s[k]) << "," << io::format_double(c.delta) << ","
         << io::format_double(c.alpha_lb) << "," << io::format_double(c.residual_norm) << ","
         << sol.u.size() << "\n";
  });
  return ok;
}

int cmd_propagate(Context& ctx) {
  auto& s = ctx.settings;
  const auto rm = load_model(s);
  const auto dist = distribution(s);
  const auto n = static_cast<std::size_t>(s.integer("n", 10000, 1));
  const auto bins = static_cast<std::size_t>(s.integer("bins", 50, 1));
  const auto seed = s.seed();
  ctx.manifest.seed(seed);
  const auto r = uq::propagate(uq::reduced_model(rm), dist, n, seed, bins);
  ctx.manifest.timing("propagate", r.wall_time);
  ctx.manifest.info()["failed"] = r.failed;
  ctx.out << n << " reduced solves in " << r.wall_time << " s (" << r.failed << " failed)\n";
  for (const auto& o : r.outputs)
    ctx.out << "  " << o.name << ": mean " << o.mean << " K, std " << o.std << " K\n";
  write_artifact(ctx, s.string("csv"), "statistics",
                 [&](std::ostream& os) { r.write_stats_csv(os); });
  if (s.has("hist"))
    write_artifact(ctx, s.string("hist"), "histogram",
                   [&](std::ostream& os) { r.write_histogram_csv(os); });
  return r.failed == n ? numerical_failure : ok;
}

int cmd_sobol(Context& ctx) {
  auto& s = ctx.settings;
  const auto rm = load_model(s);
  const auto dist = distribution(s);
  const auto method = s.string_or("method", "pce");
  const auto seed = s.seed();
  const auto bootstrap = static_cast<std::size_t>(s.integer("bootstrap", 500, 0));
  ctx.manifest.seed(seed);
  const auto model = uq::reduced_model(rm);
  std::vector<uq::SobolResult> results;
  if (method == "pce") {
    const auto n = static_cast<std::size_t>(s.integer("nparam", 200, 2));
    const auto degree = static_cast<int>(s.integer("degree", 3, 0));
    try {
      results = uq::pce_fit(model, dist, {n, degree, seed, bootstrap}).sobol;
    } catch (const ValidationError& e) {
      throw ConfigError("nparam", e.what());
    }
  } else if (method == "saltelli") {
    const auto n = static_cast<std::size_t>(s.integer("nparam", 10000, 100));
    results = uq::saltelli_sobol(model, dist, {n, seed, bootstrap});
  } else {
    throw ConfigError("method", "expected pce or saltelli, got '" + method + "'");
  }
  ctx.manifest.timing("sobol", results.front().wall_time);
  for (const auto& r : results) {
    ctx.out << r.output << (r.degenerate ? " (zero variance)" : "");
    if (method == "pce") ctx.out << " Q2 = " << r.q2;
    ctx.out << "\n";
    for (std::size_t i = 0; i < r.inputs.size(); ++i)
      ctx.out << "  " << std::setw(7) << r.inputs[i] << "  S = " << std::setw(10) << r.first[i]
              << "  S_tot = " << r.total[i] << "\n";
    for (const auto& v : uq::sanity_violations(r)) ctx.out << "  warning: " << v << "\n";
  }
  write_artifact(ctx, s.string("csv"), "sobol",
                 [&](std::ostream& os) { uq::write_sobol_csv(os, results); });
  return ok;
}

}  // namespace eyeheat::cli
