#include <CLI11.hpp>
#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <ostream>

#include "eyeheat/cli.hpp"
#include "eyeheat/error.hpp"
#include "internal.hpp"

namespace eyeheat::cli {

namespace {

using T = FieldType;

std::vector<Field> physics_fields() {
  return {{"mesh", T::string, "gen:<refinement> or an MSH file"},
          {"aliases", T::document, "physical-name aliases (JSON or file)"},
          {"regions", T::document, "region conductivity table (JSON or file)"},
          {"emissivity", T::number, "corneal emissivity"},
          {"hr", T::number, "radiation exchange coefficient h_r [W/(m^2 K)]"},
          {"hr-surface", T::number, "derive h_r from this corneal temperature [K]"},
          {"params", T::document, "parameter values (JSON or file)"},
          {"outputs", T::document, "output list (JSON or file)"}};
}

std::vector<Field> uq_fields() {
  return {{"dist", T::document, "input distribution (JSON or file)"},
          {"sigma-e", T::number, "log-standard deviation of E"},
          {"seed", T::integer, "random seed"}};
}

std::vector<Field> join(std::vector<Field> a, const std::vector<Field>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Field> fields;
  std::function<int(Context&)> body;
};

std::vector<Command> commands() {
  const Field model_path{"model", T::path, "reduced model file"};
  return {
      {"mesh generate",
       "generate the layered eye mesh",
       {{"refinement", T::integer, "refinement level (mesh size halves per level)"},
        {"out", T::string, "output MSH path"}},
       cmd_mesh_generate},
      {"mesh check",
       "load a mesh and print a summary",
       {{"mesh", T::string, "gen:<refinement> or an MSH file", true},
        {"aliases", T::document, "physical-name aliases (JSON or file)"}},
       cmd_mesh_check},
      {"solve", "full-order solve at one parameter",
       join(physics_fields(), {{"model", T::string, "linear or nonlinear"},
                               {"csv", T::string, "output values CSV"},
                               {"field-out", T::string, "nodal field dump"}}),
       cmd_solve},
      {"dsa", "one-at-a-time parameter sweep",
       join(physics_fields(), {{"param", T::string, "swept parameter name"},
                               {"values", T::numbers, "comma-separated values"},
                               {"model", T::string, "linear or nonlinear"},
                               {"csv", T::string, "output CSV"}}),
       cmd_dsa},
      {"reduce", "greedy reduced-basis construction",
       join(physics_fields(), {{"tol", T::number, "greedy tolerance"},
                               {"nmax", T::integer, "maximum basis size"},
                               {"absolute-tol", T::flag, "compare the absolute bound"},
                               {"train-size", T::integer, "training set size"},
                               {"seed", T::integer, "random seed"},
                               {"out", T::string, "reduced model path"},
                               {"history", T::string, "greedy history CSV"},
                               {"affine-out", T::string, "affine operators container"}}),
       cmd_reduce},
      {"online", "certified reduced solve",
       {model_path,
        {"params", T::document, "parameter values (JSON or file)"},
        {"n", T::integer, "use the leading n basis functions"},
        {"csv", T::string, "output CSV"}},
       cmd_online},
      {"propagate", "Monte-Carlo propagation through the reduced model",
       join({model_path,
             {"n", T::integer, "number of samples"},
             {"bins", T::integer, "histogram bins"},
             {"csv", T::string, "statistics CSV"},
             {"hist", T::string, "histogram CSV"}},
            uq_fields()),
       cmd_propagate},
      {"sobol", "Sobol indices of the reduced model",
       join({model_path,
             {"method", T::string, "pce or saltelli"},
             {"nparam", T::integer, "regression size (pce) or base sample size (saltelli)"},
             {"degree", T::integer, "chaos degree"},
             {"bootstrap", T::integer, "bootstrap replicates"},
             {"csv", T::string, "indices CSV"}},
            uq_fields()),
       cmd_sobol},
      {"reproduce", "run a named experiment preset",
       join(join({{"preset", T::string, "preset name", true},
                  {"out-dir", T::string, "output directory"},
                  {"tol", T::number, "greedy tolerance"},
                  {"nmax", T::integer, "maximum basis size"},
                  {"train-size", T::integer, "training set size"},
                  {"n", T::integer, "number of samples"},
                  {"nparam", T::integer, "regression size"},
                  {"degree", T::integer, "chaos degree"},
                  {"bootstrap", T::integer, "bootstrap replicates"}},
                 physics_fields()),
            uq_fields()),
       cmd_reproduce},
  };
}

struct Bound {
  const Command* command;
  CLI::App* app;
  std::map<std::string, std::string> text;
  std::map<std::string, CLI::Option*> options;
  std::string config;
};

void bind(Bound& b) {
  for (const auto& f : b.command->fields) {
    if (f.type == T::flag) {
      b.options[f.name] = b.app->add_flag("--" + f.name, f.help);
      continue;
    }
    auto& slot = b.text[f.name];
    b.options[f.name] = f.positional ? b.app->add_option(f.name, slot, f.help)
                                     : b.app->add_option("--" + f.name, slot, f.help);
  }
  b.app->add_option("--config", b.config, "JSON file with option values");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  CLI::App app{"Parametrized eye heat transfer: FEM, certified reduced basis and UQ", "eyeheat"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string manifest_path = "manifest.json";
  app.add_option("--manifest", manifest_path, "manifest JSON updated by every run");
  app.set_version_flag("--version", "eyeheat 0.1.0");

  const auto cmds = commands();
  std::vector<std::unique_ptr<Bound>> bound;
  auto* mesh = app.add_subcommand("mesh", "mesh generation and inspection");
  mesh->require_subcommand(1);
  for (const auto& c : cmds) {
    auto b = std::make_unique<Bound>();
    b->command = &c;
    if (c.name.rfind("mesh ", 0) == 0)
      b->app = mesh->add_subcommand(c.name.substr(5), c.help);
    else
      b->app = app.add_subcommand(c.name, c.help);
    bind(*b);
    bound.push_back(std::move(b));
  }

  // "--reproduce <name>" is shorthand for the reproduce subcommand.
  std::vector<std::string> argv;
  std::string preset;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--reproduce" && i + 1 < args.size())
      preset = args[++i];
    else if (args[i].rfind("--reproduce=", 0) == 0)
      preset = args[i].substr(12);
    else
      argv.push_back(args[i]);
  }
  if (!preset.empty()) argv.insert(argv.begin(), {"reproduce", preset});

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : config_error;
  }

  const auto it = std::find_if(bound.begin(), bound.end(),
                               [](const auto& b) { return b->app->parsed(); });
  if (it == bound.end()) {
    err << "error: no command given\n";
    return config_error;
  }
  const Bound& b = **it;
  Settings settings(b.command->fields);
  Manifest manifest(manifest_path, b.command->name, args);
  int code = ok;
  try {
    if (!b.config.empty()) settings.merge_config(read_json_file(b.config, "config"), "config");
    for (const auto& f : b.command->fields) {
      if (b.options.at(f.name)->count() == 0) continue;
      if (f.type == T::flag)
        settings.set_flag(f.name);
      else
        settings.set_from_text(f.name, b.text.at(f.name));
    }
    Context ctx{settings, manifest, out};
    code = b.command->body(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    code = config_error;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    code = config_error;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    code = config_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    code = numerical_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = config_error;
  }
  try {
    manifest.finish(code, seconds_since(t0));
  } catch (const std::exception& e) {
    err << "could not update manifest " << manifest_path << ": " << e.what() << "\n";
    if (code == ok) code = config_error;
  }
  return code;
}

}  // namespace eyeheat::cli
