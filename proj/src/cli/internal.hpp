#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eyeheat/cli.hpp"
#include "eyeheat/uq.hpp"

namespace eyeheat::cli {

using nlohmann::json;

enum class FieldType { string, path, number, integer, flag, numbers, document };

struct Field {
  std::string name;
  FieldType type;
  std::string help;
  bool positional = false;
};

/// Typed view of one subcommand's settings. Values come from an optional
/// JSON config file (keys are the long option names) overridden by flags.
/// Every accessor reports problems as ConfigError naming the field.
class Settings {
 public:
  explicit Settings(std::vector<Field> fields) : fields_(std::move(fields)) {}

  const std::vector<Field>& fields() const { return fields_; }
  void merge_config(const json& config, const std::string& origin);
  void set_from_text(const std::string& name, const std::string& text);
  void set_flag(const std::string& name) { values_[name] = true; }

  bool has(const std::string& name) const { return values_.contains(name); }
  std::string string(const std::string& name) const;
  std::string string_or(const std::string& name, const std::string& fallback) const;
  /// Path that must exist.
  std::string existing_path(const std::string& name) const;
  double number(const std::string& name, double fallback) const;
  std::int64_t integer(const std::string& name, std::int64_t fallback, std::int64_t min) const;
  std::uint64_t seed(std::uint64_t fallback = 1) const;
  bool flag(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
  /// Inline JSON value, or the parsed contents of the file it names.
  std::optional<json> document(const std::string& name) const;

 private:
  const Field& field(const std::string& name) const;
  json typed(const Field& f, const json& raw, const std::string& path) const;

  std::vector<Field> fields_;
  json values_ = json::object();
};

json read_json_file(const std::string& path, const std::string& field);

/// Mesh plus named points when known (generator metadata or sidecar file).
struct MeshSource {
  mesh::Mesh mesh;
  std::vector<mesh::Landmark> landmarks;
  std::string description;
};

/// "gen:N" generates the eye at refinement N; anything else is an MSH path
/// whose points, if any, live in "<path>.points.json".
MeshSource load_mesh_source(const Settings& s);
std::string points_sidecar(const std::string& mesh_path);
void write_points_sidecar(const std::string& mesh_path, const std::vector<mesh::Landmark>& points);

fem::RegionTable region_table(const Settings& s);
fem::PhysicalConstants physical_constants(const Settings& s, const fem::Parameter& mu);
fem::Parameter parameters(const Settings& s);
std::vector<fem::OutputFunctional> outputs(const Settings& s, const MeshSource& src);
std::vector<fem::OutputFunctional> default_outputs(const MeshSource& src);
uq::InputDistribution distribution(const Settings& s);

/// Artifact manifest shared by consecutive runs (read-modify-write).
class Manifest {
 public:
  Manifest(std::string path, std::string command, std::vector<std::string> argv);
  void artifact(const std::string& path, const std::string& kind);
  void seed(std::uint64_t s) { run_["seed"] = s; }
  json& info() { return run_["info"]; }
  void timing(const std::string& key, double seconds) { run_["timings"][key] = seconds; }
  void finish(int exit_code, double wall_time);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  json run_;
  json artifacts_ = json::object();
};

struct Context {
  Settings& settings;
  Manifest& manifest;
  std::ostream& out;
};

/// Writes text through a stream callback and records the file.
void write_artifact(Context& ctx, const std::string& path, const std::string& kind,
                    const std::function<void(std::ostream&)>& writer);

struct ReducedBuild {
  affine::AffineSystem affine;
  fem::SparseMatrix X;
  rbm::ReducedModel model;
  double offline_time = 0.0;
};

ReducedBuild build_reduced(const MeshSource& src, const fem::RegionTable& regions,
                           const fem::PhysicalConstants& consts,
                           const std::vector<fem::OutputFunctional>& outputs,
                           const rbm::GreedyOptions& options, std::size_t train_size,
                           std::uint64_t seed, std::ostream& log);

/// Saves the model with mesh provenance in its metadata.
void save_model(Context& ctx, const rbm::ReducedModel& rm, const MeshSource& src,
                const std::string& path);

/// Fresh FEM solve at mu vs online solve + certificate at basis size n;
/// recorded in the manifest (the execution-time comparison).
void record_timing_comparison(Context& ctx, const MeshSource& src,
                              const fem::RegionTable& regions,
                              const fem::PhysicalConstants& consts, const rbm::ReducedModel& rm,
                              std::size_t n);

void write_history_csv(std::ostream& os, const rbm::ReducedModel& rm);

using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Subcommands.
int cmd_mesh_generate(Context& ctx);
int cmd_mesh_check(Context& ctx);
int cmd_solve(Context& ctx);
int cmd_dsa(Context& ctx);
int cmd_reduce(Context& ctx);
int cmd_online(Context& ctx);
int cmd_propagate(Context& ctx);
int cmd_sobol(Context& ctx);
int cmd_reproduce(Context& ctx);

const std::vector<std::string>& preset_names();

}  // namespace eyeheat::cli
