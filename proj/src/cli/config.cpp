#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"
#include "internal.hpp"

namespace eyeheat::cli {

namespace fs = std::filesystem;

const Field& Settings::field(const std::string& name) const {
  for (const auto& f : fields_)
    if (f.name == name) return f;
  throw Error("internal: undeclared setting '" + name + "'");
}

json Settings::typed(const Field& f, const json& raw, const std::string& path) const {
  switch (f.type) {
    case FieldType::string:
    case FieldType::path:
      if (!raw.is_string()) throw ConfigError(path, "expected a string");
      return raw;
    case FieldType::number:
      if (!raw.is_number() || !std::isfinite(raw.get<double>()))
        throw ConfigError(path, "expected a finite number");
      return raw;
    case FieldType::integer:
      if (!raw.is_number_integer()) throw ConfigError(path, "expected an integer");
      return raw;
    case FieldType::flag:
      if (!raw.is_boolean()) throw ConfigError(path, "expected true or false");
      return raw;
    case FieldType::numbers:
      if (!raw.is_array()) throw ConfigError(path, "expected an array of numbers");
      for (std::size_t i = 0; i < raw.size(); ++i)
        if (!raw[i].is_number())
          throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
      return raw;
    case FieldType::document:
      if (!(raw.is_string() || raw.is_object() || raw.is_array()))
        throw ConfigError(path, "expected a file name or an inline JSON value");
      return raw;
  }
  return raw;
}

void Settings::merge_config(const json& config, const std::string& origin) {
  if (!config.is_object()) throw ConfigError(origin, "configuration must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    const auto it = std::find_if(fields_.begin(), fields_.end(),
                                 [&](const Field& f) { return f.name == key; });
    if (it == fields_.end() || key == "config") throw ConfigError(key, "unknown field");
    values_[key] = typed(*it, value, key);
  }
}

void Settings::set_from_text(const std::string& name, const std::string& text) {
  const Field& f = field(name);
  const std::string path = "--" + name;
  auto parse_number = [&](const std::string& t, const std::string& p) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ConfigError(p, "'" + t + "' is not a number");
    }
    if (used != t.size() || !std::isfinite(v)) throw ConfigError(p, "'" + t + "' is not a number");
    return v;
  };
  switch (f.type) {
    case FieldType::document: {
      const auto start = text.find_first_not_of(" \t\r\n");
      if (start != std::string::npos && (text[start] == '{' || text[start] == '[')) {
        try {
          values_[name] = typed(f, json::parse(text), path);
        } catch (const json::parse_error& e) {
          throw ConfigError(path, std::string("invalid inline JSON: ") + e.what());
        }
        return;
      }
      values_[name] = text;
      return;
    }
    case FieldType::string:
    case FieldType::path:
      values_[name] = text;
      return;
    case FieldType::flag:
      values_[name] = true;
      return;
    case FieldType::number:
      values_[name] = parse_number(text, path);
      return;
    case FieldType::integer: {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(text, &used);
      } catch (const std::exception&) {
        throw ConfigError(path, "'" + text + "' is not an integer");
      }
      if (used != text.size()) throw ConfigError(path, "'" + text + "' is not an integer");
      values_[name] = v;
      return;
    }
    case FieldType::numbers: {
      json arr = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ','))
        arr.push_back(parse_number(item, path + "[" + std::to_string(arr.size()) + "]"));
      if (arr.empty()) throw ConfigError(path, "empty list");
      values_[name] = arr;
      return;
    }
  }
}

std::string Settings::string(const std::string& name) const {
  field(name);
  if (!has(name)) throw ConfigError(name, "required");
  return values_.at(name).get<std::string>();
}

std::string Settings::string_or(const std::string& name, const std::string& fallback) const {
  return has(name) ? string(name) : fallback;
}

std::string Settings::existing_path(const std::string& name) const {
  const auto p = string(name);
  if (!fs::exists(p)) throw ConfigError(name, "file '" + p + "' does not exist");
  return p;
}

double Settings::number(const std::string& name, double fallback) const {
  field(name);
  return has(name) ? values_.at(name).get<double>() : fallback;
}

std::int64_t Settings::integer(const std::string& name, std::int64_t fallback,
                               std::int64_t min) const {
  field(name);
  const std::int64_t v = has(name) ? values_.at(name).get<std::int64_t>() : fallback;
  if (v < min) throw ConfigError(name, "must be at least " + std::to_string(min));
  return v;
}

std::uint64_t Settings::seed(std::uint64_t fallback) const {
  field("seed");
  if (!has("seed")) return fallback;
  const auto& v = values_.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.get<std::int64_t>() < 0) throw ConfigError("seed", "must be non-negative");
  return static_cast<std::uint64_t>(v.get<std::int64_t>());
}

bool Settings::flag(const std::string& name) const {
  field(name);
  return has(name) && values_.at(name).get<bool>();
}

std::vector<double> Settings::numbers(const std::string& name) const {
  field(name);
  if (!has(name)) throw ConfigError(name, "required");
  return values_.at(name).get<std::vector<double>>();
}

std::optional<json> Settings::document(const std::string& name) const {
  field(name);
  if (!has(name)) return std::nullopt;
  const auto& v = values_.at(name);
  if (v.is_string()) return read_json_file(existing_path(name), name);
  return v;
}

json read_json_file(const std::string& path, const std::string& field) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, "'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string points_sidecar(const std::string& mesh_path) { return mesh_path + ".points.json"; }

void write_points_sidecar(const std::string& mesh_path,
                          const std::vector<mesh::Landmark>& points) {
  json j = json::object();
  for (const auto& p : points) j["points"][p.name] = p.position;
  io::write_file(points_sidecar(mesh_path), j.dump(2) + "\n");
}

MeshSource load_mesh_source(const Settings& s) {
  const std::string spec = s.string("mesh");
  if (spec.rfind("gen:", 0) == 0) {
    int refinement = 0;
    try {
      std::size_t used = 0;
      refinement = std::stoi(spec.substr(4), &used);
      if (used != spec.size() - 4) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("mesh", "expected gen:<refinement>, got '" + spec + "'");
    }
    if (refinement < 1 || refinement > 8)
      throw ConfigError("mesh", "refinement must be in [1, 8]");
    auto eye = mesh::generate_eye_2d(refinement);
    return {std::move(eye.mesh), std::move(eye.landmarks),
            "generated eye, refinement " + std::to_string(refinement)};
  }
  const auto path = s.existing_path("mesh");
  mesh::AliasMap aliases;
  if (auto a = s.document("aliases")) {
    if (!a->is_object()) throw ConfigError("aliases", "expected an object of name -> name");
    for (const auto& [k, v] : a->items()) {
      if (!v.is_string()) throw ConfigError("aliases." + k, "expected a string");
      aliases[k] = v.get<std::string>();
    }
  }
  MeshSource src{mesh::load_msh(path, aliases), {}, path};
  const auto sidecar = points_sidecar(path);
  if (fs::exists(sidecar)) {
    const json j = read_json_file(sidecar, "mesh");
    try {
      for (const auto& [name, p] : j.at("points").items()) {
        mesh::Point pt{};
        const auto v = p.get<std::vector<double>>();
        if (v.size() < 2 || v.size() > 3) throw ConfigError("mesh", "point '" + name + "' needs 2 or 3 coordinates");
        std::copy(v.begin(), v.end(), pt.begin());
        src.landmarks.push_back({name, pt});
      }
    } catch (const json::exception& e) {
      throw ConfigError("mesh", "malformed points file '" + sidecar + "': " + e.what());
    }
  }
  return src;
}

fem::RegionTable region_table(const Settings& s) {
  const auto doc = s.document("regions");
  if (!doc) return fem::RegionTable::eye_default();
  try {
    if (!doc->is_object()) throw ConfigError("regions", "expected an object");
    if (!doc->contains("conductivity") || !doc->at("conductivity").is_object())
      throw ConfigError("regions.conductivity", "missing or not an object");
    std::map<std::string, double> k;
    for (const auto& [name, v] : doc->at("conductivity").items()) {
      if (!v.is_number()) throw ConfigError("regions.conductivity." + name, "expected a number");
      k[name] = v.get<double>();
    }
    const auto param = doc->value("parametrized", std::string("lens"));
    return fem::RegionTable(std::move(k), param);
  } catch (const ValidationError& e) {
    throw ConfigError("regions", e.what());
  }
}

fem::PhysicalConstants physical_constants(const Settings& s, const fem::Parameter& mu) {
  fem::PhysicalConstants c;
  c.emissivity = s.number("emissivity", c.emissivity);
  c.h_r = s.number("hr", c.h_r);
  if (s.has("hr-surface")) {
    if (s.has("hr")) throw ConfigError("hr-surface", "give either hr or hr-surface, not both");
    const double ts = s.number("hr-surface", 306.0);
    if (!(ts > 0.0)) throw ConfigError("hr-surface", "must be a positive temperature");
    c.h_r = fem::linearize_hr(ts, mu.T_amb, c);
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(s.has("hr") ? "hr" : "emissivity", e.what());
  }
  return c;
}

fem::Parameter parameters(const Settings& s) {
  const auto doc = s.document("params");
  if (!doc) return fem::Parameter::baseline();
  if (!doc->is_object()) throw ConfigError("params", "expected an object");
  auto v = fem::Parameter::baseline().to_array();
  bool relaxed = false;
  for (const auto& [key, value] : doc->items()) {
    if (key == "relaxed") {
      if (!value.is_boolean()) throw ConfigError("params.relaxed", "expected true or false");
      relaxed = value.get<bool>();
      continue;
    }
    std::size_t i = 0;
    try {
      i = fem::Parameter::index_of(key);
    } catch (const ValidationError&) {
      throw ConfigError("params." + key, "not a model parameter");
    }
    if (!value.is_number()) throw ConfigError("params." + key, "expected a number");
    v[i] = value.get<double>();
  }
  try {
    return relaxed ? fem::Parameter::relaxed(v) : fem::Parameter::make(v);
  } catch (const ValidationError& e) {
    throw ConfigError("params", e.what());
  }
}

std::vector<fem::OutputFunctional> default_outputs(const MeshSource& src) {
  std::vector<fem::OutputFunctional> out;
  for (const auto& l : src.landmarks)
    out.push_back(fem::OutputFunctional::point(src.mesh, l.name, l.position));
  if (src.mesh.region_index("cornea") >= 0)
    out.push_back(fem::OutputFunctional::region_mean(src.mesh, "cornea", "cornea"));
  if (out.empty())
    throw ConfigError("outputs", "mesh has no named points or cornea region; list outputs");
  return out;
}

std::vector<fem::OutputFunctional> outputs(const Settings& s, const MeshSource& src) {
  auto doc = s.document("outputs");
  if (!doc) return default_outputs(src);
  if (doc->is_object() && doc->contains("outputs")) doc = doc->at("outputs");
  if (!doc->is_array()) throw ConfigError("outputs", "expected an array");
  if (doc->empty()) throw ConfigError("outputs", "must list at least one output");
  auto landmark = [&](const std::string& name, const std::string& path) {
    for (const auto& l : src.landmarks)
      if (l.name == name) return l.position;
    throw ConfigError(path, "named point '" + name +
                                "' is unknown; named points need a generated mesh or a points "
                                "sidecar, otherwise give coordinates");
  };
  std::vector<fem::OutputFunctional> out;
  for (std::size_t i = 0; i < doc->size(); ++i) {
    const std::string path = "outputs[" + std::to_string(i) + "]";
    const json& e = (*doc)[i];
    try {
      if (e.is_string()) {
        const auto name = e.get<std::string>();
        out.push_back(fem::OutputFunctional::point(src.mesh, name, landmark(name, path)));
        continue;
      }
      if (!e.is_object()) throw ConfigError(path, "expected a name or an object");
      for (const auto& [key, _] : e.items())
        if (key != "name" && key != "point" && key != "region_mean")
          throw ConfigError(path + "." + key, "unknown field");
      if (e.contains("point") == e.contains("region_mean"))
        throw ConfigError(path, "give exactly one of point, region_mean");
      if (e.contains("region_mean")) {
        if (!e.at("region_mean").is_string())
          throw ConfigError(path + ".region_mean", "expected a region name");
        const auto region = e.at("region_mean").get<std::string>();
        const auto name = e.value("name", region);
        try {
          out.push_back(fem::OutputFunctional::region_mean(src.mesh, name, region));
        } catch (const ValidationError& err) {
          throw ConfigError(path + ".region_mean", err.what());
        }
        continue;
      }
      const auto& p = e.at("point");
      if (p.is_string()) {
        const auto name = p.get<std::string>();
        out.push_back(fem::OutputFunctional::point(src.mesh, e.value("name", name),
                                                   landmark(name, path + ".point")));
        continue;
      }
      if (!p.is_array() || p.size() < 2 || p.size() > 3)
        throw ConfigError(path + ".point", "expected a point name or 2-3 coordinates");
      mesh::Point pt{};
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (!p[k].is_number()) throw ConfigError(path + ".point", "coordinates must be numbers");
        pt[k] = p[k].get<double>();
      }
      if (!e.contains("name") || !e.at("name").is_string())
        throw ConfigError(path + ".name", "coordinate outputs need a name");
      out.push_back(fem::OutputFunctional::point(src.mesh, e.at("name").get<std::string>(), pt));
    } catch (const json::exception& err) {
      throw ConfigError(path, err.what());
    }
  }
  std::vector<std::string> names;
  for (const auto& o : out) names.push_back(o.name);
  std::sort(names.begin(), names.end());
  if (auto d = std::adjacent_find(names.begin(), names.end()); d != names.end())
    throw ConfigError("outputs", "duplicate output name '" + *d + "'");
  return out;
}

uq::InputDistribution distribution(const Settings& s) {
  const auto doc = s.document("dist");
  if (!doc) return uq::InputDistribution::eye_default(s.number("sigma-e", 0.7));
  if (s.has("sigma-e")) throw ConfigError("sigma-e", "only applies to the default distribution");
  return uq::InputDistribution::from_json(*doc);
}

Manifest::Manifest(std::string path, std::string command, std::vector<std::string> argv)
    : path_(std::move(path)) {
  run_["command"] = std::move(command);
  run_["argv"] = std::move(argv);
  run_["timings"] = json::object();
  run_["info"] = json::object();
}

void Manifest::artifact(const std::string& path, const std::string& kind) {
  artifacts_[path] = {{"kind", kind},
                      {"sha256", io::sha256_file(path)},
                      {"bytes", static_cast<std::uint64_t>(fs::file_size(path))}};
}

void Manifest::finish(int exit_code, double wall_time) {
  run_["exit_code"] = exit_code;
  run_["wall_time_s"] = wall_time;
  run_["artifacts"] = json::array();
  for (const auto& [p, _] : artifacts_.items()) run_["artifacts"].push_back(p);
  json doc = json::object();
  if (fs::exists(path_)) {
    try {
      doc = json::parse(io::read_file(path_));
      if (!doc.is_object()) doc = json::object();
    } catch (const std::exception&) {
      doc = json::object();
    }
  }
  doc["tool"] = "eyeheat";
  doc["version"] = "0.1.0";
  doc["build"] = {{"compiler", __VERSION__},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"boost", BOOST_LIB_VERSION}};
  if (!doc.contains("artifacts") || !doc["artifacts"].is_object()) doc["artifacts"] = json::object();
  if (!doc.contains("runs") || !doc["runs"].is_array()) doc["runs"] = json::array();
  const auto run_index = doc["runs"].size();
  for (auto [p, a] : artifacts_.items()) {
    a["run"] = run_index;
    doc["artifacts"][p] = a;
  }
  doc["runs"].push_back(run_);
  const auto parent = fs::path(path_).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  io::write_file(path_, doc.dump(2) + "\n");
}

void write_artifact(Context& ctx, const std::string& path, const std::string& kind,
                    const std::function<void(std::ostream&)>& writer) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError(kind, "cannot write '" + path + "'");
    writer(os);
    if (!os) throw Error("write to '" + path + "' failed");
  }
  ctx.manifest.artifact(path, kind);
  ctx.out << "wrote " << path << "\n";
}

}  // namespace eyeheat::cli
