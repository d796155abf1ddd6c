#include "eyeheat/fem/parameter.hpp"

#include <cmath>

#include "eyeheat/error.hpp"

namespace eyeheat::fem {

namespace {
Parameter from_array(const std::array<double, Parameter::size>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}
}  // namespace

const std::array<std::string_view, Parameter::size>& Parameter::names() {
  static constexpr std::array<std::string_view, size> n = {"T_amb", "T_bl", "h_amb",
                                                           "h_bl",  "E",    "k_lens"};
  return n;
}

const std::array<std::string_view, Parameter::size>& Parameter::units() {
  static constexpr std::array<std::string_view, size> u = {"K",      "K",    "W/m2/K",
                                                           "W/m2/K", "W/m2", "W/m/K"};
  return u;
}

std::size_t Parameter::index_of(std::string_view name) {
  const auto& n = names();
  for (std::size_t i = 0; i < size; ++i)
    if (n[i] == name) return i;
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

const ParameterBox& parameter_domain() {
  static const ParameterBox box{{283.15, 308.0, 8.0, 50.0, 20.0, 0.21},
                                {303.15, 312.0, 100.0, 110.0, 320.0, 0.544}};
  return box;
}

Parameter Parameter::relaxed(const std::array<double, size>& values) {
  for (std::size_t i = 0; i < size; ++i)
    if (!std::isfinite(values[i]))
      throw ValidationError("parameter " + std::string(names()[i]) + " is not finite");
  for (std::size_t i : {2u, 3u, 5u})
    if (values[i] < 0.0)
      throw ValidationError("parameter " + std::string(names()[i]) + " must be non-negative");
  if (values[0] <= 0.0 || values[1] <= 0.0)
    throw ValidationError("temperatures must be positive (K)");
  return from_array(values);
}

Parameter Parameter::make(const std::array<double, size>& values) {
  Parameter p = relaxed(values);
  const auto& box = parameter_domain();
  for (std::size_t i = 0; i < size; ++i)
    if (values[i] < box.lower[i] || values[i] > box.upper[i])
      throw ValidationError("parameter " + std::string(names()[i]) + " = " +
                            std::to_string(values[i]) + " outside [" +
                            std::to_string(box.lower[i]) + ", " + std::to_string(box.upper[i]) +
                            "]");
  return p;
}

Parameter Parameter::with(std::size_t i, double value) const {
  auto v = to_array();
  v.at(i) = value;
  return relaxed(v);
}

bool Parameter::in_domain() const {
  const auto& box = parameter_domain();
  const auto v = to_array();
  for (std::size_t i = 0; i < size; ++i)
    if (v[i] < box.lower[i] || v[i] > box.upper[i]) return false;
  return true;
}

void PhysicalConstants::validate() const {
  if (!(emissivity >= 0.0 && emissivity <= 1.0))
    throw ValidationError("emissivity must lie in [0, 1]");
  if (!(h_r >= 0.0) || !std::isfinite(h_r)) throw ValidationError("h_r must be non-negative");
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
}

double linearize_hr(double T_surface, double T_amb, const PhysicalConstants& consts) {
  if (!(T_surface > 0.0) || !(T_amb > 0.0))
    throw ValidationError("linearize_hr needs positive absolute temperatures");
  return consts.sigma * consts.emissivity * (T_surface * T_surface + T_amb * T_amb) *
         (T_surface + T_amb);
}

RegionTable::RegionTable(std::map<std::string, double> conductivity, std::string parametrized)
    : k_(std::move(conductivity)), parametrized_(std::move(parametrized)) {
  for (const auto& [name, k] : k_)
    if (!(k > 0.0) || !std::isfinite(k))
      throw ValidationError("conductivity of region '" + name + "' must be positive");
  if (!k_.count(parametrized_))
    throw ValidationError("parametrized region '" + parametrized_ + "' missing from table");
}

RegionTable RegionTable::eye_default() {
  return RegionTable({{"cornea", 0.58},
                      {"sclera", 1.0042},
                      {"iris", 1.0042},
                      {"lamina", 1.0042},
                      {"opticNerve", 1.0042},
                      {"aqueousHumor", 0.28},
                      {"vitreousHumor", 0.603},
                      {"choroid", 0.52},
                      {"retina", 0.52},
                      {"lens", 0.4}},
                     "lens");
}

double RegionTable::conductivity(std::string_view region) const {
  auto it = k_.find(std::string(region));
  if (it == k_.end())
    throw ValidationError("region '" + std::string(region) + "' missing from region table");
  return it->second;
}

double RegionTable::conductivity(std::string_view region, const Parameter& mu) const {
  if (region == parametrized_) return mu.k_lens;
  return conductivity(region);
}

}  // namespace eyeheat::fem
