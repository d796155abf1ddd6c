#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace eyeheat::fem {

/// Physical parameter vector mu = (T_amb, T_bl, h_amb, h_bl, E, k_lens).
/// Temperatures in K, exchange coefficients in W/(m^2 K), evaporation in
/// W/m^2, conductivity in W/(m K).
struct Parameter {
  static constexpr std::size_t size = 6;

  double T_amb = 298.0;
  double T_bl = 310.0;
  double h_amb = 10.0;
  double h_bl = 65.0;
  double E = 40.0;
  double k_lens = 0.4;

  /// Baseline column of the parameter table.
  static Parameter baseline() { return {}; }

  /// Checked against the parameter box D^mu; throws ValidationError.
  static Parameter make(const std::array<double, size>& values);
  /// Only requires finite values and non-negative coefficients. Used by
  /// sweeps and sampling that leave D^mu.
  static Parameter relaxed(const std::array<double, size>& values);

  static const std::array<std::string_view, size>& names();
  static const std::array<std::string_view, size>& units();
  /// Index of a component by name ("T_amb", ...); throws ValidationError.
  static std::size_t index_of(std::string_view name);

  std::array<double, size> to_array() const { return {T_amb, T_bl, h_amb, h_bl, E, k_lens}; }
  double operator[](std::size_t i) const { return to_array()[i]; }
  /// Copy with component i replaced (relaxed check).
  Parameter with(std::size_t i, double value) const;

  bool in_domain() const;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// The box D^mu.
struct ParameterBox {
  std::array<double, Parameter::size> lower;
  std::array<double, Parameter::size> upper;
};
const ParameterBox& parameter_domain();

/// sigma (Stefan-Boltzmann), corneal emissivity and the radiation exchange
/// coefficient h_r used by the linearized model.
struct PhysicalConstants {
  double sigma = 5.67e-8;
  double emissivity = 0.975;
  double h_r = 6.0;

  void validate() const;
};

/// Radiation heat transfer coefficient sigma*eps*(T^2+T_amb^2)(T+T_amb).
double linearize_hr(double T_surface, double T_amb, const PhysicalConstants& consts);

/// Thermal conductivity per region; exactly one region takes its value from
/// the parameter (k_lens).
class RegionTable {
 public:
  RegionTable(std::map<std::string, double> conductivity, std::string parametrized);

  /// Default eye conductivities; lens is the parametrized region.
  static RegionTable eye_default();

  const std::map<std::string, double>& conductivities() const noexcept { return k_; }
  const std::string& parametrized_region() const noexcept { return parametrized_; }
  bool contains(std::string_view region) const { return k_.count(std::string(region)) > 0; }
  /// Fixed conductivity of region; the parametrized region returns its stored
  /// reference value.
  double conductivity(std::string_view region) const;
  /// Conductivity with the parametrized region taken from mu.
  double conductivity(std::string_view region, const Parameter& mu) const;

 private:
  std::map<std::string, double> k_;
  std::string parametrized_;
};

}  // namespace eyeheat::fem
