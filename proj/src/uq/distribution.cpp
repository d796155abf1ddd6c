#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "eyeheat/error.hpp"
#include "eyeheat/uq.hpp"

namespace eyeheat::uq {

namespace {

const boost::math::normal& standard_normal() {
  static const boost::math::normal n(0.0, 1.0);
  return n;
}

double phi_cdf(double z) {
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  return boost::math::cdf(standard_normal(), z);
}

double number(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
  if (!j.at(key).is_number()) throw ConfigError(path + "." + key, "must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + "." + key, "must be finite");
  return v;
}

}  // namespace

Marginal Marginal::uniform(double lower, double upper) {
  if (!(std::isfinite(lower) && std::isfinite(upper)))
    throw ValidationError("uniform bounds must be finite");
  if (!(lower < upper)) throw ValidationError("uniform law needs lower < upper");
  Marginal m;
  m.kind_ = Kind::uniform;
  m.lower_ = lower;
  m.upper_ = upper;
  return m;
}

Marginal Marginal::lognormal(double mu_log, double sigma_log, double shift, double lower,
                             double upper) {
  if (!(std::isfinite(mu_log) && std::isfinite(shift) && std::isfinite(lower) &&
        std::isfinite(upper)))
    throw ValidationError("lognormal parameters must be finite");
  if (!(sigma_log > 0.0) || !std::isfinite(sigma_log))
    throw ValidationError("lognormal sigma_log must be positive");
  if (!(lower < upper)) throw ValidationError("lognormal truncation needs lower < upper");
  if (lower < shift) throw ValidationError("lognormal truncation starts below the shift");
  Marginal m;
  m.kind_ = Kind::lognormal;
  m.mu_log_ = mu_log;
  m.sigma_log_ = sigma_log;
  m.shift_ = shift;
  m.lower_ = lower;
  m.upper_ = upper;
  auto z = [&](double x) {
    return x <= shift ? -std::numeric_limits<double>::infinity()
                      : (std::log(x - shift) - mu_log) / sigma_log;
  };
  m.p_lower_ = phi_cdf(z(lower));
  m.p_upper_ = phi_cdf(z(upper));
  if (!(m.p_upper_ > m.p_lower_))
    throw ValidationError("lognormal truncation interval carries no probability mass");
  return m;
}

Marginal Marginal::constant(double value) {
  if (!std::isfinite(value)) throw ValidationError("constant value must be finite");
  Marginal m;
  m.kind_ = Kind::constant;
  m.lower_ = m.upper_ = value;
  return m;
}

double Marginal::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  switch (kind_) {
    case Kind::constant:
      return lower_;
    case Kind::uniform:
      return lower_ + u * (upper_ - lower_);
    case Kind::lognormal: {
      const double p = p_lower_ + u * (p_upper_ - p_lower_);
      if (p <= 0.0) return lower_;
      if (p >= 1.0) return upper_;
      const double z = boost::math::quantile(standard_normal(), p);
      return std::clamp(shift_ + std::exp(mu_log_ + sigma_log_ * z), lower_, upper_);
    }
  }
  return lower_;
}

double Marginal::cdf(double x) const {
  if (kind_ == Kind::constant) return x < lower_ ? 0.0 : 1.0;
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  if (kind_ == Kind::uniform) return (x - lower_) / (upper_ - lower_);
  const double p = phi_cdf((std::log(x - shift_) - mu_log_) / sigma_log_);
  return std::clamp((p - p_lower_) / (p_upper_ - p_lower_), 0.0, 1.0);
}

double Marginal::pdf(double x) const {
  if (kind_ == Kind::constant || x < lower_ || x > upper_ || x <= shift_) return 0.0;
  if (kind_ == Kind::uniform) return 1.0 / (upper_ - lower_);
  const double z = (std::log(x - shift_) - mu_log_) / sigma_log_;
  return boost::math::pdf(standard_normal(), z) / (sigma_log_ * (x - shift_)) /
         (p_upper_ - p_lower_);
}

double Marginal::mean() const {
  switch (kind_) {
    case Kind::constant:
      return lower_;
    case Kind::uniform:
      return 0.5 * (lower_ + upper_);
    case Kind::lognormal: {
      auto z = [&](double x) {
        return x <= shift_ ? -std::numeric_limits<double>::infinity()
                           : (std::log(x - shift_) - mu_log_) / sigma_log_;
      };
      const double s = sigma_log_;
      return shift_ + std::exp(mu_log_ + 0.5 * s * s) *
                          (phi_cdf(z(upper_) - s) - phi_cdf(z(lower_) - s)) /
                          (p_upper_ - p_lower_);
    }
  }
  return lower_;
}

nlohmann::json Marginal::to_json() const {
  switch (kind_) {
    case Kind::constant:
      return {{"kind", "constant"}, {"value", lower_}};
    case Kind::uniform:
      return {{"kind", "uniform"}, {"lower", lower_}, {"upper", upper_}};
    case Kind::lognormal:
      return {{"kind", "lognormal"}, {"mu_log", mu_log_}, {"sigma_log", sigma_log_},
              {"shift", shift_},     {"lower", lower_},   {"upper", upper_}};
  }
  return {};
}

Marginal Marginal::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError(path + ".kind", "missing or not a string");
  const auto kind = j.at("kind").get<std::string>();
  static const std::vector<std::string> known = {"kind",  "value", "lower",    "upper",
                                                 "mu_log", "sigma_log", "shift"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(path + "." + key, "unknown field");
  try {
    if (kind == "constant") return constant(number(j, "value", path));
    if (kind == "uniform") return uniform(number(j, "lower", path), number(j, "upper", path));
    if (kind == "lognormal")
      return lognormal(number(j, "mu_log", path), number(j, "sigma_log", path),
                       number(j, "shift", path), number(j, "lower", path),
                       number(j, "upper", path));
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path + ".kind", "expected one of constant, uniform, lognormal; got '" +
                                        kind + "'");
}

Matrix InputDistribution::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dimension()));
  for (Eigen::Index s = 0; s < x.rows(); ++s)
    for (std::size_t i = 0; i < dimension(); ++i)
      x(s, static_cast<Eigen::Index>(i)) = marginals[i].quantile(unit(rng));
  return x;
}

Vector InputDistribution::to_reference(std::span<const double> x) const {
  Vector xi(static_cast<Eigen::Index>(dimension()));
  for (std::size_t i = 0; i < dimension(); ++i)
    xi[static_cast<Eigen::Index>(i)] = 2.0 * marginals[i].cdf(x[i]) - 1.0;
  return xi;
}

InputDistribution InputDistribution::eye_default(double sigma_E) {
  InputDistribution d;
  for (auto n : fem::Parameter::names()) d.names.emplace_back(n);
  d.marginals = {
      Marginal::uniform(283.15, 303.15),
      Marginal::uniform(308.0, 312.15),
      Marginal::lognormal(std::log(10.0) - 0.5, 1.0, 8.0, 8.0, 100.0),
      Marginal::lognormal(std::log(65.0) - 0.15 * 0.15 / 2, 0.15, 0.0, 50.0, 120.0),
      Marginal::lognormal(std::log(40.0) - sigma_E * sigma_E / 2, sigma_E, 20.0, 20.0, 130.0),
      Marginal::uniform(0.21, 0.544),
  };
  return d;
}

InputDistribution InputDistribution::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("$", "distribution must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "inputs") throw ConfigError(key, "unknown field");
  if (!j.contains("inputs") || !j.at("inputs").is_object())
    throw ConfigError("inputs", "missing or not an object");
  const auto& inputs = j.at("inputs");
  InputDistribution d;
  for (auto n : fem::Parameter::names()) {
    const std::string name(n);
    if (!inputs.contains(name)) throw ConfigError("inputs." + name, "missing");
    d.names.push_back(name);
    d.marginals.push_back(Marginal::from_json(inputs.at(name), "inputs." + name));
  }
  for (const auto& [key, _] : inputs.items())
    if (std::find(d.names.begin(), d.names.end(), key) == d.names.end())
      throw ConfigError("inputs." + key, "not a model parameter");
  return d;
}

nlohmann::json InputDistribution::to_json() const {
  nlohmann::json inputs = nlohmann::json::object();
  for (std::size_t i = 0; i < dimension(); ++i) inputs[names[i]] = marginals[i].to_json();
  return {{"inputs", inputs}};
}

Model reduced_model(const rbm::ReducedModel& rm) {
  Model m;
  m.output_names = rm.output_names;
  m.evaluate = [&rm](std::span<const double> x) {
    if (x.size() != fem::Parameter::size)
      throw ValidationError("reduced model expects 6 inputs");
    std::array<double, fem::Parameter::size> v{};
    std::copy(x.begin(), x.end(), v.begin());
    return rbm::online_solve(rm, fem::Parameter::relaxed(v)).outputs;
  };
  return m;
}

}  // namespace eyeheat::uq
