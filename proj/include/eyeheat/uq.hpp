#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eyeheat/rbm.hpp"

namespace eyeheat::uq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One-dimensional input law. Lognormal is the shifted law
/// gamma + exp(N(mu_log, sigma_log^2)) truncated to [lower, upper]; uniform
/// and constant are what they say. All sampling goes through quantile().
class Marginal {
 public:
  enum class Kind { uniform, lognormal, constant };

  static Marginal uniform(double lower, double upper);
  static Marginal lognormal(double mu_log, double sigma_log, double shift, double lower,
                            double upper);
  static Marginal constant(double value);

  Kind kind() const noexcept { return kind_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  bool degenerate() const noexcept { return kind_ == Kind::constant; }

  /// Inverse CDF of the (truncated) law, u in [0, 1].
  double quantile(double u) const;
  /// CDF of the (truncated) law.
  double cdf(double x) const;
  /// Density of the (truncated) law.
  double pdf(double x) const;
  /// Closed-form mean of the (truncated) law.
  double mean() const;

  /// JSON form, e.g. {"kind":"lognormal","mu_log":..,"sigma_log":..,"shift":..,
  /// "lower":..,"upper":..}; errors are ConfigError with `path` prefixed.
  nlohmann::json to_json() const;
  static Marginal from_json(const nlohmann::json& j, const std::string& path);

 private:
  Kind kind_ = Kind::constant;
  double lower_ = 0.0, upper_ = 0.0;
  double mu_log_ = 0.0, sigma_log_ = 1.0, shift_ = 0.0;
  double p_lower_ = 0.0, p_upper_ = 1.0;  // untruncated CDF at the bounds
};

/// Independent marginals, one per named input.
struct InputDistribution {
  std::vector<std::string> names;
  std::vector<Marginal> marginals;

  std::size_t dimension() const noexcept { return marginals.size(); }

  /// n x d matrix of i.i.d. draws; row-major consumption of one seeded
  /// mt19937_64 stream, so results depend only on (n, seed).
  Matrix sample(std::size_t n, std::uint64_t seed) const;
  /// Maps a row of physical values to [-1, 1]^d through the marginal CDFs.
  Vector to_reference(std::span<const double> x) const;

  /// The six-parameter eye distribution (T_amb, T_bl, h_amb, h_bl, E, k_lens).
  /// sigma_E selects the reading of the evaporation law.
  static InputDistribution eye_default(double sigma_E = 0.7);

  /// {"inputs": {"<name>": <marginal>, ...}} with every eye parameter present.
  static InputDistribution from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Vector-valued model y = f(x).
struct Model {
  std::vector<std::string> output_names;
  std::function<std::vector<double>(std::span<const double>)> evaluate;
};

/// Outputs of the reduced model; inputs are parameter vectors in canonical
/// order. Parameters outside D^mu are accepted (relaxed).
Model reduced_model(const rbm::ReducedModel& rm);

struct Histogram {
  std::vector<double> edges;  ///< bins + 1 edges
  std::vector<std::size_t> counts;
};

struct OutputStatistics {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  Histogram histogram;
};

struct PropagationResult {
  std::size_t n = 0;
  std::size_t failed = 0;
  std::vector<OutputStatistics> outputs;
  Matrix samples;  ///< successful evaluations, n_ok x outputs
  double wall_time = 0.0;

  void write_stats_csv(std::ostream& os, const std::string& unit = "K") const;
  void write_histogram_csv(std::ostream& os, const std::string& unit = "K") const;
};

/// Monte-Carlo propagation. Failed evaluations are excluded and counted.
PropagationResult propagate(const Model& model, const InputDistribution& dist, std::size_t n,
                            std::uint64_t seed, std::size_t bins = 50);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct SobolResult {
  std::string output;
  std::vector<std::string> inputs;
  std::vector<double> first;
  std::vector<double> total;
  std::vector<Interval> first_ci;
  std::vector<Interval> total_ci;
  double mean = 0.0;
  double variance = 0.0;
  double q2 = 1.0;         ///< NaN for Saltelli (no metamodel)
  bool degenerate = false; ///< output variance is zero; indices reported as 0
  std::string method;
  int degree = 0;
  std::size_t n_param = 0;
  std::size_t evaluations = 0;
  double wall_time = 0.0;
};

/// Violations of -d <= S_i, S_i <= S_tot_i + d, sum S_i <= 1 + 2.5d,
/// S_tot_i <= 1 + d; empty when sane.
std::vector<std::string> sanity_violations(const SobolResult& r, double d = 0.02);

void write_sobol_csv(std::ostream& os, const std::vector<SobolResult>& results);

/// Total-degree multi-indices in d variables, graded lexicographic order
/// (constant term first).
std::vector<std::vector<int>> total_degree_indices(std::size_t d, int degree);

/// Legendre chaos on the CDF-transformed inputs.
struct PolynomialChaos {
  InputDistribution dist;
  std::vector<std::vector<int>> indices;
  Matrix coefficients;  ///< terms x outputs

  std::vector<double> evaluate(std::span<const double> x) const;
};

struct PceOptions {
  std::size_t n_param = 200;
  int degree = 3;
  std::uint64_t seed = 1;
  std::size_t bootstrap = 500;
};

struct PceFit {
  PolynomialChaos chaos;
  std::vector<SobolResult> sobol;  ///< one per output
};

/// Least-squares chaos regression on n_param samples, Q2 on an independent
/// hold-out of n_param/2 samples, bootstrap CIs over regression rows.
/// Throws ValidationError when n_param < 2 x terms and NumericalError on a
/// rank-deficient design.
PceFit pce_fit(const Model& model, const InputDistribution& dist, const PceOptions& options);

struct SaltelliOptions {
  std::size_t n_base = 10000;
  std::uint64_t seed = 1;
  std::size_t bootstrap = 500;
};

/// Pick-freeze design with two base matrices and d hybrids (n_base (d + 2)
/// evaluations), Jansen estimators.
std::vector<SobolResult> saltelli_sobol(const Model& model, const InputDistribution& dist,
                                        const SaltelliOptions& options);

struct ConvergenceRow {
  std::size_t n_param = 0;
  std::vector<double> first;
  std::vector<double> total;
  double q2 = 0.0;
  double max_deviation = 0.0;
  double wall_time = 0.0;
};

/// pce_fit at each size for one output; deviation against the largest size,
/// taken over first and total indices.
std::vector<ConvergenceRow> sobol_convergence(const Model& model, const InputDistribution& dist,
                                              const std::vector<std::size_t>& sizes,
                                              std::size_t output, int degree, std::uint64_t seed,
                                              std::size_t bootstrap = 0);

void write_convergence_csv(std::ostream& os, const std::vector<std::string>& inputs,
                           const std::vector<ConvergenceRow>& rows);

}  // namespace eyeheat::uq
