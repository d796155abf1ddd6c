#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"
#include "eyeheat/parallel.hpp"
#include "eyeheat/uq.hpp"

namespace eyeheat::uq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Evaluates every row of x. Failed rows are flagged in `ok` when given,
// otherwise the first failure propagates.
Matrix evaluate_rows(const Model& model, const Matrix& x, std::vector<char>* ok) {
  const auto K = static_cast<Eigen::Index>(model.output_names.size());
  Matrix y = Matrix::Zero(x.rows(), K);
  if (ok) ok->assign(static_cast<std::size_t>(x.rows()), 1);
  const Eigen::Index d = x.cols();
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t s) {
    const auto r = static_cast<Eigen::Index>(s);
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) row[static_cast<std::size_t>(i)] = x(r, i);
    try {
      const auto out = model.evaluate(row);
      if (static_cast<Eigen::Index>(out.size()) != K)
        throw ValidationError("model returned " + std::to_string(out.size()) + " outputs, expected " +
                              std::to_string(K));
      for (Eigen::Index k = 0; k < K; ++k) y(r, k) = out[static_cast<std::size_t>(k)];
    } catch (const Error&) {
      if (!ok) throw;
      (*ok)[s] = 0;
    }
  });
  return y;
}

bool negligible_variance(double variance, double mean) {
  return !(variance > 1e-24 * std::max(1.0, mean * mean));
}

// Reported when no bootstrap replicates were requested.
Interval no_interval() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan};
}

Interval percentile_interval(std::vector<double> v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.025), at(0.975)};
}

std::mt19937_64 bootstrap_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedb007u};
  return std::mt19937_64(seq);
}

// Orthonormal Legendre values psi_0..psi_p at xi in [-1, 1].
void legendre(double xi, int p, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(p + 1), 0.0);
  double p0 = 1.0, p1 = xi;
  out[0] = 1.0;
  if (p >= 1) out[1] = std::sqrt(3.0) * xi;
  for (int k = 1; k < p; ++k) {
    const double p2 = ((2.0 * k + 1.0) * xi * p1 - k * p0) / (k + 1.0);
    out[static_cast<std::size_t>(k + 1)] = std::sqrt(2.0 * k + 3.0) * p2;
    p0 = p1;
    p1 = p2;
  }
}

struct ChaosBasis {
  std::vector<std::vector<int>> indices;  // over all d variables
  int degree = 0;

  Matrix design(const InputDistribution& dist, const Matrix& x) const {
    const auto d = dist.dimension();
    Matrix psi(x.rows(), static_cast<Eigen::Index>(indices.size()));
    std::vector<std::vector<double>> values(d);
    std::vector<double> row(d);
    for (Eigen::Index s = 0; s < x.rows(); ++s) {
      for (std::size_t i = 0; i < d; ++i) row[i] = x(s, static_cast<Eigen::Index>(i));
      const Vector xi = dist.to_reference(row);
      for (std::size_t i = 0; i < d; ++i) legendre(xi[static_cast<Eigen::Index>(i)], degree, values[i]);
      for (std::size_t t = 0; t < indices.size(); ++t) {
        double v = 1.0;
        for (std::size_t i = 0; i < d; ++i)
          if (indices[t][i]) v *= values[i][static_cast<std::size_t>(indices[t][i])];
        psi(s, static_cast<Eigen::Index>(t)) = v;
      }
    }
    return psi;
  }
};

// Degenerate inputs carry no variance; the basis only spans active inputs.
ChaosBasis make_basis(const InputDistribution& dist, int degree) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < dist.dimension(); ++i)
    if (!dist.marginals[i].degenerate()) active.push_back(i);
  ChaosBasis b;
  b.degree = degree;
  for (const auto& a : total_degree_indices(active.size(), degree)) {
    std::vector<int> full(dist.dimension(), 0);
    for (std::size_t j = 0; j < active.size(); ++j) full[active[j]] = a[j];
    b.indices.push_back(std::move(full));
  }
  return b;
}

struct Indices {
  std::vector<double> first, total;
  double mean = 0.0, variance = 0.0;
  bool degenerate = false;
};

Indices chaos_indices(const std::vector<std::vector<int>>& indices, const Vector& c) {
  const std::size_t d = indices.front().size();
  Indices r;
  r.first.assign(d, 0.0);
  r.total.assign(d, 0.0);
  r.mean = c[0];
  for (std::size_t t = 1; t < indices.size(); ++t) r.variance += c[static_cast<Eigen::Index>(t)] * c[static_cast<Eigen::Index>(t)];
  r.degenerate = negligible_variance(r.variance, r.mean);
  if (r.degenerate) return r;
  for (std::size_t t = 1; t < indices.size(); ++t) {
    const double share = c[static_cast<Eigen::Index>(t)] * c[static_cast<Eigen::Index>(t)] / r.variance;
    std::size_t nonzero = 0, last = 0;
    for (std::size_t i = 0; i < d; ++i)
      if (indices[t][i]) {
        ++nonzero;
        last = i;
        r.total[i] += share;
      }
    if (nonzero == 1) r.first[last] += share;
  }
  return r;
}

double population_variance(const Vector& y) {
  if (y.size() == 0) return 0.0;
  return (y.array() - y.mean()).square().mean();
}

}  // namespace

PropagationResult propagate(const Model& model, const InputDistribution& dist, std::size_t n,
                            std::uint64_t seed, std::size_t bins) {
  if (n == 0) throw ValidationError("propagation needs at least one sample");
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  const auto t0 = Clock::now();
  const Matrix x = dist.sample(n, seed);
  std::vector<char> ok;
  const Matrix y = evaluate_rows(model, x, &ok);
  PropagationResult r;
  r.n = n;
  r.failed = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 0));
  const auto n_ok = static_cast<Eigen::Index>(n - r.failed);
  r.samples.resize(n_ok, y.cols());
  for (Eigen::Index s = 0, j = 0; s < y.rows(); ++s)
    if (ok[static_cast<std::size_t>(s)]) r.samples.row(j++) = y.row(s);

  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    OutputStatistics st;
    st.name = model.output_names[static_cast<std::size_t>(k)];
    st.histogram.counts.assign(bins, 0);
    if (n_ok > 0) {
      const auto col = r.samples.col(k);
      // shift by the first sample so a constant output has exactly zero spread
      const Eigen::ArrayXd d = col.array() - col[0];
      const double shift = d.mean();
      st.mean = col[0] + shift;
      st.std = n_ok > 1 ? std::sqrt((d - shift).square().sum() / static_cast<double>(n_ok - 1))
                        : 0.0;
      st.min = col.minCoeff();
      st.max = col.maxCoeff();
      const double width = (st.max - st.min) / static_cast<double>(bins);
      for (std::size_t b = 0; b <= bins; ++b)
        st.histogram.edges.push_back(b == bins ? st.max : st.min + width * static_cast<double>(b));
      for (Eigen::Index s = 0; s < n_ok; ++s) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((col[s] - st.min) / width) : 0;
        st.histogram.counts[std::min(b, bins - 1)]++;
      }
    } else {
      st.mean = st.std = st.min = st.max = std::numeric_limits<double>::quiet_NaN();
      st.histogram.edges.assign(bins + 1, std::numeric_limits<double>::quiet_NaN());
    }
    r.outputs.push_back(std::move(st));
  }
  r.wall_time = seconds_since(t0);
  return r;
}

void PropagationResult::write_stats_csv(std::ostream& os, const std::string& unit) const {
  os << "output,n,failed,mean [" << unit << "],std [" << unit << "],min [" << unit << "],max ["
     << unit << "]\n";
  for (const auto& o : outputs)
    os << io::csv_field(o.name) << "," << n << "," << failed << "," << io::format_double(o.mean)
       << "," << io::format_double(o.std) << "," << io::format_double(o.min) << ","
       << io::format_double(o.max) << "\n";
}

void PropagationResult::write_histogram_csv(std::ostream& os, const std::string& unit) const {
  os << "output,bin,lower [" << unit << "],upper [" << unit << "],count\n";
  for (const auto& o : outputs)
    for (std::size_t b = 0; b < o.histogram.counts.size(); ++b)
      os << io::csv_field(o.name) << "," << b << "," << io::format_double(o.histogram.edges[b])
         << "," << io::format_double(o.histogram.edges[b + 1]) << "," << o.histogram.counts[b]
         << "\n";
}

std::vector<std::vector<int>> total_degree_indices(std::size_t d, int degree) {
  if (degree < 0) throw ValidationError("chaos degree must be non-negative");
  std::vector<std::vector<int>> out;
  std::vector<int> a(d, 0);
  // Enumerate by total degree, then lexicographically (first variable fastest
  // to grow) within each degree.
  for (int total = 0; total <= degree; ++total) {
    std::vector<std::vector<int>> level;
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
      if (i + 1 == d || d == 0) {
        if (d > 0) a[i] = left;
        if (d > 0 || left == 0) level.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[i] = v;
        rec(i + 1, left - v);
      }
    };
    rec(0, total);
    for (auto& l : level) out.push_back(std::move(l));
  }
  return out;
}

std::vector<double> PolynomialChaos::evaluate(std::span<const double> x) const {
  ChaosBasis b{indices, 0};
  for (const auto& a : indices)
    for (int v : a) b.degree = std::max(b.degree, v);
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
  const Vector y = (b.design(dist, row) * coefficients).transpose();
  return {y.data(), y.data() + y.size()};
}

PceFit pce_fit(const Model& model, const InputDistribution& dist, const PceOptions& options) {
  const auto t0 = Clock::now();
  const ChaosBasis basis = make_basis(dist, options.degree);
  const std::size_t P = basis.indices.size();
  if (options.n_param < 2 * P)
    throw ValidationError("n_param = " + std::to_string(options.n_param) + " is below twice the " +
                          std::to_string(P) + " chaos terms of degree " +
                          std::to_string(options.degree));
  const std::size_t n_valid = std::max<std::size_t>(1, options.n_param / 2);
  const Matrix x_all = dist.sample(options.n_param + n_valid, options.seed);
  const Matrix y_all = evaluate_rows(model, x_all, nullptr);
  const auto n = static_cast<Eigen::Index>(options.n_param);
  const Matrix psi = basis.design(dist, x_all.topRows(n));
  const Matrix y = y_all.topRows(n);

  Eigen::ColPivHouseholderQR<Matrix> qr(psi);
  if (qr.rank() < static_cast<Eigen::Index>(P))
    throw NumericalError("rank-deficient chaos regression (rank " + std::to_string(qr.rank()) +
                         " of " + std::to_string(P) +
                         " terms); increase n_param or lower the degree");
  PceFit fit;
  fit.chaos.dist = dist;
  fit.chaos.indices = basis.indices;
  fit.chaos.coefficients = qr.solve(y);

  const Matrix psi_v = basis.design(dist, x_all.bottomRows(static_cast<Eigen::Index>(n_valid)));
  const Matrix y_v = y_all.bottomRows(static_cast<Eigen::Index>(n_valid));
  const Matrix pred = psi_v * fit.chaos.coefficients;

  // Bootstrap over regression rows through weighted normal equations; the
  // orthonormal design keeps them well conditioned.
  const std::size_t K = model.output_names.size();
  std::vector<std::vector<std::vector<double>>> boot_first(K), boot_total(K);
  auto rng = bootstrap_rng(options.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    Vector w = Vector::Zero(n);
    for (Eigen::Index s = 0; s < n; ++s) w[pick(rng)] += 1.0;
    const Matrix ws = w.cwiseSqrt().asDiagonal() * psi;
    Matrix G = Matrix::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    G.selfadjointView<Eigen::Lower>().rankUpdate(ws.transpose());
    const Matrix rhs = psi.transpose() * (w.asDiagonal() * y);
    Eigen::LLT<Matrix> llt(G.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) continue;
    const Matrix c = llt.solve(rhs);
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = chaos_indices(basis.indices, c.col(static_cast<Eigen::Index>(k)));
      boot_first[k].push_back(idx.first);
      boot_total[k].push_back(idx.total);
    }
  }

  const double elapsed = seconds_since(t0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const auto idx = chaos_indices(basis.indices, fit.chaos.coefficients.col(kk));
    SobolResult r;
    r.output = model.output_names[k];
    r.inputs = dist.names;
    r.first = idx.first;
    r.total = idx.total;
    r.mean = idx.mean;
    r.variance = idx.variance;
    r.degenerate = idx.degenerate;
    const double mse = (y_v.col(kk) - pred.col(kk)).squaredNorm() / static_cast<double>(n_valid);
    const double var_v = population_variance(y_v.col(kk));
    if (negligible_variance(var_v, y_v.col(kk).mean()))
      r.q2 = negligible_variance(mse, y_v.col(kk).mean()) ? 1.0 : 0.0;
    else
      r.q2 = 1.0 - mse / var_v;
    for (std::size_t i = 0; i < dist.dimension(); ++i) {
      std::vector<double> f, t;
      for (std::size_t b = 0; b < boot_first[k].size(); ++b) {
        f.push_back(boot_first[k][b][i]);
        t.push_back(boot_total[k][b][i]);
      }
      r.first_ci.push_back(f.empty() ? no_interval() : percentile_interval(f));
      r.total_ci.push_back(t.empty() ? no_interval() : percentile_interval(t));
    }
    r.method = "pce";
    r.degree = options.degree;
    r.n_param = options.n_param;
    r.evaluations = static_cast<std::size_t>(x_all.rows());
    r.wall_time = elapsed;
    fit.sobol.push_back(std::move(r));
  }
  return fit;
}

std::vector<SobolResult> saltelli_sobol(const Model& model, const InputDistribution& dist,
                                        const SaltelliOptions& options) {
  if (options.n_base < 100) throw ValidationError("Saltelli design needs n_base >= 100");
  const auto t0 = Clock::now();
  const auto n = static_cast<Eigen::Index>(options.n_base);
  const auto d = static_cast<Eigen::Index>(dist.dimension());
  const Matrix base = dist.sample(2 * options.n_base, options.seed);
  Matrix design((d + 2) * n, d);
  design.topRows(n) = base.topRows(n);
  design.middleRows(n, n) = base.bottomRows(n);
  for (Eigen::Index i = 0; i < d; ++i) {
    auto block = design.middleRows((2 + i) * n, n);
    block = base.topRows(n);
    block.col(i) = base.bottomRows(n).col(i);
  }
  const Matrix y = evaluate_rows(model, design, nullptr);
  const std::size_t K = model.output_names.size();

  // Jansen estimators over a (possibly resampled) set of base rows.
  auto estimate = [&](Eigen::Index k, const std::vector<Eigen::Index>& rows) {
    Indices r;
    r.first.assign(static_cast<std::size_t>(d), 0.0);
    r.total.assign(static_cast<std::size_t>(d), 0.0);
    const double m = static_cast<double>(rows.size());
    double sum = 0.0;
    for (auto j : rows) sum += y(j, k) + y(n + j, k);
    r.mean = sum / (2 * m);
    for (auto j : rows)
      r.variance += (std::pow(y(j, k) - r.mean, 2) + std::pow(y(n + j, k) - r.mean, 2)) / (2 * m);
    r.degenerate = negligible_variance(r.variance, r.mean);
    if (r.degenerate) return r;
    for (Eigen::Index i = 0; i < d; ++i) {
      double first = 0.0, total = 0.0;
      for (auto j : rows) {
        const double fab = y((2 + i) * n + j, k);
        first += std::pow(y(n + j, k) - fab, 2);
        total += std::pow(y(j, k) - fab, 2);
      }
      r.first[static_cast<std::size_t>(i)] = (r.variance - first / (2 * m)) / r.variance;
      r.total[static_cast<std::size_t>(i)] = total / (2 * m) / r.variance;
    }
    return r;
  };

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<std::vector<double>>> boot_first(K), boot_total(K);
  auto rng = bootstrap_rng(options.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    for (auto& j : rows) j = pick(rng);
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = estimate(static_cast<Eigen::Index>(k), rows);
      boot_first[k].push_back(idx.first);
      boot_total[k].push_back(idx.total);
    }
  }

  const double elapsed = seconds_since(t0);
  std::vector<SobolResult> out;
  for (std::size_t k = 0; k < K; ++k) {
    const auto idx = estimate(static_cast<Eigen::Index>(k), all);
    SobolResult r;
    r.output = model.output_names[k];
    r.inputs = dist.names;
    r.first = idx.first;
    r.total = idx.total;
    r.mean = idx.mean;
    r.variance = idx.variance;
    r.degenerate = idx.degenerate;
    r.q2 = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < dist.dimension(); ++i) {
      std::vector<double> f, t;
      for (std::size_t b = 0; b < boot_first[k].size(); ++b) {
        f.push_back(boot_first[k][b][i]);
        t.push_back(boot_total[k][b][i]);
      }
      r.first_ci.push_back(f.empty() ? no_interval() : percentile_interval(f));
      r.total_ci.push_back(t.empty() ? no_interval() : percentile_interval(t));
    }
    r.method = "saltelli";
    r.n_param = options.n_base;
    r.evaluations = static_cast<std::size_t>(design.rows());
    r.wall_time = elapsed;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> sanity_violations(const SobolResult& r, double d) {
  std::vector<std::string> v;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.first.size(); ++i) {
    const std::string name = i < r.inputs.size() ? r.inputs[i] : std::to_string(i);
    if (r.first[i] < -d) v.push_back("S(" + name + ") < -" + io::format_double(d));
    if (r.first[i] > r.total[i] + d) v.push_back("S(" + name + ") > S_tot(" + name + ") + tol");
    if (r.total[i] > 1.0 + d) v.push_back("S_tot(" + name + ") > 1 + tol");
    sum += r.first[i];
  }
  if (sum > 1.0 + 2.5 * d) v.push_back("sum of first-order indices exceeds 1 + tol");
  return v;
}

void write_sobol_csv(std::ostream& os, const std::vector<SobolResult>& results) {
  os << "output,input,first [-],first_ci_low [-],first_ci_high [-],total [-],total_ci_low [-],"
        "total_ci_high [-],q2 [-],variance,method,degree,n_param,degenerate\n";
  for (const auto& r : results)
    for (std::size_t i = 0; i < r.inputs.size(); ++i)
      os << io::csv_field(r.output) << "," << io::csv_field(r.inputs[i]) << ","
         << io::format_double(r.first[i]) << "," << io::format_double(r.first_ci[i].lower) << ","
         << io::format_double(r.first_ci[i].upper) << "," << io::format_double(r.total[i]) << ","
         << io::format_double(r.total_ci[i].lower) << ","
         << io::format_double(r.total_ci[i].upper) << "," << io::format_double(r.q2) << ","
         << io::format_double(r.variance) << "," << r.method << "," << r.degree << ","
         << r.n_param << "," << (r.degenerate ? "true" : "false") << "\n";
}

std::vector<ConvergenceRow> sobol_convergence(const Model& model, const InputDistribution& dist,
                                              const std::vector<std::size_t>& sizes,
                                              std::size_t output, int degree, std::uint64_t seed,
                                              std::size_t bootstrap) {
  if (sizes.empty()) throw ValidationError("convergence study needs at least one size");
  if (!std::is_sorted(sizes.begin(), sizes.end()) ||
      std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end())
    throw ValidationError("convergence sizes must be strictly increasing");
  if (output >= model.output_names.size())
    throw ValidationError("output index " + std::to_string(output) + " out of range");
  std::vector<ConvergenceRow> rows;
  for (std::size_t n : sizes) {
    const auto t0 = Clock::now();
    const auto fit = pce_fit(model, dist, {n, degree, seed, bootstrap});
    const auto& s = fit.sobol[output];
    rows.push_back({n, s.first, s.total, s.q2, 0.0, seconds_since(t0)});
  }
  const auto& ref = rows.back();
  for (auto& r : rows)
    for (std::size_t i = 0; i < r.first.size(); ++i)
      r.max_deviation = std::max({r.max_deviation, std::abs(r.first[i] - ref.first[i]),
                                  std::abs(r.total[i] - ref.total[i])});
  return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<std::string>& inputs,
                           const std::vector<ConvergenceRow>& rows) {
  os << "n_param,max_deviation [-],q2 [-]";
  for (const auto& n : inputs) os << ",first_" << n << " [-]";
  for (const auto& n : inputs) os << ",total_" << n << " [-]";
  os << "\n";
  for (const auto& r : rows) {
    os << r.n_param << "," << io::format_double(r.max_deviation) << "," << io::format_double(r.q2);
    for (double v : r.first) os << "," << io::format_double(v);
    for (double v : r.total) os << "," << io::format_double(v);
    os << "\n";
  }
}

}  // namespace eyeheat::uq
