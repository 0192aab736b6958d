#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mrband/bands.hpp"
#include "mrband/bandwidth.hpp"
#include "mrband/rng.hpp"
#include "mrband/sample.hpp"

namespace mrband {

// Monte Carlo study: X ~ N(0.5, 1), Y = sin(pi (X^4 + e^cos X)) + sigma(X) Z
// with sigma^2(x) = 1 + e^-(x+2), responses dropped by a logistic selection
// model. Model a removes roughly half the responses, model b about a quarter;
// none keeps everything.

enum class MissingModel { a, b, none };

inline std::string to_string(MissingModel m) {
  switch (m) {
    case MissingModel::a: return "a";
    case MissingModel::b: return "b";
    case MissingModel::none: return "none";
  }
  return "?";
}

inline MissingModel missing_model_from_string(const std::string& s) {
  if (s == "a" || s == "A") return MissingModel::a;
  if (s == "b" || s == "B") return MissingModel::b;
  if (s == "none") return MissingModel::none;
  throw std::invalid_argument("unknown missingness model '" + s +
                              "' (supported: a, b, none)");
}

inline double true_regression(double x) {
  return std::sin(std::numbers::pi * (x * x * x * x + std::exp(std::cos(x))));
}

inline double true_sd(double x) { return std::sqrt(1.0 + std::exp(-(x + 2.0))); }

inline double selection_prob(MissingModel model, double x) {
  double z = 0.0;
  switch (model) {
    case MissingModel::a: z = 1.0 - 2.0 * x; break;
    case MissingModel::b: z = 1.0 + 0.2 * x; break;
    case MissingModel::none: return 1.0;
  }
  return 1.0 / (1.0 + std::exp(-z));
}

//! Latent replication data: covariates, responses, and the true curve values
//! kept aside for coverage scoring.
struct LatentSample {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> m;
  std::vector<double> sd;
};

inline LatentSample gen_sample(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("gen_sample: n must be positive");
  LatentSample out;
  out.x.resize(n);
  out.y.resize(n);
  out.m.resize(n);
  out.sd.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = 0.5 + normal01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    out.m[i] = true_regression(out.x[i]);
    out.sd[i] = true_sd(out.x[i]);
    out.y[i] = out.m[i] + out.sd[i] * normal01(rng);
  }
  return out;
}

//! Draws the missingness indicators. The latent response stays stored in the
//! record but is masked by delta, so estimators never see it.
inline Sample apply_missingness(const LatentSample& latent, MissingModel model,
                                std::mt19937_64& rng) {
  Sample s;
  s.records.resize(latent.x.size());
  for (std::size_t i = 0; i < latent.x.size(); ++i) {
    const bool observed =
        model == MissingModel::none ||
        uniform01(rng) < selection_prob(model, latent.x[i]);
    s.records[i] = {latent.x[i], latent.y[i], observed};
  }
  return s;
}

struct SimConfig {
  std::size_t n = 500;
  MissingModel model = MissingModel::a;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  KernelName kernel = KernelName::epanechnikov;
  EpsilonSpec eps{};
  std::vector<double> alphas{0.10, 0.05};
  GridSpec grid{};
  // fixed exponents by default; disengage to run per-replication CV
  std::optional<BandwidthSpec> fixed_bw = BandwidthSpec{0.30, 0.25};
  CvConfig cv = default_cv_config();
  std::size_t threads = 1;
  double p_min = kDefaultPMin;
  double sigma2_min = kDefaultSigma2Min;
};

inline void validate_sim_config(const SimConfig& config) {
  if (config.reps < 1) throw std::invalid_argument("sim: reps must be >= 1");
  if (config.n < 20) throw std::invalid_argument("sim: n must be >= 20");
  if (config.alphas.empty())
    throw std::invalid_argument("sim: need at least one alpha level");
  for (double a : config.alphas)
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("sim: alpha levels must lie in (0,1)");
  if (config.fixed_bw) validate_bandwidths(*config.fixed_bw);
  validate_cv_config(config.cv);
}

//! Per-method aggregates, indexed like SimConfig::alphas.
struct MethodSummary {
  std::vector<double> coverage;
  std::vector<double> mean_area;
  double ks_distance = 0.0;
};

struct SimReport {
  std::vector<double> u_values;  // proposed estimator, one per replication
  std::vector<double> v_values;  // complete-case estimator
  MethodSummary proposed;
  MethodSummary complete_case;
  std::size_t failures = 0;
  SimConfig config;
};

//! Exact one-sample Kolmogorov-Smirnov distance to Unif[0,1].
inline double ks_uniform_distance(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("ks: need at least one value");
  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - u[i];
    const double lo = u[i] - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

struct UniformityDiagnostic {
  double ks_distance = 0.0;
  std::vector<double> ecdf_at;     // 101 equally spaced points on [0,1]
  std::vector<double> ecdf_value;
};

inline UniformityDiagnostic uniformity_diagnostic(
    std::span<const double> values) {
  UniformityDiagnostic out;
  out.ks_distance = ks_uniform_distance(values);
  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end());
  out.ecdf_at.resize(101);
  out.ecdf_value.resize(101);
  for (std::size_t j = 0; j <= 100; ++j) {
    const double t = static_cast<double>(j) / 100.0;
    out.ecdf_at[j] = t;
    const auto it = std::upper_bound(u.begin(), u.end(), t);
    out.ecdf_value[j] =
        static_cast<double>(it - u.begin()) / static_cast<double>(u.size());
  }
  return out;
}

namespace detail {

inline double band_area(const BandResult& band) {
  double area = 0.0;
  for (std::size_t j = 1; j < band.grid.size(); ++j) {
    const double w0 = band.upper[j - 1] - band.lower[j - 1];
    const double w1 = band.upper[j] - band.lower[j];
    area += 0.5 * (w0 + w1) * (band.grid[j] - band.grid[j - 1]);
  }
  return area;
}

inline bool band_covers(const BandResult& band, std::span<const double> m) {
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    if (band.flags[j] & kFlagEmptyWindow) continue;
    if (m[j] < band.lower[j] || m[j] > band.upper[j]) return false;
  }
  return true;
}

struct RepOutcome {
  bool failed = false;
  double u = 0.0;
  double v = 0.0;
  std::vector<unsigned char> covered_p, covered_c;  // per alpha
  std::vector<double> area_p, area_c;
};

inline RepOutcome run_replication(const SimConfig& config, std::uint64_t rep,
                                  std::span<const double> m_grid) {
  std::mt19937_64 data_rng =
      derive_stream(config.seed, rep, StreamPurpose::data);
  std::mt19937_64 eps_rng =
      derive_stream(config.seed, rep, StreamPurpose::epsilon);

  const LatentSample latent = gen_sample(config.n, data_rng);
  const Sample sample = apply_missingness(latent, config.model, data_rng);
  const std::vector<double> eps =
      draw_epsilons(config.eps, config.n, eps_rng);

  const Kernel kernel = make_kernel(config.kernel);
  RepOutcome out;
  try {
    const BandwidthSpec bw =
        config.fixed_bw ? *config.fixed_bw
                        : select_bandwidths(sample, kernel, eps, config.cv);

    const Fit fit_p = ipw_fit(sample, kernel, bw, eps, config.grid,
                              config.p_min, config.sigma2_min);
    const Fit fit_c = complete_case_fit(sample, kernel, bw, config.grid,
                                        config.sigma2_min);
    for (double alpha : config.alphas) {
      const BandResult bp = band_from_fit(fit_p, alpha);
      const BandResult bc = band_from_fit(fit_c, alpha);
      out.covered_p.push_back(band_covers(bp, m_grid) ? 1 : 0);
      out.covered_c.push_back(band_covers(bc, m_grid) ? 1 : 0);
      out.area_p.push_back(band_area(bp));
      out.area_c.push_back(band_area(bc));
    }
    out.u = deviation_stat(fit_p, true_regression).u;
    out.v = deviation_stat(fit_c, true_regression).u;
  } catch (const BandError&) {
    out.failed = true;
  } catch (const SelectionError&) {
    out.failed = true;
  }
  return out;
}

}  // namespace detail

//! Runs the full replication study. Replications use independent seed-derived
//! streams and results are folded in replication order, so the report is
//! identical for any thread count.
inline SimReport run_study(const SimConfig& config) {
  validate_sim_config(config);

  const std::vector<double> grid = config.grid.points();
  std::vector<double> m_grid(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    m_grid[j] = true_regression(grid[j]);

  std::vector<detail::RepOutcome> outcomes(config.reps);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.threads, config.reps));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.reps; ++r)
      outcomes[r] = detail::run_replication(config, r, m_grid);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t r = next.fetch_add(1);
          if (r >= config.reps) return;
          outcomes[r] = detail::run_replication(config, r, m_grid);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SimReport report;
  report.config = config;
  const std::size_t na = config.alphas.size();
  std::vector<double> cov_p(na, 0.0), cov_c(na, 0.0);
  std::vector<double> area_p(na, 0.0), area_c(na, 0.0);
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++report.failures;
      continue;
    }
    report.u_values.push_back(o.u);
    report.v_values.push_back(o.v);
    for (std::size_t a = 0; a < na; ++a) {
      cov_p[a] += o.covered_p[a];
      cov_c[a] += o.covered_c[a];
      area_p[a] += o.area_p[a];
      area_c[a] += o.area_c[a];
    }
  }
  const double ok = static_cast<double>(config.reps - report.failures);
  if (ok > 0) {
    for (std::size_t a = 0; a < na; ++a) {
      report.proposed.coverage.push_back(cov_p[a] / ok);
      report.complete_case.coverage.push_back(cov_c[a] / ok);
      report.proposed.mean_area.push_back(area_p[a] / ok);
      report.complete_case.mean_area.push_back(area_c[a] / ok);
    }
    report.proposed.ks_distance = ks_uniform_distance(report.u_values);
    report.complete_case.ks_distance = ks_uniform_distance(report.v_values);
  }
  return report;
}

}  // namespace mrband
