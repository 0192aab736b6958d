#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mrband/estimators.hpp"
#include "mrband/kernels.hpp"
#include "mrband/rng.hpp"
#include "mrband/sample.hpp"

namespace mrband {

class BandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Per-grid-point diagnostics. An empty window means the kernel sum at that
//! point was zero and the 0/0 := 0 convention fired; such points carry no
//! usable band and are excluded from supremum statistics.
enum PointFlag : unsigned {
  kFlagEmptyWindow = 1u,
  kFlagClampedP = 2u,
  kFlagFlooredVariance = 4u,
};

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 200;

  std::vector<double> points() const {
    if (count < 2 || !(lo < hi))
      throw std::invalid_argument("grid: need lo < hi and at least 2 points");
    std::vector<double> g(count);
    for (std::size_t j = 0; j < count; ++j)
      g[j] = lo + (hi - lo) * static_cast<double>(j) /
                      static_cast<double>(count - 1);
    return g;
  }
};

//! Alpha-independent fitted surface on a grid: regression estimate, density
//! estimate, floored variance estimate and diagnostics, together with the
//! normalizing quantities of the limit law. Bands at any level and the
//! maximal-deviation statistics are cheap functions of this object.
struct Fit {
  std::vector<double> grid;
  std::vector<double> mhat;
  std::vector<double> fhat;
  std::vector<double> sigma2;
  std::vector<unsigned> flags;
  std::size_t n = 0;      // full sample size (normalization uses it even for
                          // the complete-case fit)
  double h = 0.0;
  double delta = 0.0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  KernelName kernel = KernelName::epanechnikov;
  KernelConstants consts{};
  double dn = 0.0;
};

//! Fits the inverse-probability-weighted estimator and its companions on the
//! grid. eps must hold one realized perturbation per record.
inline Fit ipw_fit(const Sample& sample, const Kernel& kernel,
                   const BandwidthSpec& bw, std::span<const double> eps,
                   const GridSpec& grid_spec = {},
                   double p_min = kDefaultPMin,
                   double sigma2_min = kDefaultSigma2Min) {
  validate_sample(sample);
  validate_bandwidths(bw);
  if (eps.size() != sample.size())
    throw std::invalid_argument("ipw_fit: eps length must match sample size");

  const std::size_t n = sample.size();
  const double h = std::pow(static_cast<double>(n), -bw.delta);
  const double lambda = std::pow(static_cast<double>(n), -bw.beta);

  const SelectionProbs sel =
      selection_prob_at_records(sample, kernel, lambda, eps, p_min);

  // weighted responses delta_i y_i / phat_i + eps_i
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Record& r = sample.records[i];
    w[i] = (r.delta ? r.y / sel.value[i] : 0.0) + eps[i];
  }

  Fit fit;
  fit.grid = grid_spec.points();
  fit.n = n;
  fit.h = h;
  fit.delta = bw.delta;
  fit.beta = bw.beta;
  fit.kernel = kernel.name;
  fit.consts = kernel_constants(kernel);
  fit.dn = d_n(static_cast<std::int64_t>(n), bw.delta, fit.consts);

  const std::size_t m = fit.grid.size();
  fit.mhat.resize(m);
  fit.fhat.resize(m);
  fit.sigma2.resize(m);
  fit.flags.assign(m, 0u);
  for (std::size_t j = 0; j < m; ++j) {
    const double x = fit.grid[j];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    bool clamped = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double k = kernel((x - sample.records[i].x) / h);
      s0 += k;
      s1 += w[i] * k;
      s2 += w[i] * w[i] * k;
      if (k > 0.0 && sel.clamped[i]) clamped = true;
    }
    fit.fhat[j] = s0 / (static_cast<double>(n) * h);
    if (s0 > 0.0) {
      fit.mhat[j] = s1 / s0;
      const double raw = s2 / s0 - fit.mhat[j] * fit.mhat[j];
      fit.sigma2[j] = std::max(raw, sigma2_min);
      if (raw < sigma2_min) fit.flags[j] |= kFlagFlooredVariance;
      if (clamped) fit.flags[j] |= kFlagClampedP;
    } else {
      fit.mhat[j] = 0.0;
      fit.sigma2[j] = sigma2_min;
      fit.flags[j] |= kFlagEmptyWindow | kFlagFlooredVariance;
    }
  }
  return fit;
}

//! Fits the complete-case estimator, density and variance from the records
//! with observed responses only. The normalization (h and the n entering the
//! band width) still uses the full sample size, matching the statistic the
//! complete-case benchmark is evaluated with.
inline Fit complete_case_fit(const Sample& sample, const Kernel& kernel,
                             const BandwidthSpec& bw,
                             const GridSpec& grid_spec = {},
                             double sigma2_min = kDefaultSigma2Min) {
  validate_sample(sample);
  validate_bandwidths(bw);

  const std::size_t n = sample.size();
  const double h = std::pow(static_cast<double>(n), -bw.delta);
  const std::size_t n1 = sample.complete_cases();

  Fit fit;
  fit.grid = grid_spec.points();
  fit.n = n;
  fit.h = h;
  fit.delta = bw.delta;
  fit.kernel = kernel.name;
  fit.consts = kernel_constants(kernel);
  fit.dn = d_n(static_cast<std::int64_t>(n), bw.delta, fit.consts);

  const std::size_t m = fit.grid.size();
  fit.mhat.resize(m);
  fit.fhat.resize(m);
  fit.sigma2.resize(m);
  fit.flags.assign(m, 0u);
  for (std::size_t j = 0; j < m; ++j) {
    const double x = fit.grid[j];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (const Record& r : sample.records) {
      if (!r.delta) continue;
      const double k = kernel((x - r.x) / h);
      s0 += k;
      s1 += r.y * k;
      s2 += r.y * r.y * k;
    }
    fit.fhat[j] = n1 > 0 ? s0 / (static_cast<double>(n1) * h) : 0.0;
    if (s0 > 0.0) {
      fit.mhat[j] = s1 / s0;
      const double raw = s2 / s0 - fit.mhat[j] * fit.mhat[j];
      fit.sigma2[j] = std::max(raw, sigma2_min);
      if (raw < sigma2_min) fit.flags[j] |= kFlagFlooredVariance;
    } else {
      fit.mhat[j] = 0.0;
      fit.sigma2[j] = sigma2_min;
      fit.flags[j] |= kFlagEmptyWindow | kFlagFlooredVariance;
    }
  }
  return fit;
}

struct BandResult {
  std::vector<double> grid;
  std::vector<double> mhat;
  std::vector<double> fhat;
  std::vector<double> sigma2;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<unsigned> flags;
  double alpha = 0.0;
  double d_n = 0.0;
  double x_alpha = 0.0;
  double c_k = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  double h = 0.0;
  std::size_t n = 0;
  KernelName kernel = KernelName::epanechnikov;
};

//! Assembles the (1-alpha) band from a fitted surface. Empty-window points
//! get a degenerate zero-width band and keep their flag; if every point is
//! empty there is no usable band and a BandError is thrown.
inline BandResult band_from_fit(const Fit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("band: alpha must be in (0,1)");

  bool any_usable = false;
  for (unsigned f : fit.flags)
    if (!(f & kFlagEmptyWindow)) any_usable = true;
  if (!any_usable)
    throw BandError("band: every grid point has an empty kernel window");

  BandResult out;
  out.grid = fit.grid;
  out.mhat = fit.mhat;
  out.fhat = fit.fhat;
  out.sigma2 = fit.sigma2;
  out.flags = fit.flags;
  out.alpha = alpha;
  out.d_n = fit.dn;
  out.x_alpha = gumbel_quantile(alpha);
  out.c_k = fit.consts.c_k;
  out.c1 = fit.consts.c1;
  out.c2 = fit.consts.c2;
  out.delta = fit.delta;
  out.beta = fit.beta;
  out.h = fit.h;
  out.n = fit.n;
  out.kernel = fit.kernel;

  const double nh = static_cast<double>(fit.n) * fit.h;
  const double s =
      std::sqrt(2.0 * fit.delta * std::log(static_cast<double>(fit.n)));
  const double factor = out.x_alpha / s + fit.dn;

  const std::size_t m = fit.grid.size();
  out.lower.resize(m);
  out.upper.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (fit.flags[j] & kFlagEmptyWindow) {
      out.lower[j] = out.upper[j] = fit.mhat[j];
      continue;
    }
    const double half =
        std::sqrt(out.c_k * fit.sigma2[j] / (nh * fit.fhat[j])) * factor;
    out.lower[j] = fit.mhat[j] - half;
    out.upper[j] = fit.mhat[j] + half;
  }
  return out;
}

//! Builds the proposed band end to end; draws the perturbations from rng.
inline BandResult build_band(const Sample& sample, const Kernel& kernel,
                             const BandwidthSpec& bw,
                             const EpsilonSpec& eps_spec, double alpha,
                             const GridSpec& grid_spec, std::mt19937_64& rng,
                             double p_min = kDefaultPMin,
                             double sigma2_min = kDefaultSigma2Min) {
  const std::vector<double> eps =
      draw_epsilons(eps_spec, sample.size(), rng);
  return band_from_fit(
      ipw_fit(sample, kernel, bw, eps, grid_spec, p_min, sigma2_min), alpha);
}

//! Overload with an already realized perturbation vector.
inline BandResult build_band(const Sample& sample, const Kernel& kernel,
                             const BandwidthSpec& bw,
                             std::span<const double> eps, double alpha,
                             const GridSpec& grid_spec = {},
                             double p_min = kDefaultPMin,
                             double sigma2_min = kDefaultSigma2Min) {
  return band_from_fit(
      ipw_fit(sample, kernel, bw, eps, grid_spec, p_min, sigma2_min), alpha);
}

//! Normalized maximal deviation of a fit from a reference curve, its
//! extreme-value normalization u_n, and the probability-scale transform
//! u = gumbel_cdf(u_n), which is approximately Unif[0,1] when the fit
//! matches the truth.
struct DeviationStat {
  double sup_value = 0.0;
  double u_n = 0.0;
  double u = 0.0;
};

inline DeviationStat deviation_stat(const Fit& fit,
                                    const std::function<double(double)>& m) {
  double sup = 0.0;
  for (std::size_t j = 0; j < fit.grid.size(); ++j) {
    if (fit.flags[j] & kFlagEmptyWindow) continue;
    const double v = std::sqrt(fit.fhat[j] / fit.sigma2[j]) *
                     std::abs(fit.mhat[j] - m(fit.grid[j]));
    if (v > sup) sup = v;
  }
  const double n = static_cast<double>(fit.n);
  const double s = std::sqrt(2.0 * fit.delta * std::log(n));
  DeviationStat out;
  out.sup_value = sup;
  out.u_n = s * (std::sqrt(n * fit.h / fit.consts.c_k) * sup - fit.dn);
  out.u = gumbel_cdf(out.u_n);
  return out;
}

inline DeviationStat complete_case_stat(const Sample& sample,
                                        const Kernel& kernel,
                                        const BandwidthSpec& bw,
                                        const std::function<double(double)>& m,
                                        const GridSpec& grid_spec = {}) {
  return deviation_stat(complete_case_fit(sample, kernel, bw, grid_spec), m);
}

struct TestResult {
  bool reject = false;
  double t_n = 0.0;
  double critical = 0.0;
};

//! Level-alpha maximal-deviation test of H0: m = m0 against the fitted
//! surface. Rejects when the normalized sup deviation exceeds the critical
//! value, which is the band half-width stripped of its pointwise scaling.
inline TestResult test_from_fit(const Fit& fit,
                                const std::function<double(double)>& m0,
                                double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("test: alpha must be in (0,1)");
  bool any_usable = false;
  double sup = 0.0;
  for (std::size_t j = 0; j < fit.grid.size(); ++j) {
    if (fit.flags[j] & kFlagEmptyWindow) continue;
    any_usable = true;
    const double v = std::sqrt(fit.fhat[j] / fit.sigma2[j]) *
                     std::abs(fit.mhat[j] - m0(fit.grid[j]));
    if (v > sup) sup = v;
  }
  if (!any_usable)
    throw BandError("test: every grid point has an empty kernel window");

  const double n = static_cast<double>(fit.n);
  const double s = std::sqrt(2.0 * fit.delta * std::log(n));
  TestResult out;
  out.t_n = sup;
  out.critical = std::sqrt(fit.consts.c_k / (n * fit.h)) *
                 (gumbel_quantile(alpha) / s + fit.dn);
  out.reject = out.t_n > out.critical;
  return out;
}

inline TestResult max_deviation_test(const Sample& sample, const Kernel& kernel,
                                     const BandwidthSpec& bw,
                                     const EpsilonSpec& eps_spec,
                                     const std::function<double(double)>& m0,
                                     double alpha, const GridSpec& grid_spec,
                                     std::mt19937_64& rng) {
  const std::vector<double> eps =
      draw_epsilons(eps_spec, sample.size(), rng);
  return test_from_fit(ipw_fit(sample, kernel, bw, eps, grid_spec), m0, alpha);
}

}  // namespace mrband
