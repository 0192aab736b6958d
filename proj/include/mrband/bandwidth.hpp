#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mrband/estimators.hpp"
#include "mrband/kernels.hpp"
#include "mrband/sample.hpp"

namespace mrband {

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Grid-restricted leave-one-out cross-validation on the exponent scale.
struct CvConfig {
  std::vector<double> delta_grid;  // each value strictly inside (1/5, 1/3)
  double beta_margin = 0.01;       // minimum gap delta - beta
};

inline std::vector<double> default_delta_grid() {
  // 14 equally spaced exponents covering the admissible interval with margin
  std::vector<double> g(14);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = 0.205 + (0.330 - 0.205) * static_cast<double>(i) / 13.0;
  return g;
}

inline CvConfig default_cv_config() { return {default_delta_grid(), 0.01}; }

inline void validate_cv_config(const CvConfig& config) {
  if (config.delta_grid.empty())
    throw std::invalid_argument("cv: delta grid must be nonempty");
  for (double g : config.delta_grid)
    if (!(g > 0.2 && g < 1.0 / 3.0))
      throw std::invalid_argument("cv: grid exponents must lie in (1/5, 1/3)");
  if (!(config.beta_margin > 0.0))
    throw std::invalid_argument("cv: beta_margin must be positive");
}

namespace detail {

// LOO squared error of the complete-case regression at bandwidth h.
inline double loo_error_regression(const Sample& sample, const Kernel& kernel,
                                   double h) {
  const std::size_t n = sample.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Record& ri = sample.records[i];
    if (!ri.delta) continue;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Record& rj = sample.records[j];
      if (!rj.delta) continue;
      const double w = kernel((ri.x - rj.x) / h);
      num += rj.y * w;
      den += w;
    }
    const double pred = den > 0.0 ? num / den : 0.0;
    const double d = ri.y - pred;
    err += d * d;
  }
  return err;
}

// LOO squared error of the raw selection-probability regression at lambda.
inline double loo_error_selection(const Sample& sample, const Kernel& kernel,
                                  double lambda, std::span<const double> eps) {
  const std::size_t n = sample.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Record& ri = sample.records[i];
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Record& rj = sample.records[j];
      const double w = kernel((ri.x - rj.x) / lambda);
      num += ((rj.delta ? 1.0 : 0.0) + eps[j]) * w;
      den += w;
    }
    const double pred = den > 0.0 ? num / den : 0.0;
    const double d = ((ri.delta ? 1.0 : 0.0) + eps[i]) - pred;
    err += d * d;
  }
  return err;
}

}  // namespace detail

//! Selects the regression exponent by LOO CV of the complete-case fit with
//! h = n^-delta over the configured grid; ties break toward the smaller
//! exponent (the larger bandwidth).
inline double select_delta(const Sample& sample, const Kernel& kernel,
                           const CvConfig& config) {
  validate_cv_config(config);
  if (sample.size() < 20)
    throw std::invalid_argument("select_delta: need at least 20 records");
  if (sample.complete_cases() < 2)
    throw SelectionError("select_delta: fewer than 2 complete cases");

  std::vector<double> grid = config.delta_grid;
  std::sort(grid.begin(), grid.end());
  const double n = static_cast<double>(sample.size());
  double best = grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double g : grid) {
    const double err =
        detail::loo_error_regression(sample, kernel, std::pow(n, -g));
    if (err < best_err) {
      best_err = err;
      best = g;
    }
  }
  return best;
}

//! Selects the selection-probability exponent over the grid values g with
//! 1/5 < g <= delta - beta_margin, by LOO CV of the fit to delta_i + eps_i.
//! If the restriction empties the grid, falls back to delta - beta_margin,
//! pulled up to the midpoint of (1/5, delta) when that would leave the
//! admissible range.
inline double select_beta(const Sample& sample, const Kernel& kernel,
                          std::span<const double> eps, double delta,
                          const CvConfig& config) {
  validate_cv_config(config);
  if (!(delta > 0.2 && delta < 1.0 / 3.0))
    throw std::invalid_argument("select_beta: delta must lie in (1/5, 1/3)");

  std::vector<double> grid;
  for (double g : config.delta_grid)
    if (g <= delta - config.beta_margin) grid.push_back(g);
  std::sort(grid.begin(), grid.end());

  if (grid.empty()) {
    const double fb = delta - config.beta_margin;
    return fb > 0.2 ? fb : 0.5 * (0.2 + delta);
  }

  const double n = static_cast<double>(sample.size());
  double best = grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double g : grid) {
    const double err =
        detail::loo_error_selection(sample, kernel, std::pow(n, -g), eps);
    if (err < best_err) {
      best_err = err;
      best = g;
    }
  }
  return best;
}

//! Convenience wrapper running both selections in sequence.
inline BandwidthSpec select_bandwidths(const Sample& sample,
                                       const Kernel& kernel,
                                       std::span<const double> eps,
                                       const CvConfig& config) {
  const double delta = select_delta(sample, kernel, config);
  const double beta = select_beta(sample, kernel, eps, delta, config);
  return {delta, beta};
}

}  // namespace mrband
