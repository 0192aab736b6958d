#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mrband/kernels.hpp"
#include "mrband/sample.hpp"

namespace mrband {

// Lower clamp for the estimated selection probability before it is used as a
// divisor, and the floor applied to the conditional-variance estimate before
// it enters a band width. Both are configurable at the call sites.
inline constexpr double kDefaultPMin = 0.05;
inline constexpr double kDefaultSigma2Min = 1e-8;

// Every estimator below follows the 0/0 := 0 convention for empty kernel
// windows and sums records left to right in sample order, so results are
// reproducible across runs and thread counts.

//! Nadaraya-Watson regression on a fully observed sample (every y present).
inline double nw_regress(const Sample& sample, const Kernel& kernel, double h,
                         double x) {
  double num = 0.0, den = 0.0;
  for (const Record& r : sample.records) {
    const double w = kernel((x - r.x) / h);
    num += r.y * w;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

//! Kernel density estimate of the covariate density.
inline double kde(const Sample& sample, const Kernel& kernel, double h,
                  double x) {
  double s = 0.0;
  for (const Record& r : sample.records) s += kernel((x - r.x) / h);
  return s / (static_cast<double>(sample.size()) * h);
}

//! Kernel regression using only records with observed responses.
inline double complete_case_regress(const Sample& sample, const Kernel& kernel,
                                    double h, double x) {
  double num = 0.0, den = 0.0;
  for (const Record& r : sample.records) {
    if (!r.delta) continue;
    const double w = kernel((x - r.x) / h);
    num += r.y * w;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

//! Kernel regression of (delta_i + eps_i) on x_i, estimating the selection
//! probability p(x) = P{delta=1 | X=x}. The raw value is clamped to
//! [p_min, 1 + max|eps|] before it can be used as a divisor; an empty window
//! yields p_min.
inline double estimate_selection_prob(const Sample& sample,
                                      const Kernel& kernel, double lambda,
                                      std::span<const double> eps, double x,
                                      double p_min = kDefaultPMin) {
  double num = 0.0, den = 0.0, hi = 1.0;
  for (std::size_t i = 0; i < sample.records.size(); ++i) {
    const Record& r = sample.records[i];
    const double w = kernel((x - r.x) / lambda);
    num += ((r.delta ? 1.0 : 0.0) + eps[i]) * w;
    den += w;
    hi = std::max(hi, 1.0 + std::abs(eps[i]));
  }
  if (den <= 0.0) return p_min;
  return std::clamp(num / den, p_min, hi);
}

//! Selection probabilities evaluated at every sample point at once, with
//! per-record diagnostics of where the clamp fired.
struct SelectionProbs {
  std::vector<double> value;
  std::vector<bool> clamped;
};

inline SelectionProbs selection_prob_at_records(const Sample& sample,
                                                const Kernel& kernel,
                                                double lambda,
                                                std::span<const double> eps,
                                                double p_min = kDefaultPMin) {
  const std::size_t n = sample.size();
  double hi = 1.0;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, 1.0 + std::abs(eps[i]));

  SelectionProbs out;
  out.value.resize(n);
  out.clamped.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = sample.records[i].x;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Record& r = sample.records[j];
      const double w = kernel((xi - r.x) / lambda);
      num += ((r.delta ? 1.0 : 0.0) + eps[j]) * w;
      den += w;
    }
    if (den <= 0.0) {
      // cannot happen for kernels with K(0) > 0, kept for safety
      out.value[i] = p_min;
      out.clamped[i] = true;
      continue;
    }
    const double raw = num / den;
    out.value[i] = std::clamp(raw, p_min, hi);
    out.clamped[i] = out.value[i] != raw;
  }
  return out;
}

//! Inverse-probability-weighted regression: kernel average of
//! delta_i y_i / phat(x_i) + eps_i. phat holds the (clamped) selection
//! probabilities aligned with the sample records.
inline double ipw_regress(const Sample& sample, const Kernel& kernel, double h,
                          std::span<const double> phat,
                          std::span<const double> eps, double x) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sample.records.size(); ++i) {
    const Record& r = sample.records[i];
    const double w = kernel((x - r.x) / h);
    const double resp = (r.delta ? r.y / phat[i] : 0.0) + eps[i];
    num += resp * w;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

//! Conditional-variance estimate at x: kernel second moment of the weighted
//! responses minus the square of mhat_x (the ipw_regress value at x). The
//! result is floored at sigma2_min; pass a large negative floor to obtain the
//! raw value.
inline double ipw_variance(const Sample& sample, const Kernel& kernel, double h,
                           std::span<const double> phat,
                           std::span<const double> eps, double x,
                           double mhat_x,
                           double sigma2_min = kDefaultSigma2Min) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sample.records.size(); ++i) {
    const Record& r = sample.records[i];
    const double w = kernel((x - r.x) / h);
    const double resp = (r.delta ? r.y / phat[i] : 0.0) + eps[i];
    num += resp * resp * w;
    den += w;
  }
  const double second = den > 0.0 ? num / den : 0.0;
  return std::max(second - mhat_x * mhat_x, sigma2_min);
}

}  // namespace mrband
