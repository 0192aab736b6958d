#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mrband {

enum class KernelName { epanechnikov, biweight, triangular };

//! Compactly supported kernel density. Vanishes off [-support_a, support_a],
//! integrates to one and is symmetric about zero.
struct Kernel {
  KernelName name = KernelName::epanechnikov;
  double support_a = 1.0;

  double operator()(double u) const {
    if (std::abs(u) > support_a) return 0.0;
    switch (name) {
      case KernelName::epanechnikov:
        return 0.75 * (1.0 - u * u);
      case KernelName::biweight: {
        const double t = 1.0 - u * u;
        return 0.9375 * t * t;
      }
      case KernelName::triangular:
        return 1.0 - std::abs(u);
    }
    return 0.0;
  }

  //! Pointwise derivative of the kernel. The triangular kernel is not
  //! differentiable at 0; the slope of the right branch is used there, which
  //! is immaterial for the integral of K'^2.
  double deriv(double u) const {
    if (std::abs(u) > support_a) return 0.0;
    switch (name) {
      case KernelName::epanechnikov:
        return -1.5 * u;
      case KernelName::biweight:
        return -3.75 * u * (1.0 - u * u);
      case KernelName::triangular:
        return u < 0.0 ? 1.0 : -1.0;
    }
    return 0.0;
  }
};

inline Kernel make_kernel(KernelName name) {
  switch (name) {
    case KernelName::epanechnikov:
    case KernelName::biweight:
    case KernelName::triangular:
      return Kernel{name, 1.0};
  }
  throw std::invalid_argument("unsupported kernel");
}

inline std::string to_string(KernelName name) {
  switch (name) {
    case KernelName::epanechnikov: return "epanechnikov";
    case KernelName::biweight: return "biweight";
    case KernelName::triangular: return "triangular";
  }
  return "?";
}

//! Parses a kernel name; rejects anything outside the supported set (the
//! uniform kernel has no usable derivative, the Gaussian has unbounded
//! support, so neither admits the limit-law constants).
inline KernelName kernel_from_string(const std::string& s) {
  if (s == "epanechnikov") return KernelName::epanechnikov;
  if (s == "biweight") return KernelName::biweight;
  if (s == "triangular") return KernelName::triangular;
  throw std::invalid_argument(
      "unsupported kernel '" + s +
      "' (supported: epanechnikov, biweight, triangular)");
}

//! Functionals of the kernel entering the limit law: c_k = int K^2,
//! c1 = (K^2(A)+K^2(-A))/(2 c_k), c2 = int K'^2 / (2 c_k).
struct KernelConstants {
  double c_k;
  double c1;
  double c2;
  double support_a;
};

// Branch threshold distinguishing the c1 > 0 normalization from the c1 = 0
// one; closed-form c1 values are either exactly zero or order one.
inline constexpr double kC1BranchEps = 1e-12;

//! Closed-form constants for the supported kernels.
inline KernelConstants kernel_constants(const Kernel& kernel) {
  switch (kernel.name) {
    case KernelName::epanechnikov:
      return {3.0 / 5.0, 0.0, 5.0 / 4.0, kernel.support_a};
    case KernelName::biweight:
      return {5.0 / 7.0, 0.0, 3.0 / 2.0, kernel.support_a};
    case KernelName::triangular:
      return {2.0 / 3.0, 0.0, 3.0 / 2.0, kernel.support_a};
  }
  throw std::invalid_argument("unsupported kernel");
}

//! Centering sequence of the extreme-value normalization. Requires n >= 2
//! and a bandwidth exponent strictly inside (1/5, 1/3).
inline double d_n(std::int64_t n, double delta, const KernelConstants& kc) {
  if (n < 2) throw std::invalid_argument("d_n: n must be >= 2");
  if (!(delta > 0.2 && delta < 1.0 / 3.0))
    throw std::invalid_argument("d_n: delta must satisfy 1/5 < delta < 1/3");
  const double pi = std::numbers::pi;
  const double logn = std::log(static_cast<double>(n));
  const double s = std::sqrt(2.0 * delta * logn);
  if (kc.c1 > kC1BranchEps)
    return s + (std::log(kc.c1 / std::sqrt(pi)) +
                0.5 * std::log(delta * logn)) / s;
  return s + 0.5 * std::log(kc.c2 / (2.0 * pi * pi)) / s;
}

//! Limit CDF of the normalized maximal deviation.
inline double gumbel_cdf(double y) { return std::exp(-2.0 * std::exp(-y)); }

//! Unique solution of gumbel_cdf(x) = 1 - alpha.
inline double gumbel_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("gumbel_quantile: alpha must be in (0,1)");
  // -(log log(1/(1-alpha)) - log 2); log1p keeps small alpha accurate
  return std::numbers::ln2 - std::log(-std::log1p(-alpha));
}

}  // namespace mrband
