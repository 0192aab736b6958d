#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mrband {

//! One observation (x, y, delta). When delta is false the response is
//! treated as unobserved by every estimator; y may still hold a latent value
//! (simulation keeps it for scoring) or NaN (datasets read from disk).
struct Record {
  double x = 0.0;
  double y = 0.0;
  bool delta = true;
};

struct Sample {
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  std::size_t complete_cases() const {
    std::size_t k = 0;
    for (const auto& r : records) k += r.delta ? 1 : 0;
    return k;
  }
};

inline void validate_sample(const Sample& sample) {
  if (sample.records.empty())
    throw std::invalid_argument("sample: must contain at least one record");
  for (std::size_t i = 0; i < sample.records.size(); ++i) {
    const Record& r = sample.records[i];
    if (!std::isfinite(r.x))
      throw std::invalid_argument("sample: non-finite x at record " +
                                  std::to_string(i + 1));
    if (r.delta && !std::isfinite(r.y))
      throw std::invalid_argument("sample: missing y with delta=1 at record " +
                                  std::to_string(i + 1));
  }
}

enum class EpsKind { zero, uniform };

//! Artificial perturbation added to the weighted responses. The zero kind is
//! the practical choice; the uniform kind draws iid Unif(-kappa, kappa).
struct EpsilonSpec {
  EpsKind kind = EpsKind::zero;
  double kappa = 1e-3;
};

//! Bandwidth exponents: h_n = n^-delta for regression, lambda_n = n^-beta
//! for the selection probability, constrained to 1/5 < beta < delta < 1/3.
struct BandwidthSpec {
  double delta = 0.30;
  double beta = 0.25;
};

inline void validate_bandwidths(const BandwidthSpec& bw) {
  if (!(bw.beta > 0.2 && bw.beta < bw.delta && bw.delta < 1.0 / 3.0))
    throw std::invalid_argument(
        "bandwidth exponents must satisfy 1/5 < beta < delta < 1/3 (got "
        "delta=" + std::to_string(bw.delta) + ", beta=" +
        std::to_string(bw.beta) + ")");
}

}  // namespace mrband
