#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mrband/bandwidth.hpp"
#include "mrband/rng.hpp"
#include "mrband/simulate.hpp"

using namespace mrband;

namespace {

Sample model_sample(std::size_t n, std::uint64_t seed, MissingModel model) {
  std::mt19937_64 rng = derive_stream(seed, 0, StreamPurpose::data);
  const LatentSample latent = gen_sample(n, rng);
  return apply_missingness(latent, model, rng);
}

// brute-force LOO error, written independently of the library implementation
double loo_cc_error(const Sample& s, const Kernel& k, double h) {
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.records[i].delta) continue;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i || !s.records[j].delta) continue;
      const double w = k((s.records[i].x - s.records[j].x) / h);
      num += s.records[j].y * w;
      den += w;
    }
    const double pred = den > 0.0 ? num / den : 0.0;
    err += (s.records[i].y - pred) * (s.records[i].y - pred);
  }
  return err;
}

double loo_sel_error(const Sample& s, const Kernel& k, double lam,
                     const std::vector<double>& eps) {
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      const double w = k((s.records[i].x - s.records[j].x) / lam);
      num += ((s.records[j].delta ? 1.0 : 0.0) + eps[j]) * w;
      den += w;
    }
    const double pred = den > 0.0 ? num / den : 0.0;
    const double t = (s.records[i].delta ? 1.0 : 0.0) + eps[i];
    err += (t - pred) * (t - pred);
  }
  return err;
}

}  // namespace

TEST_CASE("default grid lies inside the admissible interval", "[bandwidth]") {
  const std::vector<double> g = default_delta_grid();
  REQUIRE(g.size() == 14);
  CHECK(g.front() == Catch::Approx(0.205));
  CHECK(g.back() == Catch::Approx(0.330));
  for (double v : g) CHECK((v > 0.2 && v < 1.0 / 3.0));
}

TEST_CASE("select_delta matches brute-force argmin", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  const Sample s = model_sample(50, 17, MissingModel::a);
  const CvConfig config{{0.21, 0.25, 0.29, 0.33}, 0.01};

  double best = 0.0, best_err = 1e300;
  for (double g : config.delta_grid) {
    const double err = loo_cc_error(s, k, std::pow(50.0, -g));
    if (err < best_err) { best_err = err; best = g; }
  }
  CHECK(select_delta(s, k, config) == best);
}

TEST_CASE("select_delta tie-break toward smaller exponent", "[bandwidth]") {
  // constant responses, no noise, nothing missing: every delta achieves zero
  // LOO error, so the tie-break keeps the smallest grid value
  const Kernel k = make_kernel(KernelName::epanechnikov);
  Sample s;
  for (int i = 0; i < 30; ++i)
    s.records.push_back({i / 29.0, 4.0, true});
  const CvConfig config{{0.22, 0.27, 0.31}, 0.01};
  CHECK(select_delta(s, k, config) == 0.22);

  // singleton grid returns its only element
  CHECK(select_delta(s, k, CvConfig{{0.25}, 0.01}) == 0.25);
}

TEST_CASE("select_delta errors", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  Sample tiny;
  for (int i = 0; i < 10; ++i) tiny.records.push_back({i * 0.1, 1.0, true});
  CHECK_THROWS_AS(select_delta(tiny, k, default_cv_config()),
                  std::invalid_argument);

  Sample nocc;
  for (int i = 0; i < 30; ++i) nocc.records.push_back({i * 0.1, 0.0, false});
  nocc.records[0].delta = true;
  CHECK_THROWS_AS(select_delta(nocc, k, default_cv_config()), SelectionError);

  Sample s = model_sample(40, 1, MissingModel::b);
  CHECK_THROWS_AS(select_delta(s, k, CvConfig{{0.4}, 0.01}),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_delta(s, k, CvConfig{{0.25}, -1.0}),
                  std::invalid_argument);
}

TEST_CASE("select_beta matches brute-force argmin", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  const Sample s = model_sample(200, 23, MissingModel::a);
  std::vector<double> eps(200, 0.0);
  const CvConfig config{{0.21, 0.24, 0.27, 0.30, 0.33}, 0.01};
  const double delta = 0.31;

  double best = 0.0, best_err = 1e300;
  for (double g : config.delta_grid) {
    if (g > delta - config.beta_margin) continue;
    const double err = loo_sel_error(s, k, std::pow(200.0, -g), eps);
    if (err < best_err) { best_err = err; best = g; }
  }
  CHECK(select_beta(s, k, eps, delta, config) == best);
}

TEST_CASE("select_beta constant response tie-break", "[bandwidth]") {
  // nothing missing: the LOO selection fit is exactly 1 wherever the window
  // is nonempty, and the largest bandwidth (smallest beta) leaves the fewest
  // empty windows, so the smallest admissible exponent wins
  const Kernel k = make_kernel(KernelName::epanechnikov);
  Sample s;
  for (int i = 0; i < 40; ++i) s.records.push_back({i / 39.0, 1.0, true});
  std::vector<double> eps(40, 0.0);
  const CvConfig config{{0.21, 0.25, 0.29}, 0.01};
  CHECK(select_beta(s, k, eps, 0.32, config) == 0.21);
}

TEST_CASE("select_beta empty-grid fallback", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  const Sample s = model_sample(60, 2, MissingModel::b);
  std::vector<double> eps(60, 0.0);

  // grid entirely above delta - margin: plain fallback
  CHECK(select_beta(s, k, eps, 0.30, CvConfig{{0.31, 0.32}, 0.01}) ==
        Catch::Approx(0.29));

  // delta at the bottom of the admissible range: fallback would leave the
  // range, so it is pulled up to the midpoint of (1/5, delta)
  const double b = select_beta(s, k, eps, 0.205, CvConfig{{0.25, 0.30}, 0.01});
  CHECK(b > 0.2);
  CHECK(b < 0.205);
}

TEST_CASE("joint constraint always holds", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Sample s = model_sample(80, 300 + seed, MissingModel::a);
    std::vector<double> eps(80, 0.0);
    const BandwidthSpec bw = select_bandwidths(s, k, eps, default_cv_config());
    CHECK(bw.beta > 0.2);
    CHECK(bw.beta < bw.delta);
    CHECK(bw.delta < 1.0 / 3.0);
    CHECK_NOTHROW(validate_bandwidths(bw));
  }
}

TEST_CASE("selection is deterministic", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  const Sample s = model_sample(120, 5, MissingModel::b);
  std::mt19937_64 erng = derive_stream(5, 0, StreamPurpose::epsilon);
  const std::vector<double> eps =
      draw_epsilons({EpsKind::uniform, 1e-3}, 120, erng);
  const BandwidthSpec a = select_bandwidths(s, k, eps, default_cv_config());
  const BandwidthSpec b = select_bandwidths(s, k, eps, default_cv_config());
  CHECK(a.delta == b.delta);
  CHECK(a.beta == b.beta);
}

TEST_CASE("response scaling leaves the argmin unchanged", "[bandwidth]") {
  const Kernel k = make_kernel(KernelName::epanechnikov);
  Sample s = model_sample(70, 31, MissingModel::b);
  const double d1 = select_delta(s, k, default_cv_config());
  for (auto& r : s.records) r.y *= 3.7;
  CHECK(select_delta(s, k, default_cv_config()) == d1);
}
