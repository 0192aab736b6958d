// Command-line front end: band construction, hypothesis test, Monte Carlo
// study, and kernel constants. Exit codes: 0 success, 1 runtime/band failure,
// 2 usage or validation failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrband/mrband.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string kernel = "epanechnikov";
  std::vector<double> grid{0.0, 1.0, 200.0};
  bool cv = false;
  std::optional<double> delta;
  std::optional<double> beta;
  std::string eps = "zero";
  double kappa = 1e-3;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--kernel", o.kernel,
                  "kernel: epanechnikov, biweight, triangular");
  cmd->add_option("--grid", o.grid, "evaluation grid: LO HI COUNT")
      ->expected(3);
  cmd->add_flag("--cv", o.cv, "select bandwidth exponents by cross-validation");
  cmd->add_option("--delta", o.delta, "regression exponent (h = n^-delta)");
  cmd->add_option("--beta", o.beta, "selection exponent (lambda = n^-beta)");
  cmd->add_option("--eps", o.eps, "perturbation: zero or uniform");
  cmd->add_option("--kappa", o.kappa, "half-width of the uniform perturbation");
  cmd->add_option("--seed", o.seed, "rng seed");
}

mrband::GridSpec grid_spec(const CommonOpts& o) {
  const double cnt = o.grid.at(2);
  if (!(cnt >= 2.0) || cnt != std::floor(cnt))
    throw std::invalid_argument("--grid COUNT must be an integer >= 2");
  return {o.grid.at(0), o.grid.at(1), static_cast<std::size_t>(cnt)};
}

mrband::EpsilonSpec eps_spec(const CommonOpts& o) {
  if (o.eps == "zero") return {mrband::EpsKind::zero, o.kappa};
  if (o.eps == "uniform") {
    if (!(o.kappa >= 0.0))
      throw std::invalid_argument("--kappa must be nonnegative");
    return {mrband::EpsKind::uniform, o.kappa};
  }
  throw std::invalid_argument("--eps must be zero or uniform");
}

// fixed exponents if given (validated), otherwise CV
mrband::BandwidthSpec resolve_bandwidths(const CommonOpts& o,
                                         const mrband::Sample& sample,
                                         const mrband::Kernel& kernel,
                                         std::span<const double> eps) {
  if (o.delta.has_value() != o.beta.has_value())
    throw std::invalid_argument("--delta and --beta must be given together");
  if (o.delta) {
    if (o.cv)
      throw std::invalid_argument("--cv conflicts with --delta/--beta");
    const mrband::BandwidthSpec bw{*o.delta, *o.beta};
    mrband::validate_bandwidths(bw);
    return bw;
  }
  return mrband::select_bandwidths(sample, kernel, eps,
                                   mrband::default_cv_config());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

int run_band(const std::string& dataset, const CommonOpts& o, double alpha,
             const std::string& out_stem, bool svg) {
  const mrband::Sample sample = mrband::load_dataset(dataset);
  const mrband::Kernel kernel =
      mrband::make_kernel(mrband::kernel_from_string(o.kernel));
  std::mt19937_64 eps_rng =
      mrband::derive_stream(o.seed, 0, mrband::StreamPurpose::epsilon);
  const std::vector<double> eps =
      mrband::draw_epsilons(eps_spec(o), sample.size(), eps_rng);
  const mrband::BandwidthSpec bw = resolve_bandwidths(o, sample, kernel, eps);
  const mrband::BandResult band =
      mrband::build_band(sample, kernel, bw, eps, alpha, grid_spec(o));

  std::ostringstream csv;
  mrband::write_band_csv(csv, band);
  write_text_file(out_stem + ".csv", csv.str());
  write_text_file(out_stem + ".json",
                  mrband::band_header_json(band).dump(2) + "\n");
  if (svg) {
    std::ostringstream s;
    mrband::write_band_svg(s, band);
    write_text_file(out_stem + ".svg", s.str());
  }
  std::cout << "wrote " << out_stem << ".csv, " << out_stem << ".json"
            << (svg ? ", " + out_stem + ".svg" : "") << "\n";
  return 0;
}

// reference curve for the hypothesis test: constant, or piecewise-linear
// interpolation of an x,m0 table
std::function<double(double)> load_m0(const std::optional<double>& m0_const,
                                      const std::string& m0_csv) {
  if (m0_const) {
    const double c = *m0_const;
    return [c](double) { return c; };
  }
  std::ifstream in(m0_csv);
  if (!in)
    throw mrband::ParseError("m0: cannot open '" + m0_csv + "'");
  std::string line;
  if (!std::getline(in, line) || mrband::detail::trimmed(line) != "x,m0")
    throw mrband::ParseError("m0: header must be 'x,m0'");
  std::vector<double> xs, ms;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (mrband::detail::trimmed(line).empty()) continue;
    const auto cols = mrband::detail::split_csv(line);
    double x, m;
    if (cols.size() != 2 || !mrband::detail::parse_double(cols[0], x) ||
        !mrband::detail::parse_double(cols[1], m))
      throw mrband::ParseError("m0: row " + std::to_string(row) +
                               ": expected two numbers");
    if (!xs.empty() && x <= xs.back())
      throw mrband::ParseError("m0: x values must be strictly increasing");
    xs.push_back(x);
    ms.push_back(m);
  }
  if (xs.size() < 2) throw mrband::ParseError("m0: need at least two rows");
  return [xs, ms](double x) {
    if (x < xs.front() || x > xs.back())
      throw std::invalid_argument("m0: grid point outside the m0 table range");
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = std::min<std::size_t>(it - xs.begin(), xs.size() - 1);
    const std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (hi == lo) return ms[lo];
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ms[lo] + t * (ms[hi] - ms[lo]);
  };
}

int run_test(const std::string& dataset, const CommonOpts& o, double alpha,
             const std::optional<double>& m0_const, const std::string& m0_csv,
             const std::string& out_path) {
  const mrband::Sample sample = mrband::load_dataset(dataset);
  const mrband::Kernel kernel =
      mrband::make_kernel(mrband::kernel_from_string(o.kernel));
  std::mt19937_64 eps_rng =
      mrband::derive_stream(o.seed, 0, mrband::StreamPurpose::epsilon);
  const std::vector<double> eps =
      mrband::draw_epsilons(eps_spec(o), sample.size(), eps_rng);
  const mrband::BandwidthSpec bw = resolve_bandwidths(o, sample, kernel, eps);
  const mrband::Fit fit =
      mrband::ipw_fit(sample, kernel, bw, eps, grid_spec(o));
  const mrband::TestResult t =
      mrband::test_from_fit(fit, load_m0(m0_const, m0_csv), alpha);

  const json j{{"alpha", alpha},
               {"t_n", t.t_n},
               {"critical", t.critical},
               {"reject", t.reject},
               {"delta", bw.delta},
               {"beta", bw.beta}};
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_text_file(out_path, j.dump(2) + "\n");
  return 0;
}

int run_simulate(const CommonOpts& o, std::size_t n, const std::string& model,
                 std::size_t reps, std::vector<double> alphas,
                 std::size_t threads, const std::string& out_stem) {
  mrband::SimConfig config;
  config.n = n;
  config.model = mrband::missing_model_from_string(model);
  config.reps = reps;
  config.seed = o.seed;
  config.kernel = mrband::kernel_from_string(o.kernel);
  config.eps = eps_spec(o);
  config.alphas = std::move(alphas);
  config.grid = grid_spec(o);
  config.threads = threads;
  if (o.delta.has_value() != o.beta.has_value())
    throw std::invalid_argument("--delta and --beta must be given together");
  if (o.cv && o.delta)
    throw std::invalid_argument("--cv conflicts with --delta/--beta");
  if (o.cv)
    config.fixed_bw.reset();
  else if (o.delta) {
    config.fixed_bw = mrband::BandwidthSpec{*o.delta, *o.beta};
    mrband::validate_bandwidths(*config.fixed_bw);
  }
  mrband::validate_sim_config(config);

  const mrband::SimReport report = mrband::run_study(config);

  std::ostringstream table;
  mrband::write_sim_table_csv(table, report);
  write_text_file(out_stem + "_table.csv", table.str());

  std::ostringstream ue, ve;
  mrband::write_ecdf_csv(ue, mrband::uniformity_diagnostic(report.u_values));
  mrband::write_ecdf_csv(ve, mrband::uniformity_diagnostic(report.v_values));
  write_text_file(out_stem + "_u_ecdf.csv", ue.str());
  write_text_file(out_stem + "_v_ecdf.csv", ve.str());

  write_text_file(out_stem + "_report.json",
                  mrband::sim_report_json(report).dump(2) + "\n");
  std::cout << "wrote " << out_stem << "_table.csv, " << out_stem
            << "_u_ecdf.csv, " << out_stem << "_v_ecdf.csv, " << out_stem
            << "_report.json\n";
  return 0;
}

int run_constants(const std::string& kernel_name, const std::string& out_path) {
  const mrband::Kernel kernel =
      mrband::make_kernel(mrband::kernel_from_string(kernel_name));
  const mrband::KernelConstants kc = mrband::kernel_constants(kernel);
  json table = json::array();
  for (std::int64_t n : {200, 500, 1000}) {
    for (int i = 21; i <= 33; ++i) {
      const double delta = i / 100.0;
      table.push_back(
          {{"n", n}, {"delta", delta}, {"d_n", mrband::d_n(n, delta, kc)}});
    }
  }
  const json j{{"kernel", mrband::to_string(kernel.name)},
               {"support_A", kc.support_a},
               {"c_K", kc.c_k},
               {"C1", kc.c1},
               {"C2", kc.c2},
               {"d_n_table", table}};
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_text_file(out_path, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniform confidence bands for kernel regression with missing-"
               "at-random responses"};
  app.require_subcommand(1);

  // band
  auto* band = app.add_subcommand("band", "fit a dataset and write a band");
  std::string band_data, band_out = "band";
  double band_alpha = 0.05;
  bool band_svg = false;
  CommonOpts band_opts;
  band->add_option("dataset", band_data, "dataset csv (header x,y,delta)")
      ->required();
  band->add_option("--alpha", band_alpha, "band level (coverage 1-alpha)");
  band->add_option("--out", band_out, "output stem");
  band->add_flag("--svg", band_svg, "also write a plot");
  add_common(band, band_opts);

  // test
  auto* test = app.add_subcommand("test", "maximal-deviation test of m = m0");
  std::string test_data, test_m0_csv, test_out;
  std::optional<double> test_m0_const;
  double test_alpha = 0.05;
  CommonOpts test_opts;
  test->add_option("dataset", test_data, "dataset csv (header x,y,delta)")
      ->required();
  test->add_option("--alpha", test_alpha, "significance level");
  auto* m0c = test->add_option("--m0-const", test_m0_const,
                               "null curve: constant value");
  auto* m0f = test->add_option("--m0-csv", test_m0_csv,
                               "null curve: csv with header x,m0");
  m0c->excludes(m0f);
  test->add_option("--out", test_out, "write the json result here instead of stdout");
  add_common(test, test_opts);

  // simulate
  auto* sim = app.add_subcommand("simulate", "coverage study on the built-in model");
  std::size_t sim_n = 500, sim_reps = 100, sim_threads = 1;
  std::string sim_model = "a", sim_out = "sim";
  std::vector<double> sim_alphas;
  CommonOpts sim_opts;
  sim->add_option("--n", sim_n, "sample size per replication");
  sim->add_option("--model", sim_model, "missingness model: a, b, none");
  sim->add_option("--reps", sim_reps, "number of replications");
  sim->add_option("--alpha", sim_alphas, "band levels (repeatable)");
  sim->add_option("--threads", sim_threads, "worker threads");
  sim->add_option("--out", sim_out, "output stem");
  add_common(sim, sim_opts);

  // constants
  auto* cst = app.add_subcommand("constants", "kernel constants and d_n table");
  std::string cst_kernel = "epanechnikov", cst_out;
  cst->add_option("--kernel", cst_kernel,
                  "kernel: epanechnikov, biweight, triangular");
  cst->add_option("--out", cst_out, "write json here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help/message
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (band->parsed())
      return run_band(band_data, band_opts, band_alpha, band_out, band_svg);
    if (test->parsed()) {
      if (!test_m0_const && test_m0_csv.empty())
        throw std::invalid_argument("test: give --m0-const or --m0-csv");
      return run_test(test_data, test_opts, test_alpha, test_m0_const,
                      test_m0_csv, test_out);
    }
    if (sim->parsed()) {
      if (sim_alphas.empty()) sim_alphas = {0.10, 0.05};
      return run_simulate(sim_opts, sim_n, sim_model, sim_reps, sim_alphas,
                          sim_threads, sim_out);
    }
    if (cst->parsed()) return run_constants(cst_kernel, cst_out);
  } catch (const mrband::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
