// End-to-end checks of the command-line tool. The binary location comes from
// the MRBAND_CLI environment variable (ctest sets it); tests are skipped when
// it is absent.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mrband/mrband.hpp"

namespace fs = std::filesystem;
using namespace mrband;

namespace {

struct CliRunner {
  std::string cli;
  fs::path dir;

  CliRunner() {
    const char* env = std::getenv("MRBAND_CLI");
    cli = env ? env : "";
    dir = fs::temp_directory_path() /
          ("mrband_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliRunner() { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = cli + " " + args + " >" +
                            (dir / "stdout.txt").string() + " 2>" +
                            (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  }
  std::string out() const { return slurp(dir / "stdout.txt"); }
  std::string err() const { return slurp(dir / "stderr.txt"); }
};

Sample synthetic_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng = derive_stream(seed, 0, StreamPurpose::data);
  const LatentSample latent = gen_sample(n, rng);
  return apply_missingness(latent, MissingModel::a, rng);
}

}  // namespace

#define REQUIRE_CLI(r)                          \
  if (r.cli.empty()) {                          \
    SKIP("MRBAND_CLI not set; skipping cli test"); \
  }

TEST_CASE("cli band output matches the library bit-exactly", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  const Sample sample = synthetic_sample(500, 424242);
  const fs::path data = r.dir / "data.csv";
  {
    std::ofstream out(data);
    write_dataset_csv(out, sample);
  }

  const fs::path stem = r.dir / "band";
  const int rc = r.run("band " + data.string() +
                       " --delta 0.3 --beta 0.25 --alpha 0.05 --eps zero" +
                       " --out " + stem.string());
  REQUIRE(rc == 0);

  // library answer on the same records
  const Kernel k = make_kernel(KernelName::epanechnikov);
  const std::vector<double> eps(sample.size(), 0.0);
  const BandResult band = build_band(sample, k, {0.30, 0.25}, eps, 0.05);
  std::ostringstream expect_csv;
  write_band_csv(expect_csv, band);
  CHECK(r.slurp(stem.string() + ".csv") == expect_csv.str());

  const nlohmann::json header =
      nlohmann::json::parse(r.slurp(stem.string() + ".json"));
  CHECK(header.at("n") == 500);
  CHECK(header.at("alpha") == 0.05);
  CHECK(header.at("d_n").get<double>() == band.d_n);
  CHECK(header.at("x_alpha").get<double>() == band.x_alpha);

  // a second run is byte-identical
  const fs::path stem2 = r.dir / "band2";
  REQUIRE(r.run("band " + data.string() +
                " --delta 0.3 --beta 0.25 --alpha 0.05 --eps zero --out " +
                stem2.string()) == 0);
  CHECK(r.slurp(stem2.string() + ".csv") == expect_csv.str());
}

TEST_CASE("cli band smoke on a tiny file with svg", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  const fs::path data = r.dir / "tiny.csv";
  {
    std::ofstream out(data);
    out << "x,y,delta\n-0.5,1.0,1\n0.5,2.0,1\n1.5,0.5,1\n";
  }
  const fs::path stem = r.dir / "tiny_band";
  REQUIRE(r.run("band " + data.string() +
                " --delta 0.3 --beta 0.25 --svg --out " + stem.string()) == 0);

  std::ifstream csv(stem.string() + ".csv");
  const BandTable t = parse_band_csv(csv);
  CHECK(t.grid.size() == 200);
  const std::string svg = r.slurp(stem.string() + ".svg");
  CHECK(svg.find("<svg") == 0);
}

TEST_CASE("cli validation failures exit with 2", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  // delta=1 with empty y
  const fs::path bad = r.dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "x,y,delta\n0.1,1.0,1\n0.2,,1\n";
  }
  CHECK(r.run("band " + bad.string() + " --delta 0.3 --beta 0.25") == 2);
  CHECK(r.err().find("row 2") != std::string::npos);
  CHECK(r.err().find("missing y with delta=1") != std::string::npos);

  // exponent constraint violated
  const fs::path ok = r.dir / "ok.csv";
  {
    std::ofstream out(ok);
    out << "x,y,delta\n0.1,1.0,1\n0.5,2.0,1\n0.9,1.5,1\n";
  }
  CHECK(r.run("band " + ok.string() + " --delta 0.25 --beta 0.30") == 2);
  CHECK(r.err().find("1/5 < beta < delta < 1/3") != std::string::npos);

  // unsupported kernel lists the supported ones
  CHECK(r.run("constants --kernel uniform") == 2);
  CHECK(r.err().find("epanechnikov") != std::string::npos);

  // unknown flag
  CHECK(r.run("band " + ok.string() + " --frobnicate") == 2);
}

TEST_CASE("cli constants json", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  REQUIRE(r.run("constants --kernel epanechnikov") == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out());
  CHECK(j.at("c_K").get<double>() == 0.6);
  CHECK(j.at("C1").get<double>() == 0.0);
  CHECK(j.at("C2").get<double>() == 1.25);
  CHECK(j.at("d_n_table").size() == 39);  // n in {200,500,1000} x 13 deltas
  const auto& first = j.at("d_n_table").at(0);
  const KernelConstants kc = kernel_constants(make_kernel(KernelName::epanechnikov));
  CHECK(first.at("d_n").get<double>() ==
        d_n(first.at("n").get<std::int64_t>(), first.at("delta").get<double>(), kc));

  REQUIRE(r.run("constants --kernel biweight") == 0);
  const nlohmann::json jb = nlohmann::json::parse(r.out());
  CHECK(jb.at("c_K").get<double>() == Catch::Approx(5.0 / 7.0));
}

TEST_CASE("cli test subcommand agrees with the library", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  const Sample sample = synthetic_sample(300, 11);
  const fs::path data = r.dir / "data.csv";
  {
    std::ofstream out(data);
    write_dataset_csv(out, sample);
  }
  REQUIRE(r.run("test " + data.string() +
                " --m0-const 0.8 --alpha 0.10 --delta 0.3 --beta 0.25") == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out());

  const Kernel k = make_kernel(KernelName::epanechnikov);
  const std::vector<double> eps(sample.size(), 0.0);
  const Fit fit = ipw_fit(sample, k, {0.30, 0.25}, eps);
  const TestResult expect =
      test_from_fit(fit, [](double) { return 0.8; }, 0.10);
  CHECK(j.at("t_n").get<double>() == expect.t_n);
  CHECK(j.at("critical").get<double>() == expect.critical);
  CHECK(j.at("reject").get<bool>() == expect.reject);
}

TEST_CASE("cli simulate smoke and shape", "[cli]") {
  CliRunner r;
  REQUIRE_CLI(r);

  const fs::path stem = r.dir / "sim";
  REQUIRE(r.run("simulate --n 100 --reps 8 --model b --seed 5 --out " +
                stem.string()) == 0);
  const std::string table = r.slurp(stem.string() + "_table.csv");
  CHECK(table.find("method,eps,n,model") == 0);
  CHECK(table.find("proposed,zero,100,b") != std::string::npos);
  CHECK(table.find("complete_case,zero,100,b") != std::string::npos);
  const nlohmann::json rep =
      nlohmann::json::parse(r.slurp(stem.string() + "_report.json"));
  CHECK(rep.at("failures") == 0);
  for (double c : rep.at("proposed").at("coverage").get<std::vector<double>>()) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}
