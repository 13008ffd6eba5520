#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path workdir() {
  const fs::path dir = fs::temp_directory_path() / "switchode_cli_tests";
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  std::ostringstream cmd;
  cmd << "\"" << SWITCHODE_CLI_PATH << "\" " << args << " > " << out
      << " 2> /dev/null";
  const int rc = std::system(cmd.str().c_str());
  return {WEXITSTATUS(rc), slurp(out)};
}

std::string models() { return SWITCHODE_MODELS_DIR; }

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = workdir() / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

}  // namespace

TEST_CASE("env check: valid model exits 0, reducible generator exits 2") {
  const auto ok = run_cli("env check --model " + models() + "/logistic2.json");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("\"pi\"") != std::string::npos);

  const fs::path bad = write_file("reducible.json", R"({
    "schema_version": 1, "kind": "logistic",
    "coeffs": {"a10": [1, 2], "a11": [1, 1]},
    "env": {"kind": "rate_matrix", "rates": [[0, 0], [1, -1]]}
  })");
  const auto fail = run_cli("env check --model " + bad.string());
  CHECK(fail.exit_code == 2);
}

TEST_CASE("malformed input never crashes: exit 2 with a message") {
  const fs::path bad = write_file("broken.json", "{ nope");
  CHECK(run_cli("env check --model " + bad.string()).exit_code == 2);
  CHECK(run_cli("expand --model /nonexistent/file.json").exit_code == 2);
  CHECK(run_cli("reproduce --suite bogus").exit_code == 2);
  CHECK(run_cli("definitely-not-a-subcommand").exit_code == 2);
}

TEST_CASE("lyapunov sweep CSV satisfies the figure-interval claims") {
  const fs::path out = workdir() / "sweep.csv";
  const auto r = run_cli("lyapunov sweep --model " + models() +
                         "/fmc3.json --grid 0.01:0.01:0.99 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);  // comment header with tool version and seed
  CHECK(line.find("switchode") != std::string::npos);
  CHECK(line.find("seed=") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "p,lambda_max,c1");

  double best_p = 0, best_l = -1e300, min_c1 = 1e300;
  while (std::getline(in, line)) {
    double p, l, c1;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &p, &l, &c1) == 3);
    if (l > best_l) {
      best_l = l;
      best_p = p;
    }
    if (p >= 0.3 && p <= 0.5) min_c1 = std::min(min_c1, c1);
  }
  CHECK(best_p >= 0.3);
  CHECK(best_p <= 0.5);
  CHECK(best_l >= -0.5);
  CHECK(best_l <= -0.45);
  CHECK(min_c1 >= 15.0);
}

TEST_CASE("identical invocations produce byte-identical outputs") {
  const fs::path o1 = workdir() / "a.json", o2 = workdir() / "b.json";
  const std::string base = "lv c1 --model " + models() + "/logistic2.json --out ";
  REQUIRE(run_cli(base + o1.string()).exit_code == 0);
  REQUIRE(run_cli(base + o2.string()).exit_code == 0);
  const std::string s1 = slurp(o1);
  CHECK(!s1.empty());
  CHECK(s1 == slurp(o2));

  const fs::path m1 = workdir() / "mc1.json", m2 = workdir() / "mc2.json";
  const std::string mc = "lv mc --model " + models() +
                         "/logistic2.json --eps 0.2 --horizon 40 --burn-in 5 "
                         "--traj 2 --seed 77 --out ";
  REQUIRE(run_cli(mc + m1.string()).exit_code == 0);
  REQUIRE(run_cli(mc + m2.string()).exit_code == 0);
  CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("results are independent of the worker count") {
  const fs::path o1 = workdir() / "t1.json", o2 = workdir() / "t2.json";
  const std::string mc = "lv mc --model " + models() +
                         "/logistic2.json --eps 0.1 --horizon 40 --burn-in 5 "
                         "--traj 4 --seed 5 --out ";
  std::ostringstream c1, c2;
  c1 << "SWITCHODE_THREADS=1 \"" << SWITCHODE_CLI_PATH << "\" " << mc << o1
     << " > /dev/null 2>&1";
  c2 << "SWITCHODE_THREADS=2 \"" << SWITCHODE_CLI_PATH << "\" " << mc << o2
     << " > /dev/null 2>&1";
  REQUIRE(std::system(c1.str().c_str()) == 0);
  REQUIRE(std::system(c2.str().c_str()) == 0);
  CHECK(slurp(o1) == slurp(o2));
}

TEST_CASE("mc subcommands write the per-batch CSV") {
  const fs::path out = workdir() / "est.json";
  REQUIRE(run_cli("lv mc --model " + models() +
                  "/logistic2.json --eps 0.1 --horizon 40 --burn-in 5 --traj 2 "
                  "--out " + out.string())
              .exit_code == 0);
  const std::string csv = slurp(workdir() / "est_batches.csv");
  CHECK(csv.find("traj,batch,mean") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 2 * 16);
}

TEST_CASE("outputs embed the master seed and tool version") {
  const fs::path out = workdir() / "c1.json";
  REQUIRE(run_cli("lv c1 --model " + models() + "/logistic2.json --seed 12345 --out " +
                  out.string())
              .exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("\"version\"") != std::string::npos);
  CHECK(text.find("\"seed\"") != std::string::npos);
  CHECK(text.find("0x3039") != std::string::npos);  // 12345
}

TEST_CASE("expand runs on the shipped logistic benchmark") {
  const auto r = run_cli("expand --model " + models() + "/logistic2.json");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"c1\"") != std::string::npos);
  CHECK(r.out.find("\"mu0_f\"") != std::string::npos);
  CHECK(r.out.find("\"unconverged\": false") != std::string::npos);
}

TEST_CASE("semigroup subcommand evaluates orders 0 and 1") {
  const auto r = run_cli("semigroup --model " + models() +
                         "/affine1d.json --t 0.5 --layer-tau 1.5 --x 0.3 --state 1");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"p0\"") != std::string::npos);
  CHECK(r.out.find("\"s0\"") != std::string::npos);
  CHECK(r.out.find("\"p1\"") != std::string::npos);
}

TEST_CASE("lv signs reads p from the environment") {
  const auto r = run_cli("lv signs --model " + models() + "/logistic2.json");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"match\": true") != std::string::npos);
}

TEST_CASE("split weak-error writes the (eps, error, stderr) table") {
  const fs::path out = workdir() / "we.csv";
  const auto r = run_cli("split weak-error --model " + models() +
                         "/split2d.json --t 1 --eps 0.2 --eps 0.1 --n-mc 5000 "
                         "--seed 3 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("eps,error,stderr") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header x2 + 2 rows
}

TEST_CASE("split richardson reports the extrapolated value") {
  const auto r = run_cli("split richardson --model " + models() +
                         "/split2d.json --t 1 --eps 0.2 --n-mc 4000 --seed 4");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"extrapolated\"") != std::string::npos);
}

TEST_CASE("expand attaches the MC slope when eps values are given") {
  const auto r = run_cli("expand --model " + models() +
                         "/logistic2.json --eps 0.2 --eps 0.1 --eps 0.05 "
                         "--horizon 60 --burn-in 10 --traj 4 --seed 2");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"mc_slope\"") != std::string::npos);
  CHECK(r.out.find("\"fitted_c1\"") != std::string::npos);
}

TEST_CASE("lyapunov certify emits a certificate record") {
  const auto r = run_cli("lyapunov certify --model " + models() +
                         "/fmc3.json --eps 0.1 --horizon 60 --burn-in 10 "
                         "--traj 8 --grid 0.3:0.05:0.5 --seed 6");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"found\"") != std::string::npos);
  CHECK(r.out.find("\"lambda_star\"") != std::string::npos);
}

TEST_CASE("lyapunov mc reports both estimators") {
  const auto r = run_cli("lyapunov mc --model " + models() +
                         "/fmc3.json --eps 0.1 --horizon 30 --burn-in 5 --traj 2");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"log_growth\"") != std::string::npos);
  CHECK(r.out.find("\"ergodic\"") != std::string::npos);
}
