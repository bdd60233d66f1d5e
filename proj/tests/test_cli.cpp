#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status;
  std::string out;
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "ddqkd_cli_test";
  fs::create_directories(dir);
  return dir;
}

RunResult run(const std::string& args, const fs::path& capture) {
  const std::string cmd = std::string(DDQKD_TOOL_PATH) + " " + args + " >" +
                          capture.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  return RunResult{raw == -1 ? -1 : WEXITSTATUS(raw), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("simulate writes one row per point and scenario") {
  const auto dir = scratch_dir();
  const auto csv = dir / "single.csv";
  const auto log = dir / "single.log";
  const auto r = run("simulate --db-a 3 --scenario double --out " +
                         csv.string(),
                     log);
  REQUIRE(r.status == 0);
  const auto text = slurp(csv);
  CHECK(text.rfind("db_tot,db_a,db_b,protocol,scenario,lambda_opt,rate\n",
                   0) == 0);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 2);  // header + one data row
  CHECK(text.find(",bb84,double,") != std::string::npos);
  CHECK(text.find("\n6,3,3,") != std::string::npos);
}

TEST_CASE("simulate output is byte identical across runs") {
  const auto dir = scratch_dir();
  const auto a = dir / "run_a.csv";
  const auto b = dir / "run_b.csv";
  const auto log = dir / "repeat.log";
  const std::string args =
      "simulate --db-a 0:4:2 --scenario single --scenario double --threads 3";
  REQUIRE(run(args + " --out " + a.string(), log).status == 0);
  REQUIRE(run(args + " --out " + b.string(), log).status == 0);
  const auto ta = slurp(a);
  CHECK(ta == slurp(b));
  CHECK(ta.find("nan") == std::string::npos);

  // Scenario order must follow the declaration order.
  const auto first_single = ta.find("single");
  const auto first_double = ta.find("double");
  CHECK(first_single < first_double);
}

TEST_CASE("simulate reproduces the scenario ordering in its output") {
  const auto dir = scratch_dir();
  const auto csv = dir / "order.csv";
  const auto log = dir / "order.log";
  const auto r = run(
      "simulate --db-a 2 --scenario single,updated-squash,double --out " +
          csv.string(),
      log);
  REQUIRE(r.status == 0);
  const auto text = slurp(csv);
  double rates[3];
  int idx = 0;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line) && idx < 3) {
    rates[idx++] = std::stod(line.substr(line.rfind(',') + 1));
  }
  REQUIRE(idx == 3);
  CHECK(rates[0] >= rates[1]);  // single >= updated-squash
  CHECK(rates[1] >= rates[2]);  // updated-squash >= double
  CHECK(rates[2] > 0.0);
}

TEST_CASE("simulate validates its configuration") {
  const auto dir = scratch_dir();
  const auto log = dir / "invalid.log";
  const auto csv = dir / "never.csv";
  const auto r = run("simulate --db-a 5:1:1 --e 3 --out " + csv.string(), log);
  CHECK(r.status != 0);
  CHECK(r.out.find("--db-a") != std::string::npos);
  CHECK(r.out.find("--e") != std::string::npos);
  CHECK_FALSE(fs::exists(csv));

  const auto r2 = run("simulate --db-a 3 --protocol 6state --scenario "
                      "updated-squash --out " +
                          csv.string(),
                      log);
  CHECK(r2.status != 0);
  CHECK_FALSE(fs::exists(csv));
}

TEST_CASE("simulate honors the config file with flag overrides") {
  const auto dir = scratch_dir();
  const auto cfg = dir / "run.cfg";
  const auto csv_a = dir / "cfg_a.csv";
  const auto csv_b = dir / "cfg_b.csv";
  const auto log = dir / "cfg.log";
  write_file(cfg,
             "db-a=2\nscenario=double\ne=0.03\n");
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + csv_a.string(),
              log)
              .status == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --db-a 4 --out " +
                  csv_b.string(),
              log)
              .status == 0);
  CHECK(slurp(csv_a).find("\n5,2,3,") != std::string::npos);
  CHECK(slurp(csv_b).find("\n7,4,3,") != std::string::npos);
}

TEST_CASE("nmax cap comes from the environment when the flag is absent") {
  const auto dir = scratch_dir();
  const auto log = dir / "env.log";
  const auto csv = dir / "env.csv";
  // A cap of 3 cannot satisfy the tail policy over the default pump range.
  const std::string env_cmd = "DDQKD_NMAX=3 " + std::string(DDQKD_TOOL_PATH) +
                              " simulate --db-a 0 --scenario double --out " +
                              csv.string() + " >" + log.string() + " 2>&1";
  const int raw = std::system(env_cmd.c_str());
  CHECK(WEXITSTATUS(raw) != 0);
  CHECK(slurp(log).find("tail policy") != std::string::npos);
  CHECK_FALSE(fs::exists(csv));
}

TEST_CASE("estimate recovers the worked example") {
  const auto dir = scratch_dir();
  const auto samples = dir / "prop1.txt";
  const auto log = dir / "prop1.log";
  // f(c) = 0.5 + 0.3 c + 0.2 c^2 sampled at c in {0, 0.1, 0.3}.
  write_file(samples,
             "# eta pvac\n1.0 0.5\n0.9 0.532\n0.7 0.608\n");
  const auto r = run("estimate --samples " + samples.string(), log);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("x0=0.5\n") != std::string::npos);
  CHECK(r.out.find("x1_in=[0.3") != std::string::npos);
  CHECK(r.out.find("x2_in=[0.113333") != std::string::npos);
}

TEST_CASE("estimate truncated mode recovers a three-point support") {
  const auto dir = scratch_dir();
  const auto samples = dir / "trunc.txt";
  const auto log = dir / "trunc.log";
  // Forward model of {0.5, 0.3, 0.2} at six settings.
  std::ostringstream body;
  for (double eta : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const double c = 1.0 - eta;
    body << eta << " " << 0.5 + 0.3 * c + 0.2 * c * c << "\n";
  }
  write_file(samples, body.str());
  const auto r = run(
      "estimate --mode truncated --order 2 --samples " + samples.string(),
      log);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("p0=0.5") != std::string::npos);
  CHECK(r.out.find("p1=0.3") != std::string::npos);
  CHECK(r.out.find("p2=0.2") != std::string::npos);
}

TEST_CASE("estimate rejects malformed input") {
  const auto dir = scratch_dir();
  const auto log = dir / "bad.log";

  const auto empty = dir / "empty.txt";
  write_file(empty, "# nothing here\n");
  CHECK(run("estimate --samples " + empty.string(), log).status != 0);

  const auto bad = dir / "bad.txt";
  write_file(bad, "1.0 0.5\n1.7 0.3\n0.5 0.6\n");
  const auto r = run("estimate --samples " + bad.string(), log);
  CHECK(r.status != 0);
  CHECK(r.out.find("line 2") != std::string::npos);

  CHECK(run("estimate --samples " + dir.string() + "/missing.txt", log)
            .status != 0);
}

TEST_CASE("plugplay reports all three sections") {
  const auto dir = scratch_dir();
  const auto dist = dir / "dist.txt";
  const auto log = dir / "pp.log";
  write_file(dist, "1.0\n0\n0\n");  // vacuum input
  const auto r = run("plugplay --dist " + dist.string() +
                         " --phases 0,1.5707963267948966,3.14159265358979",
                     log);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("# pvac") != std::string::npos);
  CHECK(r.out.find("# input_estimate") != std::string::npos);
  CHECK(r.out.find("# output_stats") != std::string::npos);
  // Vacuum input: p_vac = 1 at every phase.
  CHECK(r.out.find("0,1\n") != std::string::npos);

  // phi = pi returns the input distribution itself.
  const auto dist2 = dir / "dist2.txt";
  write_file(dist2, "0.6\n0.3\n0.1\n");
  const auto r2 = run("plugplay --dist " + dist2.string() +
                          " --phases 0,1.5707963267948966,3.141592653589793 "
                          "--method truncated --order 2",
                      log);
  REQUIRE(r2.status == 0);
  CHECK(r2.out.find("3.141592654,0,0.6") != std::string::npos);
  CHECK(r2.out.find("3.141592654,1,0.3") != std::string::npos);
  CHECK(r2.out.find("3.141592654,2,0.1") != std::string::npos);
}
