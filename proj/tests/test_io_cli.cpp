#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "srl/io.hpp"

using namespace srl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static fs::path dir = [] {
    auto p = fs::temp_directory_path() /
             ("srl_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      env + (env.empty() ? "" : " ") + SRL_BIN + " " + args + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

void write_example1(const fs::path& dir) {
  Matrix A(2, 3);
  A << 1, 0, 0, 0, 1, 1;
  Vector b(2);
  b << 1, 2;
  write_matrix_csv((dir / "A1.csv").string(), A);
  write_vector_csv((dir / "b1.csv").string(), b);
}

void write_example2(const fs::path& dir) {
  Matrix A(2, 3);
  A << 1, 0, 2, 0, 2, -2;
  Vector b(2);
  b << 1, 1;
  write_matrix_csv((dir / "A2.csv").string(), A);
  write_vector_csv((dir / "b2.csv").string(), b);
}

}  // namespace

TEST_CASE("csv round trip") {
  const fs::path dir = work_dir();
  Matrix M(2, 3);
  M << 1.5, -2.25, 0.1, 3e-7, 1e20, -0.0;
  const std::string path = (dir / "m.csv").string();
  write_matrix_csv(path, M);
  CHECK(read_matrix_csv(path) == M);  // byte-exact round trip

  Vector v(4);
  v << 0.1, 0.2, -1.0 / 3.0, 12345.6789;
  const std::string vpath = (dir / "v.csv").string();
  write_vector_csv(vpath, v);
  CHECK(read_vector_csv(vpath) == v);

  CHECK_THROWS_AS(read_matrix_csv((dir / "missing.csv").string()), IoError);
  std::ofstream((dir / "ragged.csv").string()) << "1,2\n3\n";
  CHECK_THROWS_AS(read_matrix_csv((dir / "ragged.csv").string()), IoError);
}

TEST_CASE("shortest round-trip decimals") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  const double pi_ish = 3.141592653589793;
  CHECK(std::stod(format_double(pi_ish)) == pi_ish);
}

TEST_CASE("atomic writes leave no temporaries") {
  const fs::path dir = work_dir();
  const std::string path = (dir / "atomic.txt").string();
  atomic_write_file(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  int leftovers = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().string().find(".tmp") != std::string::npos) ++leftovers;
  CHECK(leftovers == 0);
}

TEST_CASE("cli solve on the first worked example") {
  const fs::path dir = work_dir();
  write_example1(dir);
  const std::string out = (dir / "solve1.json").string();
  const int rc = run_cli("solve --matrix " + (dir / "A1.csv").string() +
                         " --rhs " + (dir / "b1.csv").string() +
                         " --lambda 0.894427191 --output " + out);
  CHECK(rc == 0);
  const json report = json::parse(read_file(out));
  CHECK(report.at("status") == "ok");
  CHECK(report.at("converged") == true);
  for (double xi : report.at("x")) CHECK(std::abs(xi) <= 1e-7);
  CHECK(report.at("gap").get<double>() <= 1e-8);
  CHECK(report.at("config").at("lambda") == doctest::Approx(0.894427191));

  // byte-identical on rerun
  const std::string first = read_file(out);
  CHECK(run_cli("solve --matrix " + (dir / "A1.csv").string() + " --rhs " +
                (dir / "b1.csv").string() +
                " --lambda 0.894427191 --output " + out) == 0);
  CHECK(read_file(out) == first);
}

TEST_CASE("cli check classifies the second worked example") {
  const fs::path dir = work_dir();
  write_example2(dir);
  const std::string out = (dir / "check2.json").string();
  const int rc = run_cli("check --matrix " + (dir / "A2.csv").string() +
                         " --rhs " + (dir / "b2.csv").string() +
                         " --lambda 1.41421356237 --output " + out);
  CHECK(rc == 0);  // weak holds
  const json report = json::parse(read_file(out));
  CHECK(report.at("weak") == "true");
  CHECK(report.at("intermediate") == "true");
  CHECK(report.at("strong") == "false");
  CHECK(report.at("equicorrelation_J") == json::array({1}));
}

TEST_CASE("cli rejects missing inputs without partial outputs") {
  const fs::path dir = work_dir();
  const std::string out = (dir / "never.json").string();
  const int rc = run_cli("solve --matrix " + (dir / "nope.csv").string() +
                         " --rhs " + (dir / "nope2.csv").string() +
                         " --lambda 1 --output " + out);
  CHECK(rc == 2);
  CHECK_FALSE(fs::exists(out));

  CHECK(run_cli("wavefunction") == 2);       // unknown subcommand
  CHECK(run_cli("solve --lambda 1") == 2);   // missing required options
}

TEST_CASE("cli sensitivity reports bounds on a strong instance") {
  const fs::path dir = work_dir();
  // identity-dominated design with small off-support columns
  Matrix A = Matrix::Zero(3, 4);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A.col(2) << 0.02, 0.01, 0.02;
  A.col(3) << -0.01, 0.02, 0.01;
  Vector b(3);
  b << 2.0, -1.5, 0.4;
  write_matrix_csv((dir / "As.csv").string(), A);
  write_vector_csv((dir / "bs.csv").string(), b);
  const std::string out = (dir / "sens.json").string();
  const int rc = run_cli("sensitivity --matrix " + (dir / "As.csv").string() +
                         " --rhs " + (dir / "bs.csv").string() +
                         " --lambda 0.5 --validate --output " + out);
  CHECK(rc == 0);
  const json report = json::parse(read_file(out));
  CHECK(report.at("strong") == "true");
  CHECK(report.at("V").get<double>() > 0.0);
  CHECK(report.at("V").get<double>() <= 1.0);
  CHECK(report.at("L_SR_lambda_bound").get<double>() >
        report.at("L_UC_lambda_bound").get<double>());
  CHECK(report.contains("jacobian_b"));
  CHECK(report.at("validation").at("jacobian_b_rel_err").get<double>() <=
        1e-5);
}

TEST_CASE("cli experiment honors config file and seed override") {
  const fs::path dir = work_dir();
  const json cfg = {{"experiment", "uniqueness-curve"},
                    {"m", 20},
                    {"n", 30},
                    {"s", 2},
                    {"gammas", {0.1}},
                    {"grid", {{"count", 9}, {"log_lo", -2.0}, {"log_hi", 1.0}}},
                    {"seeds", {1, 2}},
                    {"solver", {{"gap_tol", 1e-8}}},
                    {"output_dir", (dir / "exp").string()}};
  const std::string cfg_path = (dir / "exp.json").string();
  atomic_write_file(cfg_path, cfg.dump());
  const int rc = run_cli("experiment --name uniqueness-curve --config " +
                         cfg_path, "SRLL_SEED=7");
  CHECK(rc == 0);
  const std::string csv =
      read_file((dir / "exp" / "uniqueness-curve.csv").string());
  // seed override: all rows carry seed 7
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line.rfind("7,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 9);
  const json manifest = json::parse(
      read_file((dir / "exp" / "uniqueness-curve_manifest.json").string()));
  CHECK(manifest.at("config").at("seeds") == json::array({7}));
}
