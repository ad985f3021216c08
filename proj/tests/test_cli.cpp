#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "twistdn/config.hpp"
#include "twistdn/geometry.hpp"

namespace fs = std::filesystem;
using namespace twistdn;

namespace {

std::string cli() { return TWISTDN_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("twistdn_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("config parsing, overrides and canonical round trip") {
  TempDir tmp;
  const fs::path cfg_path = tmp.path / "run.cfg";
  {
    std::ofstream f(cfg_path);
    f << "# comment\n"
      << "section = unit_disc\n"
      << "target_h = 0.2\n"
      << "K = 3\n"
      << "a_values = 0.1, 0.2 0.3\n";
  }
  RunConfig cfg = RunConfig::from_file(cfg_path.string());
  CHECK(cfg.target_h == 0.2);
  CHECK(cfg.K == 3);
  CHECK(cfg.a_values == std::vector<double>{0.1, 0.2, 0.3});
  cfg.apply_override("a=0.45");
  CHECK(cfg.a == 0.45);
  CHECK_THROWS_AS(cfg.apply_override("nonsense=1"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.apply_override("K"), std::invalid_argument);

  // canonical text parses back to the same canonical text
  const fs::path canon = tmp.path / "canon.cfg";
  {
    std::ofstream f(canon);
    f << cfg.canonical_text();
  }
  const RunConfig reparsed = RunConfig::from_file(canon.string());
  CHECK(reparsed.canonical_text() == cfg.canonical_text());
}

TEST_CASE("mesh subcommand writes a loadable mesh") {
  TempDir tmp;
  const int code = run("mesh --set target_h=0.25 --out " + tmp.path.string());
  CHECK(code == 0);
  CHECK(fs::exists(tmp.path / "mesh.txt"));
  CHECK(fs::exists(tmp.path / "config_used.txt"));
  const Mesh mesh = load_mesh((tmp.path / "mesh.txt").string());
  CHECK(validate_mesh(mesh).empty());
}

TEST_CASE("dn subcommand is deterministic byte-for-byte") {
  TempDir tmp1, tmp2;
  const std::string args =
      "dn --set target_h=0.15 --set K=4 --set a=0.3 --set xi=0.8 --out ";
  CHECK(run(args + tmp1.path.string()) == 0);
  CHECK(run(args + tmp2.path.string()) == 0);
  const std::string j1 = slurp(tmp1.path / "dn_matrix.json");
  CHECK(!j1.empty());
  CHECK(j1 == slurp(tmp2.path / "dn_matrix.json"));
  CHECK(slurp(tmp1.path / "dn_diagonal.csv") ==
        slurp(tmp2.path / "dn_diagonal.csv"));

  const auto j = nlohmann::json::parse(j1);
  CHECK(j["meta"]["variant"] == "standard");
}

TEST_CASE("dn subcommand on the Laplace case lists |k| diagonals") {
  TempDir tmp;
  CHECK(run("dn --set target_h=0.1 --set K=3 --set a=0 --set xi=0 --out " +
            tmp.path.string()) == 0);
  std::ifstream csv(tmp.path / "dn_diagonal.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "k,re,im");
  int k;
  char comma;
  double re, im;
  std::vector<double> diag;
  std::string line;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    row >> k >> comma >> re >> comma >> im;
    diag.push_back(re);
  }
  REQUIRE(diag.size() == 7);
  for (int i = 0; i < 7; ++i)
    CHECK(diag[i] == doctest::Approx(std::abs(i - 3)).epsilon(5e-3));
}

TEST_CASE("dn subcommand can export the xi family") {
  TempDir tmp;
  CHECK(run("dn --set target_h=0.2 --set K=3 --set a=0.2 "
            "--set export_family=1 --out " +
            tmp.path.string()) == 0);
  const auto j = nlohmann::json::parse(slurp(tmp.path / "dn_family.json"));
  CHECK(j["members"].size() == 25);
  CHECK(j["meta"]["variant"] == "standard");
}

TEST_CASE("invert subcommand recovers the configured rate") {
  TempDir tmp;
  const int code = run(
      "invert --set target_h=0.12 --set K=4 --set a=0.3 "
      "--set xi_half_width=6 --set xi_step=0.5 --out " +
      tmp.path.string());
  CHECK(code == 0);
  const auto j = nlohmann::json::parse(slurp(tmp.path / "recovery.json"));
  CHECK(std::abs(j["a_hat"].get<double>() - 0.3) <= 2e-3);
  CHECK(fs::exists(tmp.path / "misfit_curve.csv"));
}

TEST_CASE("exit codes: usage 2, numerical failure 3") {
  TempDir tmp;
  CHECK(run("dn --set nonsense=1 --out " + tmp.path.string()) == 2);
  CHECK(run("frobnicate") == 2);
  // surrogate variant on the unit disc is outside the coercive regime
  CHECK(run("dn --set variant=bullet --set a=1.0 --set target_h=0.2 --out " +
            tmp.path.string()) == 3);
}
