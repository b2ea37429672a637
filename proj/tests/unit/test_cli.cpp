#include "gppl/io.hpp"
#include "gppl/manifest.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

using namespace gppl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "gppl_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GPPL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

json load(const fs::path& p) { return json::parse(read_file(p)); }

void write_problem(const fs::path& dir, Index N, Index n, double noise) {
  const Matrix X = testutil::random_matrix(N, n, 77);
  Vector beta = Vector::Zero(n);
  beta.head(n / 2).setConstant(1.0);
  const Vector y = X * beta + noise * testutil::random_matrix(N, 1, 78).col(0);
  write_csv(dir / "X.csv", X);
  write_csv(dir / "y.csv", y, "y");
  write_csv(dir / "beta.csv", beta, "beta");
  write_edge_list(dir / "g.edges", path_graph(n));
}

std::string data_args(const fs::path& dir) {
  return "--design " + (dir / "X.csv").string() + " --response " + (dir / "y.csv").string() + " --graph " +
         (dir / "g.edges").string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const fs::path d = scratch("exit");
  write_problem(d, 40, 10, 0.3);
  CHECK(run("fit " + data_args(d) + " --lambda 0.05 --lambda-g 0.05 --out-dir " + (d / "ok").string()) == 0);
  CHECK(fs::exists(d / "ok" / "beta.csv"));
  CHECK(fs::exists(d / "ok" / "manifest.json"));

  CHECK(run("fit --no-such-flag") == 1);
  CHECK(run("fit " + data_args(d) + " --kind nonsense --lambda 0.1 --out-dir " + (d / "bad").string()) == 1);
  CHECK(run("fit --design " + (d / "missing.csv").string() + " --response " + (d / "y.csv").string() +
            " --lambda 0.1 --kind lasso --out-dir " + (d / "bad").string()) == 1);

  write_csv(d / "short.csv", Vector(Vector::Ones(39)), "y");
  CHECK(run("fit --design " + (d / "X.csv").string() + " --response " + (d / "short.csv").string() +
            " --kind lasso --lambda 0.1 --out-dir " + (d / "dim").string()) == 2);
  write_edge_list(d / "g9.edges", path_graph(9));
  CHECK(run("fit --design " + (d / "X.csv").string() + " --response " + (d / "y.csv").string() + " --graph " +
            (d / "g9.edges").string() + " --lambda 0.1 --out-dir " + (d / "dim").string()) == 2);

  CHECK(run("fit " + data_args(d) + " --lambda 0.01 --lambda-g 0.01 --k 2 --max-iter 2 --out-dir " +
            (d / "nc").string()) == 3);
  CHECK(load(d / "nc" / "fit.json")["converged"] == false);
}

TEST_CASE("lambda_g = 0 reproduces the lasso byte for byte") {
  const fs::path d = scratch("lasso");
  write_problem(d, 30, 12, 0.5);
  REQUIRE(run("fit " + data_args(d) + " --lambda 0.05 --lambda-g 0 --k 1 --out-dir " + (d / "g").string()) == 0);
  REQUIRE(run("fit " + data_args(d) + " --kind lasso --lambda 0.05 --out-dir " + (d / "l").string()) == 0);
  CHECK(read_file(d / "g" / "beta.csv") == read_file(d / "l" / "beta.csv"));
}

TEST_CASE("simulate is reproducible from the seed") {
  const fs::path d = scratch("sim");
  const std::string base = "simulate --family path --scenario 2 --samples 60 --seed 9 --out-dir ";
  REQUIRE(run(base + (d / "a").string()) == 0);
  REQUIRE(run(base + (d / "b").string()) == 0);
  CHECK(read_file(d / "a" / "manifest.json") == read_file(d / "b" / "manifest.json"));
  for (const char* f : {"X.csv", "y.csv", "beta_star.csv", "graph.edges"})
    CHECK(read_file(d / "a" / f) == read_file(d / "b" / f));
  const json m = load(d / "a" / "manifest.json");
  CHECK(m["seeds"] == json::array({9}));
  CHECK(m["outputs"]["X.csv"] == sha256_hex(read_file(d / "a" / "X.csv")));
  CHECK(m["parameters"]["s1"] == 19);
  CHECK(m["parameters"]["s2"] == 49);
  CHECK_FALSE(m.contains("timings"));

  REQUIRE(run("simulate --family path --scenario 2 --samples 60 --seed 10 --out-dir " + (d / "c").string()) == 0);
  CHECK(read_file(d / "a" / "X.csv") != read_file(d / "c" / "X.csv"));
}

TEST_CASE("infer on nearly noiseless data recovers the truth") {
  const fs::path d = scratch("infer");
  write_problem(d, 80, 6, 1e-9);
  REQUIRE(run("infer " + data_args(d) + " --beta " + (d / "beta.csv").string() +
              " --sigma estimate --test-edges 3 --out-dir " + (d / "out").string()) == 0);
  const json inf = load(d / "out" / "inference.json");
  CHECK(inf["sigma_is_estimated"] == true);
  CHECK(inf["sigma_used"].get<double>() < 1e-6);
  REQUIRE(inf["beta_tilde"].size() == 6);
  const Vector beta = read_csv_vector(d / "beta.csv");
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(inf["beta_tilde"][j].get<double>() == doctest::Approx(beta[static_cast<Index>(j)]).epsilon(1e-6));
  const json tests = load(d / "out" / "tests.json");
  REQUIRE(tests.size() == 7);
  CHECK(tests[6]["kind"] == "edge");
  CHECK(tests[6]["target"] == 3);
  CHECK(tests[6]["reject"] == true);  // endpoints 3 and 4 differ
  CHECK(fs::exists(d / "out" / "theta.csv"));
}

TEST_CASE("flags override the config file") {
  const fs::path d = scratch("config");
  write_problem(d, 30, 8, 0.5);
  write_file(d / "c.json", R"({"lambda": 0.5, "lambda_g": 0.25, "kind": "gppl", "k": 1})");
  REQUIRE(run("fit " + data_args(d) + " --config " + (d / "c.json").string() + " --lambda 0.02 --out-dir " +
              (d / "out").string()) == 0);
  const json f = load(d / "out" / "fit.json");
  CHECK(f["lambda"] == 0.02);
  CHECK(f["lambda_g"] == 0.25);
  CHECK(f["k"] == 1);
  CHECK(load(d / "out" / "manifest.json")["config_path"] == (d / "c.json").string());

  write_file(d / "bad.json", R"({"lambda": )");
  CHECK(run("fit " + data_args(d) + " --config " + (d / "bad.json").string() + " --out-dir " +
            (d / "x").string()) == 1);
}

TEST_CASE("bench and graph argument checks") {
  const fs::path d = scratch("bench");
  CHECK(run("bench --study error --reps 1 --out-dir " + d.string()) == 1);
  CHECK(run("bench --study nonsense --out-dir " + d.string()) == 1);
  REQUIRE(run("graph --family path --k 1 --out-dir " + (d / "g").string()) == 0);
  CHECK(fs::exists(d / "g" / "operator.mtx"));
  const json g = load(d / "g" / "graph.json");
  CHECK(g["nodes"] == 250);
}

}  // TEST_SUITE
