#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eyeheat/cli.hpp"
#include "eyeheat/io.hpp"

namespace fs = std::filesystem;
using eyeheat::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

// Scratch directory per test case; every path handed to the CLI is absolute.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("eyeheat_cli_" + std::to_string(counter()++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }

  Result cli(std::vector<std::string> args) const {
    args.insert(args.begin(), {"--manifest", (dir / "manifest.json").string()});
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
  }

  nlohmann::json manifest() const {
    return nlohmann::json::parse(eyeheat::io::read_file((dir / "manifest.json").string()));
  }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("empty outputs list names the outputs field") {
  Scratch s;
  const auto r = s.cli({"solve", "--mesh", "gen:1", "--outputs", "[]"});
  CHECK(r.code == 2);
  CHECK(r.err.find("outputs") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2") {
  Scratch s;
  CHECK(s.cli({"solve", "--mesh", s("missing.msh")}).code == 2);
  CHECK(s.cli({"solve", "--mesh", "gen:x"}).code == 2);
  CHECK(s.cli({"reduce", "--mesh", "gen:1", "--out", s("m.rbm"), "--tol", "abc"}).code == 2);
  CHECK(s.cli({"solve", "--mesh", "gen:1", "--params", R"({"E": 1000})"}).code == 2);
  CHECK(s.cli({"solve", "--mesh", "gen:1", "--model", "quadratic"}).code == 2);
  CHECK(s.cli({"reproduce", "no-such-preset"}).code == 2);
  CHECK(s.cli({"frobnicate"}).code == 2);
  CHECK(s.cli({"online", "--model", s("missing.rbm"), "--csv", s("x.csv")}).code == 2);

  std::ofstream(s("config.json")) << R"({"mesh": "gen:1", "colour": "blue"})";
  const auto r = s.cli({"solve", "--config", s("config.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find("colour") != std::string::npos);
}

TEST_CASE("numerical failure exits with status 1") {
  Scratch s;
  const auto r = s.cli({"dsa", "--mesh", "gen:1", "--param", "h_bl", "--values", "-1",
                        "--csv", s("dsa.csv")});
  CHECK(r.code == 1);
}

TEST_CASE("generate, reduce and evaluate online") {
  Scratch s;
  REQUIRE(s.cli({"mesh", "generate", "--refinement", "2", "--out", s("eye.msh")}).code == 0);
  CHECK(fs::exists(s("eye.msh.points.json")));
  const auto solve = s.cli({"solve", "--mesh", s("eye.msh"), "--outputs", R"(["O", "G"])",
                            "--csv", s("solve.csv")});
  REQUIRE(solve.code == 0);
  REQUIRE(s.cli({"reduce", "--mesh", s("eye.msh"), "--out", s("model.rbm"), "--train-size", "200",
                 "--history", s("history.csv")}).code == 0);
  REQUIRE(s.cli({"online", "--model", s("model.rbm"), "--csv", s("out.csv")}).code == 0);

  const auto m = s.manifest();
  CHECK(m["artifacts"].contains(s("model.rbm")));
  CHECK(m["artifacts"].contains(s("out.csv")));
  const auto& entry = m["artifacts"][s("out.csv")];
  CHECK(entry["sha256"] == eyeheat::io::sha256_file(s("out.csv")));
  CHECK(m["runs"].size() == 4);
  const auto& reduce = m["runs"][2];
  CHECK(reduce["seed"] == 1);
  CHECK(reduce["info"]["timing_comparison"]["speedup"].get<double>() > 1.0);

  const auto csv = eyeheat::io::read_file(s("out.csv"));
  CHECK(csv.rfind("output,s_N [K],delta_s [K]", 0) == 0);
}

TEST_CASE("T_amb preset writes the sweep grid and is reproducible") {
  Scratch s;
  const auto dir = s("dsa");
  REQUIRE(s.cli({"--reproduce", "dsa-Tamb", "--mesh", "gen:1", "--out-dir", dir}).code == 0);
  const auto first = eyeheat::io::read_file(dir + "/dsa-Tamb.csv");
  std::istringstream lines(first);
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("T_amb [K],", 0) == 0);
  std::vector<double> grid;
  while (std::getline(lines, line)) grid.push_back(std::stod(line.substr(0, line.find(','))));
  REQUIRE(grid.size() == 11);
  CHECK(grid.front() == doctest::Approx(283.15));
  CHECK(grid.back() == doctest::Approx(303.15));

  REQUIRE(s.cli({"reproduce", "dsa-Tamb", "--mesh", "gen:1", "--out-dir", dir}).code == 0);
  CHECK(eyeheat::io::read_file(dir + "/dsa-Tamb.csv") == first);
}

TEST_CASE("sobol CSV is byte-identical for the same seed") {
  Scratch s;
  REQUIRE(s.cli({"reduce", "--mesh", "gen:1", "--out", s("m.rbm"), "--train-size", "100"}).code == 0);
  for (const char* name : {"a.csv", "b.csv"})
    REQUIRE(s.cli({"sobol", "--model", s("m.rbm"), "--seed", "7", "--bootstrap", "20", "--csv",
                   s(name)}).code == 0);
  CHECK(eyeheat::io::read_file(s("a.csv")) == eyeheat::io::read_file(s("b.csv")));
  REQUIRE(s.cli({"propagate", "--model", s("m.rbm"), "--n", "500", "--csv", s("p.csv"),
                 "--dist", R"({"inputs": {"T_amb": {"kind": "constant", "value": 298},
                   "T_bl": {"kind": "uniform", "lower": 308, "upper": 312},
                   "h_amb": {"kind": "constant", "value": 10},
                   "h_bl": {"kind": "constant", "value": 65},
                   "E": {"kind": "constant", "value": 40},
                   "k_lens": {"kind": "constant", "value": 0.4}}})"}).code == 0);
  CHECK(eyeheat::io::read_file(s("p.csv")).rfind("output,n,failed,mean [K]", 0) == 0);
}

}
