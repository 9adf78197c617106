#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pipemdp/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pipemdp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("pipemdp_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// All nine transitions; `first` goes on 1->2, everything else is negligible.
std::string cohort(const std::string& family, const std::string& first, const std::string& rest) {
  json t;
  for (const char* e : {"1->2", "2->3", "3->4", "4->5", "1->F", "2->F", "3->F", "4->F", "5->F"})
    t[e] = json::parse(std::string(e) == "1->2" ? first : rest);
  return json{{"family", family}, {"transitions", t}, {"S0", {1, 0, 0, 0, 0, 0}}}.dump();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kCli = PIPEMDP_CLI_PATH;

}  // namespace

TEST_CASE("solve writes the occupancy grid") {
  const auto dir = scratch("solve");
  const auto path = dir / "weibull.csv";
  const auto r = run({"solve", "--family", "weibull", "--t-end", "120", "--step", "0.5", "--out", path.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(path);
  REQUIRE(rows.size() == 242);
  CHECK(rows[0] == std::vector<std::string>{"t", "S1", "S2", "S3", "S4", "S5", "SF"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double sum = 0;
    for (int k = 1; k <= 6; ++k) sum += std::stod(rows[i][k]);
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
  CHECK(std::stod(rows[201][6]) > std::stod(rows[21][6]));
  CHECK(std::stod(rows[201][0]) == 100.0);
  CHECK(fs::exists(dir / "weibull.csv.manifest.json"));

  const auto stdout_run = run({"solve", "--family", "exponential", "--t-end", "1", "--step", "0.5"});
  CHECK(stdout_run.code == 0);
  CHECK(stdout_run.out.rfind("t,S1,S2,S3,S4,S5,SF\r\n0,", 0) == 0);
}

TEST_CASE("solve from a cohort parameter file") {
  const auto dir = scratch("params");
  const auto file = dir / "cohort.json";
  std::ofstream(file) << cohort("exponential", R"({"epsilon":0.1})", R"({"epsilon":1e-15})");
  const auto r = run({"solve", "--params", file.string(), "--t-end", "10", "--step", "10"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(std::abs(std::stod(row1.substr(row1.find(',') + 1)) - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"solve", "--family", "lognormal"}).code == 2);
  CHECK(run({"solve", "--step", "0"}).code == 2);
  CHECK(run({"simulate", "--start-age", "-3"}).code == 2);
  CHECK(run({"evaluate", "--policies", "ppo"}).code == 2);
  CHECK(run({"simulate", "--policy", "/nonexistent/agent.policy.json"}).code == 4);
  CHECK(run({"solve", "--params", "/nonexistent/cohort.json"}).code == 4);
  CHECK(run({"rerun", "/nonexistent/manifest.json"}).code == 4);
  CHECK(run({"serve", "--endpoint", "unix:/nonexistent/dir/env.sock"}).code == 5);
  CHECK(run({"serve", "--endpoint", "carrier-pigeon"}).code == 5);
  CHECK(run({"--version"}).out == std::string(pipemdp::cli::kVersion) + "\n");
  CHECK(run({"--help"}).code == 0);

  const auto dir = scratch("runaway");
  const auto file = dir / "runaway.json";
  std::ofstream(file) << cohort("gompertz", R"({"alpha":1,"beta":50})", R"({"alpha":1e-6,"beta":1e-3})");
  CHECK(run({"solve", "--params", file.string(), "--t-end", "100", "--step", "1"}).code == 3);
}

TEST_CASE("simulate writes a reproducible episode log") {
  const auto dir = scratch("simulate");
  const auto r = run({"simulate", "--policy", "rm", "--start-age", "25", "--seed", "7", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto file = dir / "episode_rm_25_7.csv";
  REQUIRE(fs::exists(file));
  REQUIRE(fs::exists(dir / "manifest.json"));
  const auto rows = read_csv(file);
  CHECK(rows.size() == 201);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] != "1");
  const auto first = slurp(file);

  const auto again = scratch("simulate_again");
  REQUIRE(run({"simulate", "--policy", "rm", "--start-age", "25", "--seed", "7", "--out", again.string()}).code == 0);
  CHECK(slurp(again / "episode_rm_25_7.csv") == first);

  const auto re = scratch("simulate_rerun");
  REQUIRE(run({"rerun", (dir / "manifest.json").string(), "--out", re.string()}).code == 0);
  CHECK(slurp(re / "episode_rm_25_7.csv") == first);
}

TEST_CASE("simulate cbm replaces by age 70") {
  const auto dir = scratch("cbm");
  REQUIRE(run({"simulate", "--policy", "cbm", "--start-age", "50", "--seed", "3", "--out", dir.string()}).code == 0);
  const auto rows = read_csv(dir / "episode_cbm_50_3.csv");
  bool replaced = false;
  for (std::size_t i = 1; i < rows.size() && std::stod(rows[i][0]) <= 70.0; ++i) replaced |= rows[i][1] == "2";
  CHECK(replaced);

  const auto json_run = run({"simulate", "--policy", "cbm", "--start-age", "50", "--seed", "3", "--json"});
  REQUIRE(json_run.code == 0);
  const auto doc = json::parse(json_run.out);
  CHECK(doc.dump().find("\"steps\"") != std::string::npos);
}

TEST_CASE("heuristic flags reach the policies") {
  const auto dir = scratch("flags");
  REQUIRE(run({"simulate", "--policy", "schm", "--schm-period", "5", "--start-age", "0", "--seed", "1", "--dynamics",
               "exponential", "--out", dir.string()})
              .code == 0);
  const auto rows = read_csv(dir / "episode_schm_0_1.csv");
  int maintains = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) maintains += rows[i][1] == "1";
  CHECK(maintains >= 15);
}

TEST_CASE("evaluate writes per-policy statistics") {
  const auto dir = scratch("evaluate");
  const auto r = run({"evaluate", "--policies", "rm,schm,cbm", "--ages", "0,25,50", "--episodes", "100", "--jobs", "4",
                      "--out", dir.string()});
  REQUIRE(r.code == 0);
  for (const std::string p : {"rm", "schm", "cbm"}) {
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.path().filename().string().rfind("stats_" + p + "_", 0) == 0;
    CHECK(files == 3);
  }
  const auto rows = read_csv(dir / "comparison.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[0][0] == "policy");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double a = 0, k = 0;
    for (int c = 5; c < 8; ++c) a += std::stod(rows[i][c]);
    for (int c = 8; c < 14; ++c) k += std::stod(rows[i][c]);
    CHECK(std::abs(a - 100.0) < 1e-3);
    CHECK(std::abs(k - 100.0) < 1e-3);
    if (rows[i][0] == "schm") CHECK(std::abs(std::stod(rows[i][6]) - 5.0) <= 0.6);
    if (rows[i][0] == "rm") CHECK(std::stod(rows[i][6]) == 0.0);
  }
  CHECK(r.out == slurp(dir / "comparison.csv"));

  const auto re = scratch("evaluate_rerun");
  REQUIRE(run({"rerun", (dir / "manifest.json").string(), "--out", re.string()}).code == 0);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "manifest.json") continue;
    CHECK(slurp(e.path()) == slurp(re / e.path().filename()));
  }
}

TEST_CASE("environment variable selects the config") {
  const auto dir = scratch("config");
  const auto cfg = dir / "short.json";
  std::ofstream(cfg) << R"({"length_m": 10, "horizon": 20, "dynamics": "gompertz"})";
  ::setenv("PIPEMDP_CONFIG", cfg.string().c_str(), 1);
  const auto r = run({"simulate", "--policy", "rm", "--start-age", "10", "--seed", "2", "--out", dir.string()});
  ::unsetenv("PIPEMDP_CONFIG");
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "episode_rm_10_2.csv");
  CHECK(rows.size() == 41);
  // h values are multiples of 1/10
  const double h1 = std::stod(rows[1][2]);
  CHECK(std::abs(h1 * 10 - std::round(h1 * 10)) < 1e-12);
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["length_m"] == 10.0);

  std::ofstream(dir / "bad.json") << R"({"lenght_m": 10})";
  CHECK(run({"simulate", "--config", (dir / "bad.json").string()}).code == 2);
}

TEST_CASE("binary serves the protocol on stdio") {
  const auto dir = scratch("stdio");
  const auto req = dir / "requests.jsonl";
  std::ofstream(req) << "{\"op\":\"spec\"}\n{\"op\":\"reset\",\"seed\":1}\n{\"op\":\"step\",\"action\":0}\n{\"op\":\"close\"}\n";
  const auto out = dir / "replies.jsonl";
  REQUIRE(shell("'" + kCli + "' serve --endpoint stdio < '" + req.string() + "' > '" + out.string() + "'") == 0);
  std::istringstream in(slurp(out));
  std::vector<json> replies;
  for (std::string l; std::getline(in, l);) replies.push_back(json::parse(l));
  REQUIRE(replies.size() == 4);
  CHECK(replies[0]["obs_dim"] == 13);
  CHECK(replies[2].contains("reward"));
  CHECK(replies[3]["closed"] == true);

  CHECK(shell("'" + kCli + "' solve --family nope 2>/dev/null") == 2);
  CHECK(shell("'" + kCli + "' serve --endpoint unix:/nonexistent/x.sock 2>/dev/null") == 5);
}
