#include "cli.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kToy = SIMCIM_DATA_DIR "/toy/single_edge.txt";

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "simcim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = simcim::cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempRoot {
  fs::path path;
  TempRoot() {
    path = fs::temp_directory_path() /
           ("simcim_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempRoot() { fs::remove_all(path); }
  std::string root() const { return path.string(); }
};

}  // namespace

TEST_CASE("solve on the single-edge toy cuts the edge") {
  TempRoot tmp;
  const auto r = run({"solve", "--run.output_root", tmp.root(), "--instance.path", kToy,
                      "--simcim.batch_size", "8"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best cut 1  solved=true") != std::string::npos);
  const auto summary = slurp(tmp.path / "solve" / "summary.csv");
  CHECK(summary.find("single_edge,2,1,") != std::string::npos);
  CHECK(summary.substr(summary.rfind(',') + 1) == "true\n");
  CHECK(fs::exists(tmp.path / "solve" / "manifest.ini"));
}

TEST_CASE("re-running from a manifest reproduces outputs bit for bit") {
  TempRoot tmp;
  REQUIRE(run({"solve", "--run.output_root", tmp.root(), "--instance.n", "20",
               "--instance.connect_prob", "0.3", "--simcim.batch_size", "16",
               "--solve.batches", "2", "--run.seed", "77"})
              .code == 0);
  const auto manifest = tmp.path / "solve" / "manifest.ini";
  CHECK(slurp(manifest).find("[seeds]") != std::string::npos);
  REQUIRE(run({"solve", "--config", manifest.string(), "--run.name", "again"}).code == 0);
  CHECK(slurp(tmp.path / "solve" / "cuts.csv") == slurp(tmp.path / "again" / "cuts.csv"));
  CHECK(slurp(tmp.path / "solve" / "batches.csv") == slurp(tmp.path / "again" / "batches.csv"));
  // the second manifest differs only in run.name
  auto a = slurp(manifest), b = slurp(tmp.path / "again" / "manifest.ini");
  a.replace(a.find("name="), 5, "name=again");
  CHECK(a == b);
}

TEST_CASE("config file values are overridden by flags") {
  TempRoot tmp;
  const auto cfg = tmp.path / "run.ini";
  std::ofstream(cfg) << "[simcim]\nbatch_size = 4\niterations = 200\n[run]\nname = from_file\n";
  REQUIRE(run({"solve", "--config", cfg.string(), "--run.output_root", tmp.root(),
               "--instance.path", kToy, "--simcim.batch_size", "6"})
              .code == 0);
  const auto manifest = slurp(tmp.path / "from_file" / "manifest.ini");
  CHECK(manifest.find("batch_size=6") != std::string::npos);
  CHECK(manifest.find("iterations=200") != std::string::npos);
  // 6 columns of cuts plus a header
  const auto cuts = slurp(tmp.path / "from_file" / "cuts.csv");
  CHECK(std::count(cuts.begin(), cuts.end(), '\n') == 7);
}

TEST_CASE("output root comes from the environment when not configured") {
  TempRoot tmp;
  ::setenv("SIMCIM_OUTPUT_ROOT", tmp.root().c_str(), 1);
  const auto r = run({"solve", "--instance.path", kToy, "--simcim.batch_size", "2"});
  ::unsetenv("SIMCIM_OUTPUT_ROOT");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(tmp.path / "solve" / "summary.csv"));
}

TEST_CASE("configuration errors name the field") {
  TempRoot tmp;
  auto r = run({"solve", "--run.output_root", tmp.root(), "--simcim.batch_size", "abc"});
  CHECK(r.code == 2);
  CHECK(r.err.find("simcim.batch_size") != std::string::npos);

  r = run({"solve", "--run.output_root", tmp.root(), "--schedule.kind", "cubic"});
  CHECK(r.code == 2);
  CHECK(r.err.find("schedule.kind") != std::string::npos);

  const auto cfg = tmp.path / "bad.ini";
  std::ofstream(cfg) << "[simcim]\nbatchsize = 4\n";
  r = run({"solve", "--config", cfg.string(), "--run.output_root", tmp.root()});
  CHECK(r.code == 2);
  CHECK(r.err.find("simcim.batchsize") != std::string::npos);

  r = run({"finetune", "--run.output_root", tmp.root()});
  CHECK(r.code == 2);
  CHECK(r.err.find("finetune.checkpoint") != std::string::npos);

  CHECK(run({"solve", "--no.such_key", "1"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("missing instance file is an error") {
  TempRoot tmp;
  const auto r = run({"solve", "--run.output_root", tmp.root(), "--instance.path",
                      (tmp.path / "missing.txt").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing.txt") != std::string::npos);
}

TEST_CASE("bench emits a Linear row and report merges runs") {
  TempRoot tmp;
  const std::vector<std::string> common{"--run.output_root", tmp.root(), "--instance.n", "14",
                                        "--instance.connect_prob", "0.3", "--instance.best_known",
                                        "exact", "--simcim.batch_size", "16",
                                        "--simcim.iterations", "200"};
  auto args = common;
  args.insert(args.begin(), {"bench", "--run.name", "lin", "--bench.batches", "3"});
  REQUIRE(run(args).code == 0);
  const auto table = slurp(tmp.path / "lin" / "table.csv");
  CHECK(table.rfind("label,maximum,median,solved,instances,batches\nLinear,", 0) == 0);

  args = common;
  args.insert(args.begin(), {"bench", "--run.name", "manual", "--bench.method", "tanh",
                             "--schedule.kind", "tanh", "--bench.batches", "2"});
  REQUIRE(run(args).code == 0);

  const auto r = run({"report", "--run.output_root", tmp.root(), "--report.runs",
                      (tmp.path / "lin").string() + "," + (tmp.path / "manual").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Linear") != std::string::npos);
  CHECK(r.out.find("Manual") != std::string::npos);
  std::istringstream report(slurp(tmp.path / "report" / "report.csv"));
  std::string line;
  std::getline(report, line);
  CHECK(line == "label,maximum,median,solved");
  int rows = 0;
  while (std::getline(report, line)) {
    ++rows;
    std::istringstream f(line);
    std::string label, mx, md;
    std::getline(f, label, ',');
    std::getline(f, mx, ',');
    std::getline(f, md, ',');
    CHECK(std::stod(mx) >= std::stod(md));
    CHECK(std::stod(mx) <= 1.0 + 1e-12);  // best-known is the exact optimum here
  }
  CHECK(rows == 2);
}

TEST_CASE("bench needs best-known values") {
  TempRoot tmp;
  const auto r = run({"bench", "--run.output_root", tmp.root(), "--instance.n", "10"});
  CHECK(r.code == 1);
  CHECK(r.err.find("best-known") != std::string::npos);
}
