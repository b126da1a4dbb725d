// End-to-end tests of the command-line tool; each subcommand must behave as
// a thin adapter over the library.

#include "cpdcond/conditioning.hpp"
#include "cpdcond/core.hpp"
#include "cpdcond/io.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef CPDCOND_CLI_PATH
#error "CPDCOND_CLI_PATH must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "cpdcond_cli_tests";
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const std::string cmd =
      std::string(CPDCOND_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  return result;
}

}  // namespace

TEST_CASE("cond reports the fixture condition number and exits cleanly") {
  const fs::path dec = work_dir() / "sec92.json";
  cpdcond::write_decomposition(dec.string(), fixtures::positive_truncated());

  const RunResult r = run_cli("cond " + dec.string());
  CHECK(r.exit_code == 0);
  const json report = json::parse(r.out);
  CHECK(std::abs(report["kappa_rel"].get<double>() - 18.410308) / 18.410308 <= 1e-4);
  CHECK(report["subgeneric"].get<bool>());
  CHECK(report["balanced"].get<bool>());
}

TEST_CASE("cond agrees with the library exactly") {
  const fs::path dec = work_dir() / "sec91.json";
  cpdcond::write_decomposition(dec.string(), fixtures::small_balanced());
  const RunResult r = run_cli("cond " + dec.string());
  const json report = json::parse(r.out);
  const cpdcond::ConditionReport direct =
      cpdcond::condition_number(fixtures::small_balanced());
  CHECK(report["kappa_rel"].get<double>() == direct.kappa_rel);
  CHECK(report["sigma_n"].get<double>() == direct.sigma_n);
}

TEST_CASE("cond exits 3 on non-subgeneric input") {
  Eigen::MatrixXd f(2, 3);
  f << 1, 2, 3, 4, 5, 6;
  const fs::path dec = work_dir() / "nonsub.json";
  cpdcond::write_decomposition(dec.string(), {f, f, f});
  const RunResult r = run_cli("cond " + dec.string());
  CHECK(r.exit_code == 3);
  CHECK_FALSE(json::parse(r.out)["subgeneric"].get<bool>());
}

TEST_CASE("malformed JSON exits 1") {
  const fs::path bad = work_dir() / "bad.json";
  std::ofstream(bad) << "{\"dims\": [3, 3, 2], \"rank\": ";
  const RunResult r = run_cli("cond " + bad.string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli("cond").exit_code == 1);
  CHECK(run_cli("nonsense-subcommand").exit_code == 1);
  CHECK(run_cli("gen --dims 3,3,2 --rank 2").exit_code == 1);  // seed required
}

TEST_CASE("gen is deterministic and feeds the pipeline") {
  const fs::path a = work_dir() / "gen_a.json";
  const fs::path b = work_dir() / "gen_b.json";
  CHECK(run_cli("gen --dims 3,3,2 --rank 2 --seed 7 --out " + a.string()).exit_code == 0);
  CHECK(run_cli("gen --dims 3,3,2 --rank 2 --seed 7 --out " + b.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));

  const fs::path c = work_dir() / "gen_c.json";
  CHECK(run_cli("gen --dims 3,3,2 --rank 2 --seed 8 --out " + c.string()).exit_code == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("terracini and kernel dump CSV with the right shapes") {
  const fs::path dec = work_dir() / "sec91b.json";
  cpdcond::write_decomposition(dec.string(), fixtures::small_balanced());

  const RunResult t = run_cli("terracini " + dec.string());
  CHECK(t.exit_code == 0);
  std::istringstream ts(t.out);
  std::string line;
  int rows = 0, cols = 0;
  while (std::getline(ts, line)) {
    if (rows == 0) cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    ++rows;
  }
  CHECK(rows == 18);
  CHECK(cols == 16);

  const RunResult k = run_cli("kernel " + dec.string());
  CHECK(k.exit_code == 0);
  std::istringstream ks(k.out);
  rows = 0;
  while (std::getline(ks, line)) {
    if (rows == 0) cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    ++rows;
  }
  CHECK(rows == 16);
  CHECK(cols == 4);
}

TEST_CASE("gevd round-trips through tensor files") {
  const fs::path dec = work_dir() / "truth.json";
  const fs::path ten = work_dir() / "truth_tensor.json";
  const fs::path rec = work_dir() / "recovered.json";
  CHECK(run_cli("gen --dims 5,4,3 --rank 2 --seed 11 --out " + dec.string() +
                " --tensor-out " + ten.string())
            .exit_code == 0);
  CHECK(run_cli("gevd " + ten.string() + " --rank 2 --out " + rec.string()).exit_code == 0);

  const RunResult d = run_cli("distance " + dec.string() + " " + rec.string());
  CHECK(d.exit_code == 0);
  const json dist = json::parse(d.out);
  CHECK(dist["value"].get<double>() <= 1e-8);
  CHECK(dist["permutation"].size() == 2);
  CHECK(dist["thetas"].size() == 2);
}

TEST_CASE("gevd exits 4 when the decomposition fails") {
  const fs::path dec = work_dir() / "r1.json";
  const fs::path ten = work_dir() / "r1_tensor.json";
  CHECK(run_cli("gen --dims 4,4,3 --rank 1 --seed 3 --out " + dec.string() + " --tensor-out " +
                ten.string())
            .exit_code == 0);
  // asking for rank 2 on an exactly rank-1 tensor degenerates the pencil
  CHECK(run_cli("gevd " + ten.string() + " --rank 2").exit_code == 4);
}

TEST_CASE("isl emits the result and the trace") {
  const fs::path dec = work_dir() / "sec91c.json";
  const fs::path trace = work_dir() / "trace.csv";
  cpdcond::write_decomposition(dec.string(), fixtures::small_balanced());
  const RunResult r = run_cli("isl " + dec.string() +
                              " --nabla-norm 1e-2 --kernel-dir random:5 --trace-csv " +
                              trace.string());
  CHECK(r.exit_code == 0);
  const json isl = json::parse(r.out);
  CHECK(isl["converged"].get<bool>());
  CHECK(isl["nabla_norms"].size() >= 3);
  const std::string trace_text = slurp(trace);
  CHECK(trace_text.rfind("iteration,nabla_norm", 0) == 0);

  // index-valued kernel direction is accepted too
  CHECK(run_cli("isl " + dec.string() + " --nabla-norm 1e-3 --kernel-dir 0").exit_code == 0);
}

TEST_CASE("kruskal reports the criterion") {
  const fs::path dec = work_dir() / "sec91d.json";
  cpdcond::write_decomposition(dec.string(), fixtures::small_balanced());
  const RunResult r = run_cli("kruskal " + dec.string());
  CHECK(r.exit_code == 0);
  const json info = json::parse(r.out);
  CHECK(info["k_ranks"] == json::array({2, 2, 2}));
  CHECK(info["satisfied"].get<bool>());
}

TEST_CASE("experiment emits the fixed CSV schema deterministically") {
  const fs::path out1 = work_dir() / "rows1.csv";
  const fs::path out2 = work_dir() / "rows2.csv";
  CHECK(run_cli("experiment ill-conditioned --seed 5 --s-min 1 --s-max 4 --out " +
                out1.string())
            .exit_code == 0);
  CHECK(run_cli("experiment ill-conditioned --seed 5 --s-min 1 --s-max 4 --out " +
                out2.string())
            .exit_code == 0);
  const std::string csv = slurp(out1);
  CHECK(csv == slurp(out2));
  CHECK(csv.rfind("s,backward,forward_proxy,orbit_forward,kappa,bound,warned,solver_failed", 0) ==
        0);
  CHECK(run_cli("experiment ill-conditioned --s-min 1 --s-max 2").exit_code == 1);  // no seed
}
