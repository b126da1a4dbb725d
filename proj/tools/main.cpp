#include "cpdcond/conditioning.hpp"
#include "cpdcond/core.hpp"
#include "cpdcond/decomp.hpp"
#include "cpdcond/io.hpp"
#include "cpdcond/lab.hpp"
#include "cpdcond/scaling_group.hpp"
#include "cpdcond/terracini.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace cpdcond;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAccuracyWarning = 2;
constexpr int kExitNotSubgeneric = 3;
constexpr int kExitSolverFailure = 4;

int resolve_threads(int requested) {
  if (requested < 1) requested = 1;
  if (const char* env = std::getenv("TERRACINI_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < requested) requested = cap;
  }
  return requested;
}

void emit(const std::string& payload, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << payload;
    if (!payload.empty() && payload.back() != '\n') std::cout << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << payload;
    if (!payload.empty() && payload.back() != '\n') out << "\n";
  }
}

std::vector<int> parse_dims(const std::string& spec) {
  std::vector<int> dims;
  std::string token;
  std::istringstream in(spec);
  while (std::getline(in, token, ',')) dims.push_back(std::stoi(token));
  return dims;
}

int run(int argc, char** argv) {
  CLI::App app{"Condition numbers and perturbation analysis of tensor rank decompositions"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More diagnostics on stderr");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random decomposition file");
  std::string gen_dims = "3,3,2";
  int gen_rank = 2;
  std::uint64_t gen_seed = 0;
  bool gen_uniform = false;
  std::string gen_out, gen_tensor_out;
  gen->add_option("--dims", gen_dims, "Comma-separated dimensions")->capture_default_str();
  gen->add_option("--rank", gen_rank, "Number of terms")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_flag("--uniform", gen_uniform, "Uniform (0,1] entries instead of standard normal");
  gen->add_option("--out", gen_out, "Decomposition output path (stdout if omitted)");
  gen->add_option("--tensor-out", gen_tensor_out, "Also write the dense tensor here");

  // cond
  auto* cond = app.add_subcommand("cond", "Norm-balanced relative condition number");
  std::string cond_input;
  bool cond_unbalanced = false;
  cond->add_option("input", cond_input, "Decomposition JSON file")->required();
  cond->add_flag("--unbalanced", cond_unbalanced,
                 "Evaluate at the given representative without balancing");

  // terracini / kernel
  auto* terr = app.add_subcommand("terracini", "Dump the Terracini matrix as CSV");
  std::string terr_input, terr_out;
  bool terr_balanced = false;
  terr->add_option("input", terr_input, "Decomposition JSON file")->required();
  terr->add_flag("--balanced", terr_balanced, "Norm-balance before building");
  terr->add_option("--out", terr_out, "CSV output path (stdout if omitted)");

  auto* kern = app.add_subcommand("kernel", "Dump the analytic kernel basis as CSV");
  std::string kern_input, kern_out;
  bool kern_balanced = false;
  kern->add_option("input", kern_input, "Decomposition JSON file")->required();
  kern->add_flag("--balanced", kern_balanced, "Norm-balance before building");
  kern->add_option("--out", kern_out, "CSV output path (stdout if omitted)");

  // distance
  auto* dist = app.add_subcommand("distance", "Orbit distance between two decompositions");
  std::string dist_a, dist_b;
  dist->add_option("a", dist_a, "First decomposition JSON file")->required();
  dist->add_option("b", dist_b, "Second decomposition JSON file")->required();

  // isl
  auto* isl_cmd = app.add_subcommand("isl", "Iterated scaling of a kernel perturbation");
  std::string isl_input, isl_dir = "random:0", isl_trace;
  double isl_norm = 1e-2;
  isl_cmd->add_option("input", isl_input, "Decomposition JSON file")->required();
  isl_cmd->add_option("--nabla-norm", isl_norm, "Norm of the kernel perturbation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  isl_cmd->add_option("--kernel-dir", isl_dir,
                      "Kernel direction: a basis column index or random:<seed>")
      ->capture_default_str();
  isl_cmd->add_option("--trace-csv", isl_trace, "Write the per-iteration norm trace here");

  // gevd
  auto* gevd = app.add_subcommand("gevd", "Direct rank-r decomposition of an order-3 tensor");
  std::string gevd_input, gevd_out;
  int gevd_rank = 0;
  gevd->add_option("input", gevd_input, "Tensor JSON file")->required();
  gevd->add_option("--rank", gevd_rank, "Decomposition rank")
      ->required()
      ->check(CLI::PositiveNumber);
  gevd->add_option("--out", gevd_out, "Decomposition output path (stdout if omitted)");

  // kruskal
  auto* krus = app.add_subcommand("kruskal", "Kruskal identifiability check");
  std::string krus_input;
  double krus_tol = 1e-10;
  krus->add_option("input", krus_input, "Decomposition JSON file")->required();
  krus->add_option("--kruskal-tol", krus_tol, "Relative rank tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a seeded experiment, emit CSV rows");
  std::string exp_name, exp_out;
  std::uint64_t exp_seed = 0;
  int exp_smin = -1, exp_smax = -1, exp_threads = 1;
  exp->add_option("name", exp_name, "One of: isl-convergence, worst-direction, rank1-sweep, "
                                    "odeco-sweep, ill-conditioned, desilva-lim, paatero")
      ->required();
  exp->add_option("--seed", exp_seed, "RNG seed")->required();
  exp->add_option("--s-min", exp_smin, "First sequence parameter (experiment default if omitted)");
  exp->add_option("--s-max", exp_smax, "Last sequence parameter (experiment default if omitted)");
  exp->add_option("--out", exp_out, "CSV output path (stdout if omitted)");
  exp->add_option("--threads", exp_threads, "Worker threads (capped by TERRACINI_THREADS)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (gen->parsed()) {
    SeededRng rng(gen_seed);
    const Factors factors = gen_random_factors(parse_dims(gen_dims), gen_rank, rng, gen_uniform);
    if (!gen_tensor_out.empty()) write_tensor(gen_tensor_out, cpdgen(factors));
    emit(decomposition_to_string(factors), gen_out);
    return kExitOk;
  }

  if (cond->parsed()) {
    const Params p = params_from_factors(read_decomposition(cond_input));
    const ConditionReport report =
        cond_unbalanced ? condition_number_at(p) : condition_number(p);
    nlohmann::json j = report_to_json(report);
    j["balanced"] = !cond_unbalanced;
    std::cout << j.dump(2) << "\n";
    if (!report.subgeneric) {
      std::cerr << "warning: the number of terms is not subgeneric\n";
      return kExitNotSubgeneric;
    }
    if (report.accuracy_warning) {
      std::cerr << "warning: computed condition number may not be accurate\n";
      return kExitAccuracyWarning;
    }
    return kExitOk;
  }

  if (terr->parsed() || kern->parsed()) {
    const bool wants_kernel = kern->parsed();
    Params p = params_from_factors(
        read_decomposition(wants_kernel ? kern_input : terr_input));
    if (wants_kernel ? kern_balanced : terr_balanced) p = norm_balance(p).params;
    std::ostringstream os;
    if (wants_kernel)
      write_matrix_csv(os, kernel_basis(p).matrix);
    else
      write_matrix_csv(os, build_terracini(p).matrix);
    emit(os.str(), wants_kernel ? kern_out : terr_out);
    return kExitOk;
  }

  if (dist->parsed()) {
    const Params a = params_from_factors(read_decomposition(dist_a));
    const Params b = params_from_factors(read_decomposition(dist_b));
    std::cout << distance_to_json(distance(a, b)).dump(2) << "\n";
    return kExitOk;
  }

  if (isl_cmd->parsed()) {
    const Params p = params_from_factors(read_decomposition(isl_input));
    const KernelBasis k = kernel_basis(p);
    Eigen::VectorXd direction;
    if (isl_dir.rfind("random:", 0) == 0) {
      SeededRng rng(std::stoull(isl_dir.substr(7)));
      Eigen::VectorXd coeffs(k.matrix.cols());
      for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = rng.normal();
      direction = k.matrix * coeffs;
    } else {
      const int index = std::stoi(isl_dir);
      if (index < 0 || index >= k.matrix.cols())
        throw ShapeError("isl: kernel basis column index out of range");
      direction = k.matrix.col(index);
    }
    direction *= isl_norm / direction.norm();
    const IslResult result = iterated_scaling(p, direction);
    if (!result.precondition_ok)
      std::cerr << "warning: perturbation exceeds the guaranteed-convergence bound\n";
    if (!isl_trace.empty()) {
      std::ofstream trace(isl_trace);
      if (!trace) throw std::runtime_error("cannot write " + isl_trace);
      trace << "iteration,nabla_norm\n";
      for (std::size_t i = 0; i < result.nabla_norms.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", result.nabla_norms[i]);
        trace << i << "," << buf << "\n";
      }
    }
    std::cout << isl_to_json(result).dump(2) << "\n";
    return kExitOk;
  }

  if (gevd->parsed()) {
    const DenseTensor t = read_tensor(gevd_input);
    const Params p = cpd_gevd(t, gevd_rank);
    emit(decomposition_to_string(factors_from_params(p)), gevd_out);
    return kExitOk;
  }

  if (krus->parsed()) {
    const Factors factors = read_decomposition(krus_input);
    std::cout << kruskal_to_json(kruskal_check(factors, krus_tol)).dump(2) << "\n";
    return kExitOk;
  }

  if (exp->parsed()) {
    const std::vector<ErrorRow> rows =
        run_experiment(exp_name, exp_seed, exp_smin, exp_smax, resolve_threads(exp_threads));
    std::ostringstream os;
    write_error_rows_csv(os, rows);
    emit(os.str(), exp_out);
    return kExitOk;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DecompositionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
