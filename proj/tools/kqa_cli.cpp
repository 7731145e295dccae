// kqa: batch runner for kernel-QA experiments.
//
//   kqa run          --preset b40 --function rastrigin --cycles 200 --repeats 5 --out out/
//   kqa sweep        --param beta --values 0,0.0001,0.001,0.01 --preset r5 --out out/
//   kqa oracle-check
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error. Errors are also printed
// to stderr as one JSON object {"error": "usage"|"runtime", "message": ...}.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kqa/experiment.hpp"
#include "kqa/oracle.hpp"

namespace {

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

int report(const char* kind, const std::string& msg, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", msg}}.dump() << '\n';
  return code;
}

void add_manifest_options(CLI::App* cmd, kqa::Manifest& m, std::string& out, std::optional<std::uint64_t>& sweeps,
                          std::optional<double>& ms, bool& no_transform, bool& no_timings) {
  cmd->add_option("--preset", m.preset, "assessment preset (r5n r5 r10 r20 r40 r80 b40 b80 b160 b320 b640)");
  cmd->add_option("--function", m.function, "landscape: rosenbrock | rastrigin");
  cmd->add_option("--cycles", m.cycles, "optimization cycles (default: preset value)");
  cmd->add_option("--repeats", m.repeats, "independent repeats")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", m.seed, "base seed; repeat r uses seed + r");
  cmd->add_option("--solver", m.solver, "sa | exhaustive | remote:<url> | remote (endpoint from KQA_REMOTE_ENDPOINT)");
  auto* bs = cmd->add_option("--budget-sweeps", sweeps, "annealing sweeps per cycle (default 1000)");
  auto* bm = cmd->add_option("--budget-ms", ms, "annealing wall-clock budget per cycle in milliseconds");
  bs->excludes(bm);
  cmd->add_option("--beta", m.beta, "weight of the spread term in the acquisition");
  cmd->add_option("--alpha-exp", m.alpha_exp, "output transform scale");
  cmd->add_flag("--no-transform", no_transform, "disable the output transform");
  cmd->add_option("--n-init", m.n_init, "initial random samples (default: preset value)");
  cmd->add_option("--lambda", m.lambda, "ridge regularization");
  cmd->add_option("--gamma", m.gamma, "kernel offset");
  cmd->add_option("--penalty-weight", m.penalty_weight, "domain-wall penalty weight (default: auto)");
  cmd->add_option("--restarts", m.n_restarts, "annealing restarts per cycle");
  cmd->add_option("--pool-size", m.pool_size, "candidate pool size");
  cmd->add_flag("--fixed-flip-mask", m.fixed_flip_mask, "use one flip mask for all repeats");
  cmd->add_flag("--no-timings", no_timings, "write zero timings so reruns are byte-identical");
  cmd->add_flag("--debug-checks", m.debug_checks, "verify surrogate and solver invariants every cycle");
  cmd->add_option("--jobs", m.jobs, "parallel repeats (default: hardware threads)");
  cmd->add_option("--out", out, "output directory")->required();
}

void print_outcome(const kqa::ExperimentOutcome& e) {
  for (std::size_t r = 0; r < e.histories.size(); ++r)
    std::cout << "run " << r << ": f_best " << kqa::fmt_double(e.histories[r].best_y) << "  -> "
              << e.history_paths[r].string() << '\n';
  std::cout << "aggregate -> " << e.aggregate_path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kqa: kernel-QA black-box optimization runner"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML/INI file (command-line flags take precedence)");

  kqa::Manifest m;
  std::string out;
  std::optional<std::uint64_t> sweeps;
  std::optional<double> ms;
  bool no_transform = false, no_timings = false;

  auto* run_cmd = app.add_subcommand("run", "run repeated optimizations and write histories plus an aggregate");
  add_manifest_options(run_cmd, m, out, sweeps, ms, no_transform, no_timings);

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat `run` for each value of one parameter");
  add_manifest_options(sweep_cmd, m, out, sweeps, ms, no_transform, no_timings);
  std::string param;
  std::vector<double> values;
  sweep_cmd->add_option("--param", param, "beta | alpha_exp | n_init")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  auto* oracle_cmd = app.add_subcommand("oracle-check", "run the built-in consistency checks");
  kqa::OracleOptions oo;
  oracle_cmd->add_option("--seed", oo.seed, "seed for the generated test instances");
  oracle_cmd->add_option("--sa-sweeps", oo.sa_sweeps, "annealing sweeps for the solver check");
  oracle_cmd->add_flag("--corrupt-L-mu", oo.corrupt_L_mu, "perturb one inverse entry (self-test of the checker)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kUsage);
  }

  m.budget_sweeps = sweeps;
  m.budget_ms = ms;
  m.transform = !no_transform;
  m.timings = !no_timings;

  try {
    if (*oracle_cmd) {
      bool all = true;
      for (const auto& r : kqa::run_oracles(oo)) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        all = all && r.pass;
      }
      return all ? kOk : kRuntime;
    }
    if (*run_cmd) {
      const auto e = kqa::run_experiment(m, out);
      print_outcome(e);
      for (const auto& f : e.failures) report("runtime", f, kRuntime);
      return e.ok() ? kOk : kRuntime;
    }
    const auto s = kqa::run_sweep(m, param, values, out);
    for (const auto& e : s.per_value) {
      print_outcome(e);
      for (const auto& f : e.failures) report("runtime", f, kRuntime);
    }
    std::cout << "comparison table -> " << s.table_path.string() << '\n';
    return s.ok() ? kOk : kRuntime;
  } catch (const kqa::UsageError& e) {
    return report("usage", e.what(), kUsage);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), kRuntime);
  }
}
