#pragma once

// Batch experiments: resolve a manifest into per-repeat runs, execute them on
// a worker pool and write histories plus aggregates from a single collector.
//
// Output layout for `run_experiment(m, dir)`:
//   dir/history_run<r>.jsonl   one per repeat
//   dir/aggregate.csv          per-cycle mean/std of f_best and mean timings
// `run_sweep` writes one such directory per value (dir/<param>=<value>/) and
// a combined table dir/sweep_<param>.csv keyed by (param, value, cycle).

#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "kqa/benchmarks.hpp"
#include "kqa/history.hpp"
#include "kqa/optimizer.hpp"
#include "kqa/remote_solver.hpp"
#include "kqa/solver.hpp"

namespace kqa {

/// A manifest the caller got wrong (bad flag values, unknown preset). Maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kRemoteEndpointEnv = "KQA_REMOTE_ENDPOINT";

struct Manifest {
  std::string preset = "b40";
  std::string function = "rastrigin";
  std::optional<int> cycles;  // default: the preset's
  std::optional<int> n_init;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string solver = "sa";  // sa | exhaustive | remote | remote:<endpoint>
  std::optional<std::uint64_t> budget_sweeps;
  std::optional<double> budget_ms;
  double beta = 0.0;
  double alpha_exp = 1.0;
  bool transform = true;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> penalty_weight;
  int n_restarts = 4;
  int pool_size = 10;
  bool fixed_flip_mask = false;  // one mask for all repeats instead of one per repeat
  bool timings = true;           // false writes zero timings (byte-stable reruns)
  bool debug_checks = false;
  int jobs = 0;  // 0: hardware concurrency
};

struct ResolvedRun {
  int run = 0;
  VariableSpace space;
  OptimizerConfig config;
  BlackBox black_box;
  ojson header;
};

inline ResolvedRun resolve_run(const Manifest& m, int run) {
  if (m.repeats < 1) throw UsageError("repeats must be at least 1");
  if (m.budget_sweeps && m.budget_ms) throw UsageError("give either a sweep budget or a time budget, not both");
  Preset p;
  Landscape land;
  try {
    p = preset(m.preset);
    land = parse_landscape(m.function);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (land == Landscape::rosenbrock && p.space.size() < 2) throw UsageError("rosenbrock needs at least 2 variables");

  OptimizerConfig cfg = p.config;
  if (m.cycles) cfg.n_cycles = *m.cycles;
  if (m.n_init) cfg.n_init = *m.n_init;
  cfg.beta = m.beta;
  cfg.alpha_exp = m.transform ? std::optional<double>(m.alpha_exp) : std::nullopt;
  if (m.lambda) cfg.lambda = *m.lambda;
  if (m.gamma) cfg.gamma = *m.gamma;
  cfg.domain_wall_penalty_weight = m.penalty_weight;
  cfg.n_restarts = m.n_restarts;
  cfg.pool_size = m.pool_size;
  cfg.debug_checks = m.debug_checks;
  if (m.budget_ms) {
    cfg.budget = TimeBudget{*m.budget_ms};
  } else {
    cfg.budget = SweepBudget{m.budget_sweeps.value_or(1000)};
  }
  cfg.seed = m.seed + static_cast<std::uint64_t>(run);
  try {
    cfg = validate_config(cfg, p.space);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  ResolvedRun r;
  r.run = run;
  r.space = p.space;
  r.config = cfg;
  ojson h;
  h["run"] = run;
  h["preset"] = p.name;
  h["function"] = to_string(land);
  h["solver"] = m.solver;
  h["dim"] = p.space.size();
  h["bits"] = p.space.total_bits;
  if (p.binary) {
    const std::uint64_t mask_seed = derive_seed(m.fixed_flip_mask ? m.seed : cfg.seed, 0xf11b);
    const FlipMask mask = make_flip_mask(p.space.size(), mask_seed);
    r.black_box = make_flipped(land, mask);
    h["flip_mask"] = mask.indices;
    h["flip_mask_fixed"] = m.fixed_flip_mask;
  } else {
    h["n_bins"] = p.space.vars.front().n_bins;
    h["lower"] = p.space.vars.front().lower;
    h["upper"] = p.space.vars.front().upper;
    r.black_box = [land](std::span<const double> x) { return evaluate_landscape(land, x); };
  }
  h["timings"] = m.timings;
  h["config"] = config_to_json(cfg);
  r.header = std::move(h);
  return r;
}

inline std::unique_ptr<QuboSolver> make_solver(const std::string& spec) {
  if (spec == "sa") return std::make_unique<SimulatedAnnealingSolver>();
  if (spec == "exhaustive") return std::make_unique<ExhaustiveSolver>();
  if (spec == "remote" || spec.rfind("remote:", 0) == 0) {
    RemoteOptions o;
    if (spec.size() > 7) {
      o.endpoint = spec.substr(7);
    } else if (const char* env = std::getenv(kRemoteEndpointEnv)) {
      o.endpoint = env;
    }
    if (o.endpoint.empty())
      throw UsageError(std::string("remote solver needs an endpoint (remote:<url> or ") + kRemoteEndpointEnv + ")");
    return std::make_unique<RemoteSolver>(o);
  }
  throw UsageError("unknown solver '" + spec + "' (expected sa, exhaustive or remote:<url>)");
}

struct ExperimentOutcome {
  std::vector<std::filesystem::path> history_paths;
  std::filesystem::path aggregate_path;
  std::vector<std::vector<HistoryRow>> rows;  // per repeat, in cycle order
  std::vector<RunHistory> histories;
  std::vector<std::string> failures;  // one message per failed repeat

  bool ok() const { return failures.empty(); }
};

namespace detail {

// Messages from workers to the collector.
struct RowMsg {
  int run;
  HistoryRow row;
};
struct DoneMsg {
  int run;
  RunHistory history;
  std::string error;  // non-empty: the run threw
};
using Msg = std::variant<RowMsg, DoneMsg>;

class MsgQueue {
 public:
  void push(Msg m) {
    {
      std::lock_guard lk(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  Msg pop() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty(); });
    Msg m = std::move(q_.front());
    q_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Msg> q_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace detail

inline ExperimentOutcome run_experiment(const Manifest& m, const std::filesystem::path& out_dir) {
  std::vector<ResolvedRun> runs;
  for (int r = 0; r < m.repeats; ++r) runs.push_back(resolve_run(m, r));
  (void)make_solver(m.solver);  // surface solver usage errors before any work

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  ExperimentOutcome out;
  std::vector<std::unique_ptr<HistoryWriter>> writers;
  for (const auto& r : runs) {
    out.history_paths.push_back(out_dir / ("history_run" + std::to_string(r.run) + ".jsonl"));
    writers.push_back(std::make_unique<HistoryWriter>(out.history_paths.back().string(), r.header));
  }
  out.rows.resize(runs.size());
  out.histories.resize(runs.size());

  detail::MsgQueue queue;
  std::mutex next_mu;
  std::size_t next = 0;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(runs.size(), m.jobs > 0 ? static_cast<std::size_t>(m.jobs) : hw);

  auto worker = [&] {
    auto solver = make_solver(m.solver);
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lk(next_mu);
        if (next >= runs.size()) return;
        i = next++;
      }
      const auto& r = runs[i];
      detail::DoneMsg done{r.run, {}, {}};
      try {
        done.history = run(r.black_box, r.space, r.config, *solver, [&](const CycleRecord& rec) {
          queue.push(detail::RowMsg{r.run, to_row(r.run, rec, m.timings)});
        });
      } catch (const std::exception& e) {
        done.error = e.what();
      }
      queue.push(std::move(done));
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  std::string io_error;
  for (std::size_t remaining = runs.size(); remaining > 0;) {
    detail::Msg msg = queue.pop();
    if (auto* rm = std::get_if<detail::RowMsg>(&msg)) {
      const auto i = static_cast<std::size_t>(rm->run);
      try {
        if (io_error.empty()) writers[i]->append(rm->row);
      } catch (const std::exception& e) {
        io_error = e.what();
      }
      out.rows[i].push_back(std::move(rm->row));
    } else {
      auto& d = std::get<detail::DoneMsg>(msg);
      const auto i = static_cast<std::size_t>(d.run);
      if (!d.error.empty()) {
        out.failures.push_back("run " + std::to_string(d.run) + ": " + d.error);
      } else if (d.history.failure) {
        out.failures.push_back("run " + std::to_string(d.run) + ": " + *d.history.failure);
      }
      out.histories[i] = std::move(d.history);
      --remaining;
    }
  }
  for (auto& t : pool) t.join();
  writers.clear();
  if (!io_error.empty()) throw std::runtime_error(io_error);

  ojson agg_header = runs.front().header;
  agg_header.erase("run");
  agg_header["repeats"] = m.repeats;
  agg_header["seed"] = m.seed;
  out.aggregate_path = out_dir / "aggregate.csv";
  detail::write_file(out.aggregate_path, aggregate_csv(aggregate(out.rows), agg_header));
  return out;
}

enum class SweepParam { beta, alpha_exp, n_init };

inline SweepParam parse_sweep_param(const std::string& s) {
  if (s == "beta") return SweepParam::beta;
  if (s == "alpha_exp") return SweepParam::alpha_exp;
  if (s == "n_init") return SweepParam::n_init;
  throw UsageError("unknown sweep parameter '" + s + "' (expected beta, alpha_exp or n_init)");
}

struct SweepOutcome {
  std::vector<ExperimentOutcome> per_value;
  std::filesystem::path table_path;
  bool ok() const {
    for (const auto& e : per_value)
      if (!e.ok()) return false;
    return true;
  }
};

inline SweepOutcome run_sweep(const Manifest& base, const std::string& param, const std::vector<double>& values,
                              const std::filesystem::path& out_dir) {
  const SweepParam p = parse_sweep_param(param);
  if (values.empty()) throw UsageError("sweep needs at least one value");
  std::vector<Manifest> manifests;
  for (double v : values) {
    Manifest m = base;
    switch (p) {
      case SweepParam::beta: m.beta = v; break;
      case SweepParam::alpha_exp:
        m.alpha_exp = v;
        m.transform = true;
        break;
      case SweepParam::n_init:
        if (v != std::floor(v) || v < 1) throw UsageError("n_init values must be positive integers");
        m.n_init = static_cast<int>(v);
        break;
    }
    for (int r = 0; r < m.repeats; ++r) (void)resolve_run(m, r);  // validate everything up front
    manifests.push_back(std::move(m));
  }

  SweepOutcome out;
  std::ostringstream table;
  table << "# f_best statistics per sweep value; std uses the population convention\n";
  table << "param,value,cycle,n_runs,f_best_mean,f_best_std\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    const std::string label = param + "=" + fmt_double(values[k]);
    out.per_value.push_back(run_experiment(manifests[k], out_dir / label));
    for (const auto& a : aggregate(out.per_value.back().rows))
      table << param << ',' << fmt_double(values[k]) << ',' << a.cycle << ',' << a.n_runs << ','
            << fmt_double(a.f_best_mean) << ',' << fmt_double(a.f_best_std) << '\n';
  }
  out.table_path = out_dir / ("sweep_" + param + ".csv");
  detail::write_file(out.table_path, table.str());
  return out;
}

}  // namespace kqa
