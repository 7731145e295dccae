#pragma once

// Line-delimited run histories and per-cycle aggregate tables.
//
// History file: first line is a header object {"kind": "header", ...} carrying
// the effective configuration; every following line is one record
//   {"run", "cycle", "x_new", "y_raw", "f_best", "correlation",
//    "t_model_ms", "t_solve_ms", "t_eval_ms"}
// with correlation null when undefined. Doubles are written in shortest
// round-trip form, so load -> write reproduces a file byte for byte.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kqa/optimizer.hpp"
#include "kqa/problem.hpp"

namespace kqa {

using ojson = nlohmann::ordered_json;

inline ojson config_to_json(const OptimizerConfig& c) {
  ojson j;
  j["n_init"] = c.n_init;
  j["n_cycles"] = c.n_cycles;
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["gamma"] = c.gamma;
  j["alpha_exp"] = c.alpha_exp ? ojson(*c.alpha_exp) : ojson(nullptr);
  if (const auto* s = std::get_if<SweepBudget>(&c.budget)) {
    j["budget_sweeps"] = s->sweeps;
  } else {
    j["budget_ms"] = std::get<TimeBudget>(c.budget).ms;
  }
  j["seed"] = c.seed;
  j["domain_wall_penalty_weight"] = c.domain_wall_penalty_weight ? ojson(*c.domain_wall_penalty_weight) : ojson("auto");
  j["n_restarts"] = c.n_restarts;
  j["pool_size"] = c.pool_size;
  return j;
}

struct HistoryRow {
  int run = 0;
  int cycle = 0;
  std::vector<double> x_new;
  double y_raw = 0.0;
  double f_best = 0.0;
  std::optional<double> correlation;
  double t_model_ms = 0.0;
  double t_solve_ms = 0.0;
  double t_eval_ms = 0.0;

  bool operator==(const HistoryRow&) const = default;
};

/// Timings are zeroed when `timings` is false so reruns compare bit-identical.
inline HistoryRow to_row(int run, const CycleRecord& r, bool timings = true) {
  HistoryRow h{run, r.cycle, r.x_new, r.y_new_raw, r.f_best_so_far, r.correlation, 0.0, 0.0, 0.0};
  if (timings) {
    h.t_model_ms = r.t_model_ms;
    h.t_solve_ms = r.t_solve_ms;
    h.t_eval_ms = r.t_eval_ms;
  }
  return h;
}

inline std::string row_line(const HistoryRow& h) {
  ojson j;
  j["run"] = h.run;
  j["cycle"] = h.cycle;
  j["x_new"] = h.x_new;
  j["y_raw"] = h.y_raw;
  j["f_best"] = h.f_best;
  j["correlation"] = h.correlation ? ojson(*h.correlation) : ojson(nullptr);
  j["t_model_ms"] = h.t_model_ms;
  j["t_solve_ms"] = h.t_solve_ms;
  j["t_eval_ms"] = h.t_eval_ms;
  return j.dump();
}

inline HistoryRow parse_row(const std::string& line) {
  const auto j = ojson::parse(line);
  HistoryRow h;
  h.run = j.at("run").get<int>();
  h.cycle = j.at("cycle").get<int>();
  h.x_new = j.at("x_new").get<std::vector<double>>();
  h.y_raw = j.at("y_raw").get<double>();
  h.f_best = j.at("f_best").get<double>();
  if (!j.at("correlation").is_null()) h.correlation = j.at("correlation").get<double>();
  h.t_model_ms = j.at("t_model_ms").get<double>();
  h.t_solve_ms = j.at("t_solve_ms").get<double>();
  h.t_eval_ms = j.at("t_eval_ms").get<double>();
  return h;
}

inline std::string header_line(ojson header) {
  ojson j;
  j["kind"] = "header";
  for (auto& [k, v] : header.items()) j[k] = v;
  return j.dump();
}

struct HistoryFile {
  ojson header;  // without the "kind" marker
  std::vector<HistoryRow> rows;
};

/// Appends lines to a history file as records arrive.
class HistoryWriter {
 public:
  HistoryWriter(const std::string& path, const ojson& header) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open history file " + path);
    out_ << header_line(header) << '\n';
    out_.flush();
  }
  void append(const HistoryRow& r) {
    out_ << row_line(r) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("write to history file failed");
  }

 private:
  std::ofstream out_;
};

inline std::string serialize_history(const HistoryFile& f) {
  std::string s = header_line(f.header) + '\n';
  for (const auto& r : f.rows) s += row_line(r) + '\n';
  return s;
}

inline HistoryFile parse_history(std::istream& in) {
  HistoryFile f;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      if (first) {
        auto h = ojson::parse(line);
        if (h.value("kind", std::string{}) != "header") throw std::invalid_argument("missing header line");
        h.erase("kind");
        f.header = std::move(h);
        first = false;
      } else {
        f.rows.push_back(parse_row(line));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("history line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (first) throw std::runtime_error("history file is empty");
  return f;
}

inline HistoryFile load_history(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open history file " + path);
  return parse_history(in);
}

struct AggregateRow {
  int cycle = 0;
  std::size_t n_runs = 0;
  double f_best_mean = 0.0;
  double f_best_std = 0.0;  // population convention: divide by n_runs
  double t_model_ms_mean = 0.0;
  double t_solve_ms_mean = 0.0;
  double t_eval_ms_mean = 0.0;
};

/// Per-cycle statistics over the runs that reached each cycle.
inline std::vector<AggregateRow> aggregate(const std::vector<std::vector<HistoryRow>>& runs) {
  struct Acc {
    std::vector<double> f;
    double tm = 0, ts = 0, te = 0;
  };
  std::map<int, Acc> by_cycle;
  for (const auto& run : runs)
    for (const auto& r : run) {
      auto& a = by_cycle[r.cycle];
      a.f.push_back(r.f_best);
      a.tm += r.t_model_ms;
      a.ts += r.t_solve_ms;
      a.te += r.t_eval_ms;
    }
  std::vector<AggregateRow> out;
  for (const auto& [cycle, a] : by_cycle) {
    const double n = static_cast<double>(a.f.size());
    double mean = 0.0;
    for (double v : a.f) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : a.f) var += (v - mean) * (v - mean);
    var /= n;
    out.push_back({cycle, a.f.size(), mean, std::sqrt(var), a.tm / n, a.ts / n, a.te / n});
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows, const ojson& config) {
  std::ostringstream o;
  o << "# per-cycle f_best statistics across repeats\n";
  o << "# f_best_std uses the population convention (sum of squared deviations / n_runs)\n";
  o << "# config: " << config.dump() << '\n';
  o << "cycle,n_runs,f_best_mean,f_best_std,t_model_ms_mean,t_solve_ms_mean,t_eval_ms_mean\n";
  for (const auto& r : rows)
    o << r.cycle << ',' << r.n_runs << ',' << fmt_double(r.f_best_mean) << ',' << fmt_double(r.f_best_std) << ','
      << fmt_double(r.t_model_ms_mean) << ',' << fmt_double(r.t_solve_ms_mean) << ',' << fmt_double(r.t_eval_ms_mean)
      << '\n';
  return o.str();
}

/// Parses the data rows of an aggregate file, skipping comments and the column header.
inline std::vector<AggregateRow> parse_aggregate_csv(std::istream& in) {
  std::vector<AggregateRow> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("aggregate row has " + std::to_string(cells.size()) + " columns");
    out.push_back({std::stoi(cells[0]), std::stoul(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                   std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6])});
  }
  return out;
}

}  // namespace kqa
