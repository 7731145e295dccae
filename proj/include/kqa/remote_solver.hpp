#pragma once

// Client for an external QUBO solving service.
//
// Wire format (HTTP POST <endpoint>/solve, application/json):
//   request  {"dim": int, "terms": [[i, j, value], ...], "linear": [value, ...],
//             "timeout_ms": int, "seed": int}
//            terms are upper-triangular (i <= j), sorted by (i, j); the value is
//            Q_ii on the diagonal and 2 Q_ij off it, i.e. the weight on x_i x_j.
//            Exact zeros are omitted. The model constant is never sent.
//   response {"solution": [0|1, ...], "energy": number}
//
// The returned energy is re-checked locally; a mismatch above 1e-6 is an
// integrity error.

// Eigen goes in before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "kqa/qubo.hpp"
#include "kqa/solver.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kqa {

class RemoteSolverError : public std::runtime_error {
 public:
  enum class Kind { transport, timeout, malformed, integrity };
  RemoteSolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct WireRequest {
  QuboModel model;
  std::int64_t timeout_ms = 0;
  std::uint64_t seed = 0;
};

inline nlohmann::json to_wire(const QuboModel& m, std::int64_t timeout_ms, std::uint64_t seed) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : upper_triangular_terms(m)) terms.push_back({t.i, t.j, t.value});
  std::vector<double> linear(m.linear().data(), m.linear().data() + m.linear().size());
  return {{"dim", m.dim()}, {"terms", std::move(terms)}, {"linear", std::move(linear)}, {"timeout_ms", timeout_ms},
          {"seed", seed}};
}

/// Server-side parse of a request body. Throws std::invalid_argument on bad input.
inline WireRequest parse_wire_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<QuboTerm> terms;
    for (const auto& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 3) throw std::invalid_argument("term must be [i, j, value]");
      terms.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<double>()});
    }
    const auto linear = j.at("linear").get<std::vector<double>>();
    WireRequest r{from_upper_triangular(dim, terms, linear), j.value("timeout_ms", std::int64_t{0}),
                  j.value("seed", std::uint64_t{0})};
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed solve request: ") + e.what());
  }
}

inline std::string wire_response(const Bits& solution, double energy) {
  std::vector<int> sol(solution.begin(), solution.end());
  return nlohmann::json{{"solution", sol}, {"energy", energy}}.dump();
}

struct RemoteOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8080"
  int retries = 3;       // attempts on transport failure
  std::int64_t default_timeout_ms = 5000;
  double energy_tolerance = 1e-6;
};

inline SolveResult solve_remote(const SolveRequest& req, const RemoteOptions& opt) {
  const QuboModel model = req.model.without_constant();
  std::int64_t timeout_ms = opt.default_timeout_ms;
  if (const auto* t = std::get_if<TimeBudget>(&req.budget)) timeout_ms = std::max<std::int64_t>(1, std::llround(t->ms));
  const std::string body = to_wire(model, timeout_ms, req.seed).dump();

  const auto t0 = std::chrono::steady_clock::now();
  httplib::Client cli(opt.endpoint);
  const auto wait = std::chrono::milliseconds(timeout_ms + 2000);
  cli.set_connection_timeout(std::chrono::seconds(2));
  cli.set_read_timeout(wait);
  cli.set_write_timeout(wait);

  const int attempts = std::max(opt.retries, 1);
  httplib::Result res;
  httplib::Error last = httplib::Error::Success;
  for (int a = 0; a < attempts; ++a) {
    res = cli.Post("/solve", body, "application/json");
    if (res) break;
    last = res.error();
    // The request reached the server; resubmitting would rerun the solve.
    if (last == httplib::Error::Read)
      throw RemoteSolverError(RemoteSolverError::Kind::timeout,
                              "remote solver at " + opt.endpoint + " timed out waiting for a response");
  }
  if (!res)
    throw RemoteSolverError(RemoteSolverError::Kind::transport,
                            "remote solver at " + opt.endpoint + " unreachable after " + std::to_string(attempts) +
                                " attempts (" + httplib::to_string(last) + ")");
  if (res->status != 200)
    throw RemoteSolverError(RemoteSolverError::Kind::transport,
                            "remote solver returned HTTP " + std::to_string(res->status) + ": " + res->body);

  Bits x;
  double remote_energy = 0.0;
  try {
    const auto j = nlohmann::json::parse(res->body);
    for (const auto& v : j.at("solution")) {
      const int b = v.get<int>();
      if (b != 0 && b != 1) throw std::invalid_argument("solution entries must be 0 or 1");
      x.push_back(static_cast<std::uint8_t>(b));
    }
    remote_energy = j.at("energy").get<double>();
  } catch (const std::exception& e) {
    throw RemoteSolverError(RemoteSolverError::Kind::malformed, std::string("malformed solver response: ") + e.what());
  }
  if (x.size() != model.dim())
    throw RemoteSolverError(RemoteSolverError::Kind::malformed,
                            "solution has " + std::to_string(x.size()) + " entries, expected " + std::to_string(model.dim()));

  const double local = evaluate(model, x);
  if (!(std::abs(local - remote_energy) <= opt.energy_tolerance))
    throw RemoteSolverError(RemoteSolverError::Kind::integrity, "reported energy " + std::to_string(remote_energy) +
                                                                    " differs from local evaluation " + std::to_string(local));

  SolveResult r;
  r.best_x = x;
  r.best_energy = evaluate(req.model, x);
  r.pool.push_back({x, r.best_energy});
  r.stats.restarts = 1;
  r.stats.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

class RemoteSolver final : public QuboSolver {
 public:
  explicit RemoteSolver(RemoteOptions opt) : opt_(std::move(opt)) {}
  SolveResult solve(const SolveRequest& req) override { return solve_remote(req, opt_); }
  std::string name() const override { return "remote:" + opt_.endpoint; }

 private:
  RemoteOptions opt_;
};

}  // namespace kqa
