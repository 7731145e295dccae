// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// all pass. Reference values are computed here independently of the library
// (explicit Gram loops, plain enumeration), and each criterion also has to
// finish within its runtime limit.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kqa/benchmarks.hpp"
#include "kqa/encoding.hpp"
#include "kqa/experiment.hpp"
#include "kqa/kernel_surrogate.hpp"
#include "kqa/optimizer.hpp"
#include "kqa/solver.hpp"
#include "kqa/transform.hpp"

namespace fs = std::filesystem;
using namespace kqa;

namespace {

// Settings shared by the optimization criteria. Chosen once, not tuned per seed.
constexpr std::uint64_t kSeed = 1;
constexpr std::uint64_t kSweeps = 4000;

struct Verdict {
  bool pass;
  std::string detail;
};

Bits rbits(std::size_t d, Rng& rng) {
  Bits b(d);
  for (auto& v : b) v = coin(rng);
  return b;
}

double dot(const Bits& a, const Bits& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Eigen::MatrixXd gram(const std::vector<Bits>& X, double gamma, double lambda, bool quadratic) {
  const auto n = static_cast<Eigen::Index>(X.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double t = dot(X[i], X[j]) + gamma;
      K(i, j) = (quadratic ? t * t : t) + (i == j ? lambda : 0.0);
    }
  return K;
}

double plain_energy(const QuboModel& m, const Bits& x) {
  double e = m.constant();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    e += m.linear()(i);
    for (std::size_t j = 0; j < x.size(); ++j) e += m.quadratic()(i, j) * x[j];
  }
  return e;
}

QuboModel random_model(std::size_t d, Rng& rng) {
  Eigen::MatrixXd Q(d, d);
  Eigen::VectorXd q(d);
  for (std::size_t i = 0; i < d; ++i) {
    q(i) = uniform_real(rng, -1, 1);
    for (std::size_t j = 0; j <= i; ++j) Q(i, j) = Q(j, i) = uniform_real(rng, -1, 1);
  }
  return QuboModel(Q, q);
}

double enumerate_min(const QuboModel& m, Bits* arg = nullptr) {
  const std::size_t n = m.dim();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t v = 0; v < (1ull << n); ++v) {
    Bits x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (v >> i) & 1u;
    const double e = plain_energy(m, x);
    if (e < best) {
      best = e;
      if (arg) *arg = x;
    }
  }
  return best;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v) {
  std::ostringstream o;
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << v[i];
  return o.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("kqa_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------

Verdict c1_incremental_inverse() {
  Rng rng(101);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 59), d = 1 + uniform_index(rng, 100);
    const double gamma = t % 2 ? 1.0 : 0.0, lambda = (t / 2) % 2 ? 1e-3 : 1.0;
    std::vector<Bits> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      X.push_back(rbits(d, rng));
      y.push_back(uniform_real(rng, -5, 5));
    }
    auto s = SurrogateState::fit_initial({X[0]}, std::span(y).first(1), {gamma, lambda});
    for (std::size_t i = 1; i < n; ++i) s.append_sample(X[i], y[i]);
    const Eigen::MatrixXd Lm = gram(X, gamma, lambda, true).fullPivLu().inverse();
    const Eigen::MatrixXd Ls = gram(X, gamma, lambda, false).fullPivLu().inverse();
    worst = std::max({worst, (s.L_mu() - Lm).cwiseAbs().maxCoeff(), (s.L_sigma() - Ls).cwiseAbs().maxCoeff()});
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "100 datasets, max |L_inc - L_direct| = %.3g (tol 1e-8)", worst);
  return {worst <= 1e-8, buf};
}

Verdict c2_mean_qubo() {
  Rng rng(202);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 30), d = 1 + uniform_index(rng, 40);
    const double gamma = t % 2 ? 1.0 : 0.0;
    std::vector<Bits> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      X.push_back(rbits(d, rng));
      y.push_back(uniform_real(rng, -5, 5));
    }
    const auto s = SurrogateState::fit_initial(X, y, {gamma, 1.0});
    const Eigen::VectorXd c =
        gram(X, gamma, 1.0, true).fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()));
    const auto m = s.assemble_mu().without_constant();
    for (int k = 0; k < 20; ++k) {
      const Bits x = rbits(d, rng);
      double f = 0, dropped = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double t2 = dot(X[j], x) + gamma;
        f += c(j) * t2 * t2;
        dropped += c(j) * gamma * gamma;
      }
      worst = std::max(worst, std::abs(plain_energy(m, x) - (f - dropped)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "50 states x 20 points, max deviation %.3g (tol 1e-8)", worst);
  return {worst <= 1e-8, buf};
}

Verdict c3_spread_qubo() {
  Rng rng(303);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 30), d = 1 + uniform_index(rng, 40);
    const double gamma = t % 2 ? 1.0 : 0.0;
    std::vector<Bits> X;
    for (std::size_t i = 0; i < n; ++i) X.push_back(rbits(d, rng));
    const auto s = SurrogateState::fit_initial(X, std::vector<double>(n, 1.0), {gamma, 1.0});
    const Eigen::MatrixXd Ls = gram(X, gamma, 1.0, false).fullPivLu().inverse();
    const auto m = s.assemble_sigma().without_constant();
    for (int k = 0; k < 20; ++k) {
      const Bits x = rbits(d, rng);
      Eigen::VectorXd kv(n);
      for (std::size_t j = 0; j < n; ++j) kv(j) = dot(X[j], x) + gamma;
      const double radicand = dot(x, x) + gamma - kv.dot(Ls * kv);
      worst = std::max(worst, std::abs(plain_energy(m, x) + s.c_sigma() - radicand));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "50 states x 20 points, max deviation %.3g (tol 1e-9)", worst);
  return {worst <= 1e-9, buf};
}

Verdict c4_solver() {
  Rng rng(404);
  int sa_hits = 0;
  for (int t = 0; t < 200; ++t) {
    SolveRequest r;
    r.model = random_model(16, rng);
    r.budget = SweepBudget{10000};
    r.seed = rng();
    const double exact = solve_exhaustive(r).best_energy;
    sa_hits += solve_sa(r).best_energy <= exact + 1e-9;
  }
  int ex_hits = 0;
  for (int t = 0; t < 50; ++t) {
    SolveRequest r;
    r.model = random_model(4 + uniform_index(rng, 13), rng);
    Bits arg;
    const double e = enumerate_min(r.model, &arg);
    const auto got = solve_exhaustive(r);
    ex_hits += std::abs(got.best_energy - e) <= 1e-12 && got.best_x == arg;
  }
  const double rate = sa_hits / 200.0;
  char buf[200];
  std::snprintf(buf, sizeof buf, "SA matched exhaustive on %d/200 (%.1f%%, need >= 95%%); exhaustive matched enumeration %d/50",
                sa_hits, 100 * rate, ex_hits);
  return {rate >= 0.95 && ex_hits == 50, buf};
}

Verdict c5_encoding() {
  Rng rng(505);
  std::size_t grid_fail = 0, err_fail = 0, decode_fail = 0;
  double worst_ratio = 0;
  for (const char* name : {"r5", "r5n"}) {
    const auto p = preset(name);
    const SpaceCodec c(p.space);
    const std::size_t bins = p.space.vars[0].n_bins;
    const double step = 6.0 / static_cast<double>(bins - 1);
    for (std::size_t i = 0; i < bins; ++i) {
      const double g = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(bins - 1);
      std::vector<double> x(5, g);
      const auto back = c.decode(c.encode(x));
      for (double v : back) grid_fail += std::abs(v - g) > 1e-12;
    }
    for (int k = 0; k < 10000; ++k) {
      std::vector<double> x(5);
      for (auto& v : x) v = uniform_real(rng, -3, 3);
      const auto back = c.decode(c.encode(x));
      for (std::size_t v = 0; v < 5; ++v) {
        const double ratio = std::abs(back[v] - x[v]) / (step / 2);
        worst_ratio = std::max(worst_ratio, ratio);
        err_fail += ratio > 1.0 + 1e-9;
      }
    }
    for (int k = 0; k < 1000; ++k) {
      try {
        for (double v : c.decode(rbits(p.space.total_bits, rng))) decode_fail += !(v >= -3 && v <= 3);
      } catch (...) {
        ++decode_fail;
      }
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "grid mismatches %zu, max |err|/(step/2) = %.6f over 2x10^4 points, invalid-wall decode failures %zu",
                grid_fail, worst_ratio, decode_fail);
  return {grid_fail == 0 && err_fail == 0 && decode_fail == 0, buf};
}

Manifest b40_manifest(double alpha) {
  Manifest m;
  m.preset = "b40";
  m.function = "rastrigin";
  m.cycles = 200;
  m.repeats = 5;
  m.seed = kSeed;
  m.budget_sweeps = kSweeps;
  m.alpha_exp = alpha;
  m.timings = false;
  return m;
}

std::vector<double> final_bests(const ExperimentOutcome& e) {
  std::vector<double> v;
  for (const auto& h : e.histories) v.push_back(h.best_y);
  return v;
}

bool b40_verdict(const std::vector<double>& finals) {
  return median(finals) <= 1.0 && *std::max_element(finals.begin(), finals.end()) <= 5.0;
}

std::vector<double> c6_finals;

Verdict c6_b40() {
  const auto e = run_experiment(b40_manifest(1.0), scratch("c6"));
  if (!e.ok()) return {false, "run failed: " + e.failures.front()};
  c6_finals = final_bests(e);
  const bool pass = b40_verdict(c6_finals);
  return {pass, "final f_best [" + join(c6_finals) + "], median " + std::to_string(median(c6_finals)) +
                    " (need <= 1.0), max <= 5.0"};
}

Verdict c7_r5() {
  Manifest m;
  m.preset = "r5";
  m.function = "rastrigin";
  m.cycles = 300;
  m.repeats = 5;
  m.seed = kSeed;
  m.budget_sweeps = kSweeps;
  m.timings = false;
  const auto e = run_experiment(m, scratch("c7"));
  if (!e.ok()) return {false, "run failed: " + e.failures.front()};
  const auto finals = final_bests(e);
  bool improved = true;
  std::vector<double> at0;
  for (const auto& h : e.histories) {
    // Cycle 0 is the state after initial sampling: the last initial record.
    double f0 = 0;
    for (const auto& r : h.records)
      if (r.cycle < 0) f0 = r.f_best_so_far;
    at0.push_back(f0);
    improved = improved && h.records.back().cycle == 300 && h.records.back().f_best_so_far < f0;
  }
  const bool pass = median(finals) <= 5.0 && improved;
  return {pass, "final f_best [" + join(finals) + "], median " + std::to_string(median(finals)) +
                    " (need <= 5.0); f_best at cycle 0 [" + join(at0) + "], improved in every run: " +
                    (improved ? "yes" : "no")};
}

Verdict c8_transform() {
  Rng rng(808);
  int mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n_init = 2 + uniform_index(rng, 20), n = 2 + uniform_index(rng, 50);
    const double lo = uniform_real(rng, -100, 100), span = std::pow(10.0, uniform_real(rng, -2, 3));
    std::vector<double> y_init(n_init), y(n);
    for (auto& v : y_init) v = lo + span * uniform01(rng);
    for (auto& v : y) v = lo + span * uniform_real(rng, -0.5, 1.5);
    const double alpha = std::pow(10.0, uniform_real(rng, -1, 1));
    const auto tf = fit_transform(y_init, alpha);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = tf.apply(y[i]);
    const auto a = std::min_element(y.begin(), y.end()) - y.begin();
    const auto b = std::min_element(z.begin(), z.end()) - z.begin();
    mismatches += a != b;
  }
  std::vector<std::string> alpha_notes;
  bool same = true;
  const bool ref = b40_verdict(c6_finals);
  for (double alpha : {0.5, 2.0}) {
    const auto e = run_experiment(b40_manifest(alpha), scratch("c8"));
    const auto f = final_bests(e);
    const bool v = e.ok() && b40_verdict(f);
    same = same && v == ref;
    alpha_notes.push_back("alpha=" + std::to_string(alpha).substr(0, 3) + " [" + join(f) + "] " + (v ? "pass" : "fail"));
  }
  std::string detail = "argmin mismatches " + std::to_string(mismatches) + "/10000; criterion-6 verdict alpha=1.0 " +
                       (ref ? "pass" : "fail");
  for (const auto& s : alpha_notes) detail += ", " + s;
  return {mismatches == 0 && same, detail};
}

Verdict c9_reproducible() {
  Manifest m = b40_manifest(1.0);
  m.repeats = 1;
  const auto d1 = scratch("c9a"), d2 = scratch("c9b");
  const auto a = run_experiment(m, d1), b = run_experiment(m, d2);
  const std::string ha = slurp(a.history_paths[0]), hb = slurp(b.history_paths[0]);
  const bool same = !ha.empty() && ha == hb;
  return {same && a.ok() && b.ok(), std::to_string(ha.size()) + " bytes, identical: " + (same ? "yes" : "no")};
}

Verdict c10_quadratic() {
  int found = 0;
  std::vector<std::string> notes;
  for (int r = 0; r < 5; ++r) {
    Rng rng(derive_seed(1010, r));
    const std::size_t d = 12;
    Eigen::MatrixXd A(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j <= i; ++j) A(i, j) = A(j, i) = uniform_real(rng, -1, 1);
    const QuboModel truth(A, Eigen::VectorXd::Zero(d));
    const double f_star = enumerate_min(truth);
    auto bb = [&](std::span<const double> x) {
      Bits b(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) b[i] = x[i] != 0.0;
      return plain_energy(truth, b);
    };
    OptimizerConfig cfg;
    cfg.n_init = 10;
    cfg.n_cycles = 150;
    cfg.lambda = 1e-6;
    cfg.alpha_exp.reset();
    cfg.seed = derive_seed(kSeed, 10 + r);
    cfg.budget = SweepBudget{kSweeps};
    SimulatedAnnealingSolver sa;
    const auto h = run(bb, build_space(std::vector<VariableSpec>(d, VariableSpec::binary())), cfg, sa);
    int hit_cycle = -1;
    for (const auto& rec : h.records)
      if (rec.cycle > 0 && rec.y_new_raw <= f_star + 1e-9) {
        hit_cycle = rec.cycle;
        break;
      }
    // Counting the initial samples too would reward luck, so only loop proposals count.
    found += hit_cycle > 0;
    notes.push_back(hit_cycle > 0 ? "cycle " + std::to_string(hit_cycle) : "miss");
  }
  std::string detail = "optimum located in " + std::to_string(found) + "/5 runs (need >= 4):";
  for (const auto& n : notes) detail += " " + n;
  return {found >= 4, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "incremental inverse vs direct inverse", 30, c1_incremental_inverse},
      {2, "mean QUBO vs kernel expansion", 10, c2_mean_qubo},
      {3, "spread QUBO vs radicand", 10, c3_spread_qubo},
      {4, "annealer and exhaustive solver oracles", 60, c4_solver},
      {5, "domain-wall encoding round trip", 5, c5_encoding},
      {6, "b40 flipped Rastrigin, 200 cycles x 5", 900, c6_b40},
      {7, "r5 Rastrigin, 300 cycles x 5", 1800, c7_r5},
      {8, "output transform preserves argmin and verdicts", 600, c8_transform},
      {9, "bit-identical reruns", 300, c9_reproducible},
      {10, "quadratic black-box self-test", 300, c10_quadratic},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %2d: %s | %s | %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs, c.limit_s, in_time ? "" : " TIME LIMIT EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
