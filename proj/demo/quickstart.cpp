// Minimizes a 3-variable black box on a 21-point grid per variable and
// prints the best point after each cycle.

#include <cmath>
#include <cstdio>
#include <span>

#include "kqa/optimizer.hpp"

int main() {
  using namespace kqa;
  const auto space = build_space({VariableSpec::real(-2.0, 2.0, 21), VariableSpec::real(-2.0, 2.0, 21),
                                  VariableSpec::integer(0, 4)});
  auto black_box = [](std::span<const double> x) {
    return std::pow(x[0] - 0.6, 2) + std::pow(x[1] + 1.0, 2) + std::abs(x[2] - 3.0);
  };

  OptimizerConfig cfg;
  cfg.n_init = 8;
  cfg.n_cycles = 40;
  cfg.seed = 2024;
  cfg.budget = SweepBudget{400};

  SimulatedAnnealingSolver sa;
  const RunHistory h = run(black_box, space, cfg, sa, [](const CycleRecord& r) {
    if (r.cycle > 0 && r.cycle % 5 == 0)
      std::printf("cycle %3d  y=%8.4f  best=%8.4f\n", r.cycle, r.y_new_raw, r.f_best_so_far);
  });
  std::printf("best f=%.4f at (%.2f, %.2f, %.0f)\n", h.best_y, h.best_x[0], h.best_x[1], h.best_x[2]);
  return 0;
}
