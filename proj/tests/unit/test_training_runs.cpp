// Full-budget training runs on the closed-form cases (tens of seconds each).

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "rpinn/baseline.hpp"
#include "rpinn/catalog.hpp"
#include "rpinn/oracles.hpp"
#include "rpinn/trainer.hpp"

using namespace rpinn;

namespace {

double max_error(const StateTable& t, const std::function<std::vector<double>(double)>& exact, std::size_t i = 0) {
  double worst = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) worst = std::max(worst, std::abs(t.values[j][i] - exact(t.grid[j])[i]));
  return worst;
}

}  // namespace

TEST_CASE("case 2 single segment reaches the accuracy target") {
  const auto inst = make_problem("case2");
  const std::vector<double> ics{2.0};
  const auto sol = train_segment(inst.problem, {0.0, 0.05}, ics, inst.default_plan.per_segment);
  CHECK(max_error(sol.table, inst.exact) <= 1e-2);
  CHECK(sol.report.normalized_final_loss() <= 1e-3);

  // doubling the collocation grid moves the reconstruction less than the tolerance
  auto fine = inst.default_plan.per_segment;
  fine.collocation_count = 201;
  const auto sol2 = train_segment(inst.problem, {0.0, 0.05}, ics, fine);
  double shift = 0.0;
  for (std::size_t j = 0; j < sol.table.size(); ++j) {
    shift = std::max(shift, std::abs(sol.table.values[j][0] - sol2.table.values[2 * j][0]));
  }
  CHECK(shift <= 1e-2);

  // Matched-budget classical baseline on the same segment; recorded, not asserted.
  ClassicalPinnConfig ccfg;
  const auto sys = to_first_order(std::get<LinearIVP>(inst.problem));
  const auto cl = train_classical(sys, {0.0, 0.05}, ics, ccfg);
  std::printf("case2 max abs error: reduced %.3e, classical %.3e\n", max_error(sol.table, inst.exact),
              max_error(cl.table, inst.exact));
}

TEST_CASE("case 1 first segment") {
  const auto inst = make_problem("case1");
  const std::vector<double> ics{1.0, 10.0};
  const auto sol = train_segment(inst.problem, {0.0, 0.1}, ics, inst.default_plan.per_segment);
  CHECK(max_error(sol.table, inst.exact) <= 1e-2);
}
