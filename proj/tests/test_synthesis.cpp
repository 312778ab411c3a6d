#include <doctest.h>

#include <cmath>

#include "cosched/analysis.hpp"
#include "cosched/milp.hpp"
#include "cosched/simulate.hpp"
#include "cosched/synthesis.hpp"
#include "support/fixtures.hpp"

using namespace cosched;

namespace {

// Pins a schedule through extra budget rows (equality via <= pairs).
void pin_schedule(SynthesisProblem& p, const Schedule& s) {
  for (int t = 0; t < p.T; ++t) {
    for (bool meas : {true, false}) {
      int want = meas ? s.sigma_m[static_cast<size_t>(t)] : s.sigma_c[static_cast<size_t>(t)];
      ExtraBudgetRow row;
      row.c_m = Eigen::VectorXd::Zero(p.T);
      row.c_c = Eigen::VectorXd::Zero(p.T);
      (meas ? row.c_m : row.c_c)(t) = want == 1 ? -1.0 : 1.0;
      row.b = want == 1 ? -1.0 : 0.0;
      p.extra_budget_rows.push_back(std::move(row));
    }
  }
}

}  // namespace

TEST_CASE("open-loop safe contraction accepts the all-zero schedule") {
  SynthesisProblem p = fixtures::stable_scalar_problem();
  lp::SimplexSolver oracle;
  auto outcome = solve_fixed_schedule(p, Schedule::all_zeros(p.T), oracle);
  REQUIRE(outcome.feasible);
  CHECK(outcome.gains.Q.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(outcome.gains.r.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("branch and bound matches exhaustive enumeration on the scalar fixture") {
  SynthesisProblem p = fixtures::scalar_problem();
  lp::SimplexSolver oracle;
  std::vector<robust::Cut> pool;
  // Exhaustive route.
  int n_feasible = 0;
  std::vector<Schedule> feasible;
  for (const auto& s : fixtures::all_schedules(p.T, p.N_m, p.N_c)) {
    if (solve_fixed_schedule(p, s, oracle, pool).feasible) {
      ++n_feasible;
      feasible.push_back(s);
    }
  }
  CHECK(n_feasible > 0);
  // Solver route: must find some feasible schedule, and it must be in the set.
  SynthesisResult res = solve(p);
  REQUIRE(res.status == SynthesisResult::Status::kFeasible);
  bool found = false;
  for (const auto& s : feasible) {
    if (s.sigma_m == res.schedule.sigma_m && s.sigma_c == res.schedule.sigma_c) found = true;
  }
  CHECK(found);
  CHECK(verify_certificate(p, res).pass);

  // Infeasible overall case: zero budgets on an unstable plant.
  SynthesisProblem q = fixtures::scalar_problem();
  q.N_m = 0;
  q.N_c = 0;
  SynthesisResult res2 = solve(q);
  CHECK(res2.status == SynthesisResult::Status::kInfeasible);
}

TEST_CASE("pinned schedules through extra budget rows") {
  SynthesisProblem p = fixtures::scalar_problem();
  lp::SimplexSolver oracle;
  // Find one feasible and one infeasible schedule first.
  Schedule good, bad;
  bool have_good = false, have_bad = false;
  std::vector<robust::Cut> pool;
  for (const auto& s : fixtures::all_schedules(p.T, p.N_m, p.N_c)) {
    bool f = solve_fixed_schedule(p, s, oracle, pool).feasible;
    if (f && !have_good) {
      good = s;
      have_good = true;
    }
    if (!f && !have_bad) {
      bad = s;
      have_bad = true;
    }
    if (have_good && have_bad) break;
  }
  REQUIRE(have_good);
  REQUIRE(have_bad);
  {
    SynthesisProblem pinned = fixtures::scalar_problem();
    pin_schedule(pinned, good);
    SynthesisResult res = solve(pinned);
    REQUIRE(res.status == SynthesisResult::Status::kFeasible);
    CHECK(res.schedule.sigma_m == good.sigma_m);
    CHECK(res.schedule.sigma_c == good.sigma_c);
  }
  {
    SynthesisProblem pinned = fixtures::scalar_problem();
    pin_schedule(pinned, bad);
    SynthesisResult res = solve(pinned);
    CHECK(res.status == SynthesisResult::Status::kInfeasible);
  }
}

TEST_CASE("certificate verification detects injected faults") {
  SynthesisProblem p = fixtures::scalar_problem();
  SynthesisResult res = solve(p);
  REQUIRE(res.status == SynthesisResult::Status::kFeasible);
  SUBCASE("clean result passes") {
    auto rep = verify_certificate(p, res);
    CHECK(rep.pass);
    CHECK(rep.max_eq_residual <= 1e-6);
    CHECK(rep.max_ineq_violation <= 1e-6);
  }
  SUBCASE("negative multiplier entry fails") {
    SynthesisResult broken = res;
    REQUIRE(broken.Lambda.size() > 0);
    broken.Lambda(0, 0) = -1.0;
    auto rep = verify_certificate(p, broken);
    CHECK_FALSE(rep.pass);
    CHECK(rep.min_multiplier < -1e-6);
  }
  SUBCASE("perturbed gain breaks the equality residual") {
    SynthesisResult broken = res;
    broken.gains_qr.Q(1, 0) += 1e-2;
    auto rep = verify_certificate(p, broken);
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_eq_residual > 1e-6);
  }
}

TEST_CASE("feasible results satisfy the schedule structure within tolerance") {
  SynthesisProblem p = fixtures::scalar_problem();
  SynthesisResult res = solve(p);
  REQUIRE(res.status == SynthesisResult::Status::kFeasible);
  const auto& F = res.gains_ff.F;
  for (int tau = 0; tau < p.T; ++tau) {
    if (res.schedule.sigma_m[static_cast<size_t>(tau)]) continue;
    CHECK(F.col(tau).cwiseAbs().maxCoeff() <= p.options.tol_cert * p.options.big_M);
  }
  for (int t = 1; t < p.T; ++t) {
    if (res.schedule.sigma_c[static_cast<size_t>(t)]) continue;
    CHECK((F.row(t) - F.row(t - 1)).cwiseAbs().maxCoeff() <=
          p.options.tol_cert * p.options.big_M);
    CHECK(std::abs(res.gains_ff.f(t) - res.gains_ff.f(t - 1)) <=
          p.options.tol_cert * p.options.big_M);
  }
}

TEST_CASE("verdicts are invariant under doubling big_M") {
  SynthesisProblem p = fixtures::scalar_problem();
  SynthesisProblem p2 = p;
  p2.options.big_M = 2e3;
  lp::SimplexSolver oracle;
  std::vector<robust::Cut> pool1, pool2;
  for (const auto& s : fixtures::all_schedules(p.T, 2, 2)) {  // subsample for speed
    bool a = solve_fixed_schedule(p, s, oracle, pool1).feasible;
    bool b = solve_fixed_schedule(p2, s, oracle, pool2).feasible;
    CHECK(a == b);
  }
}

TEST_CASE("max horizon binary search matches a linear scan") {
  // Stable plant with a safety set that the open loop leaves after a few
  // steps; budgets allow nothing, so T* is determined purely by containment.
  SynthesisProblem p;
  p.sys = fixtures::scalar_plant(1.5, 1.0);
  p.T = 8;
  p.N_m = 0;
  p.N_c = 0;
  p.sets = make_uncertainty(HPolytope::point(Eigen::VectorXd::Zero(1)),
                            HPolytope::point(Eigen::VectorXd::Zero(1)), fixtures::seg(-1, 1),
                            fixtures::seg(-1, 1), fixtures::seg(-4, 4), p.T);
  // Open loop: |x_t| <= 1.5^t, exits |z| <= 4 after t >= 3 (1.5^3 = 3.375 ok,
  // 1.5^4 = 5.06 breaks): T* should be 3.
  MaxHorizonOutcome out = max_horizon(p, 8);
  REQUIRE(out.T_star.has_value());
  CHECK(*out.T_star == 3);
  // Linear scan oracle.
  int linear = -1;
  for (int T = 0; T <= 8; ++T) {
    SynthesisProblem sub = p;
    sub.T = std::max(T, 1);
    sub.sets.Z.assign(static_cast<size_t>(sub.T) + 1, p.sets.Z[0]);
    bool ok;
    lp::SimplexSolver oracle;
    if (T == 0) {
      ok = horizon_zero_feasible(sub, oracle);
    } else {
      ok = solve(sub).status == SynthesisResult::Status::kFeasible;
    }
    if (ok) {
      linear = T;
    } else {
      break;
    }
  }
  CHECK(linear == 3);

  SUBCASE("monotonicity holds around the optimum") {
    SynthesisProblem sub = p;
    sub.T = 2;
    sub.sets.Z.assign(3, p.sets.Z[0]);
    CHECK(solve(sub).status == SynthesisResult::Status::kFeasible);
  }
}

TEST_CASE("max horizon at a trivially safe fixture returns T_bar") {
  SynthesisProblem p = fixtures::stable_scalar_problem(6);
  MaxHorizonOutcome out = max_horizon(p, 6);
  REQUIRE(out.T_star.has_value());
  CHECK(*out.T_star == 6);
  CHECK(out.probes <= 2);  // T_bar first, feasible immediately
}

TEST_CASE("max horizon sentinel when even T = 0 fails") {
  SynthesisProblem p = fixtures::stable_scalar_problem(4);
  // Safety set that excludes part of X0 itself.
  p.sets.Z.assign(5, fixtures::seg(0.05, 1.0));
  MaxHorizonOutcome out = max_horizon(p, 4);
  CHECK_FALSE(out.T_star.has_value());
}

TEST_CASE("schedule cost objective returns a cheapest schedule") {
  SynthesisProblem p = fixtures::scalar_problem();
  p.schedule_cost = {{1.0, 1.0}};
  SynthesisResult res = solve(p);
  REQUIRE(res.status == SynthesisResult::Status::kFeasible);
  // Exhaustive minimum.
  lp::SimplexSolver oracle;
  std::vector<robust::Cut> pool;
  int best = 1000;
  for (const auto& s : fixtures::all_schedules(p.T, p.N_m, p.N_c)) {
    if (solve_fixed_schedule(p, s, oracle, pool).feasible) {
      best = std::min(best, s.count_m() + s.count_c());
    }
  }
  CHECK(res.objective == doctest::Approx(static_cast<double>(best)));
  CHECK(res.schedule.count_m() + res.schedule.count_c() == best);
}

TEST_CASE("terminal constraint is honored when enabled") {
  SynthesisProblem p = fixtures::stable_scalar_problem();
  p.sets.terminal_in_X0 = true;
  SynthesisResult res = solve(p);
  REQUIRE(res.status == SynthesisResult::Status::kFeasible);
  CHECK(res.Theta.rows() == p.sets.X0.rows());
  CHECK(verify_certificate(p, res).pass);
  // Monte Carlo sanity: x_T stays within X0 (z = x for this fixture).
  auto rep = simulate::monte_carlo_validate(p, res, 200, 7);
  CHECK(rep.violation_count == 0);
}
