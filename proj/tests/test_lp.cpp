#include <doctest.h>

#include <cmath>

#include "cosched/lp.hpp"
#include "cosched/rng.hpp"
#include "support/oracles.hpp"

using namespace cosched;

namespace {

lp::Problem make_box_lp(int n, double lo, double hi) {
  lp::Problem p;
  for (int j = 0; j < n; ++j) p.add_var(lo, hi, 0.0);
  return p;
}

}  // namespace

TEST_CASE("maximize over a single upper bound row") {
  lp::Problem p;
  p.add_var(-lp::kInf, lp::kInf, -1.0);  // max x
  lp::Row row;
  row.push(0, 1.0);
  row.sense = lp::Sense::kLe;
  row.rhs = 1.0;
  p.add_row(row);
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kOptimal);
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(-1.0));
}

TEST_CASE("equality rows and bounded variables") {
  // min x + y st x + y = 1, 0 <= x <= 0.3, 0 <= y <= 1
  lp::Problem p;
  p.add_var(0.0, 0.3, 1.0);
  p.add_var(0.0, 1.0, 1.0);
  lp::Row row;
  row.push(0, 1.0);
  row.push(1, 1.0);
  row.sense = lp::Sense::kEq;
  row.rhs = 1.0;
  p.add_row(row);
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.x(0) + sol.x(1) == doctest::Approx(1.0));
}

TEST_CASE("detects infeasible systems") {
  lp::Problem p;
  p.add_var(0.0, 1.0, 0.0);
  lp::Row r1;
  r1.push(0, 1.0);
  r1.sense = lp::Sense::kGe;
  r1.rhs = 2.0;
  p.add_row(r1);
  lp::SimplexSolver s;
  CHECK(s.solve(p).status == lp::Status::kInfeasible);
}

TEST_CASE("detects unbounded objective with a ray") {
  lp::Problem p;
  p.add_var(0.0, lp::kInf, -1.0);  // max x, x >= 0
  lp::Row row;                     // x - y <= 0 with y free keeps it unbounded
  p.add_var(-lp::kInf, lp::kInf, 0.0);
  row.push(0, 1.0);
  row.push(1, -1.0);
  row.sense = lp::Sense::kLe;
  row.rhs = 0.0;
  p.add_row(row);
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kUnbounded);
  REQUIRE(sol.ray.size() == 2);
  // Ray improves the objective and respects the row direction.
  CHECK(sol.ray(0) > 0.0);
  CHECK(sol.ray(0) - sol.ray(1) <= 1e-9);
}

TEST_CASE("degenerate problem with redundant rows") {
  lp::Problem p;
  p.add_var(-lp::kInf, lp::kInf, 1.0);
  for (int k = 0; k < 4; ++k) {
    lp::Row row;
    row.push(0, 1.0);
    row.sense = lp::Sense::kGe;
    row.rhs = 2.0;  // same constraint four times
    p.add_row(row);
  }
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kOptimal);
  CHECK(sol.x(0) == doctest::Approx(2.0));
}

TEST_CASE("fixed variables via equal bounds") {
  lp::Problem p;
  p.add_var(0.5, 0.5, 0.0);
  p.add_var(-1.0, 1.0, 1.0);
  lp::Row row;  // y >= x
  row.push(0, 1.0);
  row.push(1, -1.0);
  row.sense = lp::Sense::kLe;
  row.rhs = 0.0;
  p.add_row(row);
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kOptimal);
  CHECK(sol.x(0) == doctest::Approx(0.5));
  CHECK(sol.x(1) == doctest::Approx(0.5));
}

TEST_CASE("randomized agreement with brute-force basic-point enumeration") {
  CounterRng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(2));  // 2..3 vars
    const int m = 1 + static_cast<int>(rng.next_below(4));  // 1..4 rows
    lp::Problem p = make_box_lp(n, -2.0, 2.0);
    for (int j = 0; j < n; ++j) p.cost[j] = -1.0 + 2.0 * rng.next_double();
    for (int i = 0; i < m; ++i) {
      lp::Row row;
      for (int j = 0; j < n; ++j) {
        double c = -1.0 + 2.0 * rng.next_double();
        if (std::abs(c) > 0.2) row.push(j, c);
      }
      int sense = static_cast<int>(rng.next_below(3));
      row.sense = sense == 0 ? lp::Sense::kLe : (sense == 1 ? lp::Sense::kGe : lp::Sense::kEq);
      row.rhs = -1.0 + 2.0 * rng.next_double();
      p.add_row(row);
    }
    auto expected = oracles::brute_force_lp(p);
    lp::SimplexSolver s;
    auto got = s.solve(p);
    if (expected.status == lp::Status::kOptimal) {
      REQUIRE_MESSAGE(got.status == lp::Status::kOptimal, "trial ", trial);
      CHECK_MESSAGE(got.objective == doctest::Approx(expected.objective).epsilon(1e-6), "trial ",
                    trial);
      ++checked;
    } else {
      REQUIRE_MESSAGE(got.status == lp::Status::kInfeasible, "trial ", trial);
    }
  }
  CHECK(checked > 50);  // the generator must produce a healthy mix
}

TEST_CASE("dual values satisfy stationarity on inequality-only problems") {
  CounterRng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(2));
    lp::Problem p;
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) {
      p.add_var(-lp::kInf, lp::kInf, 0.0);
      c(j) = -1.0 + 2.0 * rng.next_double();
      p.cost[j] = c(j);
    }
    // Random rows plus a generous box so the problem stays bounded.
    const int m = 2 + static_cast<int>(rng.next_below(3));
    Eigen::MatrixXd H(m + 2 * n, n);
    Eigen::VectorXd h(m + 2 * n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) H(i, j) = -1.0 + 2.0 * rng.next_double();
      h(i) = 0.5 + rng.next_double();
    }
    for (int j = 0; j < n; ++j) {
      H.row(m + 2 * j).setZero();
      H(m + 2 * j, j) = 1.0;
      h(m + 2 * j) = 3.0;
      H.row(m + 2 * j + 1).setZero();
      H(m + 2 * j + 1, j) = -1.0;
      h(m + 2 * j + 1) = 3.0;
    }
    for (int i = 0; i < H.rows(); ++i) {
      lp::Row row;
      for (int j = 0; j < n; ++j) {
        if (H(i, j) != 0.0) row.push(j, H(i, j));
      }
      row.sense = lp::Sense::kLe;
      row.rhs = h(i);
      p.add_row(row);
    }
    lp::SimplexSolver s;
    auto sol = s.solve(p);
    REQUIRE(sol.status == lp::Status::kOptimal);
    // c = H' y with y <= 0 for <= rows at optimality (free variables).
    Eigen::VectorXd resid = H.transpose() * sol.row_duals - c;
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-7);
    CHECK(sol.row_duals.maxCoeff() < 1e-9);
    // Complementary-ish: objective equals dual bound h' y.
    CHECK(sol.objective == doctest::Approx(h.dot(sol.row_duals)).epsilon(1e-6));
  }
}

TEST_CASE("warm problems with many rows stay stable") {
  // A chain of coupled rows; checks eta-update numerical health.
  const int n = 40;
  lp::Problem p;
  for (int j = 0; j < n; ++j) p.add_var(-10.0, 10.0, j % 3 == 0 ? 1.0 : -1.0);
  for (int j = 0; j + 1 < n; ++j) {
    lp::Row row;
    row.push(j, 1.0);
    row.push(j + 1, -0.5);
    row.sense = lp::Sense::kLe;
    row.rhs = 0.25;
    p.add_row(row);
  }
  lp::Row total;
  for (int j = 0; j < n; ++j) total.push(j, 1.0);
  total.sense = lp::Sense::kEq;
  total.rhs = 1.0;
  p.add_row(total);
  lp::SimplexSolver s;
  auto sol = s.solve(p);
  REQUIRE(sol.status == lp::Status::kOptimal);
  double sum = sol.x.sum();
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-7));
  for (int j = 0; j + 1 < n; ++j) {
    CHECK(sol.x(j) - 0.5 * sol.x(j + 1) <= 0.25 + 1e-7);
  }
}
