#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cosched::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status {
  kOptimal,     // feasible, objective minimized (for c = 0 this means feasible)
  kInfeasible,  // no point satisfies the constraints
  kUnbounded,   // objective unbounded below on the feasible set
  kIterLimit,
  kError,
};

const char* to_string(Status s);

enum class Sense { kLe, kGe, kEq };

/// One linear row, stored sparse.
struct Row {
  std::vector<int> idx;
  std::vector<double> val;
  Sense sense = Sense::kLe;
  double rhs = 0.0;

  void push(int j, double v) {
    idx.push_back(j);
    val.push_back(v);
  }
};

/// min c'x  s.t. rows, lo <= x <= up.
struct Problem {
  int num_vars = 0;
  std::vector<double> cost;  // empty means all-zero (pure feasibility)
  std::vector<double> lo;    // -inf allowed
  std::vector<double> up;    // +inf allowed
  std::vector<Row> rows;

  int add_var(double lo_, double up_, double cost_ = 0.0) {
    lo.push_back(lo_);
    up.push_back(up_);
    cost.push_back(cost_);
    return num_vars++;
  }
  void add_row(Row r) { rows.push_back(std::move(r)); }
};

struct Solution {
  Status status = Status::kError;
  Eigen::VectorXd x;          // primal values (num_vars)
  Eigen::VectorXd row_duals;  // one multiplier per row; sign convention:
                              //   for a <= row, dual >= 0 and c = A' y + z holds at optimality
  Eigen::VectorXd ray;        // populated when kUnbounded: improving ray in x-space
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

struct SolverConfig {
  double tol_feas = 1e-8;
  double tol_opt = 1e-9;
  double tol_pivot = 1e-9;
  int max_iters = 400000;
  int refactor_every = 100;
};

/// Pluggable feasibility/optimality oracle; the toolkit ships a dense
/// bounded-variable revised simplex and everything talks to this interface.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Solution solve(const Problem& p) = 0;
  virtual std::string name() const = 0;
};

/// Revised simplex with dense LU basis and product-form updates.
/// Dual simplex is used whenever the all-logical basis is dual feasible
/// (always true for feasibility problems and nonnegative costs on
/// lower-bounded variables); otherwise a feasibility pass runs first and a
/// primal phase 2 finishes.
class SimplexSolver final : public Oracle {
 public:
  SimplexSolver() = default;
  explicit SimplexSolver(SolverConfig cfg) : cfg_(cfg) {}
  Solution solve(const Problem& p) override;
  std::string name() const override { return "dense-simplex"; }

 private:
  SolverConfig cfg_;
};

std::unique_ptr<Oracle> make_default_oracle();
std::unique_ptr<Oracle> make_default_oracle(const SolverConfig& cfg);

/// Row-by-row growable solve for cutting-plane loops: rows added after a
/// solve keep the factorized basis and resume with the dual simplex instead
/// of starting over.
class IncrementalSolver {
 public:
  explicit IncrementalSolver(Problem base, SolverConfig cfg = {});
  ~IncrementalSolver();
  IncrementalSolver(IncrementalSolver&&) noexcept;
  IncrementalSolver& operator=(IncrementalSolver&&) noexcept;

  Solution solve();
  void add_rows(const std::vector<Row>& rows);
  int num_rows() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cosched::lp
