#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cosched/lp.hpp"
#include "cosched/qparam.hpp"
#include "cosched/robust.hpp"
#include "cosched/system.hpp"

namespace cosched {

struct SolverOptions {
  double big_M = 1e3;
  double tol_feas = 1e-7;
  double tol_cert = 1e-6;

  enum class Strategy { kBranchAndBound, kDirectMilp };
  Strategy strategy = Strategy::kBranchAndBound;

  long node_limit = 0;      // 0 = unlimited
  double time_limit = 0.0;  // seconds, 0 = unlimited

  enum class Branching { kMostFractional, kTimeOrdered };
  Branching branching = Branching::kMostFractional;

  bool prune_with_observability = true;
  bool heuristic_cap_controls = false;  // diagnostic-grade search cap
  bool root_heuristic = true;           // LP-guided schedule rounding probes
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct SynthesisProblem {
  LinearSystem sys;
  UncertaintySpec sets;
  int T = 1;
  int N_m = 0, N_c = 0;
  std::vector<ExtraBudgetRow> extra_budget_rows;
  std::optional<std::pair<double, double>> schedule_cost;  // (c_m, c_c), both >= 0
  SolverOptions options;

  /// Validates and clamps out-of-range budgets; returns human-readable
  /// warnings for anything that was adjusted.
  std::vector<std::string> normalize();
};

struct SolveStats {
  long nodes = 0;
  long lp_calls = 0;
  long heuristic_probes = 0;
  double wall_time_s = 0.0;
  double big_m_margin = 0.0;  // min over active indicator bounds of M - |value|
  long cut_pool_size = 0;
};

struct SynthesisResult {
  enum class Status { kFeasible, kInfeasible, kLimit };
  Status status = Status::kInfeasible;
  Schedule schedule;
  GainsQr gains_qr;
  GainsFf gains_ff;
  Eigen::MatrixXd Lambda, Gamma, Theta;  // Farkas multiplier blocks
  double objective = 0.0;                // schedule cost when present
  SolveStats stats;
};

const char* to_string(SynthesisResult::Status s);

struct FixedScheduleOutcome {
  bool feasible = false;
  GainsQr gains;
  Eigen::MatrixXd Lambda, Gamma, Theta;
  long lp_calls = 0;
};

/// Pure-LP specialization of the co-design program at a fixed integral
/// schedule: gain blocks at skipped measurement times are eliminated (fixed
/// to zero) and row blocks between control times are merged, never big-M'd.
FixedScheduleOutcome solve_fixed_schedule(const SynthesisProblem& p, const Schedule& s,
                                          lp::Oracle& oracle);
FixedScheduleOutcome solve_fixed_schedule(const SynthesisProblem& p, const Schedule& s,
                                          lp::Oracle& oracle, std::vector<robust::Cut>& pool);

SynthesisResult solve(const SynthesisProblem& p);

struct MaxHorizonOutcome {
  std::optional<int> T_star;  // nullopt when even T = 0 fails
  std::optional<SynthesisResult> result;
  int probes = 0;
};

/// Problem-2 binary search: largest T in [0, T_bar] for which the safety
/// program is feasible. T = 0 degenerates to the containment check
/// z_0 in Z_0 for all x0 in X0.
MaxHorizonOutcome max_horizon(const SynthesisProblem& p, int T_bar);

struct CertificateReport {
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;
  double min_multiplier = 0.0;
  double big_m_margin = 0.0;
  bool indicator_ok = true;
  bool budget_ok = true;
  bool pass = false;
  std::vector<std::string> warnings;
};

CertificateReport verify_certificate(const SynthesisProblem& p, const SynthesisResult& result);

/// T = 0 feasibility: z_0 = D x0 + d stays in Z_0 over X0.
bool horizon_zero_feasible(const SynthesisProblem& p, lp::Oracle& oracle);

}  // namespace cosched
