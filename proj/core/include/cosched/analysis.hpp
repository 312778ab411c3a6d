#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cosched/synthesis.hpp"

namespace cosched::analysis {

struct ObservabilityReport {
  std::vector<int> ranks;           // rank of the schedule observability matrix, t = 1..T
  Eigen::MatrixXd nullspace_basis;  // orthonormal null-space basis at T (columns)
  std::optional<int> T1;            // first time the escape set is full-dimensional
};

/// Stacked sigma^m_tau * C * A^tau rows for tau = 0..t-1.
Eigen::MatrixXd observability_matrix(const LinearSystem& sys, const std::vector<int>& sigma_m,
                                     int t);

Eigen::MatrixXd nullspace_basis(const Eigen::MatrixXd& M);

struct EscapeCheckResult {
  bool hypotheses_ok = true;  // W, V, Z_T symmetric about the origin and d = 0
  std::vector<std::string> hypothesis_notes;
  bool holds = true;
  Eigen::VectorXd witness;  // an escaping unobservable x0 when violated
  int facet = -1;
};

/// Necessary-condition check at time T: no x0 can be simultaneously
/// unobservable under sigma^m and open-loop escaping through a facet of Z_T.
/// Advisory only when the symmetry hypotheses fail (see hypotheses_ok).
EscapeCheckResult escape_check(const SynthesisProblem& p, const std::vector<int>& sigma_m, int T,
                               lp::Oracle& lp);

/// Smallest t <= T whose escape region contains a ball of radius >= 1e-6
/// (Chebyshev-center LP per facet); nullopt when no time qualifies.
std::optional<int> full_dim_escape_time(const SynthesisProblem& p, lp::Oracle& lp);

enum class PruneDecision { kPrune, kKeep };

/// Sound schedule-space prune: prune only when the most permissive completion
/// of the partial measurement assignment (unassigned -> 1) still fails the
/// escape check at T1. Entries of partial_sigma_m: 0, 1, or -1 (unassigned).
PruneDecision prune_schedule(const SynthesisProblem& p, const std::vector<int>& partial_sigma_m,
                             lp::Oracle& lp);

struct RedundancyReport {
  std::vector<std::pair<int, int>> flagged_pairs;  // consecutive control times with no
                                                   // measurement in (t_i, t_{i+1}]
  bool exceeds_cap = false;                        // |T_C| > |T_M| + 1
};

/// Post-hoc diagnostic; never used as a constraint.
RedundancyReport redundancy_diagnostic(const Schedule& s);

ObservabilityReport observability_report(const SynthesisProblem& p,
                                         const std::vector<int>& sigma_m, lp::Oracle& lp);

}  // namespace cosched::analysis
