#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cosched/lp.hpp"
#include "cosched/polytope.hpp"
#include "cosched/qparam.hpp"
#include "cosched/system.hpp"

namespace cosched::robust {

/// One factor of the stacked uncertainty eta = (w_0..w_{T-1}, v_0..v_{T-1}, x0).
struct EtaBlock {
  int offset = 0;  // start index within eta
  int dim = 0;
  int set_index = 0;  // into RobustProgram::block_sets
};

enum class RowKind { kSafety, kInput, kTerminal };

/// Canonical robust constraint
///    base . eta + L . (Q yhat(eta) + r) <= k   for all eta in P_eta,
/// where yhat(eta) = Yhat eta is the noise-free stacked measurement signal.
/// Safety rows, input rows and the optional terminal rows all reduce to this
/// shape, which is what both the cutting-plane master and the explicit MILP
/// assembly consume.
struct RobustRow {
  Eigen::VectorXd base;  // length n_eta
  Eigen::VectorXd L;     // length T nu
  double k = 0.0;
  RowKind kind = RowKind::kSafety;
  int time = 0;   // originating time step
  int facet = 0;  // row index within the originating polytope
};

struct RobustProgram {
  TrajectoryMatrices tm;
  Eigen::MatrixXd Yhat;  // T ny x n_eta: [Cbar Hm | I | Cbar J]
  std::vector<HPolytope> block_sets;
  std::vector<std::optional<BoxInfo>> block_boxes;  // per block_sets entry
  std::vector<EtaBlock> blocks;                     // 2T+1 blocks
  std::vector<RobustRow> rows;                      // safety, input, then terminal
  Eigen::MatrixXd H_eta;                            // block diagonal of the block sets
  Eigen::VectorXd h_eta;
  int n_eta = 0;
  int n_safety = 0, n_input = 0, n_terminal = 0;
};

RobustProgram build_robust_program(const LinearSystem& sys, const UncertaintySpec& sets, int T,
                                   bool terminal_in_X0);

/// Maps the block-lower-triangular gain blocks onto reduced variable blocks.
/// qmap[t][tau] gives the Q-variable block that block (t,tau) reads from, or
/// -1 when structurally zero; rmap[t] does the same for r. A fixed schedule
/// merges row blocks between control times and drops columns at skipped
/// measurement times; the free layout keeps every lower block distinct.
struct GainBasis {
  int T = 0, nu = 0, ny = 0;
  std::vector<std::vector<int>> qmap;
  std::vector<int> rmap;
  int n_q_blocks = 0;
  int n_r_blocks = 0;

  int q_var_count() const { return n_q_blocks * nu * ny; }
  int r_var_count() const { return n_r_blocks * nu; }
  int var_count() const { return q_var_count() + r_var_count(); }

  static GainBasis full(int T, int nu, int ny);
  static GainBasis for_schedule(const Schedule& s, int nu, int ny);

  /// Expands reduced variable values into the full (Q, r) pair.
  GainsQr expand(const Eigen::VectorXd& vars) const;
};

/// A generated cut: the robust row `row_index` evaluated at the adversarial
/// point eta* (ray cuts drop the constant and the r term).
struct Cut {
  int row_index = 0;
  Eigen::VectorXd yeta;  // Yhat * eta_star (T ny)
  double rhs = 0.0;      // k - base . eta_star   (0-based homogeneous for rays)
  bool is_ray = false;
};

struct MasterOptions {
  double gain_bound = 1e3;   // |Q|, |r| box (the big-M audit covers validity)
  double tol_sep = 1e-8;     // separation threshold, scaled by row magnitude
  int max_rounds = 400;
  double time_budget = 0.0;  // seconds; 0 = unlimited. Exhaustion -> kIterLimit
  bool pool_only = false;    // solve against the existing cut pool, no separation
  bool stabilize = true;     // maximize a common cut margin to center iterates
  lp::SolverConfig lp_cfg;
};

void trim_pool(std::vector<Cut>& pool);

/// Sparse LP row over the reduced gain variables (offset by `var_offset`)
/// implementing one cut. Shared by the master loop and the relaxation LPs.
lp::Row expand_cut(const RobustProgram& prog, const GainBasis& basis, const Cut& cut,
                   int var_offset = 0);

struct MasterResult {
  lp::Status status = lp::Status::kError;
  GainsQr gains;              // expanded full Q, r (valid when feasible)
  Eigen::VectorXd var_values; // reduced master variables
  int rounds = 0;
  int lp_calls = 0;
  int cuts_added = 0;
};

/// Support of one eta block in direction phi (sub-vector for that block).
/// Fast closed form for axis-aligned sets, small LP otherwise. `dual`
/// satisfies dual' H_block = phi with dual >= 0 when bounded.
struct BlockSupport {
  bool bounded = true;
  double value = 0.0;
  Eigen::VectorXd maximizer;
  Eigen::VectorXd dual;
  Eigen::VectorXd ray;
};
BlockSupport block_support(const RobustProgram& prog, int block_index, const Eigen::VectorXd& phi,
                           lp::Oracle& oracle);

/// Exact worst-case evaluation of one robust row at fixed gains:
/// max over eta of base.eta + L.(Q yhat + r). Returns the support value and
/// the maximizing eta (block-wise argmax), or unbounded with a ray.
struct RowEvaluation {
  bool bounded = true;
  double value = 0.0;
  Eigen::VectorXd eta_star;
  Eigen::VectorXd eta_ray;  // when unbounded
  int ray_block = -1;
};
RowEvaluation evaluate_row(const RobustProgram& prog, const RobustRow& row, const GainsQr& gains,
                           lp::Oracle& oracle);

/// Cutting-plane solve of the robust feasibility program over the reduced
/// gain variables. `pool` persists across calls and accumulates cuts; they
/// are valid for every schedule. Optionally an objective over the reduced
/// variables can be supplied (used by the relaxation guidance LP).
MasterResult solve_master(const RobustProgram& prog, const GainBasis& basis, lp::Oracle& oracle,
                          std::vector<Cut>& pool, const MasterOptions& opts);

/// Reconstructs the stacked Farkas multipliers for all rows of `prog` at the
/// given gains: one row of multipliers per robust row, stacked by kind into
/// (Lambda, Gamma, Theta). Throws if some row is violated beyond tol.
struct Multipliers {
  Eigen::MatrixXd Lambda;  // n_safety x n_eta_rows
  Eigen::MatrixXd Gamma;   // n_input x n_eta_rows
  Eigen::MatrixXd Theta;   // n_terminal x n_eta_rows
};
Multipliers reconstruct_multipliers(const RobustProgram& prog, const GainsQr& gains,
                                    lp::Oracle& oracle, double tol);

}  // namespace cosched::robust
