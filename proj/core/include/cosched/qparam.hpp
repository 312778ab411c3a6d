#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cosched/system.hpp"

namespace cosched {

/// Binary measurement/control schedule over a horizon T.
struct Schedule {
  std::vector<int> sigma_m;  // length T, entries in {0,1}
  std::vector<int> sigma_c;  // length T

  int T() const { return static_cast<int>(sigma_m.size()); }
  std::vector<int> meas_times() const;
  std::vector<int> ctrl_times() const;
  int count_m() const;
  int count_c() const;
  void validate() const;

  static Schedule all_ones(int T);
  static Schedule all_zeros(int T);
};

/// General linear budget row sum_t (c_m[t] sigma^m_t + c_c[t] sigma^c_t) <= b.
struct ExtraBudgetRow {
  Eigen::VectorXd c_m, c_c;  // length T
  double b = 0.0;
};

/// Sliding-window budget rows: sum of sigma over each length-`window`
/// interval bounded by `limit`, for both signals when flags are set.
std::vector<ExtraBudgetRow> sliding_window_budget(int T, int window, int limit, bool on_m,
                                                  bool on_c);

/// Controller gains u_t = f_t + sum_{tau<=t} F_(t,tau) y_tau, stacked.
/// F is T nu x T ny, block lower triangular in nu x ny blocks.
struct GainsFf {
  Eigen::MatrixXd F;
  Eigen::VectorXd f;
};

/// Convexifying variables: Q = F (I - Cbar S F)^-1, r = (I + Q Cbar S) f,
/// same block lower triangular layout as F.
struct GainsQr {
  Eigen::MatrixXd Q;
  Eigen::VectorXd r;
};

/// The stacked output/input response as affine functions of (w, v, x0):
///   [z; u] = [Pzw Pzv Pzx0; Puw Puv Pux0] [w; v; x0] + [z_tilde; u_tilde].
struct AffineMaps {
  Eigen::MatrixXd Pzw, Pzv, Pzx0;
  Eigen::MatrixXd Puw, Puv, Pux0;
  Eigen::VectorXd z_tilde, u_tilde;
};

GainsQr f_to_q(const GainsFf& g, const TrajectoryMatrices& tm);
GainsFf q_to_f(const GainsQr& g, const TrajectoryMatrices& tm);

AffineMaps build_affine_maps(const GainsQr& g, const TrajectoryMatrices& tm);

/// Stacked state x for given uncertainty, from the Q-form linear expression.
Eigen::VectorXd state_map(const GainsQr& g, const TrajectoryMatrices& tm,
                          const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& x0);

/// Stacked state from the (nonconvex) F-form expression; test oracle for the
/// Q-form path.
Eigen::VectorXd nonlinear_state_map(const GainsFf& g, const TrajectoryMatrices& tm,
                                    const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& x0);

/// True when every block (t, tau) with tau > t is exactly zero.
bool is_block_lower(const Eigen::MatrixXd& M, int T, int block_rows, int block_cols);
/// Sets every strict upper block to exactly zero.
void zero_strict_upper(Eigen::MatrixXd& M, int T, int block_rows, int block_cols);

}  // namespace cosched
