#include "cosched/qparam.hpp"

#include <stdexcept>

namespace cosched {

std::vector<int> Schedule::meas_times() const {
  std::vector<int> out;
  for (int t = 0; t < T(); ++t) {
    if (sigma_m[t]) out.push_back(t);
  }
  return out;
}

std::vector<int> Schedule::ctrl_times() const {
  std::vector<int> out;
  for (size_t t = 0; t < sigma_c.size(); ++t) {
    if (sigma_c[t]) out.push_back(static_cast<int>(t));
  }
  return out;
}

int Schedule::count_m() const {
  int n = 0;
  for (int s : sigma_m) n += s;
  return n;
}

int Schedule::count_c() const {
  int n = 0;
  for (int s : sigma_c) n += s;
  return n;
}

void Schedule::validate() const {
  if (sigma_m.size() != sigma_c.size()) {
    throw std::invalid_argument("schedule: sigma_m/sigma_c length mismatch");
  }
  for (int s : sigma_m) {
    if (s != 0 && s != 1) throw std::invalid_argument("schedule: sigma_m entries must be 0/1");
  }
  for (int s : sigma_c) {
    if (s != 0 && s != 1) throw std::invalid_argument("schedule: sigma_c entries must be 0/1");
  }
}

Schedule Schedule::all_ones(int T) {
  return Schedule{std::vector<int>(static_cast<size_t>(T), 1),
                  std::vector<int>(static_cast<size_t>(T), 1)};
}

Schedule Schedule::all_zeros(int T) {
  return Schedule{std::vector<int>(static_cast<size_t>(T), 0),
                  std::vector<int>(static_cast<size_t>(T), 0)};
}

std::vector<ExtraBudgetRow> sliding_window_budget(int T, int window, int limit, bool on_m,
                                                  bool on_c) {
  if (window < 1 || window > T) throw std::invalid_argument("sliding window length out of range");
  std::vector<ExtraBudgetRow> rows;
  for (int t = window; t <= T; ++t) {
    auto make = [&](bool meas) {
      ExtraBudgetRow row;
      row.c_m = Eigen::VectorXd::Zero(T);
      row.c_c = Eigen::VectorXd::Zero(T);
      for (int tau = t - window; tau < t; ++tau) {
        (meas ? row.c_m : row.c_c)(tau) = 1.0;
      }
      row.b = static_cast<double>(limit);
      rows.push_back(std::move(row));
    };
    if (on_m) make(true);
    if (on_c) make(false);
  }
  return rows;
}

bool is_block_lower(const Eigen::MatrixXd& M, int T, int block_rows, int block_cols) {
  for (int t = 0; t < T; ++t) {
    for (int tau = t + 1; tau < T; ++tau) {
      if ((M.block(t * block_rows, tau * block_cols, block_rows, block_cols).array() != 0.0)
              .any()) {
        return false;
      }
    }
  }
  return true;
}

void zero_strict_upper(Eigen::MatrixXd& M, int T, int block_rows, int block_cols) {
  for (int t = 0; t < T; ++t) {
    for (int tau = t + 1; tau < T; ++tau) {
      M.block(t * block_rows, tau * block_cols, block_rows, block_cols).setZero();
    }
  }
}

namespace {

void check_gain_dims(const Eigen::MatrixXd& M, const Eigen::VectorXd& vec,
                     const TrajectoryMatrices& tm, const char* what) {
  if (M.rows() != tm.T * tm.nu || M.cols() != tm.T * tm.ny) {
    throw std::invalid_argument(std::string(what) + ": gain matrix dimension mismatch");
  }
  if (vec.size() != tm.T * tm.nu) {
    throw std::invalid_argument(std::string(what) + ": offset vector dimension mismatch");
  }
}

// Solves (I + L) X = R by block forward substitution, where L is strictly
// block lower triangular with square blocks of size `b`. Unipotence makes the
// system always solvable and keeps triangular structure exact.
Eigen::MatrixXd solve_unit_lower(const Eigen::MatrixXd& L, const Eigen::MatrixXd& R, int b) {
  const int nblocks = static_cast<int>(L.rows()) / b;
  Eigen::MatrixXd X = R;
  for (int i = 0; i < nblocks; ++i) {
    for (int j = 0; j < i; ++j) {
      X.middleRows(i * b, b).noalias() -= L.block(i * b, j * b, b, b) * X.middleRows(j * b, b);
    }
  }
  return X;
}

// Solves X (I + L) = M by block back substitution over block columns.
Eigen::MatrixXd solve_right_unit_lower(const Eigen::MatrixXd& M, const Eigen::MatrixXd& L,
                                       int b) {
  const int nblocks = static_cast<int>(L.cols()) / b;
  Eigen::MatrixXd X = M;
  for (int tau = nblocks - 1; tau >= 0; --tau) {
    for (int k = tau + 1; k < nblocks; ++k) {
      X.middleCols(tau * b, b).noalias() -= X.middleCols(k * b, b) * L.block(k * b, tau * b, b, b);
    }
  }
  return X;
}

}  // namespace

GainsQr f_to_q(const GainsFf& g, const TrajectoryMatrices& tm) {
  check_gain_dims(g.F, g.f, tm, "f_to_q");
  const Eigen::MatrixXd CS = tm.Cbar * tm.S;  // strictly block lower, T ny x T nu
  // Q = F (I - CS F)^{-1}  <=>  Q (I + L) = F with L = -CS F (strictly lower).
  Eigen::MatrixXd L = -CS * g.F;
  GainsQr out;
  out.Q = solve_right_unit_lower(g.F, L, tm.ny);
  zero_strict_upper(out.Q, tm.T, tm.nu, tm.ny);
  out.r = g.f + out.Q * (CS * g.f);
  return out;
}

GainsFf q_to_f(const GainsQr& g, const TrajectoryMatrices& tm) {
  check_gain_dims(g.Q, g.r, tm, "q_to_f");
  const Eigen::MatrixXd CS = tm.Cbar * tm.S;
  // F = (I + Q CS)^{-1} Q, f = (I + Q CS)^{-1} r; Q CS is strictly block lower.
  Eigen::MatrixXd K = g.Q * CS;
  GainsFf out;
  Eigen::MatrixXd rhs(g.Q.rows(), g.Q.cols() + 1);
  rhs.leftCols(g.Q.cols()) = g.Q;
  rhs.col(g.Q.cols()) = g.r;
  Eigen::MatrixXd sol = solve_unit_lower(K, rhs, tm.nu);
  out.F = sol.leftCols(g.Q.cols());
  out.f = sol.col(g.Q.cols());
  zero_strict_upper(out.F, tm.T, tm.nu, tm.ny);
  return out;
}

AffineMaps build_affine_maps(const GainsQr& g, const TrajectoryMatrices& tm) {
  check_gain_dims(g.Q, g.r, tm, "build_affine_maps");
  const Eigen::MatrixXd CH = tm.Cbar * tm.Hm;  // T ny x T nx
  const Eigen::MatrixXd CJ = tm.Cbar * tm.J;   // T ny x nx
  const Eigen::MatrixXd SQ = tm.S * g.Q;       // (T+1)nx x T ny

  AffineMaps maps;
  maps.Puw = g.Q * CH;
  maps.Puv = g.Q;
  maps.Pux0 = g.Q * CJ;
  maps.u_tilde = g.r;

  maps.Pzw = tm.Dbar * (tm.Hm + SQ * CH);
  maps.Pzv = tm.Dbar * SQ;
  maps.Pzx0 = tm.Dbar * (tm.J + SQ * CJ);
  maps.z_tilde = tm.Dbar * (tm.S * g.r) + tm.dbar;
  return maps;
}

Eigen::VectorXd state_map(const GainsQr& g, const TrajectoryMatrices& tm,
                          const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& x0) {
  check_gain_dims(g.Q, g.r, tm, "state_map");
  if (w.size() != tm.T * tm.nx || v.size() != tm.T * tm.ny || x0.size() != tm.nx) {
    throw std::invalid_argument("state_map: uncertainty vector length mismatch");
  }
  Eigen::VectorXd y_free = tm.Cbar * (tm.Hm * w + tm.J * x0) + v;
  Eigen::VectorXd u = g.Q * y_free + g.r;
  return tm.J * x0 + tm.Hm * w + tm.S * u;
}

Eigen::VectorXd nonlinear_state_map(const GainsFf& g, const TrajectoryMatrices& tm,
                                    const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& x0) {
  check_gain_dims(g.F, g.f, tm, "nonlinear_state_map");
  if (w.size() != tm.T * tm.nx || v.size() != tm.T * tm.ny || x0.size() != tm.nx) {
    throw std::invalid_argument("nonlinear_state_map: uncertainty vector length mismatch");
  }
  const Eigen::MatrixXd CS = tm.Cbar * tm.S;
  // (I - CS F)^{-1} applied to the free measurement trajectory.
  Eigen::VectorXd y_free = tm.Cbar * (tm.Hm * w + tm.J * x0) + v;
  Eigen::MatrixXd L = -CS * g.F;  // (I + L) = I - CS F
  Eigen::VectorXd y_cl = solve_unit_lower(L, y_free + CS * g.f, tm.ny);
  Eigen::VectorXd u = g.F * y_cl + g.f;
  return tm.J * x0 + tm.Hm * w + tm.S * u;
}

}  // namespace cosched
