#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cosched/polytope.hpp"

namespace cosched {

/// x' = A x + B u + w,  y = C x + v (when measured),  z = D x + d.
struct LinearSystem {
  Eigen::MatrixXd A, B, C, D;
  Eigen::VectorXd d;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int ny() const { return static_cast<int>(C.rows()); }
  int nz() const { return static_cast<int>(D.rows()); }

  void validate() const;
};

/// Uncertainty and constraint sets. Z is stored per time step (length T+1);
/// a single safety set is broadcast at construction.
struct UncertaintySpec {
  HPolytope W, V, X0, U;
  std::vector<HPolytope> Z;  // length T+1
  bool terminal_in_X0 = false;

  void validate(const LinearSystem& sys, int T) const;
};

UncertaintySpec make_uncertainty(HPolytope W, HPolytope V, HPolytope X0, HPolytope U,
                                 HPolytope Z_all, int T, bool terminal_in_X0 = false);
UncertaintySpec make_uncertainty(HPolytope W, HPolytope V, HPolytope X0, HPolytope U,
                                 std::vector<HPolytope> Z_list, int T,
                                 bool terminal_in_X0 = false);

/// Stacked maps for the horizon-T trajectory:
///   x = J x0 + Hm w + S u, y = Cbar x + v, z = Dbar x + dbar.
struct TrajectoryMatrices {
  Eigen::MatrixXd J;     // (T+1)nx x nx
  Eigen::MatrixXd Hm;    // (T+1)nx x T nx, block lower, first block row zero
  Eigen::MatrixXd S;     // (T+1)nx x T nu, block lower, first block row zero
  Eigen::MatrixXd Cbar;  // T ny x (T+1)nx
  Eigen::MatrixXd Dbar;  // (T+1)nz x (T+1)nx
  Eigen::VectorXd dbar;  // (T+1)nz
  int T = 0;
  int nx = 0, nu = 0, ny = 0, nz = 0;
};

/// Exact zero-order-hold discretization via the augmented matrix exponential.
/// Returns A = exp(Ac dt), B = (Integral_0^dt exp(Ac s) ds) Bc.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> exact_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc,
                                                             double dt);

TrajectoryMatrices build_trajectory_matrices(const LinearSystem& sys, int T);

}  // namespace cosched
