#pragma once

// Shared test fixtures: small scalar problems plus the two benchmark plants.

#include "cosched/synthesis.hpp"

namespace fixtures {

inline cosched::HPolytope seg(double lo, double hi) {
  return cosched::HPolytope::box(Eigen::VectorXd::Constant(1, lo),
                                 Eigen::VectorXd::Constant(1, hi));
}

inline cosched::HPolytope box2(double ax, double bx, double ay, double by) {
  Eigen::VectorXd lb(2), ub(2);
  lb << ax, ay;
  ub << bx, by;
  return cosched::HPolytope::box(lb, ub);
}

inline cosched::LinearSystem scalar_plant(double a, double b) {
  cosched::LinearSystem sys;
  sys.A = Eigen::MatrixXd::Constant(1, 1, a);
  sys.B = Eigen::MatrixXd::Constant(1, 1, b);
  sys.C = Eigen::MatrixXd::Identity(1, 1);
  sys.D = Eigen::MatrixXd::Identity(1, 1);
  sys.d = Eigen::VectorXd::Zero(1);
  return sys;
}

/// Unstable scalar plant, the exhaustive-enumeration workhorse: T = 4 and
/// budgets wide open so all 2^8 schedules are admissible.
inline cosched::SynthesisProblem scalar_problem() {
  cosched::SynthesisProblem p;
  p.sys = scalar_plant(2.0, 1.0);
  p.T = 4;
  p.N_m = 4;
  p.N_c = 4;
  p.sets = cosched::make_uncertainty(seg(-0.02, 0.02), seg(-0.02, 0.02), seg(-0.4, 0.4),
                                     seg(-5.0, 5.0), seg(-1.0, 1.0), p.T);
  return p;
}

/// Scalar escape-analysis fixture: doubling map with matched initial and
/// safety intervals.
inline cosched::SynthesisProblem scalar_escape_problem() {
  cosched::SynthesisProblem p;
  p.sys = scalar_plant(2.0, 1.0);
  p.T = 1;
  p.N_m = 1;
  p.N_c = 1;
  p.sets = cosched::make_uncertainty(cosched::HPolytope::point(Eigen::VectorXd::Zero(1)),
                                     cosched::HPolytope::point(Eigen::VectorXd::Zero(1)),
                                     seg(-1.0, 1.0), seg(-4.0, 4.0), seg(-1.0, 1.0), p.T);
  return p;
}

/// Contraction that is safe with no action at all.
inline cosched::SynthesisProblem stable_scalar_problem(int T = 4) {
  cosched::SynthesisProblem p;
  p.sys = scalar_plant(0.5, 1.0);
  p.T = T;
  p.N_m = T;
  p.N_c = T;
  p.sets = cosched::make_uncertainty(cosched::HPolytope::point(Eigen::VectorXd::Zero(1)),
                                     cosched::HPolytope::point(Eigen::VectorXd::Zero(1)),
                                     seg(-0.1, 0.1), seg(-5.0, 5.0), seg(-1.0, 1.0), p.T);
  return p;
}

/// Planar inverted pendulum, exactly discretized at dt = 0.1.
inline cosched::SynthesisProblem lipm_problem(int T, int N_m = 5, int N_c = 5) {
  const double g = 9.81, zbar = 1.0, rfoot = 0.5, dt = 0.1;
  Eigen::MatrixXd Ac(2, 2);
  Ac << 0, 1, g / zbar, 0;
  Eigen::MatrixXd Bc(2, 1);
  Bc << 0, g / zbar * rfoot;
  auto [A, B] = cosched::exact_discretize(Ac, Bc, dt);
  cosched::SynthesisProblem p;
  p.sys.A = A;
  p.sys.B = B;
  p.sys.C = Eigen::MatrixXd::Identity(2, 2);
  p.sys.D = Eigen::MatrixXd::Identity(2, 2);
  p.sys.d = Eigen::VectorXd::Zero(2);
  p.T = T;
  p.N_m = N_m;
  p.N_c = N_c;
  p.sets = cosched::make_uncertainty(box2(-0.05, 0.05, -0.05, 0.05),
                                     box2(-0.01, 0.01, -0.01, 0.01),
                                     box2(-0.1, 0.1, -0.1, 0.1), seg(-1.0, 1.0),
                                     box2(-0.75, 0.75, -5.0, 5.0), p.T);
  return p;
}

/// Double-integrator drone (two position/velocity pairs), exactly discretized
/// at dt = 0.1, with the time-varying safety corridor used by the benchmark
/// fixtures. `n_copies` stacks independent drones that share one schedule.
cosched::SynthesisProblem drone_problem(int n_copies = 1, int T = 20, int N_m = 3, int N_c = 4);

/// Enumerates every schedule within the plain budgets.
std::vector<cosched::Schedule> all_schedules(int T, int N_m, int N_c);

}  // namespace fixtures
