#include "support/fixtures.hpp"

namespace fixtures {

using cosched::HPolytope;

cosched::SynthesisProblem drone_problem(int n_copies, int T, int N_m, int N_c) {
  const double dt = 0.1;
  const int nx1 = 4, nu1 = 2, ny1 = 2, nz1 = 2;
  Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(nx1, nx1);
  Ac.topRightCorner(2, 2) = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(nx1, nu1);
  Bc.bottomRows(2) = Eigen::MatrixXd::Identity(2, 2);
  auto [A1, B1] = cosched::exact_discretize(Ac, Bc, dt);
  Eigen::MatrixXd C1 = Eigen::MatrixXd::Zero(ny1, nx1);
  C1.leftCols(2) = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd D1 = C1;

  const int n = n_copies;
  cosched::SynthesisProblem p;
  p.sys.A = Eigen::MatrixXd::Zero(n * nx1, n * nx1);
  p.sys.B = Eigen::MatrixXd::Zero(n * nx1, n * nu1);
  p.sys.C = Eigen::MatrixXd::Zero(n * ny1, n * nx1);
  p.sys.D = Eigen::MatrixXd::Zero(n * nz1, n * nx1);
  for (int k = 0; k < n; ++k) {
    p.sys.A.block(k * nx1, k * nx1, nx1, nx1) = A1;
    p.sys.B.block(k * nx1, k * nu1, nx1, nu1) = B1;
    p.sys.C.block(k * ny1, k * nx1, ny1, nx1) = C1;
    p.sys.D.block(k * nz1, k * nx1, nz1, nx1) = D1;
  }
  p.sys.d = Eigen::VectorXd::Zero(n * nz1);
  p.T = T;
  p.N_m = N_m;
  p.N_c = N_c;

  auto rep = [&](const HPolytope& one) {
    std::vector<HPolytope> parts(static_cast<size_t>(n), one);
    return n == 1 ? one : cosched::product(parts);
  };
  HPolytope W1 = cosched::HPolytope::box(Eigen::VectorXd::Constant(4, -0.05),
                                         Eigen::VectorXd::Constant(4, 0.05));
  HPolytope V1 = box2(-0.05, 0.05, -0.05, 0.05);
  Eigen::VectorXd x0_lb(4), x0_ub(4);
  x0_lb << -1, -1, 0, 0;
  x0_ub << 1, 1, 0, 0;
  HPolytope X01 = cosched::HPolytope::box(x0_lb, x0_ub);
  HPolytope U1 = box2(-20, 20, -20, 20);

  // Time-varying safety corridor: roam near the start for the first half,
  // then a tighter transit band, then a small terminal box.
  HPolytope Z_roam = box2(-2.5, 2.5, -2.5, 2.5);
  HPolytope Z_band = box2(-0.6, 0.6, -0.6, 0.6);
  HPolytope Z_goal = box2(-0.4, 0.4, -0.4, 0.4);
  std::vector<HPolytope> Z;
  for (int t = 0; t <= T; ++t) {
    const HPolytope& zt = t <= 9 ? Z_roam : (t <= 19 ? Z_band : Z_goal);
    Z.push_back(rep(t <= T ? zt : zt));
  }
  p.sets = cosched::make_uncertainty(rep(W1), rep(V1), rep(X01), rep(U1), std::move(Z), T);
  return p;
}

std::vector<cosched::Schedule> all_schedules(int T, int N_m, int N_c) {
  std::vector<std::vector<int>> meas, ctrl;
  for (int mask = 0; mask < (1 << T); ++mask) {
    std::vector<int> bits(static_cast<size_t>(T));
    int count = 0;
    for (int t = 0; t < T; ++t) {
      bits[static_cast<size_t>(t)] = (mask >> t) & 1;
      count += bits[static_cast<size_t>(t)];
    }
    if (count <= N_m) meas.push_back(bits);
    if (count <= N_c) ctrl.push_back(bits);
  }
  std::vector<cosched::Schedule> out;
  for (const auto& m : meas) {
    for (const auto& c : ctrl) {
      out.push_back(cosched::Schedule{m, c});
    }
  }
  return out;
}

}  // namespace fixtures
