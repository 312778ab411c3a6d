#include <doctest.h>

#include <cmath>

#include "cosched/rng.hpp"
#include "cosched/system.hpp"

using namespace cosched;

namespace {

LinearSystem scalar_system(double a, double b, double c = 1.0, double dd = 1.0,
                           double offset = 0.0) {
  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Constant(1, 1, a);
  sys.B = Eigen::MatrixXd::Constant(1, 1, b);
  sys.C = Eigen::MatrixXd::Constant(1, 1, c);
  sys.D = Eigen::MatrixXd::Constant(1, 1, dd);
  sys.d = Eigen::VectorXd::Constant(1, offset);
  return sys;
}

LinearSystem random_system(int nx, int nu, int ny, int nz, CounterRng& rng) {
  auto mat = [&](int r, int c) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) M(i, j) = -1.0 + 2.0 * rng.next_double();
    }
    return M;
  };
  LinearSystem sys;
  sys.A = mat(nx, nx);
  sys.B = mat(nx, nu);
  sys.C = mat(ny, nx);
  sys.D = mat(nz, nx);
  sys.d = mat(nz, 1).col(0);
  return sys;
}

}  // namespace

TEST_CASE("exact discretization of zero dynamics is the identity pair") {
  auto [A, B] = exact_discretize(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2),
                                 1.0);
  CHECK((A - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((B - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("double integrator discretizes to the closed form") {
  // Ac = [0 I; 0 0], Bc = [0; I]: A = [I, dt I; 0, I], B = [dt^2/2 I; dt I].
  const double dt = 0.1;
  Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(4, 4);
  Ac.topRightCorner(2, 2) = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(4, 2);
  Bc.bottomRows(2) = Eigen::MatrixXd::Identity(2, 2);
  auto [A, B] = exact_discretize(Ac, Bc, dt);
  Eigen::MatrixXd Aexp = Eigen::MatrixXd::Identity(4, 4);
  Aexp.topRightCorner(2, 2) = dt * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd Bexp = Eigen::MatrixXd::Zero(4, 2);
  Bexp.topRows(2) = 0.5 * dt * dt * Eigen::MatrixXd::Identity(2, 2);
  Bexp.bottomRows(2) = dt * Eigen::MatrixXd::Identity(2, 2);
  CHECK((A - Aexp).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((B - Bexp).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(B(0, 0) == doctest::Approx(0.005));
  CHECK(B(2, 0) == doctest::Approx(0.1));
}

TEST_CASE("inverted pendulum discretizes to the hyperbolic closed form") {
  const double g = 9.81, dt = 0.1;
  Eigen::MatrixXd Ac(2, 2);
  Ac << 0, 1, g, 0;
  Eigen::MatrixXd Bc(2, 1);
  Bc << 0, g * 0.5;
  auto [A, B] = exact_discretize(Ac, Bc, dt);
  const double w = std::sqrt(g);
  CHECK(A(0, 0) == doctest::Approx(std::cosh(w * dt)).epsilon(1e-12));
  CHECK(A(0, 1) == doctest::Approx(std::sinh(w * dt) / w).epsilon(1e-12));
  CHECK(A(1, 0) == doctest::Approx(w * std::sinh(w * dt)).epsilon(1e-12));
  // B = Ac^{-1} (A - I) Bc for invertible Ac.
  Eigen::MatrixXd Bexp = Ac.inverse() * (A - Eigen::MatrixXd::Identity(2, 2)) * Bc;
  CHECK((B - Bexp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("discretization composes: two half steps equal one full step") {
  CounterRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd Ac(3, 3), Bc(3, 2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) Ac(i, j) = -2.0 + 4.0 * rng.next_double();
      for (int j = 0; j < 2; ++j) Bc(i, j) = -2.0 + 4.0 * rng.next_double();
    }
    const double dt = 0.05 + rng.next_double();
    auto [A1, B1] = exact_discretize(Ac, Bc, dt);
    auto [Ah, Bh] = exact_discretize(Ac, Bc, dt / 2.0);
    CHECK(((Ah * Ah) - A1).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(((Ah * Bh + Bh) - B1).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("discretization input validation") {
  CHECK_THROWS_AS(exact_discretize(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1), 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(exact_discretize(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1), 0.0),
                  std::invalid_argument);
}

TEST_CASE("single-step trajectory matrices") {
  LinearSystem sys = scalar_system(2.0, 3.0, 5.0);
  TrajectoryMatrices tm = build_trajectory_matrices(sys, 1);
  CHECK(tm.J(0, 0) == 1.0);
  CHECK(tm.J(1, 0) == 2.0);
  CHECK(tm.Hm(0, 0) == 0.0);
  CHECK(tm.Hm(1, 0) == 1.0);
  CHECK(tm.S(0, 0) == 0.0);
  CHECK(tm.S(1, 0) == 3.0);
  CHECK(tm.Cbar(0, 0) == 5.0);
  CHECK(tm.Cbar(0, 1) == 0.0);
}

TEST_CASE("horizon validation") {
  CHECK_THROWS_AS(build_trajectory_matrices(scalar_system(1.0, 1.0), 0), std::invalid_argument);
}

TEST_CASE("noise-to-state block structure for a=2") {
  TrajectoryMatrices tm = build_trajectory_matrices(scalar_system(2.0, 1.0), 3);
  Eigen::MatrixXd expected(4, 3);
  expected << 0, 0, 0, 1, 0, 0, 2, 1, 0, 4, 2, 1;
  CHECK((tm.Hm - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("leading state block of S is exactly zero") {
  CounterRng rng(41);
  LinearSystem sys = random_system(3, 2, 2, 1, rng);
  TrajectoryMatrices tm = build_trajectory_matrices(sys, 5);
  CHECK(tm.S.topRows(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tm.Hm.topRows(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stacked maps reproduce step-by-step simulation") {
  CounterRng rng(43);
  for (int trial = 0; trial < 15; ++trial) {
    const int nx = 2 + static_cast<int>(rng.next_below(2));
    const int nu = 1 + static_cast<int>(rng.next_below(2));
    const int ny = 1 + static_cast<int>(rng.next_below(2));
    const int nz = 1 + static_cast<int>(rng.next_below(2));
    const int T = 3 + static_cast<int>(rng.next_below(4));
    LinearSystem sys = random_system(nx, nu, ny, nz, rng);
    TrajectoryMatrices tm = build_trajectory_matrices(sys, T);

    Eigen::VectorXd x0(nx), w(T * nx), u(T * nu), v(T * ny);
    for (int i = 0; i < x0.size(); ++i) x0(i) = -1.0 + 2.0 * rng.next_double();
    for (int i = 0; i < w.size(); ++i) w(i) = -1.0 + 2.0 * rng.next_double();
    for (int i = 0; i < u.size(); ++i) u(i) = -1.0 + 2.0 * rng.next_double();
    for (int i = 0; i < v.size(); ++i) v(i) = -1.0 + 2.0 * rng.next_double();

    Eigen::VectorXd x_stacked = tm.J * x0 + tm.Hm * w + tm.S * u;
    // Step simulation of x' = A x + B u + w.
    Eigen::VectorXd x = x0;
    double max_rel = 0.0;
    for (int t = 0; t <= T; ++t) {
      Eigen::VectorXd diff = x_stacked.segment(t * nx, nx) - x;
      max_rel = std::max(max_rel, diff.cwiseAbs().maxCoeff() /
                                      std::max(1.0, x.cwiseAbs().maxCoeff()));
      if (t < T) x = sys.A * x + sys.B * u.segment(t * nu, nu) + w.segment(t * nx, nx);
    }
    CHECK(max_rel < 1e-10);

    // Measurement and output identities.
    Eigen::VectorXd y = tm.Cbar * x_stacked + v;
    Eigen::VectorXd z = tm.Dbar * x_stacked + tm.dbar;
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd yt = sys.C * x_stacked.segment(t * nx, nx) + v.segment(t * ny, ny);
      CHECK((y.segment(t * ny, ny) - yt).cwiseAbs().maxCoeff() < 1e-10);
    }
    for (int t = 0; t <= T; ++t) {
      Eigen::VectorXd zt = sys.D * x_stacked.segment(t * nx, nx) + sys.d;
      CHECK((z.segment(t * nz, nz) - zt).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("uncertainty spec validation") {
  LinearSystem sys = scalar_system(1.0, 1.0);
  auto seg = [](double lo, double hi) {
    return HPolytope::box(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi));
  };
  UncertaintySpec ok = make_uncertainty(seg(-1, 1), seg(-1, 1), seg(-1, 1), seg(-1, 1),
                                        seg(-5, 5), 4);
  CHECK_NOTHROW(ok.validate(sys, 4));
  UncertaintySpec bad = ok;
  bad.Z.pop_back();
  CHECK_THROWS_AS(bad.validate(sys, 4), std::invalid_argument);
  UncertaintySpec wrong_dim = ok;
  wrong_dim.W = HPolytope::box(Eigen::VectorXd::Constant(2, -1), Eigen::VectorXd::Constant(2, 1));
  CHECK_THROWS_AS(wrong_dim.validate(sys, 4), std::invalid_argument);
}
