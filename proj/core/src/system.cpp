#include "cosched/system.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace cosched {

void LinearSystem::validate() const {
  if (A.rows() != A.cols()) throw std::invalid_argument("system: A must be square");
  if (B.rows() != A.rows()) throw std::invalid_argument("system: B row count != nx");
  if (C.cols() != A.rows()) throw std::invalid_argument("system: C column count != nx");
  if (D.cols() != A.rows()) throw std::invalid_argument("system: D column count != nx");
  if (d.size() != D.rows()) throw std::invalid_argument("system: d length != nz");
  if (A.rows() < 1 || B.cols() < 1 || C.rows() < 1 || D.rows() < 1) {
    throw std::invalid_argument("system: all dimensions must be positive");
  }
  if (!(A.allFinite() && B.allFinite() && C.allFinite() && D.allFinite() && d.allFinite())) {
    throw std::invalid_argument("system: NaN/Inf entries");
  }
}

void UncertaintySpec::validate(const LinearSystem& sys, int T) const {
  if (W.dim() != sys.nx()) throw std::invalid_argument("sets: W.dim != nx");
  if (V.dim() != sys.ny()) throw std::invalid_argument("sets: V.dim != ny");
  if (X0.dim() != sys.nx()) throw std::invalid_argument("sets: X0.dim != nx");
  if (U.dim() != sys.nu()) throw std::invalid_argument("sets: U.dim != nu");
  if (static_cast<int>(Z.size()) != T + 1) {
    throw std::invalid_argument("sets: Z list must have length T+1");
  }
  for (const auto& z : Z) {
    if (z.dim() != sys.nz()) throw std::invalid_argument("sets: Z_t.dim != nz");
  }
}

UncertaintySpec make_uncertainty(HPolytope W, HPolytope V, HPolytope X0, HPolytope U,
                                 HPolytope Z_all, int T, bool terminal_in_X0) {
  std::vector<HPolytope> zs(static_cast<size_t>(T) + 1, Z_all);
  return UncertaintySpec{std::move(W), std::move(V), std::move(X0), std::move(U), std::move(zs),
                         terminal_in_X0};
}

UncertaintySpec make_uncertainty(HPolytope W, HPolytope V, HPolytope X0, HPolytope U,
                                 std::vector<HPolytope> Z_list, int T, bool terminal_in_X0) {
  if (static_cast<int>(Z_list.size()) != T + 1) {
    throw std::invalid_argument("make_uncertainty: Z list must have length T+1");
  }
  return UncertaintySpec{std::move(W), std::move(V), std::move(X0), std::move(U),
                         std::move(Z_list), terminal_in_X0};
}

namespace {

// Scaling-and-squaring Taylor exponential; terms stop once the next term's
// max-norm drops below 1e-15.
Eigen::MatrixXd expm(Eigen::MatrixXd M) {
  const int n = static_cast<int>(M.rows());
  int squarings = 0;
  double norm = M.cwiseAbs().maxCoeff();
  while (norm > 0.5) {
    M *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 64; ++k) {
    term = (term * M) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-15) break;
  }
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> exact_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc,
                                                             double dt) {
  if (Ac.rows() != Ac.cols()) throw std::invalid_argument("exact_discretize: Ac must be square");
  if (Bc.rows() != Ac.rows()) throw std::invalid_argument("exact_discretize: Bc row mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("exact_discretize: dt must be positive");
  const int n = static_cast<int>(Ac.rows());
  const int m = static_cast<int>(Bc.cols());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * dt;
  aug.topRightCorner(n, m) = Bc * dt;
  Eigen::MatrixXd E = expm(aug);
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

TrajectoryMatrices build_trajectory_matrices(const LinearSystem& sys, int T) {
  sys.validate();
  if (T < 1) throw std::invalid_argument("build_trajectory_matrices: T must be >= 1");
  const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny(), nz = sys.nz();

  TrajectoryMatrices tm;
  tm.T = T;
  tm.nx = nx;
  tm.nu = nu;
  tm.ny = ny;
  tm.nz = nz;

  // Powers of A up to A^T.
  std::vector<Eigen::MatrixXd> Ap(static_cast<size_t>(T) + 1);
  Ap[0] = Eigen::MatrixXd::Identity(nx, nx);
  for (int k = 1; k <= T; ++k) Ap[k] = sys.A * Ap[k - 1];

  tm.J.resize((T + 1) * nx, nx);
  for (int i = 0; i <= T; ++i) tm.J.middleRows(i * nx, nx) = Ap[i];

  tm.Hm = Eigen::MatrixXd::Zero((T + 1) * nx, T * nx);
  tm.S = Eigen::MatrixXd::Zero((T + 1) * nx, T * nu);
  for (int i = 1; i <= T; ++i) {
    for (int j = 0; j < i; ++j) {
      tm.Hm.block(i * nx, j * nx, nx, nx) = Ap[i - 1 - j];
      tm.S.block(i * nx, j * nu, nx, nu) = Ap[i - 1 - j] * sys.B;
    }
  }

  tm.Cbar = Eigen::MatrixXd::Zero(T * ny, (T + 1) * nx);
  for (int t = 0; t < T; ++t) tm.Cbar.block(t * ny, t * nx, ny, nx) = sys.C;

  tm.Dbar = Eigen::MatrixXd::Zero((T + 1) * nz, (T + 1) * nx);
  tm.dbar.resize((T + 1) * nz);
  for (int t = 0; t <= T; ++t) {
    tm.Dbar.block(t * nz, t * nx, nz, nx) = sys.D;
    tm.dbar.segment(t * nz, nz) = sys.d;
  }
  return tm;
}

}  // namespace cosched
