#include "cosched/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace cosched::analysis {

Eigen::MatrixXd observability_matrix(const LinearSystem& sys, const std::vector<int>& sigma_m,
                                     int t) {
  if (t < 1 || t > static_cast<int>(sigma_m.size())) {
    throw std::invalid_argument("observability_matrix: t out of range");
  }
  const int nx = sys.nx(), ny = sys.ny();
  Eigen::MatrixXd O = Eigen::MatrixXd::Zero(t * ny, nx);
  Eigen::MatrixXd Ap = Eigen::MatrixXd::Identity(nx, nx);
  for (int tau = 0; tau < t; ++tau) {
    if (sigma_m[static_cast<size_t>(tau)]) O.middleRows(tau * ny, ny) = sys.C * Ap;
    Ap = sys.A * Ap;
  }
  return O;
}

namespace {

int numeric_rank(const Eigen::MatrixXd& M, Eigen::MatrixXd* null_basis = nullptr) {
  if (M.rows() == 0 || M.cols() == 0) {
    if (null_basis) *null_basis = Eigen::MatrixXd::Identity(M.cols(), M.cols());
    return 0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double thresh = sv.size() > 0 ? 1e-9 * sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > thresh && sv(i) > 0.0) ++rank;
  }
  if (null_basis) *null_basis = svd.matrixV().rightCols(M.cols() - rank);
  return rank;
}

// Row-space basis (orthonormal) of M; x in null(M) iff R x = 0.
Eigen::MatrixXd rowspace_basis(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return Eigen::MatrixXd(0, M.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double thresh = sv.size() > 0 ? 1e-9 * sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > thresh && sv(i) > 0.0) ++rank;
  }
  return svd.matrixV().leftCols(rank).transpose();
}

bool check_hypotheses(const SynthesisProblem& p, int T, std::vector<std::string>& notes) {
  bool ok = true;
  if (!is_origin_symmetric(p.sets.W)) {
    notes.push_back("W is not origin-symmetric");
    ok = false;
  }
  if (!is_origin_symmetric(p.sets.V)) {
    notes.push_back("V is not origin-symmetric");
    ok = false;
  }
  const HPolytope& Z = p.sets.Z[static_cast<size_t>(T)];
  if (Z.rows() > 0 && !is_origin_symmetric(Z)) {
    notes.push_back("Z_T is not origin-symmetric");
    ok = false;
  }
  if (p.sys.d.cwiseAbs().maxCoeff() > 1e-12) {
    notes.push_back("d is nonzero");
    ok = false;
  }
  return ok;
}

}  // namespace

Eigen::MatrixXd nullspace_basis(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd basis;
  numeric_rank(M, &basis);
  return basis;
}

EscapeCheckResult escape_check(const SynthesisProblem& p, const std::vector<int>& sigma_m, int T,
                               lp::Oracle& lp_oracle) {
  EscapeCheckResult res;
  res.hypotheses_ok = check_hypotheses(p, T, res.hypothesis_notes);

  const HPolytope& Z = p.sets.Z[static_cast<size_t>(T)];
  if (Z.rows() == 0) return res;  // whole-space safety: holds vacuously

  const int nx = p.sys.nx();
  Eigen::MatrixXd At = Eigen::MatrixXd::Identity(nx, nx);
  for (int k = 0; k < T; ++k) At = p.sys.A * At;
  const Eigen::MatrixXd DAt = p.sys.D * At;

  Eigen::MatrixXd R(0, nx);
  if (T >= 1) {
    R = rowspace_basis(observability_matrix(p.sys, sigma_m, T));
  }

  constexpr double kStrictMargin = 1e-9;
  for (int f = 0; f < Z.rows(); ++f) {
    // x0 in X0, unobservable, with H_{Z,f} (D A^T x0 + d) >= h_f + margin.
    lp::Problem prob;
    for (int j = 0; j < nx; ++j) prob.add_var(-lp::kInf, lp::kInf, 0.0);
    for (int i = 0; i < p.sets.X0.rows(); ++i) {
      lp::Row row;
      for (int j = 0; j < nx; ++j) {
        if (p.sets.X0.H()(i, j) != 0.0) row.push(j, p.sets.X0.H()(i, j));
      }
      row.sense = lp::Sense::kLe;
      row.rhs = p.sets.X0.h()(i);
      prob.add_row(std::move(row));
    }
    for (int i = 0; i < R.rows(); ++i) {
      lp::Row row;
      for (int j = 0; j < nx; ++j) {
        if (R(i, j) != 0.0) row.push(j, R(i, j));
      }
      row.sense = lp::Sense::kEq;
      row.rhs = 0.0;
      prob.add_row(std::move(row));
    }
    Eigen::VectorXd g = (Z.H().row(f) * DAt).transpose();
    lp::Row esc;
    for (int j = 0; j < nx; ++j) {
      if (g(j) != 0.0) esc.push(j, g(j));
    }
    esc.sense = lp::Sense::kGe;
    esc.rhs = Z.h()(f) - Z.H().row(f).dot(p.sys.d) + kStrictMargin;
    prob.add_row(std::move(esc));

    lp::Solution sol = lp_oracle.solve(prob);
    if (sol.status == lp::Status::kOptimal) {
      res.holds = false;
      res.witness = sol.x;
      res.facet = f;
      return res;
    }
    if (sol.status != lp::Status::kInfeasible) {
      throw std::runtime_error(std::string("escape_check: LP failure: ") +
                               lp::to_string(sol.status));
    }
  }
  return res;
}

std::optional<int> full_dim_escape_time(const SynthesisProblem& p, lp::Oracle& lp_oracle) {
  const int nx = p.sys.nx();
  constexpr double kMinRadius = 1e-6;
  Eigen::MatrixXd At = Eigen::MatrixXd::Identity(nx, nx);
  for (int t = 0; t <= p.T; ++t) {
    const HPolytope& Z = p.sets.Z[static_cast<size_t>(t)];
    const Eigen::MatrixXd DAt = p.sys.D * At;
    for (int f = 0; f < Z.rows(); ++f) {
      // Chebyshev center of {x0 in X0 : H_{Z,f} D A^t x0 >= h_f - H_{Z,f} d}.
      lp::Problem prob;
      for (int j = 0; j < nx; ++j) prob.add_var(-lp::kInf, lp::kInf, 0.0);
      int rad = prob.add_var(0.0, lp::kInf, -1.0);  // maximize radius
      for (int i = 0; i < p.sets.X0.rows(); ++i) {
        lp::Row row;
        for (int j = 0; j < nx; ++j) {
          if (p.sets.X0.H()(i, j) != 0.0) row.push(j, p.sets.X0.H()(i, j));
        }
        row.push(rad, p.sets.X0.H().row(i).norm());
        row.sense = lp::Sense::kLe;
        row.rhs = p.sets.X0.h()(i);
        prob.add_row(std::move(row));
      }
      Eigen::VectorXd g = (Z.H().row(f) * DAt).transpose();
      if (g.norm() == 0.0) continue;
      lp::Row esc;  // -g x0 + |g| rad <= -(h_f - H_{Z,f} d)
      for (int j = 0; j < nx; ++j) {
        if (g(j) != 0.0) esc.push(j, -g(j));
      }
      esc.push(rad, g.norm());
      esc.sense = lp::Sense::kLe;
      esc.rhs = -(Z.h()(f) - Z.H().row(f).dot(p.sys.d));
      prob.add_row(std::move(esc));

      lp::Solution sol = lp_oracle.solve(prob);
      if (sol.status == lp::Status::kOptimal && -sol.objective >= kMinRadius) {
        return t;
      }
      if (sol.status == lp::Status::kUnbounded) return t;  // unbounded radius
    }
    At = p.sys.A * At;
  }
  return std::nullopt;
}

PruneDecision prune_schedule(const SynthesisProblem& p, const std::vector<int>& partial_sigma_m,
                             lp::Oracle& lp_oracle) {
  if (!p.options.prune_with_observability) return PruneDecision::kKeep;
  std::vector<std::string> notes;
  std::optional<int> T1 = full_dim_escape_time(p, lp_oracle);
  if (!T1 || *T1 < 1) return PruneDecision::kKeep;
  if (!check_hypotheses(p, *T1, notes)) return PruneDecision::kKeep;
  std::vector<int> completion(partial_sigma_m);
  for (auto& v : completion) {
    if (v < 0) v = 1;
  }
  EscapeCheckResult chk = escape_check(p, completion, *T1, lp_oracle);
  return chk.holds ? PruneDecision::kKeep : PruneDecision::kPrune;
}

RedundancyReport redundancy_diagnostic(const Schedule& s) {
  RedundancyReport rep;
  std::vector<int> tc = s.ctrl_times();
  std::vector<int> tmv = s.meas_times();
  for (size_t i = 0; i + 1 < tc.size(); ++i) {
    bool has_meas = false;
    for (int m : tmv) {
      if (m > tc[i] && m <= tc[i + 1]) {
        has_meas = true;
        break;
      }
    }
    if (!has_meas) rep.flagged_pairs.emplace_back(tc[i], tc[i + 1]);
  }
  rep.exceeds_cap = static_cast<int>(tc.size()) > static_cast<int>(tmv.size()) + 1;
  return rep;
}

ObservabilityReport observability_report(const SynthesisProblem& p,
                                         const std::vector<int>& sigma_m, lp::Oracle& lp_oracle) {
  ObservabilityReport rep;
  for (int t = 1; t <= p.T; ++t) {
    rep.ranks.push_back(numeric_rank(observability_matrix(p.sys, sigma_m, t)));
  }
  rep.nullspace_basis = nullspace_basis(observability_matrix(p.sys, sigma_m, p.T));
  rep.T1 = full_dim_escape_time(p, lp_oracle);
  return rep;
}

}  // namespace cosched::analysis
