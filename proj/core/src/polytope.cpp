#include "cosched/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace cosched {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

HPolytope::HPolytope(Eigen::MatrixXd H, Eigen::VectorXd h, std::string label)
    : H_(std::move(H)), h_(std::move(h)), label_(std::move(label)) {
  require(H_.rows() == h_.size(), "HPolytope: H row count must equal length of h");
  require(H_.cols() >= 1, "HPolytope: dim must be >= 1");
  require(H_.allFinite() && h_.allFinite(), "HPolytope: NaN/Inf entries");
}

HPolytope HPolytope::whole_space(int dim, std::string label) {
  require(dim >= 1, "whole_space: dim must be >= 1");
  return HPolytope(Eigen::MatrixXd(0, dim), Eigen::VectorXd(0), std::move(label));
}

HPolytope HPolytope::box(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                         std::string label) {
  require(lb.size() == ub.size() && lb.size() >= 1, "box: lb/ub size mismatch");
  require((lb.array() <= ub.array()).all(), "box: lb > ub");
  const int d = static_cast<int>(lb.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * d, d);
  Eigen::VectorXd h(2 * d);
  for (int i = 0; i < d; ++i) {
    H(2 * i, i) = 1.0;
    h(2 * i) = ub(i);
    H(2 * i + 1, i) = -1.0;
    h(2 * i + 1) = -lb(i);
  }
  return HPolytope(std::move(H), std::move(h), std::move(label));
}

HPolytope HPolytope::point(const Eigen::VectorXd& x, std::string label) {
  return box(x, x, std::move(label));
}

bool HPolytope::contains(const Eigen::VectorXd& x, double tol) const {
  require(x.size() == dim(), "contains: dimension mismatch");
  if (rows() == 0) return true;
  return ((H_ * x - h_).array() <= tol).all();
}

HPolytope product(const std::vector<HPolytope>& parts) {
  require(!parts.empty(), "empty product");
  int dim = 0, rows = 0;
  for (const auto& p : parts) {
    dim += p.dim();
    rows += p.rows();
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(rows, dim);
  Eigen::VectorXd h(rows);
  int r = 0, c = 0;
  for (const auto& p : parts) {
    H.block(r, c, p.rows(), p.dim()) = p.H();
    h.segment(r, p.rows()) = p.h();
    r += p.rows();
    c += p.dim();
  }
  return HPolytope(std::move(H), std::move(h));
}

SupportResult support(const HPolytope& p, const Eigen::VectorXd& direction, lp::Oracle& lp_oracle) {
  require(direction.size() == p.dim(), "support: dimension mismatch");
  require(direction.norm() > 0.0, "support: zero direction");
  lp::Problem prob;
  for (int j = 0; j < p.dim(); ++j) prob.add_var(-lp::kInf, lp::kInf, -direction(j));
  for (int i = 0; i < p.rows(); ++i) {
    lp::Row row;
    for (int j = 0; j < p.dim(); ++j) {
      if (p.H()(i, j) != 0.0) row.push(j, p.H()(i, j));
    }
    row.sense = lp::Sense::kLe;
    row.rhs = p.h()(i);
    prob.add_row(std::move(row));
  }
  lp::Solution sol = lp_oracle.solve(prob);
  SupportResult res;
  if (sol.status == lp::Status::kUnbounded) {
    res.bounded = false;
    res.ray = sol.ray;
    return res;
  }
  if (sol.status != lp::Status::kOptimal) {
    throw std::runtime_error(std::string("support: LP failure: ") + lp::to_string(sol.status));
  }
  res.value = direction.dot(sol.x);
  res.maximizer = sol.x;
  res.dual = -sol.row_duals;
  for (int i = 0; i < res.dual.size(); ++i) {
    if (res.dual(i) < 0.0 && res.dual(i) > -1e-9) res.dual(i) = 0.0;
  }
  return res;
}

std::optional<ContainmentCertificate> check_containment(const HPolytope& inner,
                                                        const HPolytope& outer, lp::Oracle& lp,
                                                        double tol_cert) {
  require(inner.dim() == outer.dim(), "check_containment: dimension mismatch");
  ContainmentCertificate cert;
  cert.Lambda = Eigen::MatrixXd::Zero(outer.rows(), inner.rows());
  for (int i = 0; i < outer.rows(); ++i) {
    Eigen::VectorXd g = outer.H().row(i).transpose();
    if (g.norm() == 0.0) {
      if (outer.h()(i) < -tol_cert) return std::nullopt;  // 0 <= h must hold
      continue;
    }
    SupportResult sr = support(inner, g, lp);
    if (!sr.bounded || sr.value > outer.h()(i) + tol_cert) return std::nullopt;
    cert.Lambda.row(i) = sr.dual.transpose();
  }
  if (inner.rows() > 0) {
    cert.residual_eq = (cert.Lambda * inner.H() - outer.H()).cwiseAbs().maxCoeff();
    Eigen::VectorXd slack = cert.Lambda * inner.h() - outer.h();
    cert.residual_ineq = slack.size() > 0 ? std::max(0.0, slack.maxCoeff()) : 0.0;
  } else {
    // Whole-space inner: only a whole-space outer can contain it.
    cert.residual_eq = outer.rows() == 0 ? 0.0 : outer.H().cwiseAbs().maxCoeff();
    if (cert.residual_eq > tol_cert) return std::nullopt;
  }
  if (outer.rows() == 0) {
    cert.residual_eq = 0.0;
    cert.residual_ineq = 0.0;
  }
  if (!cert.valid(tol_cert)) return std::nullopt;
  return cert;
}

std::vector<Eigen::VectorXd> vertices(const HPolytope& p) {
  const int d = p.dim();
  require(d <= 6, "vertices: unsupported dimension (> 6)");
  lp::SimplexSolver solver;
  for (int j = 0; j < d; ++j) {
    for (double sgn : {1.0, -1.0}) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
      dir(j) = sgn;
      if (!support(p, dir, solver).bounded) {
        throw std::invalid_argument("vertices: polytope is unbounded");
      }
    }
  }
  const int m = p.rows();
  std::vector<Eigen::VectorXd> out;
  std::vector<int> comb(d);
  // Iterate over all d-subsets of rows.
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == d) {
      Eigen::MatrixXd A(d, d);
      Eigen::VectorXd b(d);
      for (int t = 0; t < d; ++t) {
        A.row(t) = p.H().row(comb[t]);
        b(t) = p.h()(comb[t]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < d) return;
      Eigen::VectorXd x = lu.solve(b);
      if (!x.allFinite() || !p.contains(x, 1e-9)) return;
      for (const auto& v : out) {
        if ((v - x).cwiseAbs().maxCoeff() <= 1e-9) return;
      }
      out.push_back(x);
      return;
    }
    for (int i = start; i <= m - (d - k); ++i) {
      comb[k] = i;
      rec(i + 1, k + 1);
    }
  };
  if (m >= d) rec(0, 0);
  return out;
}

Eigen::VectorXd sample(const HPolytope& p, SampleMode mode, CounterRng& rng,
                       const SampleOptions& opts) {
  if (mode == SampleMode::kVertex) {
    auto verts = vertices(p);
    require(!verts.empty(), "sample: polytope has no vertices");
    return verts[static_cast<size_t>(rng.next_below(verts.size()))];
  }
  lp::SimplexSolver local;
  lp::Oracle& oracle = opts.oracle ? *opts.oracle : static_cast<lp::Oracle&>(local);
  const int d = p.dim();
  Eigen::VectorXd lb(d), ub(d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    dir(j) = 1.0;
    SupportResult hi = support(p, dir, oracle);
    dir(j) = -1.0;
    SupportResult lo = support(p, dir, oracle);
    require(hi.bounded && lo.bounded, "sample: polytope is unbounded");
    ub(j) = hi.value;
    lb(j) = -lo.value;
  }
  long tried = 0;
  while (tried < opts.max_proposals) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = lb(j) + (ub(j) - lb(j)) * rng.next_double();
    ++tried;
    if (p.contains(x, 1e-9)) return x;
  }
  std::ostringstream msg;
  msg << "sample: rejection budget exceeded (" << opts.max_proposals
      << " proposals, acceptance rate < " << 1.0 / static_cast<double>(opts.max_proposals) << ")";
  throw std::runtime_error(msg.str());
}

Eigen::VectorXd sample(const HPolytope& p, SampleMode mode, std::uint64_t seed,
                       const SampleOptions& opts) {
  CounterRng rng(seed);
  return sample(p, mode, rng, opts);
}

std::optional<BoxInfo> as_axis_box(const HPolytope& p) {
  const int d = p.dim();
  BoxInfo info;
  info.lb = Eigen::VectorXd::Constant(d, -lp::kInf);
  info.ub = Eigen::VectorXd::Constant(d, lp::kInf);
  info.lb_row.assign(d, -1);
  info.ub_row.assign(d, -1);
  for (int i = 0; i < p.rows(); ++i) {
    int nz = -1;
    for (int j = 0; j < d; ++j) {
      if (p.H()(i, j) != 0.0) {
        if (nz >= 0) return std::nullopt;  // more than one coordinate in this row
        nz = j;
      }
    }
    if (nz < 0) continue;  // all-zero row constrains nothing (assuming h >= 0)
    double c = p.H()(i, nz);
    double bound = p.h()(i) / c;
    if (c > 0.0) {
      if (bound < info.ub(nz)) {
        info.ub(nz) = bound;
        info.ub_row[nz] = i;
      }
    } else {
      if (bound > info.lb(nz)) {
        info.lb(nz) = bound;
        info.lb_row[nz] = i;
      }
    }
  }
  return info;
}

bool is_origin_symmetric(const HPolytope& p, double tol) {
  const int m = p.rows();
  Eigen::MatrixXd N(m, p.dim() + 1);
  for (int i = 0; i < m; ++i) {
    double nrm = p.H().row(i).norm();
    if (nrm == 0.0) return false;
    N.row(i).head(p.dim()) = p.H().row(i) / nrm;
    N(i, p.dim()) = p.h()(i) / nrm;
  }
  for (int i = 0; i < m; ++i) {
    bool found = false;
    for (int j = 0; j < m && !found; ++j) {
      double dg = (N.row(i).head(p.dim()) + N.row(j).head(p.dim())).cwiseAbs().maxCoeff();
      double dh = std::abs(N(i, p.dim()) - N(j, p.dim()));
      found = dg <= tol && dh <= tol;
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace cosched
