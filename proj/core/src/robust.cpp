#include "cosched/robust.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cosched::robust {

RobustProgram build_robust_program(const LinearSystem& sys, const UncertaintySpec& sets, int T,
                                   bool terminal_in_X0) {
  sets.validate(sys, T);
  RobustProgram prog;
  prog.tm = build_trajectory_matrices(sys, T);
  const auto& tm = prog.tm;
  const int nx = tm.nx, nu = tm.nu, ny = tm.ny, nz = tm.nz;
  const int nW = sets.W.rows(), nV = sets.V.rows(), nX0 = sets.X0.rows();
  prog.n_eta = T * (nx + ny) + nx;

  prog.Yhat.resize(T * ny, prog.n_eta);
  prog.Yhat.leftCols(T * nx) = tm.Cbar * tm.Hm;
  prog.Yhat.middleCols(T * nx, T * ny) = Eigen::MatrixXd::Identity(T * ny, T * ny);
  prog.Yhat.rightCols(nx) = tm.Cbar * tm.J;

  prog.block_sets = {sets.W, sets.V, sets.X0};
  for (const auto& s : prog.block_sets) prog.block_boxes.push_back(as_axis_box(s));
  for (int t = 0; t < T; ++t) prog.blocks.push_back({t * nx, nx, 0});
  for (int t = 0; t < T; ++t) prog.blocks.push_back({T * nx + t * ny, ny, 1});
  prog.blocks.push_back({T * (nx + ny), nx, 2});

  prog.H_eta = Eigen::MatrixXd::Zero(T * (nW + nV) + nX0, prog.n_eta);
  prog.h_eta.resize(T * (nW + nV) + nX0);
  int r0 = 0;
  for (int t = 0; t < T; ++t, r0 += nW) {
    prog.H_eta.block(r0, t * nx, nW, nx) = sets.W.H();
    prog.h_eta.segment(r0, nW) = sets.W.h();
  }
  for (int t = 0; t < T; ++t, r0 += nV) {
    prog.H_eta.block(r0, T * nx + t * ny, nV, ny) = sets.V.H();
    prog.h_eta.segment(r0, nV) = sets.V.h();
  }
  prog.H_eta.block(r0, T * (nx + ny), nX0, nx) = sets.X0.H();
  prog.h_eta.segment(r0, nX0) = sets.X0.h();

  // Free response [Hm 0 J] of the stacked state as a map over eta.
  Eigen::MatrixXd X_free = Eigen::MatrixXd::Zero((T + 1) * nx, prog.n_eta);
  X_free.leftCols(T * nx) = tm.Hm;
  X_free.rightCols(nx) = tm.J;

  // Safety rows: H_{Z_t} z_t <= h_{Z_t} for t = 0..T.
  const Eigen::MatrixXd DS = tm.Dbar * tm.S;        // (T+1)nz x T nu
  const Eigen::MatrixXd DX = tm.Dbar * X_free;      // (T+1)nz x n_eta
  for (int t = 0; t <= T; ++t) {
    const HPolytope& Z = sets.Z[static_cast<size_t>(t)];
    for (int f = 0; f < Z.rows(); ++f) {
      RobustRow row;
      Eigen::RowVectorXd g = Z.H().row(f);
      row.base = (g * DX.middleRows(t * nz, nz)).transpose();
      row.L = (g * DS.middleRows(t * nz, nz)).transpose();
      row.k = Z.h()(f) - g.dot(sys.d);
      row.kind = RowKind::kSafety;
      row.time = t;
      row.facet = f;
      prog.rows.push_back(std::move(row));
      ++prog.n_safety;
    }
  }
  // Input rows: H_U u_t <= h_U for t = 0..T-1; u = Q yhat + r exactly.
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < sets.U.rows(); ++f) {
      RobustRow row;
      row.base = Eigen::VectorXd::Zero(prog.n_eta);
      row.L = Eigen::VectorXd::Zero(T * nu);
      row.L.segment(t * nu, nu) = sets.U.H().row(f).transpose();
      row.k = sets.U.h()(f);
      row.kind = RowKind::kInput;
      row.time = t;
      row.facet = f;
      prog.rows.push_back(std::move(row));
      ++prog.n_input;
    }
  }
  // Optional terminal rows: x_T in X0.
  if (terminal_in_X0) {
    for (int f = 0; f < nX0; ++f) {
      RobustRow row;
      Eigen::RowVectorXd g = sets.X0.H().row(f);
      row.base = (g * X_free.middleRows(T * nx, nx)).transpose();
      row.L = (g * tm.S.middleRows(T * nx, nx)).transpose();
      row.k = sets.X0.h()(f);
      row.kind = RowKind::kTerminal;
      row.time = T;
      row.facet = f;
      prog.rows.push_back(std::move(row));
      ++prog.n_terminal;
    }
  }
  return prog;
}

GainBasis GainBasis::full(int T, int nu, int ny) {
  GainBasis b;
  b.T = T;
  b.nu = nu;
  b.ny = ny;
  b.qmap.assign(static_cast<size_t>(T), std::vector<int>(static_cast<size_t>(T), -1));
  b.rmap.assign(static_cast<size_t>(T), -1);
  for (int t = 0; t < T; ++t) {
    for (int tau = 0; tau <= t; ++tau) b.qmap[t][tau] = b.n_q_blocks++;
    b.rmap[t] = b.n_r_blocks++;
  }
  return b;
}

GainBasis GainBasis::for_schedule(const Schedule& s, int nu, int ny) {
  s.validate();
  const int T = s.T();
  GainBasis b;
  b.T = T;
  b.nu = nu;
  b.ny = ny;
  b.qmap.assign(static_cast<size_t>(T), std::vector<int>(static_cast<size_t>(T), -1));
  b.rmap.assign(static_cast<size_t>(T), -1);
  // Representative control block for each time: last control time <= t.
  std::vector<int> rep(static_cast<size_t>(T), -1);
  int last = -1;
  std::vector<int> rep_q_ids;  // per control time, base id of its q-block row
  std::vector<int> rep_r_ids;
  std::vector<std::vector<int>> q_ids;  // q_ids[control index][tau]
  for (int t = 0; t < T; ++t) {
    if (s.sigma_c[static_cast<size_t>(t)]) last = t;
    rep[static_cast<size_t>(t)] = last;
  }
  // Allocate variable blocks per (control time, measured tau <= control time).
  std::vector<int> ctrl = s.ctrl_times();
  std::vector<std::vector<int>> alloc(ctrl.size());
  for (size_t ci = 0; ci < ctrl.size(); ++ci) {
    alloc[ci].assign(static_cast<size_t>(T), -1);
    for (int tau = 0; tau <= ctrl[ci]; ++tau) {
      if (s.sigma_m[static_cast<size_t>(tau)]) alloc[ci][static_cast<size_t>(tau)] = b.n_q_blocks++;
    }
  }
  std::vector<int> rvar(ctrl.size());
  for (size_t ci = 0; ci < ctrl.size(); ++ci) rvar[ci] = b.n_r_blocks++;
  // Map every (t, tau) onto its representative's variable block.
  std::vector<int> ctrl_index(static_cast<size_t>(T), -1);
  for (size_t ci = 0; ci < ctrl.size(); ++ci) ctrl_index[static_cast<size_t>(ctrl[ci])] = static_cast<int>(ci);
  for (int t = 0; t < T; ++t) {
    int s_rep = rep[static_cast<size_t>(t)];
    if (s_rep < 0) continue;  // no control yet: u_t = 0, Q rows zero
    int ci = ctrl_index[static_cast<size_t>(s_rep)];
    for (int tau = 0; tau <= t; ++tau) {
      // Measurements after the representative control time cannot reach u_t.
      if (tau <= s_rep) b.qmap[t][static_cast<size_t>(tau)] = alloc[static_cast<size_t>(ci)][static_cast<size_t>(tau)];
    }
    b.rmap[t] = rvar[static_cast<size_t>(ci)];
  }
  return b;
}

GainsQr GainBasis::expand(const Eigen::VectorXd& vars) const {
  GainsQr g;
  g.Q = Eigen::MatrixXd::Zero(T * nu, T * ny);
  g.r = Eigen::VectorXd::Zero(T * nu);
  const int bq = nu * ny;
  for (int t = 0; t < T; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      int id = qmap[static_cast<size_t>(t)][static_cast<size_t>(tau)];
      if (id < 0) continue;
      for (int a = 0; a < nu; ++a) {
        for (int bcol = 0; bcol < ny; ++bcol) {
          g.Q(t * nu + a, tau * ny + bcol) = vars(id * bq + a * ny + bcol);
        }
      }
    }
    int rid = rmap[static_cast<size_t>(t)];
    if (rid >= 0) g.r.segment(t * nu, nu) = vars.segment(n_q_blocks * bq + rid * nu, nu);
  }
  return g;
}

BlockSupport block_support(const RobustProgram& prog, int block_index, const Eigen::VectorXd& phi,
                           lp::Oracle& oracle) {
  const EtaBlock& blk = prog.blocks[static_cast<size_t>(block_index)];
  const auto& box = prog.block_boxes[static_cast<size_t>(blk.set_index)];
  const HPolytope& set = prog.block_sets[static_cast<size_t>(blk.set_index)];
  BlockSupport out;
  if (box) {
    out.value = 0.0;
    out.maximizer = Eigen::VectorXd::Zero(blk.dim);
    out.dual = Eigen::VectorXd::Zero(set.rows());
    for (int j = 0; j < blk.dim; ++j) {
      double g = phi(j);
      if (g > 0.0) {
        if (!std::isfinite(box->ub(j))) {
          out.bounded = false;
          out.ray = Eigen::VectorXd::Zero(blk.dim);
          out.ray(j) = 1.0;
          return out;
        }
        out.value += g * box->ub(j);
        out.maximizer(j) = box->ub(j);
        int row = box->ub_row[static_cast<size_t>(j)];
        out.dual(row) += g / set.H()(row, j);
      } else if (g < 0.0) {
        if (!std::isfinite(box->lb(j))) {
          out.bounded = false;
          out.ray = Eigen::VectorXd::Zero(blk.dim);
          out.ray(j) = -1.0;
          return out;
        }
        out.value += g * box->lb(j);
        out.maximizer(j) = box->lb(j);
        int row = box->lb_row[static_cast<size_t>(j)];
        out.dual(row) += g / set.H()(row, j);
      } else {
        // Zero coefficient: any feasible value; take the closest to zero.
        double v = 0.0;
        if (std::isfinite(box->lb(j)) && box->lb(j) > 0.0) v = box->lb(j);
        if (std::isfinite(box->ub(j)) && box->ub(j) < 0.0) v = box->ub(j);
        out.maximizer(j) = v;
      }
    }
    return out;
  }
  if (phi.norm() == 0.0) {
    // Any feasible point works; fall back to the Chebyshev-ish LP-free path:
    // solve a feasibility LP once.
    SupportResult sr = support(set, Eigen::VectorXd::Ones(blk.dim), oracle);
    out.value = 0.0;
    out.maximizer = sr.bounded ? sr.maximizer : Eigen::VectorXd::Zero(blk.dim);
    out.dual = Eigen::VectorXd::Zero(set.rows());
    return out;
  }
  SupportResult sr = support(set, phi, oracle);
  if (!sr.bounded) {
    out.bounded = false;
    out.ray = sr.ray;
    return out;
  }
  out.value = sr.value;
  out.maximizer = sr.maximizer;
  out.dual = sr.dual;
  return out;
}

RowEvaluation evaluate_row(const RobustProgram& prog, const RobustRow& row, const GainsQr& gains,
                           lp::Oracle& oracle) {
  // phi = base + Yhat' Q' L as a row over eta.
  Eigen::VectorXd LQ = gains.Q.transpose() * row.L;          // T ny
  Eigen::VectorXd phi = row.base + prog.Yhat.transpose() * LQ;  // n_eta
  RowEvaluation ev;
  ev.eta_star = Eigen::VectorXd::Zero(prog.n_eta);
  double total = row.L.dot(gains.r);
  for (size_t bi = 0; bi < prog.blocks.size(); ++bi) {
    const EtaBlock& blk = prog.blocks[bi];
    BlockSupport bs = block_support(prog, static_cast<int>(bi), phi.segment(blk.offset, blk.dim),
                                    oracle);
    if (!bs.bounded) {
      ev.bounded = false;
      ev.eta_ray = Eigen::VectorXd::Zero(prog.n_eta);
      ev.eta_ray.segment(blk.offset, blk.dim) = bs.ray;
      ev.ray_block = static_cast<int>(bi);
      return ev;
    }
    total += bs.value;
    ev.eta_star.segment(blk.offset, blk.dim) = bs.maximizer;
  }
  ev.value = total;
  return ev;
}

lp::Row expand_cut(const RobustProgram& prog, const GainBasis& basis, const Cut& cut,
                   int var_offset) {
  const RobustRow& rr = prog.rows[static_cast<size_t>(cut.row_index)];
  const int nu = basis.nu, ny = basis.ny, bq = nu * ny;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(basis.var_count());
  for (int t = 0; t < basis.T; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      int id = basis.qmap[static_cast<size_t>(t)][static_cast<size_t>(tau)];
      if (id < 0) continue;
      for (int a = 0; a < nu; ++a) {
        double la = rr.L(t * nu + a);
        if (la == 0.0) continue;
        for (int bcol = 0; bcol < ny; ++bcol) {
          coeff(id * bq + a * ny + bcol) += la * cut.yeta(tau * ny + bcol);
        }
      }
    }
    if (!cut.is_ray) {
      int rid = basis.rmap[static_cast<size_t>(t)];
      if (rid >= 0) {
        for (int a = 0; a < nu; ++a) {
          coeff(basis.n_q_blocks * bq + rid * nu + a) += rr.L(t * nu + a);
        }
      }
    }
  }
  lp::Row out;
  for (int j = 0; j < coeff.size(); ++j) {
    if (coeff(j) != 0.0) out.push(var_offset + j, coeff(j));
  }
  out.sense = lp::Sense::kLe;
  out.rhs = cut.rhs;
  return out;
}

namespace {
// Oldest cuts are dropped once the shared pool outgrows the cap; every cut is
// redundant information (the separation oracle can regenerate it), so this
// only affects speed, deterministically.
constexpr size_t kPoolCap = 4000;
}  // namespace

void trim_pool(std::vector<Cut>& pool) {
  if (pool.size() > kPoolCap) {
    pool.erase(pool.begin(), pool.begin() + static_cast<long>(pool.size() - kPoolCap));
  }
}

MasterResult solve_master(const RobustProgram& prog, const GainBasis& basis, lp::Oracle& oracle,
                          std::vector<Cut>& pool, const MasterOptions& opts) {
  MasterResult res;
  // Elastic master: minimize the common violation e over the cut outer
  // approximation, with a small centering reward on the margin s. The robust
  // program (restricted to |gains| <= gain_bound) is infeasible exactly when
  // the elastic optimum stays above tolerance, which keeps verdicts stable
  // where a hard-infeasibility simplex proof would be tolerance-brittle.
  lp::Problem master;
  for (int j = 0; j < basis.var_count(); ++j) {
    master.add_var(-opts.gain_bound, opts.gain_bound, 0.0);
  }
  const int elastic_var = master.add_var(0.0, lp::kInf, 1.0);
  const int margin_var = opts.stabilize ? master.add_var(0.0, 10.0, -1e-3) : -1;
  const double feas_eps = 1e-7;
  lp::IncrementalSolver inc(std::move(master), opts.lp_cfg);
  size_t pool_used = 0;
  auto append_pool = [&] {
    std::vector<lp::Row> rows;
    for (; pool_used < pool.size(); ++pool_used) {
      lp::Row row = expand_cut(prog, basis, pool[pool_used]);
      double scale = 1.0;
      for (double v : row.val) scale = std::max(scale, std::abs(v));
      row.push(elastic_var, -scale);
      if (margin_var >= 0) row.push(margin_var, scale);
      rows.push_back(std::move(row));
    }
    inc.add_rows(rows);
  };
  append_pool();

  const auto t_start = std::chrono::steady_clock::now();
  for (int round = 0; round < opts.max_rounds; ++round) {
    res.rounds = round + 1;
    lp::Solution sol = inc.solve();
    ++res.lp_calls;
    if (sol.status != lp::Status::kOptimal) {
      res.status = sol.status;
      return res;
    }
    if (sol.x(elastic_var) > feas_eps) {
      res.status = lp::Status::kInfeasible;
      return res;
    }
    GainsQr gains = basis.expand(sol.x.head(basis.var_count()));
    if (opts.pool_only) {
      // Relaxed verdict against the accumulated cuts only; callers use this
      // for sound pruning, never for acceptance.
      res.status = lp::Status::kOptimal;
      res.gains = std::move(gains);
      res.var_values = sol.x.head(basis.var_count());
      return res;
    }
    if (opts.time_budget > 0.0 && round > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count() >
            opts.time_budget) {
      res.status = lp::Status::kIterLimit;
      return res;
    }
    int violated = 0;
    auto push_unique = [&pool](Cut cut) {
      for (const Cut& c : pool) {
        if (c.row_index == cut.row_index && c.is_ray == cut.is_ray &&
            std::abs(c.rhs - cut.rhs) <= 1e-12 &&
            (c.yeta - cut.yeta).cwiseAbs().maxCoeff() <= 1e-12) {
          return false;  // duplicate: tolerance wobble, skip
        }
      }
      pool.push_back(std::move(cut));
      return true;
    };
    for (size_t ri = 0; ri < prog.rows.size(); ++ri) {
      const RobustRow& rr = prog.rows[ri];
      RowEvaluation ev = evaluate_row(prog, rr, gains, oracle);
      if (!ev.bounded) {
        Cut cut;
        cut.row_index = static_cast<int>(ri);
        cut.yeta = prog.Yhat * ev.eta_ray;
        cut.rhs = -rr.base.dot(ev.eta_ray);
        cut.is_ray = true;
        if (push_unique(std::move(cut))) ++violated;
        continue;
      }
      double tol = opts.tol_sep * std::max({1.0, std::abs(rr.k), std::abs(ev.value)});
      if (ev.value > rr.k + tol) {
        Cut cut;
        cut.row_index = static_cast<int>(ri);
        cut.yeta = prog.Yhat * ev.eta_star;
        cut.rhs = rr.k - rr.base.dot(ev.eta_star);
        cut.is_ray = false;
        if (push_unique(std::move(cut))) ++violated;
      }
    }
    if (violated == 0) {
      res.status = lp::Status::kOptimal;
      res.gains = std::move(gains);
      res.var_values = sol.x.head(basis.var_count());
      return res;
    }
    res.cuts_added += violated;
    append_pool();
  }
  res.status = lp::Status::kIterLimit;
  return res;
}

Multipliers reconstruct_multipliers(const RobustProgram& prog, const GainsQr& gains,
                                    lp::Oracle& oracle, double tol) {
  const int n_eta_rows = static_cast<int>(prog.h_eta.size());
  Multipliers mult;
  mult.Lambda = Eigen::MatrixXd::Zero(prog.n_safety, n_eta_rows);
  mult.Gamma = Eigen::MatrixXd::Zero(prog.n_input, n_eta_rows);
  mult.Theta = Eigen::MatrixXd::Zero(prog.n_terminal, n_eta_rows);

  // Row offsets of each block's constraints within H_eta.
  std::vector<int> row_offset(prog.blocks.size());
  int acc = 0;
  for (size_t bi = 0; bi < prog.blocks.size(); ++bi) {
    row_offset[bi] = acc;
    acc += prog.block_sets[static_cast<size_t>(prog.blocks[bi].set_index)].rows();
  }

  int i_safety = 0, i_input = 0, i_terminal = 0;
  for (const RobustRow& rr : prog.rows) {
    Eigen::VectorXd LQ = gains.Q.transpose() * rr.L;
    Eigen::VectorXd phi = rr.base + prog.Yhat.transpose() * LQ;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n_eta_rows);
    double value = rr.L.dot(gains.r);
    for (size_t bi = 0; bi < prog.blocks.size(); ++bi) {
      const EtaBlock& blk = prog.blocks[bi];
      BlockSupport bs = block_support(prog, static_cast<int>(bi),
                                      phi.segment(blk.offset, blk.dim), oracle);
      if (!bs.bounded) throw std::runtime_error("reconstruct_multipliers: unbounded support");
      value += bs.value;
      lambda.segment(row_offset[bi], bs.dual.size()) = bs.dual;
    }
    if (value > rr.k + tol) {
      throw std::runtime_error("reconstruct_multipliers: robust row violated at given gains");
    }
    switch (rr.kind) {
      case RowKind::kSafety:
        mult.Lambda.row(i_safety++) = lambda.transpose();
        break;
      case RowKind::kInput:
        mult.Gamma.row(i_input++) = lambda.transpose();
        break;
      case RowKind::kTerminal:
        mult.Theta.row(i_terminal++) = lambda.transpose();
        break;
    }
  }
  return mult;
}

}  // namespace cosched::robust
