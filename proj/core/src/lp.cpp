#include "cosched/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

namespace cosched::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterLimit:
      return "iteration-limit";
    case Status::kError:
      return "error";
  }
  return "?";
}

namespace detail {

enum class At : unsigned char { kLo, kUp, kFree, kBasic };

// Bounded-variable revised simplex over the system A x - s = 0 with the
// logical s_i ranged per row sense. Basis factor is a dense LU refreshed
// periodically; pivots in between are applied as product-form etas.
class Engine {
 public:
  // Appends a row after a solve; its logical enters the basis at the current
  // activity and dual feasibility is preserved, so the dual simplex resumes.
  void append_row(const Row& r) {
    const int i = m_;
    ++m_;
    ++total_;
    cols_.emplace_back();
    cols_.back().emplace_back(i, -1.0);
    for (size_t k = 0; k < r.idx.size(); ++k) {
      if (r.val[k] != 0.0) cols_[static_cast<size_t>(r.idx[k])].emplace_back(i, r.val[k]);
    }
    // Keep column entries sorted by row for determinism.
    for (size_t k = 0; k < r.idx.size(); ++k) {
      auto& col = cols_[static_cast<size_t>(r.idx[k])];
      std::sort(col.begin(), col.end());
    }
    double rlo, rup;
    switch (r.sense) {
      case Sense::kLe:
        rlo = -kInf;
        rup = r.rhs;
        break;
      case Sense::kGe:
        rlo = r.rhs;
        rup = kInf;
        break;
      default:
        rlo = rup = r.rhs;
        break;
    }
    lo_.push_back(rlo);
    up_.push_back(rup);
    cost_.push_back(0.0);
    pcost_.push_back(0.0);
    double activity = 0.0;
    for (size_t k = 0; k < r.idx.size(); ++k) activity += r.val[k] * x_[static_cast<size_t>(r.idx[k])];
    x_.push_back(activity);
    at_.push_back(At::kBasic);
    // Rebuild index maps: logical columns moved from n_+i to the end stays
    // consistent because logicals were always appended in row order.
    basic_.push_back(total_ - 1);
    pos_in_basis_.push_back(m_ - 1);
    needs_refactor_ = true;
  }

  Status resume() {
    if (last_ == Status::kInfeasible) return last_;
    if (needs_refactor_) {
      refactor();
      recompute_basics();
      needs_refactor_ = false;
    }
    last_ = dual_simplex(pcost_);
    return last_;
  }

  void fill(Solution& sol) {
    sol.status = last_;
    finish(sol);
  }
  Engine(const Problem& p, const SolverConfig& cfg) : cfg_(cfg), n_(p.num_vars) {
    m_ = static_cast<int>(p.rows.size());
    total_ = n_ + m_;
    lo_.resize(total_);
    up_.resize(total_);
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = p.lo[j];
      up_[j] = p.up[j];
      if (!p.cost.empty()) cost_[j] = p.cost[j];
    }
    cols_.resize(total_);
    for (int i = 0; i < m_; ++i) {
      const Row& r = p.rows[i];
      for (size_t k = 0; k < r.idx.size(); ++k) {
        if (r.val[k] != 0.0) cols_[r.idx[k]].emplace_back(i, r.val[k]);
      }
      cols_[n_ + i].emplace_back(i, -1.0);
      switch (r.sense) {
        case Sense::kLe:
          lo_[n_ + i] = -kInf;
          up_[n_ + i] = r.rhs;
          break;
        case Sense::kGe:
          lo_[n_ + i] = r.rhs;
          up_[n_ + i] = kInf;
          break;
        case Sense::kEq:
          lo_[n_ + i] = r.rhs;
          up_[n_ + i] = r.rhs;
          break;
      }
    }
    // Merge duplicate entries within a column.
    for (auto& col : cols_) {
      std::sort(col.begin(), col.end());
      size_t w = 0;
      for (size_t k = 0; k < col.size(); ++k) {
        if (w > 0 && col[w - 1].first == col[k].first) {
          col[w - 1].second += col[k].second;
        } else {
          col[w++] = col[k];
        }
      }
      col.resize(w);
    }
  }

  Solution run() {
    Solution sol;
    last_ = Status::kError;
    for (int j = 0; j < total_; ++j) {
      if (lo_[j] > up_[j] + cfg_.tol_feas) {
        sol.status = Status::kInfeasible;
        sol.message = "contradictory bounds";
        finish(sol);
        return sol;
      }
    }
    init_basis();
    bool dual_ok = true;
    for (int j = 0; j < total_ && dual_ok; ++j) {
      if (at_[j] == At::kBasic) continue;
      if (at_[j] == At::kFree && cost_[j] != 0.0) dual_ok = false;
      if (at_[j] == At::kLo && cost_[j] < 0.0) dual_ok = false;
      if (at_[j] == At::kUp && cost_[j] > 0.0) dual_ok = false;
    }

    Status st;
    if (dual_ok) {
      st = dual_simplex(pcost_);
    } else {
      std::vector<double> zero(total_, 0.0);
      st = dual_simplex(zero);
      if (st == Status::kOptimal) st = primal_simplex();
    }
    last_ = st;
    sol.status = st;
    finish(sol);
    return sol;
  }

 private:
  void init_basis() {
    basic_.resize(m_);
    at_.assign(total_, At::kLo);
    x_.assign(total_, 0.0);
    pos_in_basis_.assign(total_, -1);
    for (int j = 0; j < n_; ++j) {
      double cj = cost_[j];
      if (cj > 0.0) {
        at_[j] = std::isfinite(lo_[j]) ? At::kLo : (std::isfinite(up_[j]) ? At::kUp : At::kFree);
      } else if (cj < 0.0) {
        at_[j] = std::isfinite(up_[j]) ? At::kUp : (std::isfinite(lo_[j]) ? At::kLo : At::kFree);
      } else if (std::isfinite(lo_[j]) && std::isfinite(up_[j])) {
        // Zero cost: start at the bound nearest the origin; large artificial
        // bounds otherwise poison early iterates and row activities.
        at_[j] = std::abs(lo_[j]) <= std::abs(up_[j]) ? At::kLo : At::kUp;
      } else {
        at_[j] = std::isfinite(lo_[j]) ? At::kLo : (std::isfinite(up_[j]) ? At::kUp : At::kFree);
      }
      x_[j] = at_[j] == At::kLo ? lo_[j] : (at_[j] == At::kUp ? up_[j] : 0.0);
    }
    for (int i = 0; i < m_; ++i) {
      int j = n_ + i;
      basic_[i] = j;
      at_[j] = At::kBasic;
      pos_in_basis_[j] = i;
    }
    // Deterministic cost perturbation against dual degeneracy. Signs follow
    // the starting statuses so the all-logical basis stays dual feasible;
    // feasibility verdicts and primal solutions are unaffected beyond the
    // solver tolerances.
    pcost_ = cost_;
    for (int j = 0; j < total_; ++j) {
      std::uint64_t h = static_cast<std::uint64_t>(j) * 0x9e3779b97f4a7c15ULL;
      h ^= h >> 29;
      double eps = 1e-10 * (1.0 + static_cast<double>(h % 4096) / 4096.0) *
                   (1.0 + std::abs(cost_[j]));
      if (at_[j] == At::kLo) {
        pcost_[j] += eps;
      } else if (at_[j] == At::kUp) {
        pcost_[j] -= eps;
      }
    }
    refactor();
    recompute_basics();
  }

  void refactor() {
    ++n_refactor_;
    auto t0 = std::chrono::steady_clock::now();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for (const auto& [r, v] : cols_[basic_[i]]) B(r, i) = v;
    }
    lu_.compute(B);
    etas_pos_.clear();
    etas_w_.clear();
    t_refactor_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  void recompute_basics() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (at_[j] == At::kBasic || x_[j] == 0.0) continue;
      for (const auto& [r, v] : cols_[j]) rhs(r) -= v * x_[j];
    }
    Eigen::VectorXd xb = ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[basic_[i]] = xb(i);
  }

  Eigen::VectorXd ftran(const Eigen::VectorXd& b) const {
    Eigen::VectorXd v = lu_.solve(b);
    for (size_t k = 0; k < etas_pos_.size(); ++k) {
      const int p = etas_pos_[k];
      const Eigen::VectorXd& w = etas_w_[k];
      double t = v(p) / w(p);
      v -= t * w;
      v(p) = t;
    }
    return v;
  }

  Eigen::VectorXd btran(const Eigen::VectorXd& c) const {
    Eigen::VectorXd v = c;
    for (size_t k = etas_pos_.size(); k-- > 0;) {
      const int p = etas_pos_[k];
      const Eigen::VectorXd& w = etas_w_[k];
      double dot = w.dot(v);
      v(p) = (v(p) - (dot - w(p) * v(p))) / w(p);
    }
    return lu_.transpose().solve(v);
  }

  double col_dot(int j, const Eigen::VectorXd& y) const {
    double s = 0.0;
    for (const auto& [r, v] : cols_[j]) s += v * y(r);
    return s;
  }

  Eigen::VectorXd col_dense(int j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    for (const auto& [r, v] : cols_[j]) a(r) = v;
    return a;
  }

  void pivot(int q, int p, const Eigen::VectorXd& w) {
    int leave = basic_[p];
    pos_in_basis_[leave] = -1;
    basic_[p] = q;
    pos_in_basis_[q] = p;
    at_[q] = At::kBasic;
    etas_pos_.push_back(p);
    etas_w_.push_back(w);
    ++pivots_since_refactor_;
    if (pivots_since_refactor_ >= std::min(cfg_.refactor_every, std::max(30, m_ / 8))) {
      pivots_since_refactor_ = 0;
      refactor();
      recompute_basics();
    }
  }

  // ---- dual simplex -------------------------------------------------------

  Status dual_simplex(const std::vector<double>& cost) {
    const bool stats = std::getenv("COSCHED_LP_STATS") != nullptr;
    auto ds_start = std::chrono::steady_clock::now();
    long start_refactor = n_refactor_;
    double start_refactor_t = t_refactor_;
    int start_iters = iters_;
    auto rebuild_duals = [&] {
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb(i) = cost[static_cast<size_t>(basic_[i])];
      y_ = btran(cb);
      // Restore dual feasibility by bound flips; numerical drift between
      // rebuilds can leave nonbasic reduced costs with the wrong sign.
      int flips = 0;
      for (int j = 0; j < total_; ++j) {
        if (at_[j] == At::kBasic || at_[j] == At::kFree) continue;
        double dj = cost[static_cast<size_t>(j)] - col_dot(j, y_);
        if (at_[j] == At::kLo && dj < -1e-6 && std::isfinite(up_[j])) {
          at_[j] = At::kUp;
          x_[j] = up_[j];
          ++flips;
        } else if (at_[j] == At::kUp && dj > 1e-6 && std::isfinite(lo_[j])) {
          at_[j] = At::kLo;
          x_[j] = lo_[j];
          ++flips;
        }
      }
      if (flips > 0) recompute_basics();
    };
    rebuild_duals();
    int stall = 0;
    bool bland = false;
    int phase_iters = 0;
    // Devex-style reference weights on basic positions.
    Eigen::VectorXd devex = Eigen::VectorXd::Ones(m_);
    std::vector<char> row_banned(static_cast<size_t>(m_), 0);
    int consecutive_bans = 0;
    while (true) {
      if (++iters_ > cfg_.max_iters) return Status::kIterLimit;
      ++phase_iters;
      if (stats && phase_iters % 5000 == 0) {
        int nviol = 0;
        double worst = 0.0;
        for (int i = 0; i < m_; ++i) {
          int j = basic_[i];
          double viol = std::max(lo_[j] - x_[j], x_[j] - up_[j]);
          if (viol > cfg_.tol_feas) {
            ++nviol;
            worst = std::max(worst, viol);
          }
        }
        double dual_obj = 0.0;
        for (int j = 0; j < total_; ++j) {
          if (at_[j] == At::kBasic || x_[j] == 0.0) continue;
          double dj = cost[static_cast<size_t>(j)] - col_dot(j, y_);
          dual_obj += dj * x_[j];
        }
        std::fprintf(stderr,
                     "[lp] ... iters=%d m=%d nviol=%d worst=%.2e dualobj=%.6e stall=%d bland=%d\n",
                     phase_iters, m_, nviol, worst, dual_obj, stall, bland ? 1 : 0);
      }
      if (devex.size() != m_) devex = Eigen::VectorXd::Ones(m_);
      if (static_cast<int>(row_banned.size()) != m_) row_banned.assign(static_cast<size_t>(m_), 0);
      // Leaving: largest weighted violation (Bland: smallest index).
      int p = -1;
      double best = 0.0;
      bool any_violated = false;
      for (int i = 0; i < m_; ++i) {
        int j = basic_[i];
        double viol = std::max(lo_[j] - x_[j], x_[j] - up_[j]);
        if (viol <= cfg_.tol_feas) continue;
        any_violated = true;
        if (row_banned[static_cast<size_t>(i)]) continue;
        if (bland) {
          if (p < 0 || j < basic_[p]) p = i;
        } else {
          double score = viol * viol / devex(i);
          if (score > best) {
            best = score;
            p = i;
          }
        }
      }
      if (!any_violated) {
        if (stats) {
          std::fprintf(stderr,
                       "[lp] dual done iters=%d refactors=%ld t_ref=%.2fs t_tot=%.2fs m=%d\n",
                       iters_ - start_iters, n_refactor_ - start_refactor,
                       t_refactor_ - start_refactor_t,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - ds_start)
                           .count(),
                       m_);
        }
        return Status::kOptimal;
      }
      if (p < 0) {
        // Everything violated is banned: refresh numerics and retry once.
        if (++consecutive_bans > 3) return Status::kError;
        refactor();
        recompute_basics();
        rebuild_duals();
        row_banned.assign(static_cast<size_t>(m_), 0);
        continue;
      }

      const int leave = basic_[p];
      const bool below = x_[leave] < lo_[leave];
      Eigen::VectorXd rho = btran(Eigen::VectorXd::Unit(m_, p));
      const bool fresh_factor = etas_pos_.empty();

      // Two-pass dual ratio test: pass 1 finds the minimum ratio, pass 2
      // takes the largest pivot within a tight tie window.
      double theta_max = kInf;
      int n_eligible = 0;
      for (int j = 0; j < total_; ++j) {
        if (at_[j] == At::kBasic) continue;
        double alpha = col_dot(j, rho);
        if (std::abs(alpha) <= cfg_.tol_pivot) continue;
        bool eligible = false;
        if (at_[j] == At::kFree) {
          eligible = true;
        } else if (below) {
          eligible = (at_[j] == At::kLo && alpha < 0.0) || (at_[j] == At::kUp && alpha > 0.0);
        } else {
          eligible = (at_[j] == At::kLo && alpha > 0.0) || (at_[j] == At::kUp && alpha < 0.0);
        }
        if (!eligible) continue;
        ++n_eligible;
        double dj = cost[static_cast<size_t>(j)] - col_dot(j, y_);
        double ratio = std::abs(dj) / std::abs(alpha);
        if (ratio < theta_max) theta_max = ratio;
      }
      if (n_eligible == 0) {
        // Declare infeasibility only from a freshly factorized basis; stale
        // eta chains can hide eligible columns behind the pivot tolerance.
        if (!fresh_factor) {
          refactor();
          recompute_basics();
          rebuild_duals();
          continue;
        }
        return Status::kInfeasible;
      }
      int q = -1;
      double alpha_q = 0.0;
      double best_pivot = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (at_[j] == At::kBasic) continue;
        double alpha = col_dot(j, rho);
        if (std::abs(alpha) <= cfg_.tol_pivot) continue;
        bool eligible = false;
        if (at_[j] == At::kFree) {
          eligible = true;
        } else if (below) {
          eligible = (at_[j] == At::kLo && alpha < 0.0) || (at_[j] == At::kUp && alpha > 0.0);
        } else {
          eligible = (at_[j] == At::kLo && alpha > 0.0) || (at_[j] == At::kUp && alpha < 0.0);
        }
        if (!eligible) continue;
        double dj = cost[static_cast<size_t>(j)] - col_dot(j, y_);
        double ratio = std::abs(dj) / std::abs(alpha);
        if (ratio > theta_max * (1.0 + 1e-9) + 1e-12) continue;
        if (bland) {
          if (q < 0 || j < q) {
            q = j;
            alpha_q = alpha;
          }
        } else if (std::abs(alpha) > best_pivot) {
          best_pivot = std::abs(alpha);
          q = j;
          alpha_q = alpha;
        }
      }
      if (q < 0) {
        if (!fresh_factor) {
          refactor();
          recompute_basics();
          rebuild_duals();
          continue;
        }
        return Status::kInfeasible;
      }

      Eigen::VectorXd w = ftran(col_dense(q));
      if (std::abs(w(p)) <= cfg_.tol_pivot * 0.5 ||
          std::abs(w(p) - alpha_q) > 1e-6 * std::max(1.0, std::abs(alpha_q))) {
        // Numerical disagreement between the rho-based alpha and the ftran
        // column: refresh if stale, otherwise ban this row for now.
        if (!fresh_factor) {
          refactor();
          recompute_basics();
          rebuild_duals();
          if (++stall > 200) return Status::kError;
          continue;
        }
        row_banned[static_cast<size_t>(p)] = 1;
        if (++stall > 200) return Status::kError;
        continue;
      }
      consecutive_bans = 0;
      std::fill(row_banned.begin(), row_banned.end(), 0);
      double bound = below ? lo_[leave] : up_[leave];
      double delta = x_[leave] - bound;  // sign matches alpha side
      double step = delta / w(p);
      for (int i = 0; i < m_; ++i) {
        if (i == p) continue;
        x_[basic_[i]] -= step * w(i);
      }
      x_[q] += step;
      x_[leave] = bound;
      at_[leave] = below ? At::kLo : At::kUp;
      const double dq = cost[static_cast<size_t>(q)] - col_dot(q, y_);
      const double theta = dq / alpha_q;
      // Devex reference update (approximate steepest edge).
      {
        double wq = std::max(devex(p) / (alpha_q * alpha_q), 1.0);
        for (int i = 0; i < m_; ++i) {
          if (i == p || w(i) == 0.0) continue;
          double cand = wq * w(i) * w(i);
          if (cand > devex(i)) devex(i) = cand;
        }
        devex(p) = wq;
        if (devex.maxCoeff() > 1e12) devex.setOnes();
      }
      pivot(q, p, w);
      // Exact dual rebuild each pivot: the incremental update drifts through
      // long eta chains and corrupts the ratio test.
      rebuild_duals();
      if (std::abs(theta) < 1e-12) {
        if (++stall > 1000) bland = true;  // latched: Bland stays on
      } else {
        stall = 0;
      }
      if (phase_iters > 20 * m_ + 50000) bland = true;
    }
  }

  // ---- primal simplex -----------------------------------------------------

  Status primal_simplex() {
    int stall = 0;
    bool bland = false;
    while (true) {
      if (++iters_ > cfg_.max_iters) return Status::kIterLimit;
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb(i) = pcost_[static_cast<size_t>(basic_[i])];
      y_ = btran(cb);
      int q = -1, dir = 0;
      double best = cfg_.tol_opt;
      for (int j = 0; j < total_; ++j) {
        if (at_[j] == At::kBasic) continue;
        double dj = pcost_[static_cast<size_t>(j)] - col_dot(j, y_);
        int d = 0;
        if (at_[j] == At::kLo && dj < -cfg_.tol_opt) d = 1;
        else if (at_[j] == At::kUp && dj > cfg_.tol_opt) d = -1;
        else if (at_[j] == At::kFree && std::abs(dj) > cfg_.tol_opt) d = dj > 0 ? -1 : 1;
        if (d == 0) continue;
        if (bland) {
          if (q < 0 || j < q) { q = j; dir = d; }
        } else if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
          dir = d;
        }
      }
      if (q < 0) return Status::kOptimal;

      Eigen::VectorXd w = ftran(col_dense(q));
      // Ratio test: x_q moves by dir*t, basics by -dir*t*w.
      double t_max = kInf;
      int p = -1;
      double own = (std::isfinite(lo_[q]) && std::isfinite(up_[q])) ? up_[q] - lo_[q] : kInf;
      if (own < t_max) t_max = own;
      for (int i = 0; i < m_; ++i) {
        double wi = dir * w(i);
        if (std::abs(wi) <= cfg_.tol_pivot) continue;
        int j = basic_[i];
        double t;
        if (wi > 0) {
          if (!std::isfinite(lo_[j])) continue;
          t = (x_[j] - lo_[j]) / wi;
        } else {
          if (!std::isfinite(up_[j])) continue;
          t = (x_[j] - up_[j]) / wi;
        }
        if (t < 0.0) t = 0.0;  // degenerate: basic already at (or past) its bound
        if (t < t_max - 1e-12 || (t < t_max + 1e-12 && p >= 0 && std::abs(w(i)) > std::abs(w(p)))) {
          t_max = t;
          p = i;
        }
      }
      if (!std::isfinite(t_max)) {
        ray_ = Eigen::VectorXd::Zero(n_);
        if (q < n_) ray_(q) = dir;
        for (int i = 0; i < m_; ++i) {
          if (basic_[i] < n_) ray_(basic_[i]) = -dir * w(i);
        }
        have_ray_ = true;
        return Status::kUnbounded;
      }
      if (t_max <= 1e-9) {
        if (++stall > 300) bland = true;  // latched
      } else {
        stall = 0;
      }
      if (p < 0) {
        // Bound flip: entering runs to its opposite bound.
        for (int i = 0; i < m_; ++i) x_[basic_[i]] -= dir * t_max * w(i);
        x_[q] += dir * t_max;
        at_[q] = at_[q] == At::kLo ? At::kUp : At::kLo;
        continue;
      }
      int leave = basic_[p];
      double wi = dir * w(p);
      for (int i = 0; i < m_; ++i) x_[basic_[i]] -= dir * t_max * w(i);
      x_[q] += dir * t_max;
      x_[leave] = wi > 0 ? lo_[leave] : up_[leave];
      at_[leave] = wi > 0 ? At::kLo : At::kUp;
      pivot(q, p, w);
    }
  }

  void finish(Solution& sol) {
    sol.iterations = iters_;
    sol.x = Eigen::VectorXd::Zero(n_);
    if (sol.status == Status::kOptimal || sol.status == Status::kIterLimit) {
      for (int j = 0; j < n_; ++j) sol.x(j) = x_.empty() ? 0.0 : x_[j];
      double obj = 0.0;
      for (int j = 0; j < n_; ++j) obj += cost_[j] * sol.x(j);
      sol.objective = obj;
      sol.row_duals = y_.size() == m_ ? y_ : Eigen::VectorXd::Zero(m_);
    }
    if (have_ray_) sol.ray = ray_;
  }

  SolverConfig cfg_;
  int n_ = 0, m_ = 0, total_ = 0;
  std::vector<double> lo_, up_, cost_, pcost_;
  std::vector<std::vector<std::pair<int, double>>> cols_;

  std::vector<int> basic_;
  std::vector<int> pos_in_basis_;
  std::vector<At> at_;
  std::vector<double> x_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<int> etas_pos_;
  std::vector<Eigen::VectorXd> etas_w_;
  Eigen::VectorXd y_;
  Eigen::VectorXd ray_;
  bool have_ray_ = false;
  int pivots_since_refactor_ = 0;
  int iters_ = 0;
  Status last_ = Status::kError;
  bool needs_refactor_ = false;

 public:
  double t_refactor_ = 0.0;
  long n_refactor_ = 0;
};

}  // namespace detail

using detail::Engine;

Solution SimplexSolver::solve(const Problem& p) {
  if (p.rows.empty()) {
    // Pure bound problem.
    Solution sol;
    sol.x = Eigen::VectorXd::Zero(p.num_vars);
    for (int j = 0; j < p.num_vars; ++j) {
      if (p.lo[j] > p.up[j] + cfg_.tol_feas) {
        sol.status = Status::kInfeasible;
        return sol;
      }
      double cj = p.cost.empty() ? 0.0 : p.cost[j];
      double v;
      if (cj > 0.0) {
        if (!std::isfinite(p.lo[j])) {
          sol.status = Status::kUnbounded;
          sol.ray = Eigen::VectorXd::Zero(p.num_vars);
          sol.ray(j) = -1.0;
          return sol;
        }
        v = p.lo[j];
      } else if (cj < 0.0) {
        if (!std::isfinite(p.up[j])) {
          sol.status = Status::kUnbounded;
          sol.ray = Eigen::VectorXd::Zero(p.num_vars);
          sol.ray(j) = 1.0;
          return sol;
        }
        v = p.up[j];
      } else {
        v = std::isfinite(p.lo[j]) ? p.lo[j] : (std::isfinite(p.up[j]) ? p.up[j] : 0.0);
      }
      sol.x(j) = v;
      sol.objective += cj * v;
    }
    sol.status = Status::kOptimal;
    sol.row_duals = Eigen::VectorXd::Zero(0);
    return sol;
  }
  detail::Engine eng(p, cfg_);
  return eng.run();
}

std::unique_ptr<Oracle> make_default_oracle() { return std::make_unique<SimplexSolver>(); }

std::unique_ptr<Oracle> make_default_oracle(const SolverConfig& cfg) {
  return std::make_unique<SimplexSolver>(cfg);
}

struct IncrementalSolver::Impl {
  Problem base;
  SolverConfig cfg;
  std::unique_ptr<detail::Engine> engine;
  bool solved = false;
  int rows = 0;
};

IncrementalSolver::IncrementalSolver(Problem base, SolverConfig cfg) : impl_(new Impl) {
  impl_->rows = static_cast<int>(base.rows.size());
  impl_->base = std::move(base);
  impl_->cfg = cfg;
}

IncrementalSolver::~IncrementalSolver() = default;
IncrementalSolver::IncrementalSolver(IncrementalSolver&&) noexcept = default;
IncrementalSolver& IncrementalSolver::operator=(IncrementalSolver&&) noexcept = default;

Solution IncrementalSolver::solve() {
  Solution sol;
  if (!impl_->solved) {
    impl_->engine = std::make_unique<detail::Engine>(impl_->base, impl_->cfg);
    sol = impl_->engine->run();
    impl_->solved = true;
    return sol;
  }
  Status st = impl_->engine->resume();
  if (st != Status::kOptimal && st != Status::kInfeasible) {
    // Resume is only sound from an optimal basis; rebuild otherwise.
    impl_->engine = std::make_unique<detail::Engine>(impl_->base, impl_->cfg);
    return impl_->engine->run();
  }
  impl_->engine->fill(sol);
  return sol;
}

void IncrementalSolver::add_rows(const std::vector<Row>& rows) {
  impl_->rows += static_cast<int>(rows.size());
  for (const Row& r : rows) impl_->base.add_row(r);
  if (impl_->solved) {
    for (const Row& r : rows) impl_->engine->append_row(r);
  }
}

int IncrementalSolver::num_rows() const { return impl_->rows; }

}  // namespace cosched::lp
