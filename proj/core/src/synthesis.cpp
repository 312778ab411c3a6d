#include "cosched/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <climits>
#include <set>
#include <stdexcept>

#include "cosched/analysis.hpp"
#include "cosched/milp.hpp"

namespace cosched {

using robust::Cut;
using robust::GainBasis;
using robust::MasterOptions;
using robust::MasterResult;
using robust::RobustProgram;

const char* to_string(SynthesisResult::Status s) {
  switch (s) {
    case SynthesisResult::Status::kFeasible:
      return "feasible";
    case SynthesisResult::Status::kInfeasible:
      return "infeasible";
    case SynthesisResult::Status::kLimit:
      return "limit";
  }
  return "?";
}

void SolverOptions::validate() const {
  if (!(big_M > 0.0)) throw std::invalid_argument("options: big_M must be positive");
  if (!(tol_feas > 0.0) || !(tol_cert > 0.0)) {
    throw std::invalid_argument("options: tolerances must be positive");
  }
}

std::vector<std::string> SynthesisProblem::normalize() {
  std::vector<std::string> warnings;
  sys.validate();
  if (T < 1) throw std::invalid_argument("problem: T must be >= 1");
  sets.validate(sys, T);
  options.validate();
  if (N_m < 0 || N_c < 0) throw std::invalid_argument("problem: budgets must be nonnegative");
  if (N_m > T) {
    warnings.push_back("N_m > T; clamped to T");
    N_m = T;
  }
  if (N_c > T) {
    warnings.push_back("N_c > T; clamped to T");
    N_c = T;
  }
  for (const auto& row : extra_budget_rows) {
    if (row.c_m.size() != T || row.c_c.size() != T) {
      throw std::invalid_argument("problem: extra budget row length mismatch");
    }
  }
  if (schedule_cost && (schedule_cost->first < 0.0 || schedule_cost->second < 0.0)) {
    throw std::invalid_argument("problem: schedule cost weights must be nonnegative");
  }
  return warnings;
}

namespace {

bool schedule_in_budget(const SynthesisProblem& p, const Schedule& s) {
  if (s.count_m() > p.N_m || s.count_c() > p.N_c) return false;
  for (const auto& row : p.extra_budget_rows) {
    double lhs = 0.0;
    for (int t = 0; t < p.T; ++t) {
      lhs += row.c_m(t) * s.sigma_m[static_cast<size_t>(t)] +
             row.c_c(t) * s.sigma_c[static_cast<size_t>(t)];
    }
    if (lhs > row.b + 1e-9) return false;
  }
  return true;
}

MasterOptions master_options(const SolverOptions& opts) {
  MasterOptions mo;
  mo.gain_bound = opts.big_M;
  mo.tol_sep = 1e-9;
  return mo;
}

double big_m_margin(const GainsQr& g, const Schedule& s, int nu, int ny, double big_M) {
  const int T = s.T();
  double worst = 0.0;
  for (int tau = 0; tau < T; ++tau) {
    if (!s.sigma_m[static_cast<size_t>(tau)]) continue;
    worst = std::max(worst, g.Q.middleCols(tau * ny, ny).cwiseAbs().maxCoeff());
  }
  for (int t = 0; t < T; ++t) {
    if (!s.sigma_c[static_cast<size_t>(t)]) continue;
    Eigen::MatrixXd prev = t == 0 ? Eigen::MatrixXd::Zero(nu, g.Q.cols())
                                  : Eigen::MatrixXd(g.Q.middleRows((t - 1) * nu, nu));
    Eigen::VectorXd prev_r =
        t == 0 ? Eigen::VectorXd::Zero(nu) : Eigen::VectorXd(g.r.segment((t - 1) * nu, nu));
    worst = std::max(worst, (g.Q.middleRows(t * nu, nu) - prev).cwiseAbs().maxCoeff());
    worst = std::max(worst, (g.r.segment(t * nu, nu) - prev_r).cwiseAbs().maxCoeff());
  }
  return big_M - worst;
}

}  // namespace

bool horizon_zero_feasible(const SynthesisProblem& p, lp::Oracle& oracle) {
  const HPolytope& Z0 = p.sets.Z.front();
  if (Z0.rows() == 0) return true;
  for (int f = 0; f < Z0.rows(); ++f) {
    Eigen::VectorXd dir = (Z0.H().row(f) * p.sys.D).transpose();
    double rhs = Z0.h()(f) - Z0.H().row(f).dot(p.sys.d);
    if (dir.norm() == 0.0) {
      if (0.0 > rhs + 1e-9) return false;
      continue;
    }
    SupportResult sr = support(p.sets.X0, dir, oracle);
    if (!sr.bounded || sr.value > rhs + 1e-9) return false;
  }
  return true;
}

FixedScheduleOutcome solve_fixed_schedule(const SynthesisProblem& p, const Schedule& s,
                                          lp::Oracle& oracle) {
  std::vector<Cut> pool;
  return solve_fixed_schedule(p, s, oracle, pool);
}

FixedScheduleOutcome solve_fixed_schedule(const SynthesisProblem& p, const Schedule& s,
                                          lp::Oracle& oracle, std::vector<Cut>& pool) {
  FixedScheduleOutcome out;
  if (s.T() != p.T) throw std::invalid_argument("solve_fixed_schedule: schedule length != T");
  if (!schedule_in_budget(p, s)) return out;  // infeasible by budget

  RobustProgram prog = robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
  GainBasis basis = GainBasis::for_schedule(s, p.sys.nu(), p.sys.ny());
  MasterResult mr = robust::solve_master(prog, basis, oracle, pool, master_options(p.options));
  out.lp_calls = mr.lp_calls;
  if (mr.status == lp::Status::kInfeasible) return out;
  if (mr.status != lp::Status::kOptimal) {
    throw std::runtime_error(std::string("solve_fixed_schedule: LP oracle failure: ") +
                             lp::to_string(mr.status));
  }
  out.feasible = true;
  out.gains = mr.gains;
  robust::Multipliers mult =
      robust::reconstruct_multipliers(prog, mr.gains, oracle, p.options.tol_cert);
  out.Lambda = std::move(mult.Lambda);
  out.Gamma = std::move(mult.Gamma);
  out.Theta = std::move(mult.Theta);
  return out;
}

// ---------------------------------------------------------------------------
// Branch and bound over partial schedule assignments.
// ---------------------------------------------------------------------------

namespace {

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Partial assignment: -1 free, 0/1 fixed.
struct Assignment {
  std::vector<int> am, ac;

  Schedule completion_ones() const {
    Schedule s;
    s.sigma_m.reserve(am.size());
    s.sigma_c.reserve(ac.size());
    for (int v : am) s.sigma_m.push_back(v < 0 ? 1 : v);
    for (int v : ac) s.sigma_c.push_back(v < 0 ? 1 : v);
    return s;
  }
  bool integral() const {
    for (int v : am) {
      if (v < 0) return false;
    }
    for (int v : ac) {
      if (v < 0) return false;
    }
    return true;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const SynthesisProblem& p, lp::Oracle& oracle, SolveStats& stats)
      : p_(p), oracle_(oracle), stats_(stats) {
    debug_ = std::getenv("COSCHED_TRACE") != nullptr;
    prog_ = robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
    mopts_ = master_options(p.options);
    if (p.options.prune_with_observability) {
      std::vector<std::string> notes;
      escape_applicable_ = analysis_hypotheses(notes);
      if (escape_applicable_) {
        T1_ = analysis::full_dim_escape_time(p_, oracle_);
        escape_applicable_ = T1_.has_value() && *T1_ >= 1;
      }
    }
  }

  SynthesisResult run() {
    Clock clock;
    SynthesisResult best;
    best.status = SynthesisResult::Status::kInfeasible;

    Assignment root;
    root.am.assign(static_cast<size_t>(p_.T), -1);
    root.ac.assign(static_cast<size_t>(p_.T), -1);
    if (!propagate(root)) {
      stats_.wall_time_s = clock.seconds();
      return best;
    }
    if (p_.options.root_heuristic) {
      if (debug_) std::fprintf(stderr, "[bnb] root heuristic start t=%.1fs\n", clock.seconds());
      if (auto res = heuristic_probes(root, clock)) {
        if (!p_.schedule_cost) {
          res->stats = stats_;
          res->stats.wall_time_s = clock.seconds();
          return *res;
        }
        incumbent_ = std::move(res);
      }
    }
    if (p_.T < 64) precompute_windows(clock);
    if (debug_) std::fprintf(stderr, "[bnb] dfs start t=%.1fs pool=%zu nogoods=%zu\n",
                             clock.seconds(), pool_.size(), nogoods_.size());
    bool limit_hit = false;
    dfs(root, clock, limit_hit);
    if (incumbent_) {
      best = std::move(*incumbent_);
      best.status = SynthesisResult::Status::kFeasible;
    } else if (limit_hit) {
      best.status = SynthesisResult::Status::kLimit;
    }
    best.stats = stats_;
    best.stats.wall_time_s = clock.seconds();
    return best;
  }

 private:
  bool analysis_hypotheses(std::vector<std::string>& notes) {
    bool ok = true;
    if (!is_origin_symmetric(p_.sets.W)) ok = false;
    if (!is_origin_symmetric(p_.sets.V)) ok = false;
    if (p_.sys.d.size() > 0 && p_.sys.d.cwiseAbs().maxCoeff() > 1e-12) ok = false;
    if (!ok) notes.push_back("observability pruning disabled: symmetry hypotheses fail");
    return ok;
  }

  // Fixes sigma entries forced by extra budget rows; false when some row is
  // already unsatisfiable.
  bool propagate(Assignment& a) const {
    // Min possible LHS of each row given the partial assignment; a free sigma
    // contributes min(0, c). Forcing: if flipping one free variable to its
    // max-side breaks the row, it must take the other value.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& row : p_.extra_budget_rows) {
        double min_lhs = 0.0;
        for (int t = 0; t < p_.T; ++t) {
          double cm = row.c_m(t), cc = row.c_c(t);
          min_lhs += a.am[static_cast<size_t>(t)] < 0
                         ? std::min(0.0, cm)
                         : cm * a.am[static_cast<size_t>(t)];
          min_lhs += a.ac[static_cast<size_t>(t)] < 0
                         ? std::min(0.0, cc)
                         : cc * a.ac[static_cast<size_t>(t)];
        }
        if (min_lhs > row.b + 1e-9) return false;
        for (int t = 0; t < p_.T; ++t) {
          auto force = [&](std::vector<int>& vec, double coef) {
            if (vec[static_cast<size_t>(t)] >= 0 || coef == 0.0) return;
            // Value v contributes coef*v; the other value may violate.
            double base = min_lhs - std::min(0.0, coef);
            if (base + std::max(0.0, coef) > row.b + 1e-9) {
              vec[static_cast<size_t>(t)] = coef > 0.0 ? 0 : 1;
              changed = true;
            }
          };
          force(a.am, row.c_m(t));
          force(a.ac, row.c_c(t));
        }
      }
      // Plain budgets; an exhausted budget forces the free entries to zero.
      int fixed_m = 0, fixed_c = 0;
      for (int v : a.am) fixed_m += v == 1;
      for (int v : a.ac) fixed_c += v == 1;
      if (fixed_m > p_.N_m || fixed_c > p_.N_c) return false;
      if (fixed_m == p_.N_m) {
        for (auto& v : a.am) {
          if (v < 0) {
            v = 0;
            changed = true;
          }
        }
      }
      if (fixed_c == p_.N_c) {
        for (auto& v : a.ac) {
          if (v < 0) {
            v = 0;
            changed = true;
          }
        }
      }
    }
    return true;
  }

  bool budget_prunable(const Assignment& a) const {
    int fixed_m = 0, fixed_c = 0;
    for (int v : a.am) fixed_m += v == 1;
    for (int v : a.ac) fixed_c += v == 1;
    if (fixed_m > p_.N_m || fixed_c > p_.N_c) return true;
    for (const auto& row : p_.extra_budget_rows) {
      double min_lhs = 0.0;
      for (int t = 0; t < p_.T; ++t) {
        double cm = row.c_m(t), cc = row.c_c(t);
        min_lhs += a.am[static_cast<size_t>(t)] < 0 ? std::min(0.0, cm)
                                                    : cm * a.am[static_cast<size_t>(t)];
        min_lhs += a.ac[static_cast<size_t>(t)] < 0 ? std::min(0.0, cc)
                                                    : cc * a.ac[static_cast<size_t>(t)];
      }
      if (min_lhs > row.b + 1e-9) return true;
    }
    return false;
  }

  bool observability_prunable(const Assignment& a) {
    if (!escape_applicable_) return false;
    // Key on the set of fixed-zero measurement times; free entries complete
    // to 1 (the most permissive completion).
    std::uint64_t mask = 0;
    for (int t = 0; t < p_.T && t < 64; ++t) {
      if (a.am[static_cast<size_t>(t)] == 0) mask |= (1ULL << t);
    }
    auto it = escape_cache_.find(mask);
    if (it != escape_cache_.end()) return it->second;
    std::vector<int> sigma_m;
    sigma_m.reserve(a.am.size());
    for (int v : a.am) sigma_m.push_back(v < 0 ? 1 : v);
    bool prunable = !analysis::escape_check(p_, sigma_m, *T1_, oracle_).holds;
    escape_cache_[mask] = prunable;
    return prunable;
  }

  // Relaxation at a node: the LP for the most permissive completion (free
  // sigma at their relaxed-optimal value 1). Sound: every completion's
  // feasible gain set is contained in this one's. Internal nodes are screened
  // against the accumulated cut pool only; exact separation runs whenever a
  // verdict may be accepted as feasible.
  MasterResult node_relaxation(const Assignment& a, bool exact) {
    Schedule s1 = a.completion_ones();
    GainBasis basis = GainBasis::for_schedule(s1, p_.sys.nu(), p_.sys.ny());
    MasterOptions opts = mopts_;
    opts.pool_only = !exact;
    MasterResult mr = robust::solve_master(prog_, basis, oracle_, pool_, opts);
    stats_.lp_calls += mr.lp_calls;
    return mr;
  }

  std::optional<SynthesisResult> accept(const Schedule& s, const GainsQr& gains) {
    SynthesisResult res;
    res.status = SynthesisResult::Status::kFeasible;
    res.schedule = s;
    res.gains_qr = gains;
    res.gains_ff = q_to_f(gains, prog_.tm);
    robust::Multipliers mult =
        robust::reconstruct_multipliers(prog_, gains, oracle_, p_.options.tol_cert);
    res.Lambda = std::move(mult.Lambda);
    res.Gamma = std::move(mult.Gamma);
    res.Theta = std::move(mult.Theta);
    if (p_.schedule_cost) {
      res.objective = p_.schedule_cost->first * s.count_m() + p_.schedule_cost->second * s.count_c();
    }
    return res;
  }

  // LP-guided rounding: solve the sigma in [0,1] relaxation with lazily added
  // big-M linking rows and a sparsity objective, then probe in-budget
  // roundings of the relaxed schedule.
  std::optional<SynthesisResult> heuristic_probes(const Assignment& root, const Clock& clock);

  double incumbent_value() const {
    return incumbent_ ? incumbent_->objective : std::numeric_limits<double>::infinity();
  }

  double node_lower_bound(const Assignment& a) const {
    if (!p_.schedule_cost) return 0.0;
    double lb = 0.0;
    for (int v : a.am) lb += v == 1 ? p_.schedule_cost->first : 0.0;
    for (int v : a.ac) lb += v == 1 ? p_.schedule_cost->second : 0.0;
    return lb;
  }

  // Returns true when search should stop (found + no objective, or limits).
  bool dfs(Assignment a, const Clock& clock, bool& limit_hit) {
    if (limit_hit) return true;
    if (p_.options.node_limit > 0 && stats_.nodes >= p_.options.node_limit) {
      limit_hit = true;
      return true;
    }
    if (p_.options.time_limit > 0.0 && clock.seconds() > p_.options.time_limit) {
      limit_hit = true;
      return true;
    }
    ++stats_.nodes;
    if (debug_ && stats_.nodes % 50 == 0) {
      std::fprintf(stderr, "[bnb] nodes=%ld lp=%ld pool=%zu t=%.1fs\n", stats_.nodes,
                   stats_.lp_calls, pool_.size(), clock.seconds());
    }
    if (!propagate(a) || budget_prunable(a)) return false;
    if (p_.options.heuristic_cap_controls && cap_controls_prunable(a)) return false;
    if (p_.schedule_cost && node_lower_bound(a) >= incumbent_value() - 1e-12) return false;
    if (observability_prunable(a)) return false;

    Schedule s1 = a.completion_ones();
    const bool s1_in_budget = schedule_in_budget(p_, s1);
    const bool exact_needed = a.integral() || (s1_in_budget && !p_.schedule_cost);
    const std::pair<std::uint64_t, std::uint64_t> key = schedule_key(s1);
    if (dominated_by_nogood(key)) return false;
    if (stab_prunable(a)) return false;

    // Screen against the pool first; a pool-infeasible completion prunes the
    // node without any separation work.
    MasterResult relax = node_relaxation(a, false);
    if (relax.status == lp::Status::kInfeasible) {
      add_nogood(key);
      return false;
    }
    if (relax.status != lp::Status::kOptimal) {
      limit_hit = true;
      return true;
    }
    if (exact_needed) {
      relax = node_relaxation(a, true);
      if (relax.status == lp::Status::kInfeasible) {
        add_nogood(key);
        return false;
      }
      if (relax.status != lp::Status::kOptimal) {
        limit_hit = true;
        return true;
      }
    }

    if (exact_needed) {
      // The most permissive completion is itself an admissible schedule.
      auto res = accept(s1, relax.gains);
      if (!p_.schedule_cost) {
        incumbent_ = std::move(res);
        return true;
      }
      if (res->objective < incumbent_value()) incumbent_ = std::move(res);
      if (a.integral()) return false;
    }

    // Branch.
    int var = pick_branch_var(a, relax);
    if (var < 0) return false;
    for (int value : {1, 0}) {
      Assignment child = a;
      if (var < p_.T) {
        child.am[static_cast<size_t>(var)] = value;
      } else {
        child.ac[static_cast<size_t>(var - p_.T)] = value;
      }
      if (dfs(std::move(child), clock, limit_hit)) return true;
    }
    return false;
  }

  bool cap_controls_prunable(const Assignment& a) const {
    // Diagnostic-grade cap |T_C| <= |T_M| + 1.
    int min_c = 0, max_m = 0, free_m = 0;
    for (int v : a.ac) min_c += v == 1;
    for (int v : a.am) {
      max_m += v == 1;
      free_m += v < 0;
    }
    int m_cap = std::min(p_.N_m, max_m + free_m);
    return min_c > m_cap + 1;
  }

  // Branching variable: most-fractional scores come from the relaxation's
  // implied minimal sigma values (indicator usage / big_M); ties and the
  // time-ordered strategy fall back to time order with measurements first.
  int pick_branch_var(const Assignment& a, const MasterResult& relax) const {
    std::vector<int> free_vars;
    for (int t = 0; t < p_.T; ++t) {
      if (a.am[static_cast<size_t>(t)] < 0) free_vars.push_back(t);
    }
    for (int t = 0; t < p_.T; ++t) {
      if (a.ac[static_cast<size_t>(t)] < 0) free_vars.push_back(p_.T + t);
    }
    if (free_vars.empty()) return -1;
    if (p_.options.branching == SolverOptions::Branching::kTimeOrdered) {
      // Interleave by time, measurement before control.
      int best = free_vars[0];
      auto key = [&](int v) { return v < p_.T ? 2 * v : 2 * (v - p_.T) + 1; };
      for (int v : free_vars) {
        if (key(v) < key(best)) best = v;
      }
      return best;
    }
    const GainsQr& g = relax.gains;
    const int nu = p_.sys.nu(), ny = p_.sys.ny();
    double best_score = -1.0;
    int best = free_vars[0];
    for (int v : free_vars) {
      double usage;
      if (v < p_.T) {
        usage = g.Q.middleCols(v * ny, ny).cwiseAbs().maxCoeff() / p_.options.big_M;
      } else {
        int t = v - p_.T;
        Eigen::MatrixXd prev = t == 0 ? Eigen::MatrixXd::Zero(nu, g.Q.cols())
                                      : Eigen::MatrixXd(g.Q.middleRows((t - 1) * nu, nu));
        Eigen::VectorXd prev_r =
            t == 0 ? Eigen::VectorXd::Zero(nu) : Eigen::VectorXd(g.r.segment((t - 1) * nu, nu));
        usage = std::max((g.Q.middleRows(t * nu, nu) - prev).cwiseAbs().maxCoeff(),
                         (g.r.segment(t * nu, nu) - prev_r).cwiseAbs().maxCoeff()) /
                p_.options.big_M;
      }
      double frac = std::min(usage, 1.0);
      double score = 0.5 - std::abs(frac - 0.5);  // distance to integrality
      if (score > best_score + 1e-15) {
        best_score = score;
        best = v;
      }
    }
    return best;
  }

  const SynthesisProblem& p_;
  lp::Oracle& oracle_;
  SolveStats& stats_;
  RobustProgram prog_;
  MasterOptions mopts_;
  std::vector<Cut> pool_;
  std::optional<SynthesisResult> incumbent_;
  static std::pair<std::uint64_t, std::uint64_t> schedule_key(const Schedule& s) {
    std::uint64_t m = 0, c = 0;
    for (size_t t = 0; t < s.sigma_m.size() && t < 64; ++t) {
      if (s.sigma_m[t]) m |= (1ULL << t);
      if (s.sigma_c[t]) c |= (1ULL << t);
    }
    return {m, c};
  }

  // Feasibility is pointwise monotone in sigma, so an infeasible schedule
  // rules out everything dominated by it.
  bool dominated_by_nogood(const std::pair<std::uint64_t, std::uint64_t>& key) const {
    for (const auto& ng : nogoods_) {
      if ((key.first & ~ng.first) == 0 && (key.second & ~ng.second) == 0) return true;
    }
    return false;
  }

  void add_nogood(const std::pair<std::uint64_t, std::uint64_t>& key) {
    nogoods_.push_back(key);
  }

  // Probes all-ones-except-window schedules; an infeasible window [a,b)
  // yields the interval fact "some measurement (control) must lie in [a,b)",
  // used both as fat nogoods and for stabbing-count pruning.
  void precompute_windows(const Clock& clock) {
    const int T = p_.T;
    auto probe = [&](bool meas, int a, int b) {
      Schedule s = Schedule::all_ones(T);
      for (int t = a; t < b; ++t) (meas ? s.sigma_m : s.sigma_c)[static_cast<size_t>(t)] = 0;
      GainBasis basis = GainBasis::for_schedule(s, p_.sys.nu(), p_.sys.ny());
      MasterOptions opts = mopts_;
      opts.time_budget = 5.0;
      MasterResult mr = robust::solve_master(prog_, basis, oracle_, pool_, opts);
      stats_.lp_calls += mr.lp_calls;
      return mr.status;  // kInfeasible => window fact
    };
    for (bool meas : {true, false}) {
      auto& windows = meas ? windows_m_ : windows_c_;
      for (int a = 0; a < T; ++a) {
        if (clock.seconds() > 120.0) return;  // facts are optional accelerators
        // Find the smallest infeasible window starting at a (monotone in b).
        int lo = a, hi = T + 1;  // (a, lo] feasible-zeroing, hi infeasible
        bool any = probe(meas, a, T) == lp::Status::kInfeasible;
        if (!any) continue;
        hi = T;
        while (hi - lo > 1) {
          int mid = lo + (hi - lo) / 2;
          if (probe(meas, a, mid) == lp::Status::kInfeasible) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        windows.push_back({a, hi});
        std::uint64_t full = T >= 64 ? ~0ULL : ((1ULL << T) - 1);
        std::uint64_t zeroed = 0;
        for (int t = a; t < hi; ++t) zeroed |= (1ULL << t);
        if (meas) {
          add_nogood({full & ~zeroed, full});
        } else {
          add_nogood({full, full & ~zeroed});
        }
        if (debug_) {
          std::fprintf(stderr, "[bnb] window fact: no %s in [%d,%d) is infeasible\n",
                       meas ? "measurement" : "control", a, hi);
        }
      }
    }
  }

  // Minimum number of ones needed to stab every interval fact, honoring the
  // partial assignment; classic greedy by right endpoint.
  static int min_stab(const std::vector<std::pair<int, int>>& windows,
                      const std::vector<int>& assign) {
    std::vector<std::pair<int, int>> todo;
    for (auto [a, b] : windows) {
      bool stabbed = false;
      bool has_slot = false;
      for (int t = a; t < b; ++t) {
        if (assign[static_cast<size_t>(t)] == 1) stabbed = true;
        if (assign[static_cast<size_t>(t)] != 0) has_slot = true;
      }
      if (stabbed) continue;
      if (!has_slot) return INT_MAX;  // window fully zeroed: unsatisfiable
      todo.push_back({a, b});
    }
    std::sort(todo.begin(), todo.end(),
              [](const auto& x, const auto& y) { return x.second < y.second; });
    int used = 0, last = -1;
    for (auto [a, b] : todo) {
      if (last >= a) continue;  // already stabbed by the previous point
      // Place at the rightmost free slot in [a, b).
      int slot = -1;
      for (int t = b - 1; t >= a; --t) {
        if (assign[static_cast<size_t>(t)] == -1) {
          slot = t;
          break;
        }
      }
      if (slot < 0) return INT_MAX;
      ++used;
      last = slot;
    }
    return used;
  }

  bool stab_prunable(const Assignment& a) const {
    if (!windows_m_.empty()) {
      int fixed = 0;
      for (int v : a.am) fixed += v == 1;
      int need = min_stab(windows_m_, a.am);
      if (need == INT_MAX || fixed + need > p_.N_m) return true;
    }
    if (!windows_c_.empty()) {
      int fixed = 0;
      for (int v : a.ac) fixed += v == 1;
      int need = min_stab(windows_c_, a.ac);
      if (need == INT_MAX || fixed + need > p_.N_c) return true;
    }
    return false;
  }

  bool escape_applicable_ = false;
  std::optional<int> T1_;
  std::map<std::uint64_t, bool> escape_cache_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> nogoods_;
  std::vector<std::pair<int, int>> windows_m_, windows_c_;
  bool debug_ = false;
};

namespace {

// Deterministic schedule family: roughly even spacing with phase offsets and
// measure-before-control pairing.
std::vector<Schedule> structured_candidates(int T, int N_m, int N_c) {
  std::vector<Schedule> out;
  auto add = [&](const std::vector<int>& ctimes, int meas_lead) {
    Schedule s;
    s.sigma_m.assign(static_cast<size_t>(T), 0);
    s.sigma_c.assign(static_cast<size_t>(T), 0);
    int placed_c = 0;
    for (int c : ctimes) {
      if (c < 0 || c >= T || placed_c >= N_c) continue;
      if (!s.sigma_c[static_cast<size_t>(c)]) {
        s.sigma_c[static_cast<size_t>(c)] = 1;
        ++placed_c;
      }
    }
    int placed_m = 0;
    for (int c : ctimes) {
      int m = std::max(0, c - meas_lead);
      while (m >= 0 && placed_m < N_m && s.sigma_m[static_cast<size_t>(m)]) --m;
      if (m >= 0 && placed_m < N_m) {
        s.sigma_m[static_cast<size_t>(m)] = 1;
        ++placed_m;
      }
    }
    out.push_back(std::move(s));
  };
  for (double phase : {0.5, 0.0, 1.0}) {
    for (int lead : {1, 0}) {
      std::vector<int> ctimes;
      for (int k = 0; k < N_c; ++k) {
        ctimes.push_back(static_cast<int>(std::floor((k + phase) * T / N_c)));
      }
      add(ctimes, lead);
    }
  }
  // Early-start variant: act immediately, then spread.
  for (int lead : {1, 0}) {
    std::vector<int> ctimes{0};
    for (int k = 1; k < N_c; ++k) {
      ctimes.push_back(static_cast<int>(std::floor(k * (T - 1.0) / std::max(1, N_c - 1))));
    }
    add(ctimes, lead);
  }
  return out;
}

}  // namespace

std::optional<SynthesisResult> BranchAndBound::heuristic_probes(const Assignment& root,
                                                                const Clock& clock) {
  (void)clock;
  // Structured families first: cheap, deterministic, and usually sufficient.
  {
    auto fits_root = [&](const Schedule& s) {
      for (int t = 0; t < p_.T; ++t) {
        if (root.am[static_cast<size_t>(t)] >= 0 &&
            root.am[static_cast<size_t>(t)] != s.sigma_m[static_cast<size_t>(t)]) {
          return false;
        }
        if (root.ac[static_cast<size_t>(t)] >= 0 &&
            root.ac[static_cast<size_t>(t)] != s.sigma_c[static_cast<size_t>(t)]) {
          return false;
        }
      }
      return true;
    };
    for (const Schedule& cand : structured_candidates(p_.T, p_.N_m, p_.N_c)) {
      if (!fits_root(cand) || !schedule_in_budget(p_, cand)) continue;
      ++stats_.heuristic_probes;
      GainBasis cbasis = GainBasis::for_schedule(cand, p_.sys.nu(), p_.sys.ny());
      MasterOptions popts = mopts_;
      popts.time_budget = 10.0;
      MasterResult mr = robust::solve_master(prog_, cbasis, oracle_, pool_, popts);
      stats_.lp_calls += mr.lp_calls;
      if (debug_) {
        std::fprintf(stderr, "[heur] structured m=");
        for (int v : cand.sigma_m) std::fprintf(stderr, "%d", v);
        std::fprintf(stderr, " c=");
        for (int v : cand.sigma_c) std::fprintf(stderr, "%d", v);
        std::fprintf(stderr, " -> %s\n", lp::to_string(mr.status));
      }
      if (mr.status == lp::Status::kOptimal) {
        auto res = accept(cand, mr.gains);
        return res;
      }
    }
  }
  // Relaxation LP over (gains, free sigma in [0,1]) with the schedule-cost
  // (or unit) objective on sigma and lazily generated indicator rows.
  Schedule s1 = root.completion_ones();
  GainBasis basis = GainBasis::for_schedule(s1, p_.sys.nu(), p_.sys.ny());
  const int ngain = basis.var_count();
  const int T = p_.T;
  const double M = p_.options.big_M;

  lp::Problem prob;
  for (int j = 0; j < ngain; ++j) prob.add_var(-M, M, 0.0);
  std::vector<int> sm_var(static_cast<size_t>(T), -1), sc_var(static_cast<size_t>(T), -1);
  const double cm = p_.schedule_cost ? p_.schedule_cost->first : 1.0;
  const double cc = p_.schedule_cost ? p_.schedule_cost->second : 1.0;
  for (int t = 0; t < T; ++t) {
    if (root.am[static_cast<size_t>(t)] < 0) sm_var[static_cast<size_t>(t)] = prob.add_var(0.0, 1.0, cm);
  }
  for (int t = 0; t < T; ++t) {
    if (root.ac[static_cast<size_t>(t)] < 0) sc_var[static_cast<size_t>(t)] = prob.add_var(0.0, 1.0, cc);
  }
  // Budgets over the sigma variables.
  auto sigma_budget_row = [&](const std::vector<int>& vars, const std::vector<int>& fixed,
                              double limit) {
    lp::Row row;
    double used = 0.0;
    for (int t = 0; t < T; ++t) {
      if (vars[static_cast<size_t>(t)] >= 0) {
        row.push(vars[static_cast<size_t>(t)], 1.0);
      } else if (fixed[static_cast<size_t>(t)] == 1) {
        used += 1.0;
      }
    }
    row.sense = lp::Sense::kLe;
    row.rhs = limit - used;
    prob.add_row(std::move(row));
  };
  sigma_budget_row(sm_var, root.am, p_.N_m);
  sigma_budget_row(sc_var, root.ac, p_.N_c);
  for (const auto& ex : p_.extra_budget_rows) {
    lp::Row row;
    double used = 0.0;
    for (int t = 0; t < T; ++t) {
      if (ex.c_m(t) != 0.0) {
        if (sm_var[static_cast<size_t>(t)] >= 0) {
          row.push(sm_var[static_cast<size_t>(t)], ex.c_m(t));
        } else {
          used += ex.c_m(t) * root.am[static_cast<size_t>(t)];
        }
      }
      if (ex.c_c(t) != 0.0) {
        if (sc_var[static_cast<size_t>(t)] >= 0) {
          row.push(sc_var[static_cast<size_t>(t)], ex.c_c(t));
        } else {
          used += ex.c_c(t) * root.ac[static_cast<size_t>(t)];
        }
      }
    }
    row.sense = lp::Sense::kLe;
    row.rhs = ex.b - used;
    prob.add_row(std::move(row));
  }
  lp::IncrementalSolver inc(std::move(prob));
  size_t pool_used = 0;
  auto append_pool = [&] {
    std::vector<lp::Row> rows;
    for (; pool_used < pool_.size(); ++pool_used) {
      rows.push_back(robust::expand_cut(prog_, basis, pool_[pool_used]));
    }
    inc.add_rows(rows);
  };
  append_pool();

  const int nu = p_.sys.nu(), ny = p_.sys.ny();
  Eigen::VectorXd sigma_m_val = Eigen::VectorXd::Ones(T), sigma_c_val = Eigen::VectorXd::Ones(T);
  GainsQr gains;
  bool converged = false;
  bool have_point = false;
  std::vector<lp::Row> lazy_rows;
  const double heuristic_budget = 30.0;  // seconds; guidance only
  Clock hclock;
  for (int round = 0; round < 60 && !converged && hclock.seconds() < heuristic_budget; ++round) {
    lp::Solution sol = inc.solve();
    ++stats_.lp_calls;
    if (sol.status != lp::Status::kOptimal) return std::nullopt;
    have_point = true;
    gains = basis.expand(sol.x.head(ngain));
    for (int t = 0; t < T; ++t) {
      sigma_m_val(t) = sm_var[static_cast<size_t>(t)] >= 0 ? sol.x(sm_var[static_cast<size_t>(t)])
                                                           : root.am[static_cast<size_t>(t)];
      sigma_c_val(t) = sc_var[static_cast<size_t>(t)] >= 0 ? sol.x(sc_var[static_cast<size_t>(t)])
                                                           : root.ac[static_cast<size_t>(t)];
    }
    int added = 0;
    // Robust-row cuts.
    for (size_t ri = 0; ri < prog_.rows.size(); ++ri) {
      const auto& rr = prog_.rows[ri];
      robust::RowEvaluation ev = robust::evaluate_row(prog_, rr, gains, oracle_);
      if (!ev.bounded) {
        Cut cut;
        cut.row_index = static_cast<int>(ri);
        cut.yeta = prog_.Yhat * ev.eta_ray;
        cut.rhs = -rr.base.dot(ev.eta_ray);
        cut.is_ray = true;
        pool_.push_back(std::move(cut));
        ++added;
        continue;
      }
      if (ev.value > rr.k + 1e-8 * std::max({1.0, std::abs(rr.k), std::abs(ev.value)})) {
        Cut cut;
        cut.row_index = static_cast<int>(ri);
        cut.yeta = prog_.Yhat * ev.eta_star;
        cut.rhs = rr.k - rr.base.dot(ev.eta_star);
        cut.is_ray = false;
        pool_.push_back(std::move(cut));
        ++added;
      }
    }
    append_pool();
    // Indicator rows violated by the current point (lazy big-M linking).
    lazy_rows.clear();
    auto add_indicator = [&](const std::vector<std::pair<int, double>>& gain_terms, int sigma_var,
                             double lhs_value, double sigma_value) {
      if (std::abs(lhs_value) <= M * sigma_value + 1e-4) return;
      lp::Row row;
      const double sgn = lhs_value > 0 ? 1.0 : -1.0;
      for (const auto& [j, v] : gain_terms) row.push(j, sgn * v);
      row.push(sigma_var, -M);
      row.sense = lp::Sense::kLe;
      row.rhs = 0.0;
      lazy_rows.push_back(std::move(row));
      ++added;
    };
    for (int tau = 0; tau < T; ++tau) {
      if (sm_var[static_cast<size_t>(tau)] < 0) continue;
      for (int t = tau; t < T; ++t) {
        int id = basis.qmap[static_cast<size_t>(t)][static_cast<size_t>(tau)];
        if (id < 0) continue;
        for (int aa = 0; aa < nu; ++aa) {
          for (int bb = 0; bb < ny; ++bb) {
            double qv = gains.Q(t * nu + aa, tau * ny + bb);
            add_indicator({{id * nu * ny + aa * ny + bb, 1.0}}, sm_var[static_cast<size_t>(tau)],
                          qv, sigma_m_val(tau));
          }
        }
      }
    }
    for (int t = 0; t < T; ++t) {
      if (sc_var[static_cast<size_t>(t)] < 0) continue;
      for (int tau = 0; tau <= t; ++tau) {
        int id = basis.qmap[static_cast<size_t>(t)][static_cast<size_t>(tau)];
        int id_prev = t >= 1 && tau <= t - 1
                          ? basis.qmap[static_cast<size_t>(t - 1)][static_cast<size_t>(tau)]
                          : -1;
        if (id < 0 && id_prev < 0) continue;
        for (int aa = 0; aa < nu; ++aa) {
          for (int bb = 0; bb < ny; ++bb) {
            std::vector<std::pair<int, double>> terms;
            double lhs = 0.0;
            if (id >= 0) {
              terms.emplace_back(id * nu * ny + aa * ny + bb, 1.0);
              lhs += gains.Q(t * nu + aa, tau * ny + bb);
            }
            if (id_prev >= 0 && id_prev != id) {
              terms.emplace_back(id_prev * nu * ny + aa * ny + bb, -1.0);
              lhs -= gains.Q((t - 1) * nu + aa, tau * ny + bb);
            } else if (id_prev == id) {
              continue;  // identical blocks: difference is structurally zero
            }
            add_indicator(terms, sc_var[static_cast<size_t>(t)], lhs, sigma_c_val(t));
          }
        }
        if (tau == t) break;
      }
      int rid = basis.rmap[static_cast<size_t>(t)];
      int rid_prev = t >= 1 ? basis.rmap[static_cast<size_t>(t - 1)] : -1;
      for (int aa = 0; aa < nu; ++aa) {
        std::vector<std::pair<int, double>> terms;
        double lhs = 0.0;
        if (rid >= 0) {
          terms.emplace_back(basis.n_q_blocks * nu * ny + rid * nu + aa, 1.0);
          lhs += gains.r(t * nu + aa);
        }
        if (rid_prev >= 0 && rid_prev != rid) {
          terms.emplace_back(basis.n_q_blocks * nu * ny + rid_prev * nu + aa, -1.0);
          lhs -= gains.r((t - 1) * nu + aa);
        } else if (rid_prev == rid && rid >= 0) {
          continue;
        }
        if (!terms.empty()) add_indicator(terms, sc_var[static_cast<size_t>(t)], lhs, sigma_c_val(t));
      }
    }
    inc.add_rows(lazy_rows);
    converged = added == 0;
  }
  if (!have_point) return std::nullopt;
  if (debug_) {
    std::fprintf(stderr, "[heur] sigma-LP %s after %.1fs; sigma_m*:", converged ? "converged" : "cutoff",
                 hclock.seconds());
    for (int t = 0; t < T; ++t) std::fprintf(stderr, " %.3f", sigma_m_val(t));
    std::fprintf(stderr, "  sigma_c*:");
    for (int t = 0; t < T; ++t) std::fprintf(stderr, " %.3f", sigma_c_val(t));
    std::fprintf(stderr, "\n");
  }

  // Round: keep fixed entries; choose the highest-valued free sigma within
  // budget, at two activation thresholds.
  for (double threshold : {1e-6, 0.5}) {
    Schedule cand;
    cand.sigma_m.assign(static_cast<size_t>(T), 0);
    cand.sigma_c.assign(static_cast<size_t>(T), 0);
    auto round_side = [&](const std::vector<int>& fixed, const Eigen::VectorXd& vals,
                          std::vector<int>& out, int budget) {
      std::vector<int> order;
      int used = 0;
      for (int t = 0; t < T; ++t) {
        if (fixed[static_cast<size_t>(t)] >= 0) {
          out[static_cast<size_t>(t)] = fixed[static_cast<size_t>(t)];
          used += fixed[static_cast<size_t>(t)];
        } else {
          order.push_back(t);
        }
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return vals(a) > vals(b); });
      for (int t : order) {
        if (used >= budget || vals(t) <= threshold) break;
        out[static_cast<size_t>(t)] = 1;
        ++used;
      }
    };
    round_side(root.am, sigma_m_val, cand.sigma_m, p_.N_m);
    round_side(root.ac, sigma_c_val, cand.sigma_c, p_.N_c);
    if (!schedule_in_budget(p_, cand)) continue;
    ++stats_.heuristic_probes;
    if (debug_) {
      std::fprintf(stderr, "[heur] probe m=");
      for (int v : cand.sigma_m) std::fprintf(stderr, "%d", v);
      std::fprintf(stderr, " c=");
      for (int v : cand.sigma_c) std::fprintf(stderr, "%d", v);
      std::fprintf(stderr, " ...\n");
    }
    GainBasis cbasis = GainBasis::for_schedule(cand, nu, ny);
    MasterOptions popts = mopts_;
    popts.time_budget = 15.0;
    MasterResult probe_mr = robust::solve_master(prog_, cbasis, oracle_, pool_, popts);
    stats_.lp_calls += probe_mr.lp_calls;
    if (debug_) std::fprintf(stderr, "[heur] probe status=%s\n", lp::to_string(probe_mr.status));
    if (probe_mr.status == lp::Status::kOptimal) {
      FixedScheduleOutcome probe;
      probe.feasible = true;
      probe.gains = probe_mr.gains;
      robust::Multipliers mult =
          robust::reconstruct_multipliers(prog_, probe_mr.gains, oracle_, p_.options.tol_cert);
      probe.Lambda = std::move(mult.Lambda);
      probe.Gamma = std::move(mult.Gamma);
      probe.Theta = std::move(mult.Theta);
      SynthesisResult res;
      res.status = SynthesisResult::Status::kFeasible;
      res.schedule = cand;
      res.gains_qr = probe.gains;
      res.gains_ff = q_to_f(probe.gains, prog_.tm);
      res.Lambda = std::move(probe.Lambda);
      res.Gamma = std::move(probe.Gamma);
      res.Theta = std::move(probe.Theta);
      if (p_.schedule_cost) {
        res.objective =
            p_.schedule_cost->first * cand.count_m() + p_.schedule_cost->second * cand.count_c();
      }
      return res;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Direct MILP strategy: textbook branch and bound on the explicit model.
// ---------------------------------------------------------------------------

class DirectMilp {
 public:
  DirectMilp(const SynthesisProblem& p, lp::Oracle& oracle, SolveStats& stats)
      : p_(p), oracle_(oracle), stats_(stats) {
    prog_ = robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
    model_ = build_milp(prog_, p.N_m, p.N_c, p.extra_budget_rows, p.options.big_M,
                        p.schedule_cost);
    lay_ = make_layout(prog_, p.options.big_M);
  }

  SynthesisResult run() {
    Clock clock;
    std::vector<double> fix_lo(model_.vars.size()), fix_hi(model_.vars.size());
    for (size_t j = 0; j < model_.vars.size(); ++j) {
      fix_lo[j] = model_.vars[j].lb;
      fix_hi[j] = model_.vars[j].ub;
    }
    bool limit_hit = false;
    dfs(fix_lo, fix_hi, clock, limit_hit);
    SynthesisResult res;
    if (incumbent_) {
      res = std::move(*incumbent_);
    } else {
      res.status =
          limit_hit ? SynthesisResult::Status::kLimit : SynthesisResult::Status::kInfeasible;
    }
    res.stats = stats_;
    res.stats.wall_time_s = clock.seconds();
    return res;
  }

 private:
  lp::Solution solve_relaxation(const std::vector<double>& lo, const std::vector<double>& hi) {
    lp::Problem prob;
    for (size_t j = 0; j < model_.vars.size(); ++j) {
      prob.add_var(lo[j], hi[j], model_.has_objective ? model_.vars[j].obj : 0.0);
    }
    for (size_t i = 0; i < model_.eq.size(); ++i) {
      lp::Row row;
      for (const auto& [j, v] : model_.eq[i]) row.push(j, v);
      row.sense = lp::Sense::kEq;
      row.rhs = model_.eq_rhs[i];
      prob.add_row(std::move(row));
    }
    for (size_t i = 0; i < model_.ineq.size(); ++i) {
      lp::Row row;
      for (const auto& [j, v] : model_.ineq[i]) row.push(j, v);
      row.sense = lp::Sense::kLe;
      row.rhs = model_.ineq_rhs[i];
      prob.add_row(std::move(row));
    }
    ++stats_.lp_calls;
    return oracle_.solve(prob);
  }

  bool dfs(std::vector<double>& lo, std::vector<double>& hi, const Clock& clock,
           bool& limit_hit) {
    if (limit_hit) return true;
    if (p_.options.node_limit > 0 && stats_.nodes >= p_.options.node_limit) {
      limit_hit = true;
      return true;
    }
    if (p_.options.time_limit > 0.0 && clock.seconds() > p_.options.time_limit) {
      limit_hit = true;
      return true;
    }
    ++stats_.nodes;
    lp::Solution sol = solve_relaxation(lo, hi);
    if (sol.status == lp::Status::kInfeasible) return false;
    if (sol.status != lp::Status::kOptimal) {
      limit_hit = true;
      return true;
    }
    if (model_.has_objective && incumbent_ &&
        sol.objective >= incumbent_->objective - 1e-9) {
      return false;
    }
    // Most fractional binary (sigma variables occupy the leading indices).
    int branch = -1;
    double best_frac = 1e-6;
    for (int j = 0; j < 2 * lay_.T; ++j) {
      if (lo[static_cast<size_t>(j)] == hi[static_cast<size_t>(j)]) continue;
      double v = sol.x(j);
      double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      frac = std::min(frac, std::abs(v - std::round(v)));
      if (frac > best_frac) {
        best_frac = frac;
        branch = j;
      }
    }
    if (branch < 0) {
      // Integral: round sigma and extract the solution.
      SynthesisResult res = extract(sol);
      if (!model_.has_objective) {
        incumbent_ = std::move(res);
        return true;
      }
      if (!incumbent_ || res.objective < incumbent_->objective) incumbent_ = std::move(res);
      return false;
    }
    for (int value : {1, 0}) {
      double keep_lo = lo[static_cast<size_t>(branch)], keep_hi = hi[static_cast<size_t>(branch)];
      lo[static_cast<size_t>(branch)] = hi[static_cast<size_t>(branch)] = value;
      bool stop = dfs(lo, hi, clock, limit_hit);
      lo[static_cast<size_t>(branch)] = keep_lo;
      hi[static_cast<size_t>(branch)] = keep_hi;
      if (stop) return true;
    }
    return false;
  }

  SynthesisResult extract(const lp::Solution& sol) {
    SynthesisResult res;
    res.status = SynthesisResult::Status::kFeasible;
    const int T = lay_.T, nu = lay_.nu, ny = lay_.ny;
    res.schedule.sigma_m.resize(static_cast<size_t>(T));
    res.schedule.sigma_c.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      res.schedule.sigma_m[static_cast<size_t>(t)] =
          static_cast<int>(std::round(sol.x(lay_.sigma_m0 + t)));
      res.schedule.sigma_c[static_cast<size_t>(t)] =
          static_cast<int>(std::round(sol.x(lay_.sigma_c0 + t)));
    }
    res.gains_qr.Q = Eigen::MatrixXd::Zero(T * nu, T * ny);
    res.gains_qr.r = Eigen::VectorXd::Zero(T * nu);
    for (int t = 0; t < T; ++t) {
      for (int tau = 0; tau <= t; ++tau) {
        for (int a = 0; a < nu; ++a) {
          for (int b = 0; b < ny; ++b) {
            res.gains_qr.Q(t * nu + a, tau * ny + b) = sol.x(lay_.q_index(t, tau, a, b));
          }
        }
      }
      for (int a = 0; a < nu; ++a) res.gains_qr.r(t * nu + a) = sol.x(lay_.r_index(t, a));
    }
    res.gains_ff = q_to_f(res.gains_qr, prog_.tm);
    res.Lambda.setZero(lay_.n_safety, lay_.n_eta_rows);
    res.Gamma.setZero(lay_.n_input, lay_.n_eta_rows);
    res.Theta.setZero(lay_.n_terminal, lay_.n_eta_rows);
    for (int i = 0; i < lay_.n_safety; ++i) {
      for (int j = 0; j < lay_.n_eta_rows; ++j) res.Lambda(i, j) = sol.x(lay_.lam_index(i, j));
    }
    for (int i = 0; i < lay_.n_input; ++i) {
      for (int j = 0; j < lay_.n_eta_rows; ++j) res.Gamma(i, j) = sol.x(lay_.gam_index(i, j));
    }
    for (int i = 0; i < lay_.n_terminal; ++i) {
      for (int j = 0; j < lay_.n_eta_rows; ++j) res.Theta(i, j) = sol.x(lay_.theta_index(i, j));
    }
    if (model_.has_objective) res.objective = sol.objective;
    return res;
  }

  const SynthesisProblem& p_;
  lp::Oracle& oracle_;
  SolveStats& stats_;
  RobustProgram prog_;
  MILPModel model_;
  MilpLayout lay_;
  std::optional<SynthesisResult> incumbent_;
};

}  // namespace

SynthesisResult solve(const SynthesisProblem& p) {
  SynthesisProblem prob = p;
  prob.normalize();
  lp::SolverConfig cfg;
  lp::SimplexSolver oracle(cfg);
  SolveStats stats;
  SynthesisResult res;
  if (prob.options.strategy == SolverOptions::Strategy::kDirectMilp) {
    DirectMilp solver(prob, oracle, stats);
    res = solver.run();
  } else {
    BranchAndBound solver(prob, oracle, stats);
    res = solver.run();
  }
  if (res.status == SynthesisResult::Status::kFeasible) {
    res.stats.big_m_margin =
        big_m_margin(res.gains_qr, res.schedule, prob.sys.nu(), prob.sys.ny(), prob.options.big_M);
  }
  return res;
}

MaxHorizonOutcome max_horizon(const SynthesisProblem& p, int T_bar) {
  if (T_bar < 1) throw std::invalid_argument("max_horizon: T_bar must be >= 1");
  if (static_cast<int>(p.sets.Z.size()) < T_bar + 1) {
    throw std::invalid_argument("max_horizon: Z list shorter than T_bar + 1");
  }
  MaxHorizonOutcome out;
  lp::SimplexSolver oracle;

  auto subproblem = [&](int T) {
    SynthesisProblem sub = p;
    sub.T = T;
    sub.sets.Z.assign(p.sets.Z.begin(), p.sets.Z.begin() + T + 1);
    if (sub.extra_budget_rows.size() > 0) {
      // Budget rows are stated over the T_bar window; truncate to the probe
      // horizon (sigma beyond T is identically zero).
      for (auto& row : sub.extra_budget_rows) {
        row.c_m = row.c_m.head(T).eval();
        row.c_c = row.c_c.head(T).eval();
      }
    }
    return sub;
  };

  auto feasible_at = [&](int T, std::optional<SynthesisResult>* res_out) -> bool {
    ++out.probes;
    if (T == 0) {
      SynthesisProblem sub = p;
      sub.sets.Z.assign(p.sets.Z.begin(), p.sets.Z.begin() + 1);
      bool ok = horizon_zero_feasible(sub, oracle);
      if (ok && res_out) {
        SynthesisResult res;
        res.status = SynthesisResult::Status::kFeasible;
        *res_out = std::move(res);
      }
      return ok;
    }
    SynthesisProblem sub = subproblem(T);
    SynthesisResult res = solve(sub);
    if (res.status == SynthesisResult::Status::kLimit) {
      throw std::runtime_error("max_horizon: probe hit solver limit at T=" + std::to_string(T));
    }
    bool ok = res.status == SynthesisResult::Status::kFeasible;
    if (ok && res_out) *res_out = std::move(res);
    return ok;
  };

  std::optional<SynthesisResult> best;
  if (feasible_at(T_bar, &best)) {
    out.T_star = T_bar;
    out.result = std::move(best);
    return out;
  }
  if (!feasible_at(0, &best)) {
    return out;  // T_star = none
  }
  int lo = 0, hi = T_bar;  // lo feasible, hi infeasible
  std::optional<SynthesisResult> lo_result = std::move(best);
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    std::optional<SynthesisResult> mid_result;
    if (feasible_at(mid, &mid_result)) {
      lo = mid;
      lo_result = std::move(mid_result);
    } else {
      hi = mid;
    }
  }
  out.T_star = lo;
  out.result = std::move(lo_result);
  return out;
}

CertificateReport verify_certificate(const SynthesisProblem& p, const SynthesisResult& result) {
  CertificateReport rep;
  if (result.status != SynthesisResult::Status::kFeasible) {
    rep.warnings.push_back("result is not feasible; nothing to verify");
    return rep;
  }
  RobustProgram prog = robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
  const GainsQr& g = result.gains_qr;
  const double tol = p.options.tol_cert;

  rep.min_multiplier = std::numeric_limits<double>::infinity();
  auto scan_block = [&](const Eigen::MatrixXd& mult, robust::RowKind kind) {
    int mi = 0;
    for (const auto& rr : prog.rows) {
      if (rr.kind != kind) continue;
      Eigen::VectorXd lambda = mult.row(mi).transpose();
      Eigen::VectorXd target = rr.base + prog.Yhat.transpose() * (g.Q.transpose() * rr.L);
      Eigen::VectorXd eq_res = prog.H_eta.transpose() * lambda - target;
      rep.max_eq_residual = std::max(rep.max_eq_residual, eq_res.cwiseAbs().maxCoeff());
      double lhs = lambda.dot(prog.h_eta) + rr.L.dot(g.r);
      rep.max_ineq_violation = std::max(rep.max_ineq_violation, lhs - rr.k);
      if (lambda.size() > 0) rep.min_multiplier = std::min(rep.min_multiplier, lambda.minCoeff());
      ++mi;
    }
  };
  if (result.Lambda.rows() != prog.n_safety || result.Gamma.rows() != prog.n_input ||
      result.Theta.rows() != prog.n_terminal) {
    rep.warnings.push_back("certificate block shapes do not match the program");
    rep.pass = false;
    return rep;
  }
  scan_block(result.Lambda, robust::RowKind::kSafety);
  scan_block(result.Gamma, robust::RowKind::kInput);
  scan_block(result.Theta, robust::RowKind::kTerminal);
  if (!std::isfinite(rep.min_multiplier)) rep.min_multiplier = 0.0;

  // Indicator logic on the integral schedule.
  const int nu = p.sys.nu(), ny = p.sys.ny();
  const double ind_tol = p.options.tol_feas * p.options.big_M;
  for (int tau = 0; tau < p.T; ++tau) {
    if (result.schedule.sigma_m[static_cast<size_t>(tau)]) continue;
    if (g.Q.middleCols(tau * ny, ny).cwiseAbs().maxCoeff() > ind_tol) rep.indicator_ok = false;
  }
  for (int t = 0; t < p.T; ++t) {
    if (result.schedule.sigma_c[static_cast<size_t>(t)]) continue;
    Eigen::MatrixXd prev = t == 0 ? Eigen::MatrixXd::Zero(nu, g.Q.cols())
                                  : Eigen::MatrixXd(g.Q.middleRows((t - 1) * nu, nu));
    Eigen::VectorXd prev_r =
        t == 0 ? Eigen::VectorXd::Zero(nu) : Eigen::VectorXd(g.r.segment((t - 1) * nu, nu));
    if ((g.Q.middleRows(t * nu, nu) - prev).cwiseAbs().maxCoeff() > ind_tol) {
      rep.indicator_ok = false;
    }
    if ((g.r.segment(t * nu, nu) - prev_r).cwiseAbs().maxCoeff() > ind_tol) {
      rep.indicator_ok = false;
    }
  }
  rep.budget_ok = schedule_in_budget(p, result.schedule);
  rep.big_m_margin = big_m_margin(g, result.schedule, nu, ny, p.options.big_M);
  if (rep.big_m_margin < 0.01 * p.options.big_M) {
    rep.warnings.push_back("increase big_M: indicator bound margin below 1% of big_M");
  }
  rep.pass = rep.max_eq_residual <= tol && rep.max_ineq_violation <= tol &&
             rep.min_multiplier >= -tol && rep.indicator_ok && rep.budget_ok;
  return rep;
}

}  // namespace cosched
