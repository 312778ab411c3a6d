#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cosched/robust.hpp"

namespace cosched {

struct SynthesisProblem;  // synthesis.hpp

/// Explicit mixed-integer model of the schedule co-design feasibility
/// program: binaries sigma^m, sigma^c; continuous Q (lower-triangular
/// support only), r and the nonnegative multiplier blocks; all constraint
/// groups as sparse rows.
struct MILPModel {
  struct Var {
    std::string name;
    double lb = 0.0, ub = 0.0;
    double obj = 0.0;
    bool binary = false;
  };
  std::vector<Var> vars;
  std::vector<std::vector<std::pair<int, double>>> eq;
  std::vector<double> eq_rhs;
  std::vector<std::vector<std::pair<int, double>>> ineq;  // a.x <= rhs
  std::vector<double> ineq_rhs;
  bool has_objective = false;

  int num_binaries() const;
};

/// Variable layout of a MILPModel; fixed canonical ordering
/// (sigma_m, sigma_c, Q, r, Lambda, Gamma, Theta).
struct MilpLayout {
  int T = 0, nu = 0, ny = 0;
  int n_eta = 0;       // eta coordinates
  int n_eta_rows = 0;  // rows of H_eta (multiplier columns)
  int n_safety = 0, n_input = 0, n_terminal = 0;
  int sigma_m0 = 0, sigma_c0 = 0, q0 = 0, r0 = 0, lam0 = 0, gam0 = 0, theta0 = 0;
  int total = 0;

  int q_block(int t, int tau) const { return t * (t + 1) / 2 + tau; }
  int q_index(int t, int tau, int a, int b) const {
    return q0 + q_block(t, tau) * nu * ny + a * ny + b;
  }
  int r_index(int t, int a) const { return r0 + t * nu + a; }
  int lam_index(int i, int j) const { return lam0 + i * n_eta_rows + j; }
  int gam_index(int i, int j) const { return gam0 + i * n_eta_rows + j; }
  int theta_index(int i, int j) const { return theta0 + i * n_eta_rows + j; }
};

MilpLayout make_layout(const robust::RobustProgram& prog, double big_M);

/// Constraint-group builders; each appends its rows to the model.
void assemble_safety(const robust::RobustProgram& prog, const MilpLayout& lay, MILPModel& model);
void assemble_input_bounds(const robust::RobustProgram& prog, const MilpLayout& lay,
                           MILPModel& model);
void assemble_terminal(const robust::RobustProgram& prog, const MilpLayout& lay, MILPModel& model);
void assemble_indicators(const MilpLayout& lay, double big_M, MILPModel& model);
void assemble_budget(const MilpLayout& lay, int N_m, int N_c,
                     const std::vector<ExtraBudgetRow>& extra, MILPModel& model);

MILPModel build_milp(const SynthesisProblem& p);
MILPModel build_milp(const robust::RobustProgram& prog, int N_m, int N_c,
                     const std::vector<ExtraBudgetRow>& extra, double big_M,
                     const std::optional<std::pair<double, double>>& schedule_cost);

enum class ModelFormat { kLpText, kTripletJson };

void export_model(const MILPModel& model, ModelFormat format, const std::string& path);
MILPModel import_triplet_json(const std::string& path);

}  // namespace cosched
