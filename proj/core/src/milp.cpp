#include "cosched/milp.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cosched/synthesis.hpp"

namespace cosched {

using robust::RobustProgram;
using robust::RobustRow;
using robust::RowKind;

int MILPModel::num_binaries() const {
  int n = 0;
  for (const auto& v : vars) n += v.binary ? 1 : 0;
  return n;
}

namespace {

std::string idx_name(const char* stem, int a) { return std::string(stem) + "_" + std::to_string(a); }
std::string idx_name(const char* stem, int a, int b) {
  return std::string(stem) + "_" + std::to_string(a) + "_" + std::to_string(b);
}
std::string idx_name(const char* stem, int a, int b, int c, int d) {
  return std::string(stem) + "_" + std::to_string(a) + "_" + std::to_string(b) + "_" +
         std::to_string(c) + "_" + std::to_string(d);
}

void sort_row(std::vector<std::pair<int, double>>& row) {
  std::sort(row.begin(), row.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

}  // namespace

MilpLayout make_layout(const RobustProgram& prog, double big_M) {
  (void)big_M;
  MilpLayout lay;
  lay.T = prog.tm.T;
  lay.nu = prog.tm.nu;
  lay.ny = prog.tm.ny;
  lay.n_eta = prog.n_eta;
  lay.n_eta_rows = static_cast<int>(prog.h_eta.size());
  lay.n_safety = prog.n_safety;
  lay.n_input = prog.n_input;
  lay.n_terminal = prog.n_terminal;
  lay.sigma_m0 = 0;
  lay.sigma_c0 = lay.T;
  lay.q0 = 2 * lay.T;
  const int n_q = lay.T * (lay.T + 1) / 2 * lay.nu * lay.ny;
  lay.r0 = lay.q0 + n_q;
  lay.lam0 = lay.r0 + lay.T * lay.nu;
  lay.gam0 = lay.lam0 + lay.n_safety * lay.n_eta_rows;
  lay.theta0 = lay.gam0 + lay.n_input * lay.n_eta_rows;
  lay.total = lay.theta0 + lay.n_terminal * lay.n_eta_rows;
  return lay;
}

namespace {

// Equality block Mult * H_eta = rhs_of_kind + inequality block
// Mult * h_eta + L.r <= k, for every robust row of the given kind.
void assemble_containment(const RobustProgram& prog, const MilpLayout& lay, RowKind kind,
                          int mult0, MILPModel& model) {
  const int T = lay.T, nu = lay.nu, ny = lay.ny;
  int mi = 0;
  for (const RobustRow& rr : prog.rows) {
    if (rr.kind != kind) {
      continue;
    }
    // Equalities: sum_a mult[mi,a] H_eta[a,jj] - (L Q Yhat)_jj = base_jj.
    for (int jj = 0; jj < lay.n_eta; ++jj) {
      std::vector<std::pair<int, double>> row;
      for (int a = 0; a < lay.n_eta_rows; ++a) {
        double hv = prog.H_eta(a, jj);
        if (hv != 0.0) row.emplace_back(mult0 + mi * lay.n_eta_rows + a, hv);
      }
      for (int t = 0; t < T; ++t) {
        for (int aa = 0; aa < nu; ++aa) {
          double lv = rr.L(t * nu + aa);
          if (lv == 0.0) continue;
          for (int tau = 0; tau <= t; ++tau) {
            for (int bb = 0; bb < ny; ++bb) {
              double yv = prog.Yhat(tau * ny + bb, jj);
              if (yv == 0.0) continue;
              row.emplace_back(lay.q_index(t, tau, aa, bb), -lv * yv);
            }
          }
        }
      }
      sort_row(row);
      // Merge duplicate columns (shared Q entries across t blocks).
      std::vector<std::pair<int, double>> merged;
      for (const auto& e : row) {
        if (!merged.empty() && merged.back().first == e.first) {
          merged.back().second += e.second;
        } else {
          merged.push_back(e);
        }
      }
      model.eq.push_back(std::move(merged));
      model.eq_rhs.push_back(rr.base(jj));
    }
    // Inequality: mult.h_eta + L.r <= k.
    std::vector<std::pair<int, double>> row;
    for (int t = 0; t < T; ++t) {
      for (int aa = 0; aa < nu; ++aa) {
        double lv = rr.L(t * nu + aa);
        if (lv != 0.0) row.emplace_back(lay.r_index(t, aa), lv);
      }
    }
    for (int a = 0; a < lay.n_eta_rows; ++a) {
      double hv = prog.h_eta(a);
      if (hv != 0.0) row.emplace_back(mult0 + mi * lay.n_eta_rows + a, hv);
    }
    sort_row(row);
    model.ineq.push_back(std::move(row));
    model.ineq_rhs.push_back(rr.k);
    ++mi;
  }
}

}  // namespace

void assemble_safety(const RobustProgram& prog, const MilpLayout& lay, MILPModel& model) {
  assemble_containment(prog, lay, RowKind::kSafety, lay.lam0, model);
}

void assemble_input_bounds(const RobustProgram& prog, const MilpLayout& lay, MILPModel& model) {
  assemble_containment(prog, lay, RowKind::kInput, lay.gam0, model);
}

void assemble_terminal(const RobustProgram& prog, const MilpLayout& lay, MILPModel& model) {
  assemble_containment(prog, lay, RowKind::kTerminal, lay.theta0, model);
}

void assemble_indicators(const MilpLayout& lay, double big_M, MILPModel& model) {
  if (!(big_M > 0.0)) throw std::invalid_argument("assemble_indicators: big_M must be positive");
  const int T = lay.T, nu = lay.nu, ny = lay.ny;
  auto push_pair = [&](std::vector<std::pair<int, double>> terms, int sigma_index) {
    // terms . x <= M sigma  and  -terms . x <= M sigma
    for (double sgn : {1.0, -1.0}) {
      std::vector<std::pair<int, double>> row;
      for (const auto& [j, v] : terms) row.emplace_back(j, sgn * v);
      row.emplace_back(sigma_index, -big_M);
      sort_row(row);
      model.ineq.push_back(std::move(row));
      model.ineq_rhs.push_back(0.0);
    }
  };
  // Measurement indicators: sigma^m_tau = 0 forces column block tau of Q to 0.
  for (int t = 0; t < T; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < ny; ++b) {
          push_pair({{lay.q_index(t, tau, a, b), 1.0}}, lay.sigma_m0 + tau);
        }
      }
    }
  }
  // Control indicators: sigma^c_t = 0 forces row block t to equal block t-1
  // (block -1 is zero), and the same for r.
  for (int t = 0; t < T; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < ny; ++b) {
          std::vector<std::pair<int, double>> terms{{lay.q_index(t, tau, a, b), 1.0}};
          if (t >= 1 && tau <= t - 1) terms.emplace_back(lay.q_index(t - 1, tau, a, b), -1.0);
          push_pair(std::move(terms), lay.sigma_c0 + t);
        }
      }
    }
    for (int a = 0; a < nu; ++a) {
      std::vector<std::pair<int, double>> terms{{lay.r_index(t, a), 1.0}};
      if (t >= 1) terms.emplace_back(lay.r_index(t - 1, a), -1.0);
      push_pair(std::move(terms), lay.sigma_c0 + t);
    }
  }
}

void assemble_budget(const MilpLayout& lay, int N_m, int N_c,
                     const std::vector<ExtraBudgetRow>& extra, MILPModel& model) {
  std::vector<std::pair<int, double>> row;
  for (int t = 0; t < lay.T; ++t) row.emplace_back(lay.sigma_m0 + t, 1.0);
  model.ineq.push_back(std::move(row));
  model.ineq_rhs.push_back(static_cast<double>(N_m));
  row.clear();
  for (int t = 0; t < lay.T; ++t) row.emplace_back(lay.sigma_c0 + t, 1.0);
  model.ineq.push_back(std::move(row));
  model.ineq_rhs.push_back(static_cast<double>(N_c));
  for (const auto& ex : extra) {
    if (ex.c_m.size() != lay.T || ex.c_c.size() != lay.T) {
      throw std::invalid_argument("assemble_budget: extra row coefficient length mismatch");
    }
    row.clear();
    for (int t = 0; t < lay.T; ++t) {
      if (ex.c_m(t) != 0.0) row.emplace_back(lay.sigma_m0 + t, ex.c_m(t));
    }
    for (int t = 0; t < lay.T; ++t) {
      if (ex.c_c(t) != 0.0) row.emplace_back(lay.sigma_c0 + t, ex.c_c(t));
    }
    model.ineq.push_back(std::move(row));
    model.ineq_rhs.push_back(ex.b);
  }
}

MILPModel build_milp(const RobustProgram& prog, int N_m, int N_c,
                     const std::vector<ExtraBudgetRow>& extra, double big_M,
                     const std::optional<std::pair<double, double>>& schedule_cost) {
  MilpLayout lay = make_layout(prog, big_M);
  MILPModel model;
  model.vars.reserve(static_cast<size_t>(lay.total));
  const int T = lay.T, nu = lay.nu, ny = lay.ny;
  for (int t = 0; t < T; ++t) {
    model.vars.push_back({idx_name("sigma_m", t), 0.0, 1.0,
                          schedule_cost ? schedule_cost->first : 0.0, true});
  }
  for (int t = 0; t < T; ++t) {
    model.vars.push_back({idx_name("sigma_c", t), 0.0, 1.0,
                          schedule_cost ? schedule_cost->second : 0.0, true});
  }
  for (int t = 0; t < T; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < ny; ++b) {
          model.vars.push_back({idx_name("Q", t, tau, a, b), -big_M, big_M, 0.0, false});
        }
      }
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < nu; ++a) {
      model.vars.push_back({idx_name("r", t, a), -lp::kInf, lp::kInf, 0.0, false});
    }
  }
  for (int i = 0; i < lay.n_safety; ++i) {
    for (int j = 0; j < lay.n_eta_rows; ++j) {
      model.vars.push_back({idx_name("Lam", i, j), 0.0, lp::kInf, 0.0, false});
    }
  }
  for (int i = 0; i < lay.n_input; ++i) {
    for (int j = 0; j < lay.n_eta_rows; ++j) {
      model.vars.push_back({idx_name("Gam", i, j), 0.0, lp::kInf, 0.0, false});
    }
  }
  for (int i = 0; i < lay.n_terminal; ++i) {
    for (int j = 0; j < lay.n_eta_rows; ++j) {
      model.vars.push_back({idx_name("Theta", i, j), 0.0, lp::kInf, 0.0, false});
    }
  }
  model.has_objective = schedule_cost.has_value();

  assemble_safety(prog, lay, model);
  assemble_input_bounds(prog, lay, model);
  assemble_terminal(prog, lay, model);
  assemble_indicators(lay, big_M, model);
  assemble_budget(lay, N_m, N_c, extra, model);
  return model;
}

MILPModel build_milp(const SynthesisProblem& p) {
  RobustProgram prog = robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
  return build_milp(prog, p.N_m, p.N_c, p.extra_budget_rows, p.options.big_M, p.schedule_cost);
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_lp_text(const MILPModel& m, std::ostream& os) {
  os << "Minimize\n obj:";
  bool any = false;
  if (m.has_objective) {
    for (size_t j = 0; j < m.vars.size(); ++j) {
      if (m.vars[j].obj != 0.0) {
        os << (m.vars[j].obj >= 0 ? " + " : " - ") << fmt17(std::abs(m.vars[j].obj)) << " "
           << m.vars[j].name;
        any = true;
      }
    }
  }
  if (!any) os << " 0 " << (m.vars.empty() ? "x0" : m.vars[0].name);
  os << "\nSubject To\n";
  auto write_row = [&](const std::vector<std::pair<int, double>>& row, const char* rel,
                       double rhs, const std::string& name) {
    os << " " << name << ":";
    if (row.empty()) os << " 0 " << m.vars[0].name;
    for (const auto& [j, v] : row) {
      os << (v >= 0 ? " + " : " - ") << fmt17(std::abs(v)) << " " << m.vars[static_cast<size_t>(j)].name;
    }
    os << " " << rel << " " << fmt17(rhs) << "\n";
  };
  for (size_t i = 0; i < m.eq.size(); ++i) {
    write_row(m.eq[i], "=", m.eq_rhs[i], "eq" + std::to_string(i));
  }
  for (size_t i = 0; i < m.ineq.size(); ++i) {
    write_row(m.ineq[i], "<=", m.ineq_rhs[i], "le" + std::to_string(i));
  }
  os << "Bounds\n";
  for (const auto& v : m.vars) {
    if (v.binary) continue;  // binaries listed below; 0/1 implied
    const bool lo_inf = !std::isfinite(v.lb), up_inf = !std::isfinite(v.ub);
    if (lo_inf && up_inf) {
      os << " " << v.name << " free\n";
    } else if (lo_inf) {
      os << " -inf <= " << v.name << " <= " << fmt17(v.ub) << "\n";
    } else if (up_inf) {
      os << " " << fmt17(v.lb) << " <= " << v.name << " <= +inf\n";
    } else {
      os << " " << fmt17(v.lb) << " <= " << v.name << " <= " << fmt17(v.ub) << "\n";
    }
  }
  os << "Binary\n";
  for (const auto& v : m.vars) {
    if (v.binary) os << " " << v.name << "\n";
  }
  os << "End\n";
}

nlohmann::json rows_to_json(const std::vector<std::vector<std::pair<int, double>>>& rows,
                            const std::vector<double>& rhs) {
  nlohmann::json trip = nlohmann::json::array();
  for (size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : rows[i]) {
      trip.push_back({static_cast<int>(i), j, v});
    }
  }
  return {{"triplets", trip}, {"rhs", rhs}, {"rows", rows.size()}};
}

}  // namespace

void export_model(const MILPModel& model, ModelFormat format, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_model: cannot open " + path);
  if (format == ModelFormat::kLpText) {
    write_lp_text(model, os);
    return;
  }
  nlohmann::json j;
  j["vars"] = nlohmann::json::array();
  for (const auto& v : model.vars) {
    nlohmann::json vj{{"name", v.name}};
    if (std::isfinite(v.lb)) vj["lb"] = v.lb;
    if (std::isfinite(v.ub)) vj["ub"] = v.ub;
    if (v.obj != 0.0) vj["obj"] = v.obj;
    j["vars"].push_back(vj);
  }
  j["binaries"] = nlohmann::json::array();
  for (const auto& v : model.vars) {
    if (v.binary) j["binaries"].push_back(v.name);
  }
  j["eq"] = rows_to_json(model.eq, model.eq_rhs);
  j["ineq"] = rows_to_json(model.ineq, model.ineq_rhs);
  j["has_objective"] = model.has_objective;
  os << j.dump(1) << "\n";
}

MILPModel import_triplet_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("import_triplet_json: cannot open " + path);
  nlohmann::json j;
  is >> j;
  MILPModel m;
  for (const auto& vj : j.at("vars")) {
    MILPModel::Var v;
    v.name = vj.at("name").get<std::string>();
    v.lb = vj.contains("lb") ? vj["lb"].get<double>() : -lp::kInf;
    v.ub = vj.contains("ub") ? vj["ub"].get<double>() : lp::kInf;
    v.obj = vj.contains("obj") ? vj["obj"].get<double>() : 0.0;
    m.vars.push_back(std::move(v));
  }
  for (const auto& name : j.at("binaries")) {
    for (auto& v : m.vars) {
      if (v.name == name.get<std::string>()) v.binary = true;
    }
  }
  auto load_rows = [&](const nlohmann::json& block,
                       std::vector<std::vector<std::pair<int, double>>>& rows,
                       std::vector<double>& rhs) {
    rhs = block.at("rhs").get<std::vector<double>>();
    rows.assign(block.at("rows").get<size_t>(), {});
    for (const auto& t : block.at("triplets")) {
      rows[t[0].get<size_t>()].emplace_back(t[1].get<int>(), t[2].get<double>());
    }
  };
  load_rows(j.at("eq"), m.eq, m.eq_rhs);
  load_rows(j.at("ineq"), m.ineq, m.ineq_rhs);
  m.has_objective = j.value("has_objective", false);
  return m;
}

}  // namespace cosched
