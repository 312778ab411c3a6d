#include "cosched/problem_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cosched::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument(path + ": " + msg);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing required key");
  return obj.at(key);
}

Eigen::VectorXd parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) fail(path + "[0]", "expected an array");
    cols = j[0].size();
  }
  Eigen::MatrixXd M(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      fail(path + "[" + std::to_string(i) + "]", "ragged matrix rows");
    }
    for (size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        fail(path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]",
             "expected a number");
      }
      M(static_cast<int>(i), static_cast<int>(k)) = j[i][k].get<double>();
    }
  }
  return M;
}

HPolytope parse_polytope(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected a polytope object");
  if (j.contains("H") || j.contains("h")) {
    require_keys(j, path, {"H", "h", "dim", "label"});
    Eigen::MatrixXd H = parse_matrix(require(j, path, "H"), path + ".H");
    Eigen::VectorXd h = parse_vector(require(j, path, "h"), path + ".h");
    if (H.rows() == 0 && j.contains("dim")) {
      int dim = j.at("dim").get<int>();
      H.resize(0, dim);
    }
    return HPolytope(std::move(H), std::move(h), j.value("label", ""));
  }
  if (j.contains("box")) {
    require_keys(j, path, {"box", "label"});
    const json& b = j.at("box");
    require_keys(b, path + ".box", {"lb", "ub"});
    return HPolytope::box(parse_vector(require(b, path + ".box", "lb"), path + ".box.lb"),
                          parse_vector(require(b, path + ".box", "ub"), path + ".box.ub"),
                          j.value("label", ""));
  }
  if (j.contains("point")) {
    require_keys(j, path, {"point", "label"});
    return HPolytope::point(parse_vector(j.at("point"), path + ".point"), j.value("label", ""));
  }
  fail(path, "polytope must provide H/h, box, or point");
}

LinearSystem parse_system(const json& j, const std::string& path, bool* continuous, double* dt) {
  require_keys(j, path, {"A", "B", "C", "D", "d", "continuous", "dt"});
  LinearSystem sys;
  sys.A = parse_matrix(require(j, path, "A"), path + ".A");
  sys.B = parse_matrix(require(j, path, "B"), path + ".B");
  sys.C = parse_matrix(require(j, path, "C"), path + ".C");
  sys.D = parse_matrix(require(j, path, "D"), path + ".D");
  if (j.contains("d")) {
    sys.d = parse_vector(j.at("d"), path + ".d");
  } else {
    sys.d = Eigen::VectorXd::Zero(sys.D.rows());
  }
  *continuous = j.value("continuous", false);
  *dt = j.value("dt", 0.0);
  if (*continuous && !(*dt > 0.0)) fail(path + ".dt", "continuous systems need dt > 0");
  return sys;
}

SolverOptions parse_options(const json& j, const std::string& path) {
  require_keys(j, path,
               {"big_M", "strategy", "tol_feas", "tol_cert", "node_limit", "time_limit",
                "branching", "prune_with_observability", "heuristic_cap_controls",
                "root_heuristic", "seed", "threads"});
  SolverOptions opts;
  opts.big_M = j.value("big_M", opts.big_M);
  opts.tol_feas = j.value("tol_feas", opts.tol_feas);
  opts.tol_cert = j.value("tol_cert", opts.tol_cert);
  opts.node_limit = j.value("node_limit", opts.node_limit);
  opts.time_limit = j.value("time_limit", opts.time_limit);
  opts.prune_with_observability =
      j.value("prune_with_observability", opts.prune_with_observability);
  opts.heuristic_cap_controls = j.value("heuristic_cap_controls", opts.heuristic_cap_controls);
  opts.root_heuristic = j.value("root_heuristic", opts.root_heuristic);
  opts.seed = j.value("seed", opts.seed);
  opts.threads = j.value("threads", opts.threads);
  if (j.contains("strategy")) {
    std::string s = j.at("strategy").get<std::string>();
    if (s == "branch-and-bound") {
      opts.strategy = SolverOptions::Strategy::kBranchAndBound;
    } else if (s == "direct-milp") {
      opts.strategy = SolverOptions::Strategy::kDirectMilp;
    } else {
      fail(path + ".strategy", "expected 'branch-and-bound' or 'direct-milp'");
    }
  }
  if (j.contains("branching")) {
    std::string b = j.at("branching").get<std::string>();
    if (b == "most-fractional") {
      opts.branching = SolverOptions::Branching::kMostFractional;
    } else if (b == "time-ordered") {
      opts.branching = SolverOptions::Branching::kTimeOrdered;
    } else {
      fail(path + ".branching", "expected 'most-fractional' or 'time-ordered'");
    }
  }
  return opts;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json data = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& path) {
  int rows = require(j, path, "rows").get<int>();
  int cols = require(j, path, "cols").get<int>();
  const json& data = require(j, path, "data");
  if (static_cast<int>(data.size()) != rows * cols) fail(path + ".data", "size mismatch");
  Eigen::MatrixXd M(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i) {
    for (int jj = 0; jj < cols; ++jj) M(i, jj) = data[static_cast<size_t>(k++)].get<double>();
  }
  return M;
}

}  // namespace

HPolytope parse_polytope_fragment(const std::string& json_text) {
  return parse_polytope(json::parse(json_text), "$");
}

SynthesisProblem parse_problem(const std::string& json_text, std::vector<std::string>* warnings) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("problem file: JSON parse error: ") + e.what());
  }
  require_keys(j, "$",
               {"system", "sets", "horizon", "budgets", "extra_budgets", "schedule_cost",
                "terminal_in_X0", "options", "comment"});
  SynthesisProblem p;
  bool continuous = false;
  double dt = 0.0;
  p.sys = parse_system(require(j, "$", "system"), "$.system", &continuous, &dt);
  if (continuous) {
    auto [A, B] = exact_discretize(p.sys.A, p.sys.B, dt);
    p.sys.A = A;
    p.sys.B = B;
  }
  p.sys.validate();

  if (!require(j, "$", "horizon").is_number_integer()) fail("$.horizon", "expected an integer");
  p.T = j.at("horizon").get<int>();
  if (p.T < 1) fail("$.horizon", "must be >= 1");

  const json& sets = require(j, "$", "sets");
  require_keys(sets, "$.sets", {"W", "V", "X0", "U", "Z", "Z_list"});
  HPolytope W = parse_polytope(require(sets, "$.sets", "W"), "$.sets.W");
  HPolytope V = parse_polytope(require(sets, "$.sets", "V"), "$.sets.V");
  HPolytope X0 = parse_polytope(require(sets, "$.sets", "X0"), "$.sets.X0");
  HPolytope U = parse_polytope(require(sets, "$.sets", "U"), "$.sets.U");
  bool terminal = j.value("terminal_in_X0", false);
  if (sets.contains("Z_list")) {
    if (sets.contains("Z")) fail("$.sets", "provide either Z or Z_list, not both");
    const json& zl = sets.at("Z_list");
    if (!zl.is_array() || static_cast<int>(zl.size()) != p.T + 1) {
      fail("$.sets.Z_list", "expected an array of length horizon + 1");
    }
    std::vector<HPolytope> zs;
    for (size_t i = 0; i < zl.size(); ++i) {
      zs.push_back(parse_polytope(zl[i], "$.sets.Z_list[" + std::to_string(i) + "]"));
    }
    p.sets = make_uncertainty(std::move(W), std::move(V), std::move(X0), std::move(U),
                              std::move(zs), p.T, terminal);
  } else {
    HPolytope Z = parse_polytope(require(sets, "$.sets", "Z"), "$.sets.Z");
    p.sets = make_uncertainty(std::move(W), std::move(V), std::move(X0), std::move(U),
                              std::move(Z), p.T, terminal);
  }

  const json& budgets = require(j, "$", "budgets");
  require_keys(budgets, "$.budgets", {"N_m", "N_c"});
  p.N_m = require(budgets, "$.budgets", "N_m").get<int>();
  p.N_c = require(budgets, "$.budgets", "N_c").get<int>();

  if (j.contains("extra_budgets")) {
    const json& ex = j.at("extra_budgets");
    if (!ex.is_array()) fail("$.extra_budgets", "expected an array");
    for (size_t i = 0; i < ex.size(); ++i) {
      std::string path = "$.extra_budgets[" + std::to_string(i) + "]";
      require_keys(ex[i], path, {"c_m", "c_c", "b"});
      ExtraBudgetRow row;
      row.c_m = ex[i].contains("c_m") ? parse_vector(ex[i]["c_m"], path + ".c_m")
                                      : Eigen::VectorXd::Zero(p.T);
      row.c_c = ex[i].contains("c_c") ? parse_vector(ex[i]["c_c"], path + ".c_c")
                                      : Eigen::VectorXd::Zero(p.T);
      row.b = require(ex[i], path, "b").get<double>();
      if (row.c_m.size() != p.T || row.c_c.size() != p.T) {
        fail(path, "coefficient vectors must have length horizon");
      }
      p.extra_budget_rows.push_back(std::move(row));
    }
  }
  if (j.contains("schedule_cost")) {
    const json& sc = j.at("schedule_cost");
    require_keys(sc, "$.schedule_cost", {"c_m", "c_c"});
    p.schedule_cost = {require(sc, "$.schedule_cost", "c_m").get<double>(),
                       require(sc, "$.schedule_cost", "c_c").get<double>()};
  }
  if (j.contains("options")) {
    p.options = parse_options(j.at("options"), "$.options");
  }
  auto warn = p.normalize();
  if (warnings) warnings->insert(warnings->end(), warn.begin(), warn.end());
  return p;
}

SynthesisProblem load_problem(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open problem file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_problem(buf.str(), warnings);
}

void write_result(const std::string& path, const SynthesisProblem& p, const SynthesisResult& r,
                  const CertificateReport& report, std::uint64_t seed) {
  json j;
  j["status"] = to_string(r.status);
  j["seed"] = seed;
  if (r.status == SynthesisResult::Status::kFeasible) {
    j["sigma_m"] = r.schedule.sigma_m;
    j["sigma_c"] = r.schedule.sigma_c;
    j["Q"] = matrix_to_json(r.gains_qr.Q);
    j["r"] = matrix_to_json(r.gains_qr.r);
    j["F"] = matrix_to_json(r.gains_ff.F);
    j["f"] = matrix_to_json(r.gains_ff.f);
    j["Lambda"] = matrix_to_json(r.Lambda);
    j["Gamma"] = matrix_to_json(r.Gamma);
    if (r.Theta.rows() > 0) j["Theta"] = matrix_to_json(r.Theta);
    if (p.schedule_cost) j["objective"] = r.objective;
  }
  j["stats"] = {{"nodes", r.stats.nodes},
                {"lp_calls", r.stats.lp_calls},
                {"heuristic_probes", r.stats.heuristic_probes},
                {"wall_time_s", r.stats.wall_time_s},
                {"big_m_margin", r.stats.big_m_margin},
                {"cut_pool_size", r.stats.cut_pool_size}};
  j["certificate"] = {{"pass", report.pass},
                      {"max_eq_residual", report.max_eq_residual},
                      {"max_ineq_violation", report.max_ineq_violation},
                      {"min_multiplier", report.min_multiplier},
                      {"big_m_margin", report.big_m_margin},
                      {"indicator_ok", report.indicator_ok},
                      {"budget_ok", report.budget_ok},
                      {"warnings", report.warnings}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write result file: " + path);
  os << j.dump(1) << "\n";
}

SynthesisResult load_result(const std::string& path, const SynthesisProblem& p) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open result file: " + path);
  json j;
  is >> j;
  SynthesisResult r;
  std::string status = require(j, "$", "status").get<std::string>();
  if (status == "feasible") {
    r.status = SynthesisResult::Status::kFeasible;
  } else if (status == "infeasible") {
    r.status = SynthesisResult::Status::kInfeasible;
    return r;
  } else {
    r.status = SynthesisResult::Status::kLimit;
    return r;
  }
  r.schedule.sigma_m = j.at("sigma_m").get<std::vector<int>>();
  r.schedule.sigma_c = j.at("sigma_c").get<std::vector<int>>();
  r.gains_qr.Q = matrix_from_json(j.at("Q"), "$.Q");
  r.gains_qr.r = matrix_from_json(j.at("r"), "$.r").col(0);
  r.gains_ff.F = matrix_from_json(j.at("F"), "$.F");
  r.gains_ff.f = matrix_from_json(j.at("f"), "$.f").col(0);
  if (j.contains("Lambda")) r.Lambda = matrix_from_json(j.at("Lambda"), "$.Lambda");
  if (j.contains("Gamma")) r.Gamma = matrix_from_json(j.at("Gamma"), "$.Gamma");
  if (j.contains("Theta")) {
    r.Theta = matrix_from_json(j.at("Theta"), "$.Theta");
  } else {
    robust::RobustProgram prog =
        robust::build_robust_program(p.sys, p.sets, p.T, p.sets.terminal_in_X0);
    r.Theta = Eigen::MatrixXd::Zero(prog.n_terminal, prog.h_eta.size());
  }
  return r;
}

}  // namespace cosched::io
