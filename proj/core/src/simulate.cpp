#include "cosched/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cosched::simulate {

Eigen::VectorXd UncertaintyStack::eta() const {
  Eigen::VectorXd out(w.size() + v.size() + x0.size());
  out << w, v, x0;
  return out;
}

namespace {

// Checks the forbidden-measurement / held-control gain conditions for the
// schedule (zero column blocks at skipped measurements, tied consecutive row
// blocks at held controls).
bool gains_respect_schedule(const GainsFf& g, const Schedule& s, int nu, int ny, double tol) {
  const int T = s.T();
  for (int tau = 0; tau < T; ++tau) {
    if (s.sigma_m[static_cast<size_t>(tau)]) continue;
    if (g.F.middleCols(tau * ny, ny).cwiseAbs().maxCoeff() > tol) return false;
  }
  for (int t = 0; t < T; ++t) {
    if (s.sigma_c[static_cast<size_t>(t)]) continue;
    Eigen::MatrixXd prev_row = t == 0 ? Eigen::MatrixXd::Zero(nu, g.F.cols())
                                      : Eigen::MatrixXd(g.F.middleRows((t - 1) * nu, nu));
    Eigen::VectorXd prev_f = t == 0 ? Eigen::VectorXd::Zero(nu)
                                    : Eigen::VectorXd(g.f.segment((t - 1) * nu, nu));
    if ((g.F.middleRows(t * nu, nu) - prev_row).cwiseAbs().maxCoeff() > tol) return false;
    if ((g.f.segment(t * nu, nu) - prev_f).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

void check_set_membership(const HPolytope& set, const Eigen::VectorXd& val, int t,
                          const std::string& what, double tol,
                          std::vector<std::pair<int, std::string>>& out) {
  if (set.rows() == 0) return;
  Eigen::VectorXd slack = set.h() - set.H() * val;
  for (int i = 0; i < slack.size(); ++i) {
    if (slack(i) < -tol) {
      out.emplace_back(t, what + ":" + std::to_string(i));
    }
  }
}

}  // namespace

TrajectoryBundle closed_loop_simulate(const LinearSystem& sys, const GainsFf& gains,
                                      const Schedule& s, const UncertaintyStack& unc, SimMode mode,
                                      const UncertaintySpec* sets, double tol) {
  s.validate();
  const int T = s.T();
  const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  if (gains.F.rows() != T * nu || gains.F.cols() != T * ny || gains.f.size() != T * nu) {
    throw std::invalid_argument("closed_loop_simulate: gain dimensions mismatch");
  }
  if (unc.w.size() != T * nx || unc.v.size() != T * ny || unc.x0.size() != nx) {
    throw std::invalid_argument("closed_loop_simulate: uncertainty dimensions mismatch");
  }

  TrajectoryBundle bundle;
  bundle.lemma1_conditions_ok = gains_respect_schedule(gains, s, nu, ny, 1e-7);
  bundle.x.reserve(static_cast<size_t>(T) + 1);
  bundle.x.push_back(unc.x0);
  bundle.y.resize(static_cast<size_t>(T));

  Eigen::VectorXd u_prev = Eigen::VectorXd::Zero(nu);
  std::vector<Eigen::VectorXd> meas(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd& xt = bundle.x.back();
    Eigen::VectorXd yt = sys.C * xt + unc.v.segment(t * ny, ny);
    meas[static_cast<size_t>(t)] = yt;
    const bool measured = s.sigma_m[static_cast<size_t>(t)] == 1;
    if (mode == SimMode::kMasked) {
      if (measured) bundle.y[static_cast<size_t>(t)] = yt;
    } else {
      bundle.y[static_cast<size_t>(t)] = yt;
    }

    Eigen::VectorXd ut;
    if (mode == SimMode::kProhibited) {
      // Full-information control law applied at every step.
      ut = gains.f.segment(t * nu, nu);
      for (int tau = 0; tau <= t; ++tau) {
        ut += gains.F.block(t * nu, tau * ny, nu, ny) * meas[static_cast<size_t>(tau)];
      }
    } else if (s.sigma_c[static_cast<size_t>(t)] == 1) {
      ut = gains.f.segment(t * nu, nu);
      for (int tau = 0; tau <= t; ++tau) {
        if (s.sigma_m[static_cast<size_t>(tau)] == 1) {
          ut += gains.F.block(t * nu, tau * ny, nu, ny) * meas[static_cast<size_t>(tau)];
        }
      }
    } else {
      ut = u_prev;  // zero-order hold
    }
    bundle.u.push_back(ut);
    u_prev = ut;
    bundle.x.push_back(sys.A * xt + sys.B * ut + unc.w.segment(t * nx, nx));
  }
  for (int t = 0; t <= T; ++t) {
    bundle.z.push_back(sys.D * bundle.x[static_cast<size_t>(t)] + sys.d);
  }
  if (sets) {
    for (int t = 0; t <= T; ++t) {
      check_set_membership(sets->Z[static_cast<size_t>(t)], bundle.z[static_cast<size_t>(t)], t,
                           "z", tol, bundle.violations);
    }
    for (int t = 0; t < T; ++t) {
      check_set_membership(sets->U, bundle.u[static_cast<size_t>(t)], t, "u", tol,
                           bundle.violations);
    }
  }
  return bundle;
}

namespace {

struct SetSampler {
  const HPolytope* set = nullptr;
  Eigen::VectorXd lb, ub;                 // bounding box
  std::vector<Eigen::VectorXd> vertices;  // filled lazily for vertex mode
  bool vertices_ready = false;

  void init(const HPolytope& s, lp::Oracle& oracle) {
    set = &s;
    const int d = s.dim();
    lb.resize(d);
    ub.resize(d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
      dir(j) = 1.0;
      SupportResult hi = support(s, dir, oracle);
      dir(j) = -1.0;
      SupportResult lo = support(s, dir, oracle);
      if (!hi.bounded || !lo.bounded) {
        throw std::runtime_error("monte carlo: unbounded uncertainty set");
      }
      ub(j) = hi.value;
      lb(j) = -lo.value;
    }
  }

  Eigen::VectorXd draw_uniform(CounterRng& rng) const {
    constexpr long kBudget = 1000000;
    for (long k = 0; k < kBudget; ++k) {
      Eigen::VectorXd x(lb.size());
      for (int j = 0; j < lb.size(); ++j) x(j) = lb(j) + (ub(j) - lb(j)) * rng.next_double();
      if (set->contains(x, 1e-9)) return x;
    }
    throw std::runtime_error("monte carlo: rejection budget exceeded");
  }

  Eigen::VectorXd draw_vertex(CounterRng& rng) {
    if (!vertices_ready) {
      vertices = cosched::vertices(*set);
      vertices_ready = true;
      if (vertices.empty()) throw std::runtime_error("monte carlo: set has no vertices");
    }
    return vertices[static_cast<size_t>(rng.next_below(vertices.size()))];
  }

  Eigen::VectorXd draw(CounterRng& rng, bool vertex_mode) {
    return vertex_mode ? draw_vertex(rng) : draw_uniform(rng);
  }
};

}  // namespace

UncertaintyStack sample_uncertainty(const UncertaintySpec& sets, int T, std::uint64_t seed,
                                    int index, bool vertex_mode) {
  lp::SimplexSolver oracle;
  SetSampler sw, sv, sx;
  sw.init(sets.W, oracle);
  sv.init(sets.V, oracle);
  sx.init(sets.X0, oracle);
  UncertaintyStack unc;
  unc.seed = seed;
  const int nx = sets.W.dim(), ny = sets.V.dim();
  unc.w.resize(T * nx);
  unc.v.resize(T * ny);
  for (int t = 0; t < T; ++t) {
    CounterRng rw(seed, static_cast<std::uint64_t>(index), 1 + static_cast<std::uint64_t>(t));
    unc.w.segment(t * nx, nx) = sw.draw(rw, vertex_mode);
    CounterRng rv(seed, static_cast<std::uint64_t>(index),
                  1 + static_cast<std::uint64_t>(T + t));
    unc.v.segment(t * ny, ny) = sv.draw(rv, vertex_mode);
  }
  CounterRng rx(seed, static_cast<std::uint64_t>(index), 0);
  unc.x0 = sx.draw(rx, vertex_mode);
  return unc;
}

ValidationReport monte_carlo_validate(const SynthesisProblem& p, const SynthesisResult& result,
                                      int n, std::uint64_t seed) {
  if (result.status != SynthesisResult::Status::kFeasible) {
    throw std::invalid_argument("monte_carlo_validate: result is not feasible");
  }
  const int T = p.T;
  ValidationReport rep;
  rep.n = n;
  rep.seed = seed;
  rep.worst_margin_z = Eigen::VectorXd::Constant(T + 1, std::numeric_limits<double>::infinity());
  rep.worst_margin_u = Eigen::VectorXd::Constant(std::max(T, 0),
                                                 std::numeric_limits<double>::infinity());

  lp::SimplexSolver oracle;
  SetSampler sw, sv, sx;
  sw.init(p.sets.W, oracle);
  sv.init(p.sets.V, oracle);
  sx.init(p.sets.X0, oracle);

  const int n_uniform = (n + 1) / 2;
  const int nx = p.sys.nx(), ny = p.sys.ny();
  for (int i = 0; i < n; ++i) {
    const bool vertex_mode = i >= n_uniform;
    UncertaintyStack unc;
    unc.seed = seed;
    unc.w.resize(T * nx);
    unc.v.resize(T * ny);
    for (int t = 0; t < T; ++t) {
      CounterRng rw(seed, static_cast<std::uint64_t>(i), 1 + static_cast<std::uint64_t>(t));
      unc.w.segment(t * nx, nx) = sw.draw(rw, vertex_mode);
      CounterRng rv(seed, static_cast<std::uint64_t>(i), 1 + static_cast<std::uint64_t>(T + t));
      unc.v.segment(t * ny, ny) = sv.draw(rv, vertex_mode);
    }
    CounterRng rx(seed, static_cast<std::uint64_t>(i), 0);
    unc.x0 = sx.draw(rx, vertex_mode);

    TrajectoryBundle bundle = closed_loop_simulate(p.sys, result.gains_ff, result.schedule, unc,
                                                   SimMode::kMasked, &p.sets);
    rep.violation_count += static_cast<long>(bundle.violations.size());
    for (int t = 0; t <= T; ++t) {
      const HPolytope& Z = p.sets.Z[static_cast<size_t>(t)];
      if (Z.rows() == 0) continue;
      double m = (Z.h() - Z.H() * bundle.z[static_cast<size_t>(t)]).minCoeff();
      rep.worst_margin_z(t) = std::min(rep.worst_margin_z(t), m);
    }
    for (int t = 0; t < T; ++t) {
      if (p.sets.U.rows() == 0) continue;
      double m = (p.sets.U.h() - p.sets.U.H() * bundle.u[static_cast<size_t>(t)]).minCoeff();
      rep.worst_margin_u(t) = std::min(rep.worst_margin_u(t), m);
    }
  }
  return rep;
}

std::vector<std::vector<double>> reach_envelope(const AffineMaps& maps,
                                                const UncertaintySpec& sets, int T,
                                                const EnvelopeQuery& q, lp::Oracle& lp_oracle) {
  if (q.directions.empty()) throw std::invalid_argument("reach_envelope: no directions");
  std::vector<HPolytope> parts;
  for (int t = 0; t < T; ++t) parts.push_back(sets.W);
  for (int t = 0; t < T; ++t) parts.push_back(sets.V);
  parts.push_back(sets.X0);
  HPolytope eta_set = product(parts);

  const int block = q.input ? static_cast<int>(maps.Puw.rows()) / T
                            : static_cast<int>(maps.Pzw.rows()) / (T + 1);
  std::vector<std::vector<double>> values;
  for (int t : q.times) {
    std::vector<double> row_vals;
    for (const auto& g : q.directions) {
      Eigen::MatrixXd P(block, eta_set.dim());
      Eigen::VectorXd offset;
      if (q.input) {
        P << maps.Puw.middleRows(t * block, block), maps.Puv.middleRows(t * block, block),
            maps.Pux0.middleRows(t * block, block);
        offset = maps.u_tilde.segment(t * block, block);
      } else {
        P << maps.Pzw.middleRows(t * block, block), maps.Pzv.middleRows(t * block, block),
            maps.Pzx0.middleRows(t * block, block);
        offset = maps.z_tilde.segment(t * block, block);
      }
      Eigen::VectorXd dir_eta = P.transpose() * g;
      double val = g.dot(offset);
      if (dir_eta.norm() > 0.0) {
        SupportResult sr = support(eta_set, dir_eta, lp_oracle);
        if (!sr.bounded) throw std::runtime_error("reach_envelope: unbounded uncertainty");
        val += sr.value;
      }
      row_vals.push_back(val);
    }
    values.push_back(std::move(row_vals));
  }
  return values;
}

void write_csv(const std::string& path, const std::vector<TrajectoryBundle>& bundles) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  if (bundles.empty()) {
    os << "traj,t\n";
    return;
  }
  const int nx = static_cast<int>(bundles[0].x[0].size());
  const int nu = bundles[0].u.empty() ? 0 : static_cast<int>(bundles[0].u[0].size());
  const int nz = static_cast<int>(bundles[0].z[0].size());
  os << "traj,t";
  for (int j = 0; j < nx; ++j) os << ",x" << j;
  for (int j = 0; j < nu; ++j) os << ",u" << j;
  for (int j = 0; j < nz; ++j) os << ",z" << j;
  os << "\n";
  char buf[40];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << "," << buf;
  };
  for (size_t b = 0; b < bundles.size(); ++b) {
    const auto& tb = bundles[b];
    const int T = static_cast<int>(tb.u.size());
    for (int t = 0; t < static_cast<int>(tb.x.size()); ++t) {
      os << b << "," << t;
      for (int j = 0; j < nx; ++j) emit(tb.x[static_cast<size_t>(t)](j));
      // Input held at its final value on the terminal row (zero-order hold).
      const auto& ut = tb.u[static_cast<size_t>(std::min(t, T - 1))];
      for (int j = 0; j < nu; ++j) emit(ut(j));
      for (int j = 0; j < nz; ++j) emit(tb.z[static_cast<size_t>(t)](j));
      os << "\n";
    }
  }
}

void write_envelope_json(const std::string& path, const EnvelopeQuery& q,
                         const std::vector<std::vector<double>>& values) {
  nlohmann::json j;
  j["target"] = q.input ? "u" : "z";
  j["directions"] = nlohmann::json::array();
  for (const auto& d : q.directions) {
    j["directions"].push_back(std::vector<double>(d.data(), d.data() + d.size()));
  }
  nlohmann::json by_time;
  for (size_t i = 0; i < q.times.size(); ++i) {
    by_time[std::to_string(q.times[i])] = values[i];
  }
  j["support"] = by_time;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_envelope_json: cannot open " + path);
  os << j.dump(1) << "\n";
}

void write_svg_plot(const std::string& path, const std::vector<TrajectoryBundle>& bundles,
                    const UncertaintySpec& sets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_svg_plot: cannot open " + path);
  // Plot window from safety-set boxes and trajectories (first two z coords,
  // or (t, z0) for scalar outputs).
  const bool planar = !bundles.empty() && bundles[0].z[0].size() >= 2;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto grow = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  std::vector<std::array<double, 4>> boxes;  // x0 y0 x1 y1
  for (const auto& Z : sets.Z) {
    auto box = as_axis_box(Z);
    if (!box || Z.dim() < (planar ? 2 : 1)) continue;
    double bx0, bx1, by0, by1;
    if (planar) {
      bx0 = box->lb(0);
      bx1 = box->ub(0);
      by0 = box->lb(1);
      by1 = box->ub(1);
    } else {
      bx0 = 0;
      bx1 = static_cast<double>(sets.Z.size() - 1);
      by0 = box->lb(0);
      by1 = box->ub(0);
    }
    if (std::isfinite(bx0) && std::isfinite(bx1) && std::isfinite(by0) && std::isfinite(by1)) {
      boxes.push_back({bx0, by0, bx1, by1});
      grow(bx0, by0);
      grow(bx1, by1);
    }
  }
  for (const auto& tb : bundles) {
    for (size_t t = 0; t < tb.z.size(); ++t) {
      double px = planar ? tb.z[t](0) : static_cast<double>(t);
      double py = planar ? tb.z[t](1) : tb.z[t](0);
      grow(px, py);
    }
  }
  if (xmin > xmax) {
    xmin = ymin = -1;
    xmax = ymax = 1;
  }
  const double W = 640, H = 480, pad = 20;
  auto sx = [&](double x) { return pad + (x - xmin) / std::max(1e-12, xmax - xmin) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - ymin) / std::max(1e-12, ymax - ymin) * (H - 2 * pad); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  for (const auto& b : boxes) {
    os << "<rect x=\"" << sx(b[0]) << "\" y=\"" << sy(b[3]) << "\" width=\""
       << sx(b[2]) - sx(b[0]) << "\" height=\"" << sy(b[1]) - sy(b[3])
       << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& tb : bundles) {
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.4\" points=\"";
    for (size_t t = 0; t < tb.z.size(); ++t) {
      double px = planar ? tb.z[t](0) : static_cast<double>(t);
      double py = planar ? tb.z[t](1) : tb.z[t](0);
      os << sx(px) << "," << sy(py) << " ";
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace cosched::simulate
