#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cosched/synthesis.hpp"

namespace cosched::simulate {

/// One draw of the uncertainty: eta ordering is (w, v, x0).
struct UncertaintyStack {
  Eigen::VectorXd x0;
  Eigen::VectorXd w;  // T nx
  Eigen::VectorXd v;  // T ny
  std::uint64_t seed = 0;

  Eigen::VectorXd eta() const;
};

enum class SimMode { kMasked, kProhibited };

struct TrajectoryBundle {
  std::vector<Eigen::VectorXd> x;                  // T+1 states
  std::vector<Eigen::VectorXd> u;                  // T inputs (zero-order hold)
  std::vector<std::optional<Eigen::VectorXd>> y;   // T; absent where sigma_m = 0 (masked mode)
  std::vector<Eigen::VectorXd> z;                  // T+1 outputs
  std::vector<std::pair<int, std::string>> violations;
  bool lemma1_conditions_ok = true;  // gains respect the forbidden-measurement conditions
};

/// Steps the closed loop. Masked mode recomputes u only at control times from
/// the measurements actually taken; prohibited mode feeds every measurement
/// to the gain at every step. The two coincide when the gains satisfy the
/// zero-column/tied-row conditions for the schedule.
TrajectoryBundle closed_loop_simulate(const LinearSystem& sys, const GainsFf& gains,
                                      const Schedule& s, const UncertaintyStack& unc, SimMode mode,
                                      const UncertaintySpec* sets = nullptr, double tol = 1e-9);

/// Deterministic uncertainty draw for trajectory `index`: uniform or
/// vertex-biased per the half/half convention (first ceil(n/2) uniform).
UncertaintyStack sample_uncertainty(const UncertaintySpec& sets, int T, std::uint64_t seed,
                                    int index, bool vertex_mode);

struct ValidationReport {
  int n = 0;
  std::uint64_t seed = 0;
  long violation_count = 0;
  Eigen::VectorXd worst_margin_z;  // length T+1: min over trajectories/facets of h - H z
  Eigen::VectorXd worst_margin_u;  // length T
};

ValidationReport monte_carlo_validate(const SynthesisProblem& p, const SynthesisResult& result,
                                      int n, std::uint64_t seed);

struct EnvelopeQuery {
  std::vector<int> times;
  std::vector<Eigen::VectorXd> directions;
  bool input = false;  // envelope of u instead of z
};

/// Per-time support values of the reachable output (or input) set in each
/// direction, each computed as one LP over the stacked uncertainty.
std::vector<std::vector<double>> reach_envelope(const AffineMaps& maps,
                                                const UncertaintySpec& sets, int T,
                                                const EnvelopeQuery& q, lp::Oracle& lp);

void write_csv(const std::string& path, const std::vector<TrajectoryBundle>& bundles);
void write_envelope_json(const std::string& path, const EnvelopeQuery& q,
                         const std::vector<std::vector<double>>& values);
/// 2-D vector plot of output trajectories against the safety sets (first two
/// output coordinates).
void write_svg_plot(const std::string& path, const std::vector<TrajectoryBundle>& bundles,
                    const UncertaintySpec& sets);

}  // namespace cosched::simulate
