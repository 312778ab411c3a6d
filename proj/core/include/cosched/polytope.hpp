#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cosched/lp.hpp"
#include "cosched/rng.hpp"

namespace cosched {

/// Convex polyhedron in halfspace representation {x | H x <= h}.
/// Zero rows is legal and denotes the whole space of the given dimension.
class HPolytope {
 public:
  /// Whole line (dimension 1, zero rows); placeholder for aggregates.
  HPolytope() : HPolytope(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)) {}
  HPolytope(Eigen::MatrixXd H, Eigen::VectorXd h, std::string label = "");

  /// Whole space of dimension `dim` (zero rows).
  static HPolytope whole_space(int dim, std::string label = "");
  static HPolytope box(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                       std::string label = "");
  /// Singleton {x}, encoded as paired inequalities.
  static HPolytope point(const Eigen::VectorXd& x, std::string label = "");

  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::VectorXd& h() const { return h_; }
  int dim() const { return static_cast<int>(H_.cols()); }
  int rows() const { return static_cast<int>(H_.rows()); }
  const std::string& label() const { return label_; }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::VectorXd h_;
  std::string label_;
};

/// Farkas witness for inner ⊆ outer: Lambda >= 0, Lambda*H_inner = H_outer,
/// Lambda*h_inner <= h_outer.
struct ContainmentCertificate {
  Eigen::MatrixXd Lambda;
  double residual_eq = 0.0;    // max-norm of Lambda*H_A - H_B
  double residual_ineq = 0.0;  // max positive part of Lambda*h_A - h_B
  bool valid(double tol_cert = 1e-6) const {
    return Lambda.size() == 0 ? (residual_eq <= tol_cert && residual_ineq <= tol_cert)
                              : (Lambda.minCoeff() >= -tol_cert && residual_eq <= tol_cert &&
                                 residual_ineq <= tol_cert);
  }
};

/// Cartesian product; H is block diagonal, h concatenated.
HPolytope product(const std::vector<HPolytope>& parts);

/// Farkas containment test. Returns a certificate when inner ⊆ outer,
/// std::nullopt when the multiplier LP is infeasible (not contained).
/// inner is assumed nonempty (the test is sufficient but not necessary for
/// empty inner sets).
std::optional<ContainmentCertificate> check_containment(const HPolytope& inner,
                                                        const HPolytope& outer, lp::Oracle& lp,
                                                        double tol_cert = 1e-6);

/// Brute-force vertex enumeration over facet subsets. dim <= 6 and bounded.
std::vector<Eigen::VectorXd> vertices(const HPolytope& p);

enum class SampleMode { kUniform, kVertex };

struct SampleOptions {
  long max_proposals = 1000000;  // rejection budget for uniform mode
  lp::Oracle* oracle = nullptr;  // bounding box LPs; internal solver when null
};

Eigen::VectorXd sample(const HPolytope& p, SampleMode mode, CounterRng& rng,
                       const SampleOptions& opts = {});
Eigen::VectorXd sample(const HPolytope& p, SampleMode mode, std::uint64_t seed,
                       const SampleOptions& opts = {});

struct SupportResult {
  bool bounded = true;
  double value = 0.0;        // max <dir, x> over p when bounded
  Eigen::VectorXd maximizer; // a maximizing point when bounded
  Eigen::VectorXd dual;      // lambda >= 0 with lambda'H = dir, lambda'h = value
  Eigen::VectorXd ray;       // recession direction with <dir, ray> > 0 when unbounded
};

SupportResult support(const HPolytope& p, const Eigen::VectorXd& direction, lp::Oracle& lp);

/// Axis-aligned description when every row constrains a single coordinate.
/// Bounds may be infinite; *_row holds the index of the tightest row per
/// coordinate (-1 when unbounded on that side).
struct BoxInfo {
  Eigen::VectorXd lb, ub;
  std::vector<int> lb_row, ub_row;
};
std::optional<BoxInfo> as_axis_box(const HPolytope& p);

/// Syntactic origin-symmetry check: normalized rows closed under negation.
bool is_origin_symmetric(const HPolytope& p, double tol = 1e-9);

}  // namespace cosched
