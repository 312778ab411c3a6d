#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cosched/polytope.hpp"
#include "cosched/rng.hpp"
#include "support/oracles.hpp"

using namespace cosched;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

HPolytope unit_box(int d) {
  return HPolytope::box(Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Constant(d, 1.0));
}

// Random bounded polytope: intersection of a box with random halfspaces
// through points near the origin.
HPolytope random_polytope(int d, int extra_rows, CounterRng& rng) {
  Eigen::MatrixXd H(2 * d + extra_rows, d);
  Eigen::VectorXd h(2 * d + extra_rows);
  for (int j = 0; j < d; ++j) {
    H.row(2 * j).setZero();
    H(2 * j, j) = 1.0;
    h(2 * j) = 0.5 + rng.next_double();
    H.row(2 * j + 1).setZero();
    H(2 * j + 1, j) = -1.0;
    h(2 * j + 1) = 0.5 + rng.next_double();
  }
  for (int i = 0; i < extra_rows; ++i) {
    Eigen::VectorXd a(d);
    for (int j = 0; j < d; ++j) a(j) = -1.0 + 2.0 * rng.next_double();
    if (a.norm() < 0.3) a(0) += 1.0;
    H.row(2 * d + i) = a.transpose();
    h(2 * d + i) = 0.3 + rng.next_double();  // keeps the origin inside
  }
  return HPolytope(H, h);
}

bool contains_point(const std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& q,
                    double tol = 1e-6) {
  return std::any_of(pts.begin(), pts.end(),
                     [&](const auto& p) { return (p - q).cwiseAbs().maxCoeff() <= tol; });
}

}  // namespace

TEST_CASE("product composes boxes block-diagonally") {
  HPolytope p = product({unit_box(1), unit_box(1)});
  CHECK(p.dim() == 2);
  CHECK(p.rows() == 4);
  CHECK(p.contains(vec2(0.5, -0.5)));
  CHECK_FALSE(p.contains(vec2(1.5, 0.0)));
}

TEST_CASE("product of a single polytope is the polytope") {
  HPolytope p = unit_box(2);
  HPolytope q = product({p});
  CHECK(q.dim() == 2);
  CHECK((q.H() - p.H()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.h() - p.h()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("product dimension arithmetic for stacked uncertainty") {
  // 20 process-noise boxes (dim 4), 20 measurement-noise boxes (dim 2), one
  // initial set (dim 4): total 124.
  std::vector<HPolytope> parts;
  for (int t = 0; t < 20; ++t) parts.push_back(unit_box(4));
  for (int t = 0; t < 20; ++t) parts.push_back(unit_box(2));
  parts.push_back(unit_box(4));
  HPolytope p = product(parts);
  CHECK(p.dim() == 4 * 20 + 2 * 20 + 4);
}

TEST_CASE("product rejects an empty list") {
  CHECK_THROWS_WITH_AS(product({}), "empty product", std::invalid_argument);
}

TEST_CASE("product membership matches per-part membership") {
  CounterRng rng(3);
  HPolytope a = random_polytope(2, 2, rng);
  HPolytope b = random_polytope(3, 1, rng);
  HPolytope ab = product({a, b});
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd xa(2), xb(3);
    for (int j = 0; j < 2; ++j) xa(j) = -2.0 + 4.0 * rng.next_double();
    for (int j = 0; j < 3; ++j) xb(j) = -2.0 + 4.0 * rng.next_double();
    Eigen::VectorXd x(5);
    x << xa, xb;
    CHECK(ab.contains(x) == (a.contains(xa) && b.contains(xb)));
  }
}

TEST_CASE("containment certificates on nested boxes") {
  lp::SimplexSolver s;
  HPolytope box1 = unit_box(2);
  SUBCASE("identity") {
    auto cert = check_containment(box1, box1, s);
    REQUIRE(cert.has_value());
    CHECK(cert->valid());
    CHECK(cert->residual_eq <= 1e-9);
  }
  SUBCASE("scaling") {
    HPolytope box2 = HPolytope::box(Eigen::VectorXd::Constant(1, -1.0),
                                    Eigen::VectorXd::Constant(1, 1.0));
    HPolytope box2_wide = HPolytope::box(Eigen::VectorXd::Constant(1, -2.0),
                                         Eigen::VectorXd::Constant(1, 2.0));
    CHECK(check_containment(box2, box2_wide, s).has_value());
    CHECK_FALSE(check_containment(box2_wide, box2, s).has_value());
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(check_containment(unit_box(2), unit_box(3), s), std::invalid_argument);
  }
}

TEST_CASE("Farkas verdicts agree with the vertex test on random pairs") {
  lp::SimplexSolver s;
  CounterRng rng(11);
  int agreements = 0, contained_cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = trial % 2 == 0 ? 2 : 3;
    HPolytope inner = random_polytope(d, 1 + static_cast<int>(rng.next_below(3)), rng);
    // A third of the trials deliberately shrink the inner set so that true
    // containment shows up often.
    HPolytope outer = trial % 3 == 0
                          ? HPolytope(inner.H(), inner.h() * (1.0 + rng.next_double()))
                          : random_polytope(d, 1 + static_cast<int>(rng.next_below(3)), rng);
    if (trial % 3 == 0) {
      inner = HPolytope(inner.H(), inner.h() * (0.3 + 0.5 * rng.next_double()));
    }
    auto cert = check_containment(inner, outer, s);
    bool vertex_verdict = true;
    for (const auto& v : vertices(inner)) {
      if (!outer.contains(v, 1e-7)) {
        vertex_verdict = false;
        break;
      }
    }
    CHECK_MESSAGE(cert.has_value() == vertex_verdict, "trial ", trial);
    if (cert.has_value() == vertex_verdict) ++agreements;
    if (vertex_verdict) ++contained_cases;
  }
  CHECK(agreements == 100);
  CHECK(contained_cases > 3);  // generator must produce real positives
}

TEST_CASE("Farkas soundness: certified containment holds on samples") {
  lp::SimplexSolver s;
  CounterRng rng(5);
  HPolytope inner = random_polytope(2, 2, rng);
  // Outer: inner expanded by slack growth in h.
  HPolytope outer(inner.H(), inner.h() * 1.5);
  auto cert = check_containment(inner, outer, s);
  REQUIRE(cert.has_value());
  for (int i = 0; i < 1000; ++i) {
    CounterRng draw(77, static_cast<std::uint64_t>(i));
    Eigen::VectorXd x =
        sample(inner, i % 3 == 0 ? SampleMode::kVertex : SampleMode::kUniform, draw);
    CHECK(outer.contains(x, 1e-8));
  }
}

TEST_CASE("vertex enumeration on boxes and simplices") {
  SUBCASE("unit box") {
    auto verts = vertices(unit_box(2));
    REQUIRE(verts.size() == 4);
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        CHECK(contains_point(verts, vec2(sx, sy)));
      }
    }
  }
  SUBCASE("simplex") {
    Eigen::MatrixXd H(3, 2);
    H << -1, 0, 0, -1, 1, 1;
    Eigen::VectorXd h(3);
    h << 0, 0, 1;
    auto verts = vertices(HPolytope(H, h));
    REQUIRE(verts.size() == 3);
    CHECK(contains_point(verts, vec2(0, 0)));
    CHECK(contains_point(verts, vec2(1, 0)));
    CHECK(contains_point(verts, vec2(0, 1)));
  }
  SUBCASE("unbounded throws") {
    Eigen::MatrixXd H(1, 2);
    H << 1, 0;
    Eigen::VectorXd h(1);
    h << 1;
    CHECK_THROWS_AS(vertices(HPolytope(H, h)), std::invalid_argument);
  }
  SUBCASE("dimension cap") {
    CHECK_THROWS_AS(vertices(unit_box(7)), std::invalid_argument);
  }
}

TEST_CASE("vertex enumeration matches double description on random 3-D polytopes") {
  CounterRng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    HPolytope p = random_polytope(3, 2 + static_cast<int>(rng.next_below(3)), rng);
    auto mine = vertices(p);
    auto ref = oracles::dd_vertices(p.H(), p.h(), Eigen::VectorXd::Constant(3, -10.0),
                                    Eigen::VectorXd::Constant(3, 10.0));
    REQUIRE_MESSAGE(mine.size() == ref.size(), "trial ", trial, " mine=", mine.size(),
                    " ref=", ref.size());
    for (const auto& v : ref) {
      CHECK_MESSAGE(contains_point(mine, v), "trial ", trial);
    }
  }
}

TEST_CASE("sampling respects degenerate coordinates") {
  // Positions free in [-1,1], velocities pinned to zero.
  Eigen::VectorXd lb(4), ub(4);
  lb << -1, -1, 0, 0;
  ub << 1, 1, 0, 0;
  HPolytope X0 = HPolytope::box(lb, ub);
  CounterRng rng(0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x = sample(X0, SampleMode::kUniform, rng);
    CHECK(std::abs(x(2)) <= 1e-12);
    CHECK(std::abs(x(3)) <= 1e-12);
    CHECK(std::abs(x(0)) <= 1.0 + 1e-12);
  }
}

TEST_CASE("vertex sampling on an interval returns endpoints") {
  HPolytope seg = unit_box(1);
  CounterRng rng(1);
  bool saw_lo = false, saw_hi = false;
  for (int i = 0; i < 40; ++i) {
    double v = sample(seg, SampleMode::kVertex, rng)(0);
    CHECK(std::abs(std::abs(v) - 1.0) <= 1e-12);
    saw_lo |= v < 0;
    saw_hi |= v > 0;
  }
  CHECK(saw_lo);
  CHECK(saw_hi);
}

TEST_CASE("uniform sample mean concentrates at the centroid") {
  HPolytope box = unit_box(2);
  CounterRng rng(9);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) mean += sample(box, SampleMode::kUniform, rng).head<2>();
  mean /= n;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("rejection budget error reports the acceptance rate") {
  // A diagonal sliver: box test rarely hits it.
  Eigen::MatrixXd H(4, 2);
  H << 1, -1, -1, 1, 1, 1, -1, -1;
  Eigen::VectorXd h(4);
  h << 1e-9, 1e-9, 1.0, 1.0;
  HPolytope sliver(H, h);
  CounterRng rng(2);
  SampleOptions opts;
  opts.max_proposals = 100;
  CHECK_THROWS_WITH_AS(sample(sliver, SampleMode::kUniform, rng, opts),
                       doctest::Contains("rejection budget exceeded"), std::runtime_error);
}

TEST_CASE("support values on boxes") {
  lp::SimplexSolver s;
  HPolytope box = unit_box(2);
  CHECK(support(box, vec2(1, 0), s).value == doctest::Approx(1.0));
  CHECK(support(box, vec2(1, 1), s).value == doctest::Approx(2.0));
  SUBCASE("unbounded direction") {
    Eigen::MatrixXd H(1, 2);
    H << 1, 0;
    Eigen::VectorXd h(1);
    h << 1;
    auto sr = support(HPolytope(H, h), vec2(0, 1), s);
    CHECK_FALSE(sr.bounded);
    CHECK(sr.ray(1) > 0.0);
  }
  SUBCASE("zero direction rejected") {
    CHECK_THROWS_AS(support(box, vec2(0, 0), s), std::invalid_argument);
  }
}

TEST_CASE("support equals max over vertices and is positively homogeneous") {
  lp::SimplexSolver s;
  CounterRng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    HPolytope p = random_polytope(3, 2, rng);
    Eigen::VectorXd d(3);
    for (int j = 0; j < 3; ++j) d(j) = -1.0 + 2.0 * rng.next_double();
    if (d.norm() < 0.1) d(0) = 1.0;
    auto sr = support(p, d, s);
    REQUIRE(sr.bounded);
    double best = -1e300;
    for (const auto& v : vertices(p)) best = std::max(best, d.dot(v));
    CHECK(sr.value == doctest::Approx(best).epsilon(1e-8));
    auto sr2 = support(p, Eigen::VectorXd(2.0 * d), s);
    CHECK(sr2.value == doctest::Approx(2.0 * sr.value).epsilon(1e-8));
    // Dual witnesses the support value.
    CHECK((sr.dual.transpose() * p.H() - d.transpose()).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(sr.dual.minCoeff() > -1e-9);
    CHECK(sr.dual.dot(p.h()) == doctest::Approx(sr.value).epsilon(1e-7));
  }
}

TEST_CASE("whole space and symmetry helpers") {
  HPolytope all = HPolytope::whole_space(3);
  CHECK(all.rows() == 0);
  CHECK(all.contains(Eigen::VectorXd::Constant(3, 1e9)));
  CHECK(is_origin_symmetric(unit_box(3)));
  Eigen::VectorXd lb(2), ub(2);
  lb << -1, 0;
  ub << 1, 2;
  CHECK_FALSE(is_origin_symmetric(HPolytope::box(lb, ub)));
}

TEST_CASE("axis box detection") {
  auto info = as_axis_box(unit_box(2));
  REQUIRE(info.has_value());
  CHECK(info->ub(0) == 1.0);
  CHECK(info->lb(1) == -1.0);
  Eigen::MatrixXd H(1, 2);
  H << 1, 1;
  Eigen::VectorXd h(1);
  h << 1;
  CHECK_FALSE(as_axis_box(HPolytope(H, h)).has_value());
}
