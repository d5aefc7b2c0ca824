#include "doctest.h"
#include "support.hpp"

#include "lssem/examples.hpp"
#include "lssem/ls_functional.hpp"
#include "lssem/postprocess.hpp"
#include "lssem/solver.hpp"

#include <cmath>

using namespace lssem;
using namespace lssem::testing;

TEST_CASE("make_conforming") {
  const Mesh mesh = build_recipe_mesh("circle_in_square");
  const int w = 5;
  const DofLayout layout(mesh.size(), w);
  std::mt19937_64 rng(31);
  SUBCASE("is idempotent") {
    const Vector v = random_vector(rng, layout.size());
    const Vector once = make_conforming(mesh, w, v);
    CHECK((make_conforming(mesh, w, once) - once).norm() <= 1e-14 * once.norm());
    CHECK((once - v).norm() > 0.0);
  }
  SUBCASE("leaves a conforming field alone") {
    ExactSolution smooth{[](const Vec2& x, int) { return Vec2(std::sin(x.x()), x.y() * x.x()); },
                         [](const Vec2&, int) { return Mat2::Zero().eval(); },
                         [](const Vec2& x, int) { return x.x(); }};
    const Vector v = interpolate_exact(mesh, smooth, w);
    CHECK((make_conforming(mesh, w, v) - v).norm() <= 1e-14 * v.norm());
  }
  SUBCASE("averages opposite traces to zero and keeps pressure and interiors") {
    const Mesh sq = build_recipe_mesh("split_square");
    const DofLayout l(sq.size(), w);
    NodalField f(l);
    for (int j = 0; j <= w; ++j) {
      for (int i = 0; i <= w; ++i) {
        f.values()[l.index(0, Field::U1, j, i)] = 1.0 + j;
        f.values()[l.index(1, Field::U1, j, i)] = -(1.0 + j);
        f.values()[l.index(0, Field::P, j, i)] = 5.0;
      }
    }
    const NodalField c(l, make_conforming(sq, w, f.values()));
    // side 1 of element 0 meets side 3 of element 1 at x = 0.5, away from y = 0.5
    for (int j = 0; j < w; ++j) {
      CHECK(std::abs(c.values()[l.index(0, Field::U1, j, w)]) < 1e-15);
      CHECK(std::abs(c.values()[l.index(1, Field::U1, j, 0)]) < 1e-15);
    }
    CHECK(c.values()[l.index(0, Field::U1, 1, 1)] == 2.0);
    CHECK(c.values()[l.index(0, Field::P, 0, w)] == 5.0);
  }
}

TEST_CASE("correction size follows the jump terms for example1") {
  const ProblemSpec p = builtin_problem("example1", 1.0, 0.1);
  const Mesh mesh = build_mesh(p);
  const int w = 6;
  const SolveResult r = solve_problem(mesh, p, w, 0, {});
  const LeastSquaresFunctional f(mesh, p, w, true);
  const TermValues t = f.evaluate_groups(r.solution);
  const double jumps = std::sqrt(t[static_cast<int>(TermGroup::InterElement)] +
                                 t[static_cast<int>(TermGroup::Interface)]);
  const Vector c = make_conforming(mesh, w, r.solution);
  CHECK((c - r.solution).lpNorm<Eigen::Infinity>() <= 10.0 * jumps);
}

TEST_CASE("compute_errors") {
  SUBCASE("interpolant of a polynomial solution on an affine mesh") {
    const ProblemSpec p = builtin_problem("example2", 1.0, 0.1);
    const Mesh mesh = build_mesh(p);
    const Vector v = interpolate_exact(mesh, *p.exact, 4);
    const ErrorReport e = compute_errors(mesh, 4, v, v, p);
    CHECK(e.e_u <= 1e-12);
    CHECK(e.e_p <= 1e-12);
    CHECK(e.e_c <= 1e-12);
  }
  SUBCASE("pressure gauge does not change E_p") {
    const ProblemSpec p = builtin_problem("example3", 1.0, 0.1);
    const Mesh mesh = build_mesh(p);
    const int w = 5;
    Vector v = interpolate_exact(mesh, *p.exact, w);
    const ErrorReport base = compute_errors(mesh, w, v, v, p);
    NodalField f(DofLayout(mesh.size(), w), v);
    for (int e = 0; e < mesh.size(); ++e) {
      for (double& x : f.grid(e, Field::P)) x += 2.5;
    }
    const ErrorReport shifted = compute_errors(mesh, w, f.values(), f.values(), p);
    CHECK(shifted.e_p == doctest::Approx(base.e_p).epsilon(1e-9));
    CHECK(shifted.e_u == base.e_u);
  }
  SUBCASE("needs an exact solution") {
    ProblemSpec p = testing::zero_problem("split_square");
    const Mesh mesh = build_mesh(p);
    const Vector v = Vector::Zero(DofLayout(mesh.size(), 3).size());
    CHECK_THROWS_AS(compute_errors(mesh, 3, v, v, p), std::invalid_argument);
  }
}

TEST_CASE("example1 at W = 4 stays below the tabulated errors") {
  // Table values 7.65e-4, 9.39e-3, 2.21e-3 for nu = (1, 0.1)
  const ProblemSpec p = builtin_problem("example1", 1.0, 0.1);
  const Mesh mesh = build_mesh(p);
  const SolveResult r = solve_problem(mesh, p, 4, 0, {});
  const ErrorReport e = compute_errors(mesh, 4, make_conforming(mesh, 4, r.solution), r.solution, p);
  CHECK(e.e_u <= 7.65e-3);
  CHECK(e.e_p <= 9.39e-2);
  CHECK(e.e_c <= 2.21e-2);
}

TEST_CASE("example4 at W = 7 is within an order of magnitude of the tabulated E_u") {
  const ProblemSpec p = builtin_problem("example4", 0.1, 1.0);
  const Mesh mesh = build_mesh(p);
  const SolveResult r = solve_problem(mesh, p, 7, 0, {});
  REQUIRE(r.report.converged);
  const ErrorReport e = compute_errors(mesh, 7, make_conforming(mesh, 7, r.solution), r.solution, p);
  CHECK(e.e_u <= 5.58e-4);
  CHECK(e.e_u >= 5.58e-6);
}

TEST_CASE("E_c does not grow along an example1 sweep") {
  const ProblemSpec p = builtin_problem("example1", 1.0, 0.1);
  const Mesh mesh = build_mesh(p);
  double previous = INFINITY;
  for (int w = 2; w <= 6; ++w) {
    const SolveResult r = solve_problem(mesh, p, w, 0, {});
    const ErrorReport e = compute_errors(mesh, w, make_conforming(mesh, w, r.solution), r.solution, p);
    CHECK(e.e_c <= 3.0 * previous);
    previous = e.e_c;
  }
}

TEST_CASE("fit_log_slope") {
  SUBCASE("one decade per unit W") {
    const auto f = fit_log_slope({2, 3, 4}, {1e-2, 1e-3, 1e-4});
    REQUIRE(f);
    CHECK(f->slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f->intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(f->converging);
  }
  SUBCASE("constant errors are flagged") {
    const auto f = fit_log_slope({2, 3, 4, 5}, {0.1, 0.1, 0.1, 0.1});
    REQUIRE(f);
    CHECK(std::abs(f->slope) < 1e-14);
    CHECK_FALSE(f->converging);
  }
  SUBCASE("too few or invalid points") {
    CHECK_FALSE(fit_log_slope({3}, {1e-3}));
    CHECK_FALSE(fit_log_slope({2, 3}, {1e-2, 1e-3}));
    CHECK_FALSE(fit_log_slope({2, 3, 4}, {1e-2, 0.0, 1e-4}));
  }
}
