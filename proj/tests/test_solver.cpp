#include "doctest.h"
#include "support.hpp"

#include "lssem/examples.hpp"
#include "lssem/solver.hpp"

#include <cmath>

using namespace lssem;
using namespace lssem::testing;

namespace {

NormalSystem dense_system(const Matrix& a, const Vector& h) {
  NormalSystem s;
  s.dimension = static_cast<int>(a.rows());
  s.apply = [a](const Vector& v, Vector& out) { out = a * v; };
  s.rhs = h;
  return s;
}

const LinearOperator identity = [](const Vector& v, Vector& out) { out = v; };

}  // namespace

TEST_CASE("block preconditioner weights") {
  const Mesh mesh = build_recipe_mesh("circle_in_square");
  SUBCASE("e = 0 ignores viscosity") {
    const BlockPreconditioner p(mesh, 4, 0, 10.0, 1.0);
    for (int e = 0; e < mesh.size(); ++e) CHECK(p.velocity_weight(e) == 1.0);
  }
  SUBCASE("e = 2 scales subdomain-1 velocity blocks by nu^2") {
    const BlockPreconditioner p0(mesh, 4, 0, 10.0, 1.0);
    const BlockPreconditioner p2(mesh, 4, 2, 10.0, 1.0);
    std::mt19937_64 rng(4);
    const Vector v = random_vector(rng, p0.layout().size());
    Vector f0, f2;
    p0.apply_forward(v, f0);
    p2.apply_forward(v, f2);
    for (int e = 0; e < mesh.size(); ++e) {
      const double expect = mesh.elements[e].subdomain() == 1 ? 100.0 : 1.0;
      CHECK(p2.velocity_weight(e) == expect);
      for (Field fl : {Field::U1, Field::U2, Field::P}) {
        const int off = p0.layout().offset(e, fl);
        const int n = p0.layout().nodes_per_grid();
        const double s = fl == Field::P ? 1.0 : expect;
        CHECK((f2.segment(off, n) - s * f0.segment(off, n)).norm() <= 1e-12 * f2.segment(off, n).norm());
      }
    }
  }
  SUBCASE("e = 3") {
    const BlockPreconditioner p(mesh, 3, 3, 0.1, 2.0);
    CHECK(p.velocity_weight(0) == doctest::Approx(1e-3));
    CHECK(p.velocity_weight(8) == doctest::Approx(8.0));
  }
  CHECK_THROWS_AS(BlockPreconditioner(mesh, 3, 1, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("preconditioner round trip and symmetry") {
  const Mesh mesh = build_recipe_mesh("quarter_annulus");
  std::mt19937_64 rng(21);
  for (int e : {0, 2, 3}) {
    const BlockPreconditioner p(mesh, 6, e, 0.01, 1.0);
    const int n = p.layout().size();
    for (int t = 0; t < 3; ++t) {
      const Vector v = random_vector(rng, n), w = random_vector(rng, n);
      Vector pv, back;
      p.apply_forward(v, pv);
      p.apply(pv, back);
      CHECK((back - v).norm() <= 1e-10 * v.norm());
      Vector iv, iw;
      p.apply(v, iv);
      p.apply(w, iw);
      CHECK(std::abs(iv.dot(w) - iw.dot(v)) <= 1e-10 * std::abs(iv.dot(w)));
    }
  }
}

TEST_CASE("pcg on small dense systems") {
  std::mt19937_64 rng(1234);
  SUBCASE("random 10 x 10 SPD matches a direct solve") {
    Matrix b(10, 10);
    for (int i = 0; i < 10; ++i) b.col(i) = random_vector(rng, 10);
    const Matrix a = b * b.transpose() + 0.5 * Matrix::Identity(10, 10);
    const Vector h = random_vector(rng, 10);
    const SolveResult r = pcg(dense_system(a, h), identity, {});
    const Vector direct = a.llt().solve(h);
    CHECK(r.report.converged);
    CHECK((r.solution - direct).norm() <= 1e-10 * direct.norm());
    CHECK(r.report.relative_residual <= 1e-10);
  }
  SUBCASE("zero right-hand side") {
    const SolveResult r = pcg(dense_system(Matrix::Identity(4, 4), Vector::Zero(4)), identity, {});
    CHECK(r.report.iterations == 0);
    CHECK(r.report.converged);
    CHECK(r.solution.norm() == 0.0);
  }
  SUBCASE("iteration cap is flagged") {
    Vector d(50);
    for (int i = 0; i < 50; ++i) d[i] = 1.0 + i * i;
    PcgOptions o;
    o.max_iterations = 3;
    const SolveResult r = pcg(dense_system(d.asDiagonal(), Vector::Ones(50)), identity, o);
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.iterations == 3);
    CHECK_FALSE(r.report.message.empty());
  }
  SUBCASE("indefinite operator is a breakdown") {
    Matrix a = Matrix::Identity(3, 3);
    a(2, 2) = -1.0;
    CHECK_THROWS_AS(pcg(dense_system(a, Vector::Ones(3)), identity, {}), std::runtime_error);
  }
}

TEST_CASE("solution does not depend on the preconditioner variant") {
  const ProblemSpec p = builtin_problem("example1", 10.0, 1.0);
  const Mesh mesh = build_mesh(p);
  const LeastSquaresFunctional f(mesh, p, 4, true);
  const SolveResult a = solve_problem(mesh, p, 4, 0, {});
  const SolveResult b = solve_problem(mesh, p, 4, 2, {});
  const SolveResult c = solve_problem(mesh, p, 4, 3, {});
  REQUIRE(a.report.converged);
  REQUIRE(b.report.converged);
  REQUIRE(c.report.converged);
  auto energy = [&](const Vector& v) {
    Vector av;
    f.apply(v, av);
    return std::sqrt(v.dot(av));
  };
  CHECK(energy(a.solution - b.solution) <= 1e-9 * energy(a.solution));
  CHECK(energy(a.solution - c.solution) <= 1e-9 * energy(a.solution));
  CHECK(b.report.variant == 2);
  CHECK(b.report.nu1 == 10.0);
  CHECK(b.report.order == 4);
  CHECK(b.report.functional == doctest::Approx(a.report.functional).epsilon(1e-6));
}
