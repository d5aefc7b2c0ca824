#include "doctest.h"
#include "support.hpp"

#include "lssem/geometry.hpp"

#include <cmath>
#include <numbers>

using namespace lssem;
using namespace lssem::testing;

namespace {

constexpr double kPi = std::numbers::pi;

ElementMap polar_element(double r0, double r1, double th0, double th1) {
  const Vec2 o(0.0, 0.0);
  const Vec2 e0(std::cos(th0), std::sin(th0)), e1(std::cos(th1), std::sin(th1));
  return build_transfinite_map({ParamCurve::segment(r0 * e0, r1 * e0), ParamCurve::arc(o, r1, th0, th1),
                                ParamCurve::segment(r0 * e1, r1 * e1), ParamCurve::arc(o, r0, th0, th1)},
                               1);
}

bool in_subdomain2(const std::string& recipe, const Vec2& x) {
  if (recipe == "split_square") return x.y() > 0.5;
  if (recipe == "quarter_annulus") return x.norm() > 1.5;
  return x.norm() > 0.5;
}

}  // namespace

TEST_CASE("affine rectangle map") {
  const ElementMap m = rectangle_map(0.0, 0.0, 1.0, 0.5);
  for (double xi : {-1.0, -0.3, 0.6}) {
    for (double eta : {-0.8, 0.1, 1.0}) {
      const PointMetric pm = m.metric(xi, eta);
      CHECK(pm.jacobian == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
      CHECK(pm.xi_x == doctest::Approx(2.0).epsilon(1e-14));
      CHECK(pm.eta_y == doctest::Approx(4.0).epsilon(1e-14));
      CHECK(std::abs(pm.xi_y) < 1e-14);
      CHECK(std::abs(pm.eta_x) < 1e-14);
    }
  }
  const MetricData md = metric_at(m, 4);
  for (double v : md.jacobian) CHECK(v == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("reference square maps to itself") {
  const ElementMap m = rectangle_map(-1.0, -1.0, 1.0, 1.0);
  const MetricData md = metric_at(m, 5);
  for (std::size_t i = 0; i < md.jacobian.size(); ++i) {
    CHECK(md.jacobian[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(md.xi_x[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(md.eta_y[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(md.xi_y[i]) < 1e-14);
    CHECK(std::abs(md.eta_x[i]) < 1e-14);
  }
  const Vec2 x = m(0.25, -0.75);
  CHECK(x.x() == doctest::Approx(0.25));
  CHECK(x.y() == doctest::Approx(-0.75));
}

TEST_CASE("quarter-annulus element has the polar Jacobian") {
  const double r0 = 1.0, r1 = 1.5, th = kPi / 4.0;
  const ElementMap m = polar_element(r0, r1, 0.0, th);
  const GllRule& g = gll_rule(4);
  for (double xi : g.nodes) {
    for (double eta : g.nodes) {
      const double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * xi;
      const PointMetric pm = m.metric(xi, eta);
      CHECK(pm.jacobian > 0.0);
      CHECK(std::abs(pm.jacobian - r * 0.5 * (r1 - r0) * 0.5 * th) < 1e-8);
      const MapJet j = m.jet(xi, eta);
      CHECK(pm.jacobian == doctest::Approx(j.d_xi.x() * j.d_eta.y() - j.d_eta.x() * j.d_xi.y()).epsilon(1e-15));
    }
  }
}

TEST_CASE("hatted metric of the quarter-annulus element is spectrally accurate") {
  const ElementMap m = polar_element(1.0, 1.5, 0.0, kPi / 4.0);
  for (int w : {8, 10, 12}) {
    const MetricData md = metric_at(m, w);
    double err = 0.0;
    for (int j = 0; j <= 20; ++j) {
      for (int i = 0; i <= 20; ++i) {
        const double xi = -1.0 + 0.1 * i, eta = -1.0 + 0.1 * j;
        const PointMetric pm = m.metric(xi, eta);
        err = std::max({err, std::abs(evaluate_interpolant(md.hat_xi_x, w, xi, eta) - pm.xi_x),
                        std::abs(evaluate_interpolant(md.hat_xi_y, w, xi, eta) - pm.xi_y),
                        std::abs(evaluate_interpolant(md.hat_eta_x, w, xi, eta) - pm.eta_x),
                        std::abs(evaluate_interpolant(md.hat_eta_y, w, xi, eta) - pm.eta_y)});
      }
    }
    CAPTURE(w);
    // eta_x, eta_y carry 1/r; the pole at the origin caps convergence near 10x per degree
    CHECK(err <= (w == 8 ? 2e-8 : 1e-8));
  }
}

TEST_CASE("degenerate elements are rejected") {
  SUBCASE("sides that do not close") {
    CHECK_THROWS_AS(build_transfinite_map({ParamCurve::segment({0, 0}, {1, 0}), ParamCurve::segment({1, 0}, {1, 1}),
                                           ParamCurve::segment({0, 1}, {1, 1.1}),
                                           ParamCurve::segment({0, 0}, {0, 1})},
                                          1),
                    std::invalid_argument);
  }
  SUBCASE("aspect ratio above the limit") {
    CHECK_THROWS_AS(rectangle_map(0.0, 0.0, 1.0, 0.005), std::invalid_argument);
    CHECK_NOTHROW(rectangle_map(0.0, 0.0, 1.0, 0.02));
  }
  SUBCASE("folded element") {
    CHECK_THROWS_AS(build_transfinite_map({ParamCurve::segment({0, 0}, {1, 0}), ParamCurve::segment({1, 0}, {0.2, 0.2}),
                                           ParamCurve::segment({0, 1}, {0.2, 0.2}),
                                           ParamCurve::segment({0, 0}, {0, 1})},
                                          1),
                    std::invalid_argument);
  }
}

TEST_CASE("recipe meshes") {
  SUBCASE("split square") {
    const Mesh m = build_recipe_mesh("split_square");
    CHECK(m.size() == 4);
    CHECK(m.count_in_subdomain(1) == 2);
    CHECK(m.count_in_subdomain(2) == 2);
    CHECK(m.count_edges(EdgeKind::Interface) == 2);
    CHECK(m.count_edges(EdgeKind::BoundaryDirichlet) == 8);
    CHECK(m.count_edges(EdgeKind::Interior1) == 1);
    CHECK(m.count_edges(EdgeKind::Interior2) == 1);
  }
  SUBCASE("quarter annulus") {
    const Mesh m = build_recipe_mesh("quarter_annulus");
    CHECK(m.size() == 4);
    CHECK(m.count_edges(EdgeKind::Interface) == 2);
    for (const auto& e : m.edges) {
      if (e.kind != EdgeKind::Interface) continue;
      const ElementMap& a = m.elements[e.element_a];
      for (double t : {-1.0, -0.4, 0.3, 1.0}) CHECK(a.side(e.side_a).eval(t).norm() == doctest::Approx(1.5).epsilon(1e-14));
    }
  }
  SUBCASE("circle in square") {
    const Mesh m = build_recipe_mesh("circle_in_square");
    CHECK(m.size() == 9);
    CHECK(m.count_in_subdomain(1) == 5);
    CHECK(m.count_edges(EdgeKind::Interface) == 4);
    CHECK(m.count_edges(EdgeKind::BoundaryDirichlet) == 4);
    for (const auto& e : m.edges) {
      if (e.kind != EdgeKind::Interface) continue;
      CHECK(m.elements[e.element_a].subdomain() == 1);
      CHECK(m.elements[*e.element_b].subdomain() == 2);
    }
    for (const auto& el : m.elements) {
      if (el.subdomain() != 1) continue;
      for (double xi : {-1.0, 0.0, 0.5, 1.0}) {
        for (double eta : {-1.0, 0.3, 1.0}) CHECK(el(xi, eta).norm() <= 0.5 + 1e-12);
      }
    }
  }
  SUBCASE("traction sides are marked") {
    const Mesh m = build_recipe_mesh("circle_in_square", [](const Vec2& mid) { return std::abs(mid.y() + 1.0) < 1e-12; });
    CHECK(m.count_edges(EdgeKind::BoundaryNeumann) == 1);
    CHECK(m.count_edges(EdgeKind::BoundaryDirichlet) == 3);
  }
  CHECK_THROWS(build_recipe_mesh("no_such_recipe"));
}

TEST_CASE("mesh invariants on every recipe") {
  for (const std::string recipe : {"split_square", "quarter_annulus", "circle_in_square"}) {
    CAPTURE(recipe);
    const Mesh m = build_recipe_mesh(recipe);
    std::vector<int> seen(4 * m.size(), 0);
    for (const auto& e : m.edges) {
      ++seen[4 * e.element_a + e.side_a];
      if (e.element_b) ++seen[4 * *e.element_b + *e.side_b];
    }
    for (int s : seen) CHECK(s == 1);

    for (const auto& e : m.edges) {
      if (!e.element_b) continue;
      const ElementMap& a = m.elements[e.element_a];
      const ElementMap& b = m.elements[*e.element_b];
      double gap = 0.0;
      for (int k = 0; k < 50; ++k) {
        const double t = -1.0 + 2.0 * k / 49.0;
        const auto [xa, ya] = ElementMap::side_point(e.side_a, t);
        const auto [xb, yb] = ElementMap::side_point(*e.side_b, e.flipped ? -t : t);
        gap = std::max(gap, (a(xa, ya) - b(xb, yb)).norm());
      }
      CHECK(gap <= 1e-10);

      if (e.kind == EdgeKind::Interface) {
        for (double t : {-0.7, 0.0, 0.6}) {
          const auto [xi, eta] = ElementMap::side_point(e.side_a, t);
          const Vec2 n = a.outward_normal(e.side_a, t);
          CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));
          CHECK(in_subdomain2(recipe, a(xi, eta) + 1e-3 * n));
          CHECK_FALSE(in_subdomain2(recipe, a(xi, eta) - 1e-3 * n));
        }
      }
    }

    for (const auto& el : m.elements) {
      for (double xi : {-1.0, -0.5, 0.2, 1.0}) {
        for (double eta : {-1.0, 0.0, 0.9}) {
          const MapJet j = el.jet(xi, eta);
          const PointMetric pm = point_metric(j);
          CHECK(pm.jacobian > 0.0);
          CHECK(pm.jacobian == doctest::Approx(j.d_xi.x() * j.d_eta.y() - j.d_eta.x() * j.d_xi.y()).epsilon(1e-15));
          // inverse metric times the map Jacobian is the identity
          CHECK(pm.xi_x * j.d_xi.x() + pm.xi_y * j.d_xi.y() == doctest::Approx(1.0).epsilon(1e-12));
          CHECK(std::abs(pm.xi_x * j.d_eta.x() + pm.xi_y * j.d_eta.y()) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("side curves and the blended map agree on the boundary") {
  const Mesh m = build_recipe_mesh("circle_in_square");
  for (const auto& el : m.elements) {
    for (int s = 0; s < kSides; ++s) {
      for (double t : {-1.0, -0.3, 0.5, 1.0}) {
        const auto [xi, eta] = ElementMap::side_point(s, t);
        CHECK((el(xi, eta) - el.side(s).eval(t)).norm() < 1e-14);
      }
    }
  }
}
