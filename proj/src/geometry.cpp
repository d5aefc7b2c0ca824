#include "lssem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lssem {

ParamCurve ParamCurve::segment(const Vec2& a, const Vec2& b) {
  return {[a, b](double t) -> Vec2 { return 0.5 * (1.0 - t) * a + 0.5 * (1.0 + t) * b; },
          [a, b](double) -> Vec2 { return 0.5 * (b - a); },
          [](double) -> Vec2 { return Vec2::Zero(); }};
}

ParamCurve ParamCurve::arc(const Vec2& center, double radius, double theta0, double theta1) {
  const double half = 0.5 * (theta1 - theta0);
  const double mid = 0.5 * (theta1 + theta0);
  return {[=](double t) -> Vec2 {
            const double th = mid + half * t;
            return center + radius * Vec2(std::cos(th), std::sin(th));
          },
          [=](double t) -> Vec2 {
            const double th = mid + half * t;
            return radius * half * Vec2(-std::sin(th), std::cos(th));
          },
          [=](double t) -> Vec2 {
            const double th = mid + half * t;
            return -radius * half * half * Vec2(std::cos(th), std::sin(th));
          }};
}

ParamCurve ParamCurve::reversed() const {
  return {[f = eval](double t) { return f(-t); }, [f = deriv](double t) -> Vec2 { return -f(-t); },
          [f = deriv2](double t) { return f(-t); }};
}

PointMetric point_metric(const MapJet& jet) {
  const double x_xi = jet.d_xi.x();
  const double y_xi = jet.d_xi.y();
  const double x_eta = jet.d_eta.x();
  const double y_eta = jet.d_eta.y();
  const double jac = x_xi * y_eta - x_eta * y_xi;
  if (!(std::abs(jac) > 0.0) || !std::isfinite(jac)) {
    throw std::domain_error("singular element Jacobian");
  }
  Mat2 k;  // inverse of [x_xi x_eta; y_xi y_eta]
  k << y_eta / jac, -x_eta / jac, -y_xi / jac, x_xi / jac;
  Mat2 jm_xi;
  jm_xi << jet.d_xixi.x(), jet.d_xieta.x(), jet.d_xixi.y(), jet.d_xieta.y();
  Mat2 jm_eta;
  jm_eta << jet.d_xieta.x(), jet.d_etaeta.x(), jet.d_xieta.y(), jet.d_etaeta.y();
  const Mat2 dk_xi = -k * jm_xi * k;
  const Mat2 dk_eta = -k * jm_eta * k;
  PointMetric m{};
  m.jacobian = jac;
  m.xi_x = k(0, 0);
  m.xi_y = k(0, 1);
  m.eta_x = k(1, 0);
  m.eta_y = k(1, 1);
  // d/dx = xi_x d/dxi + eta_x d/deta, d/dy = xi_y d/dxi + eta_y d/deta
  m.lap_xi = m.xi_x * dk_xi(0, 0) + m.eta_x * dk_eta(0, 0) + m.xi_y * dk_xi(0, 1) +
             m.eta_y * dk_eta(0, 1);
  m.lap_eta = m.xi_x * dk_xi(1, 0) + m.eta_x * dk_eta(1, 0) + m.xi_y * dk_xi(1, 1) +
              m.eta_y * dk_eta(1, 1);
  return m;
}

ElementMap::ElementMap(std::array<ParamCurve, kSides> sides, int subdomain)
    : sides_(std::move(sides)), subdomain_(subdomain) {
  corners_[0] = sides_[0].eval(-1.0);
  corners_[1] = sides_[0].eval(1.0);
  corners_[2] = sides_[2].eval(1.0);
  corners_[3] = sides_[2].eval(-1.0);
}

Vec2 ElementMap::operator()(double xi, double eta) const { return jet(xi, eta).x; }

MapJet ElementMap::jet(double xi, double eta) const {
  const Vec2 c0 = sides_[0].eval(xi);
  const Vec2 c2 = sides_[2].eval(xi);
  const Vec2 c1 = sides_[1].eval(eta);
  const Vec2 c3 = sides_[3].eval(eta);
  const Vec2 d0 = sides_[0].deriv(xi);
  const Vec2 d2 = sides_[2].deriv(xi);
  const Vec2 d1 = sides_[1].deriv(eta);
  const Vec2 d3 = sides_[3].deriv(eta);
  const Vec2& p00 = corners_[0];
  const Vec2& p10 = corners_[1];
  const Vec2& p11 = corners_[2];
  const Vec2& p01 = corners_[3];
  const double am = 0.5 * (1.0 - xi);
  const double ap = 0.5 * (1.0 + xi);
  const double bm = 0.5 * (1.0 - eta);
  const double bp = 0.5 * (1.0 + eta);

  MapJet j;
  j.x = bm * c0 + bp * c2 + am * c3 + ap * c1 -
        (am * bm * p00 + ap * bm * p10 + ap * bp * p11 + am * bp * p01);
  j.d_xi = bm * d0 + bp * d2 - 0.5 * c3 + 0.5 * c1 -
           0.5 * (-bm * p00 + bm * p10 + bp * p11 - bp * p01);
  j.d_eta = -0.5 * c0 + 0.5 * c2 + am * d3 + ap * d1 -
            0.5 * (-am * p00 - ap * p10 + ap * p11 + am * p01);
  j.d_xixi = bm * sides_[0].deriv2(xi) + bp * sides_[2].deriv2(xi);
  j.d_etaeta = am * sides_[3].deriv2(eta) + ap * sides_[1].deriv2(eta);
  j.d_xieta = -0.5 * d0 + 0.5 * d2 - 0.5 * d3 + 0.5 * d1 - 0.25 * (p00 - p10 + p11 - p01);
  return j;
}

std::array<double, 2> ElementMap::side_point(int side, double t) {
  switch (side) {
    case 0: return {t, -1.0};
    case 1: return {1.0, t};
    case 2: return {t, 1.0};
    case 3: return {-1.0, t};
    default: throw std::invalid_argument("side index must be in 0..3");
  }
}

Vec2 ElementMap::outward_normal(int side, double t) const {
  const auto [xi, eta] = side_point(side, t);
  const MapJet j = jet(xi, eta);
  const Vec2 tangent = (side == 0 || side == 2) ? j.d_xi : j.d_eta;
  const double sign = (side == 0 || side == 1) ? 1.0 : -1.0;
  return sign * Vec2(tangent.y(), -tangent.x()).normalized();
}

double ElementMap::side_speed(int side, double t) const {
  const auto [xi, eta] = side_point(side, t);
  const MapJet j = jet(xi, eta);
  return ((side == 0 || side == 2) ? j.d_xi : j.d_eta).norm();
}

ElementMap build_transfinite_map(std::array<ParamCurve, kSides> sides, int subdomain,
                                 int check_order) {
  const std::array<std::pair<Vec2, Vec2>, 4> corner_pairs{{
      {sides[0].eval(-1.0), sides[3].eval(-1.0)},
      {sides[0].eval(1.0), sides[1].eval(-1.0)},
      {sides[1].eval(1.0), sides[2].eval(1.0)},
      {sides[2].eval(-1.0), sides[3].eval(1.0)},
  }};
  for (const auto& [a, b] : corner_pairs) {
    if ((a - b).norm() > kCornerTolerance) {
      throw std::invalid_argument("element side curves do not meet at the corners");
    }
  }
  ElementMap map(std::move(sides), subdomain);
  const GllRule& rule = gll_rule(check_order + 2);
  double jmin = std::numeric_limits<double>::infinity();
  double jmax = 0.0;
  double aspect = 1.0;
  for (double eta : rule.nodes) {
    for (double xi : rule.nodes) {
      const MapJet j = map.jet(xi, eta);
      const double jac = j.d_xi.x() * j.d_eta.y() - j.d_eta.x() * j.d_xi.y();
      if (!(jac > 0.0)) {
        throw std::invalid_argument("element map has a non-positive Jacobian");
      }
      jmin = std::min(jmin, jac);
      jmax = std::max(jmax, jac);
      const double a = j.d_xi.norm();
      const double b = j.d_eta.norm();
      aspect = std::max(aspect, std::max(a, b) / std::min(a, b));
    }
  }
  if (aspect > kMaxAspectRatio) {
    throw std::invalid_argument("element aspect ratio exceeds the supported limit");
  }
  if (jmax / jmin > kMaxJacobianRatio) {
    throw std::invalid_argument("element Jacobian varies too strongly");
  }
  return map;
}

namespace {

// (V^T Wq V)^{-1} V^T Wq for V: order-W GLL -> order-(W+2) GLL.
const Matrix& metric_projector(int order) {
  static std::map<int, std::unique_ptr<Matrix>> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    const GllRule& fine = gll_rule(order + 2);
    const Matrix v = interpolation_matrix(gll_rule(order).nodes, fine.nodes);
    Matrix wv = v;
    for (Eigen::Index r = 0; r < v.rows(); ++r) wv.row(r) *= fine.weights[r];
    const Matrix normal = v.transpose() * wv;
    Matrix p = normal.ldlt().solve(wv.transpose());
    it = cache.emplace(order, std::make_unique<Matrix>(std::move(p))).first;
  }
  return *it->second;
}

}  // namespace

std::vector<double> project_metric_samples(std::span<const double> samples, int order) {
  const Matrix& p = metric_projector(order);
  std::vector<double> out(static_cast<std::size_t>(order + 1) * (order + 1));
  tensor_apply(p, p, samples, out);
  return out;
}

std::vector<double> project_trace_samples(std::span<const double> samples, int order) {
  const Matrix& p = metric_projector(order);
  Eigen::Map<const Vector> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const Vector r = p * s;
  return {r.data(), r.data() + r.size()};
}

MetricData metric_at(const ElementMap& map, int order) {
  MetricData m;
  m.order = order;
  m.grid_order = order + 2;
  const GllRule& rule = gll_rule(m.grid_order);
  const int n = rule.size();
  const std::size_t count = static_cast<std::size_t>(n) * n;
  for (auto* v : {&m.jacobian, &m.xi_x, &m.xi_y, &m.eta_x, &m.eta_y}) v->resize(count);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const PointMetric pm = map.metric(rule.nodes[i], rule.nodes[j]);
      if (!(pm.jacobian > 0.0)) throw std::domain_error("non-positive Jacobian on metric grid");
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      m.jacobian[k] = pm.jacobian;
      m.xi_x[k] = pm.xi_x;
      m.xi_y[k] = pm.xi_y;
      m.eta_x[k] = pm.eta_x;
      m.eta_y[k] = pm.eta_y;
    }
  }
  m.hat_xi_x = project_metric_samples(m.xi_x, order);
  m.hat_xi_y = project_metric_samples(m.xi_y, order);
  m.hat_eta_x = project_metric_samples(m.eta_x, order);
  m.hat_eta_y = project_metric_samples(m.eta_y, order);
  return m;
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Interior1: return "interior1";
    case EdgeKind::Interior2: return "interior2";
    case EdgeKind::Interface: return "interface";
    case EdgeKind::BoundaryDirichlet: return "boundary_dirichlet";
    case EdgeKind::BoundaryNeumann: return "boundary_neumann";
  }
  return "unknown";
}

int Mesh::count_in_subdomain(int subdomain) const {
  return static_cast<int>(std::count_if(elements.begin(), elements.end(),
                                        [&](const ElementMap& e) { return e.subdomain() == subdomain; }));
}

int Mesh::count_edges(EdgeKind kind) const {
  return static_cast<int>(
      std::count_if(edges.begin(), edges.end(), [&](const EdgeRecord& e) { return e.kind == kind; }));
}

namespace {

constexpr double kMatchTolerance = 1e-10;
constexpr int kEdgeSamples = 50;

Vec2 side_eval(const ElementMap& m, int side, double t) {
  const auto [xi, eta] = ElementMap::side_point(side, t);
  return m(xi, eta);
}

double distance_to_side(const ElementMap& m, int side, const Vec2& p) {
  // Coarse scan followed by Newton refinement on |c(t) - p|^2.
  double best_t = -1.0;
  double best = std::numeric_limits<double>::infinity();
  constexpr int kScan = 200;
  for (int k = 0; k <= kScan; ++k) {
    const double t = -1.0 + 2.0 * k / kScan;
    const double d = (side_eval(m, side, t) - p).norm();
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  double t = best_t;
  const ParamCurve& c = m.side(side);
  for (int it = 0; it < 30; ++it) {
    const Vec2 r = c.eval(t) - p;
    const Vec2 d1 = c.deriv(t);
    const Vec2 d2 = c.deriv2(t);
    const double g = r.dot(d1);
    const double h = d1.dot(d1) + r.dot(d2);
    if (!(h > 0.0)) break;
    t = std::clamp(t - g / h, -1.0, 1.0);
  }
  return (c.eval(t) - p).norm();
}

}  // namespace

Mesh build_mesh_from_elements(std::string name, std::vector<ElementMap> elements,
                              const BoundaryPredicate& neumann, const InterfacePredicate& interface) {
  Mesh mesh;
  mesh.name = std::move(name);
  mesh.elements = std::move(elements);
  const int ne = mesh.size();
  std::vector<std::array<bool, kSides>> used(ne, {false, false, false, false});

  for (int ea = 0; ea < ne; ++ea) {
    for (int sa = 0; sa < kSides; ++sa) {
      if (used[ea][sa]) continue;
      const ElementMap& ma = mesh.elements[ea];
      const Vec2 a0 = side_eval(ma, sa, -1.0);
      const Vec2 a1 = side_eval(ma, sa, 1.0);
      bool found = false;
      for (int eb = ea + 1; eb < ne && !found; ++eb) {
        for (int sb = 0; sb < kSides && !found; ++sb) {
          if (used[eb][sb]) continue;
          const ElementMap& mb = mesh.elements[eb];
          const Vec2 b0 = side_eval(mb, sb, -1.0);
          const Vec2 b1 = side_eval(mb, sb, 1.0);
          bool flipped = false;
          if ((a0 - b0).norm() < kMatchTolerance && (a1 - b1).norm() < kMatchTolerance) {
            flipped = false;
          } else if ((a0 - b1).norm() < kMatchTolerance && (a1 - b0).norm() < kMatchTolerance) {
            flipped = true;
          } else {
            continue;
          }
          for (int k = 0; k < kEdgeSamples; ++k) {
            const double t = -1.0 + 2.0 * (k + 0.5) / kEdgeSamples;
            const Vec2 pa = side_eval(ma, sa, t);
            const Vec2 pb = side_eval(mb, sb, flipped ? -t : t);
            if ((pa - pb).norm() > kMatchTolerance) {
              throw std::invalid_argument("shared edge traces do not coincide (elements " +
                                          std::to_string(ea) + ", " + std::to_string(eb) + ")");
            }
          }
          EdgeRecord rec;
          rec.flipped = flipped;
          const int da = ma.subdomain();
          const int db = mb.subdomain();
          const Vec2 mid = side_eval(ma, sa, 0.0);
          if (da == db) {
            if (interface && interface(mid)) {
              throw std::invalid_argument("interface edge joins two elements of one subdomain");
            }
            rec.kind = da == 1 ? EdgeKind::Interior1 : EdgeKind::Interior2;
            rec.element_a = ea;
            rec.side_a = sa;
            rec.element_b = eb;
            rec.side_b = sb;
          } else {
            rec.kind = EdgeKind::Interface;
            // The first element is always the subdomain-1 side.
            const bool a_first = da == 1;
            rec.element_a = a_first ? ea : eb;
            rec.side_a = a_first ? sa : sb;
            rec.element_b = a_first ? eb : ea;
            rec.side_b = a_first ? sb : sa;
          }
          used[ea][sa] = used[eb][sb] = true;
          mesh.edges.push_back(rec);
          found = true;
        }
      }
      if (!found) {
        EdgeRecord rec;
        rec.element_a = ea;
        rec.side_a = sa;
        const Vec2 mid = side_eval(ma, sa, 0.0);
        rec.kind = (neumann && neumann(mid)) ? EdgeKind::BoundaryNeumann
                                             : EdgeKind::BoundaryDirichlet;
        used[ea][sa] = true;
        mesh.edges.push_back(rec);
      }
    }
  }

  // Conformity: no element corner may sit inside another element's side.
  for (int e = 0; e < ne; ++e) {
    for (int c = 0; c < 4; ++c) {
      const double xi = (c == 1 || c == 2) ? 1.0 : -1.0;
      const double eta = (c >= 2) ? 1.0 : -1.0;
      const Vec2 p = mesh.elements[e](xi, eta);
      for (int f = 0; f < ne; ++f) {
        if (f == e) continue;
        for (int s = 0; s < kSides; ++s) {
          const ElementMap& m = mesh.elements[f];
          if ((side_eval(m, s, -1.0) - p).norm() < kMatchTolerance ||
              (side_eval(m, s, 1.0) - p).norm() < kMatchTolerance) {
            continue;
          }
          if (distance_to_side(m, s, p) < 1e-9) {
            throw std::invalid_argument("hanging node: corner of element " + std::to_string(e) +
                                        " lies inside a side of element " + std::to_string(f));
          }
        }
      }
    }
  }
  return mesh;
}

namespace {

ElementMap rectangle(double x0, double y0, double x1, double y1, int subdomain) {
  return build_transfinite_map({ParamCurve::segment({x0, y0}, {x1, y0}),
                                ParamCurve::segment({x1, y0}, {x1, y1}),
                                ParamCurve::segment({x0, y1}, {x1, y1}),
                                ParamCurve::segment({x0, y0}, {x0, y1})},
                               subdomain);
}

ElementMap annular_sector(double r0, double r1, double th0, double th1, int subdomain) {
  const Vec2 o(0.0, 0.0);
  const Vec2 e0(std::cos(th0), std::sin(th0));
  const Vec2 e1(std::cos(th1), std::sin(th1));
  return build_transfinite_map({ParamCurve::segment(r0 * e0, r1 * e0),
                                ParamCurve::arc(o, r1, th0, th1),
                                ParamCurve::segment(r0 * e1, r1 * e1),
                                ParamCurve::arc(o, r0, th0, th1)},
                               subdomain);
}

ParamCurve rotated(const ParamCurve& c, double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return {[c, r](double t) -> Vec2 { return r * c.eval(t); },
          [c, r](double t) -> Vec2 { return r * c.deriv(t); },
          [c, r](double t) -> Vec2 { return r * c.deriv2(t); }};
}

Mesh split_square(const BoundaryPredicate& neumann) {
  std::vector<ElementMap> e;
  e.push_back(rectangle(0.0, 0.0, 0.5, 0.5, 1));
  e.push_back(rectangle(0.5, 0.0, 1.0, 0.5, 1));
  e.push_back(rectangle(0.0, 0.5, 0.5, 1.0, 2));
  e.push_back(rectangle(0.5, 0.5, 1.0, 1.0, 2));
  return build_mesh_from_elements("split_square", std::move(e), neumann,
                                  [](const Vec2& p) { return std::abs(p.y() - 0.5) < 1e-12; });
}

Mesh quarter_annulus(const BoundaryPredicate& neumann) {
  constexpr double q = std::numbers::pi / 4.0;
  std::vector<ElementMap> e;
  e.push_back(annular_sector(1.0, 1.5, 0.0, q, 1));
  e.push_back(annular_sector(1.0, 1.5, q, 2.0 * q, 1));
  e.push_back(annular_sector(1.5, 2.0, 0.0, q, 2));
  e.push_back(annular_sector(1.5, 2.0, q, 2.0 * q, 2));
  return build_mesh_from_elements("quarter_annulus", std::move(e), neumann,
                                  [](const Vec2& p) { return std::abs(p.norm() - 1.5) < 1e-12; });
}

Mesh circle_in_square(const BoundaryPredicate& neumann) {
  constexpr double radius = 0.5;
  constexpr double half = 0.2;  // corners of the central element at (+-half, +-half)
  constexpr double bulge = 16.0 * std::numbers::pi / 180.0;
  constexpr double q = std::numbers::pi / 4.0;
  const double c = radius / std::sqrt(2.0);
  const Vec2 o(0.0, 0.0);

  // The central element's sides bow outward by `bulge`, which keeps the ring
  // maps far from degenerate.
  const ParamCurve inner = ParamCurve::arc({half - half / std::tan(bulge), 0.0},
                                           half / std::sin(bulge), -bulge, bulge);
  const std::array<ParamCurve, kSides> ring{
      ParamCurve::segment({half, -half}, {c, -c}), ParamCurve::arc(o, radius, -q, q),
      ParamCurve::segment({half, half}, {c, c}), inner};
  const std::array<ParamCurve, kSides> outer{
      ParamCurve::segment({c, -c}, {1.0, -1.0}), ParamCurve::segment({1.0, -1.0}, {1.0, 1.0}),
      ParamCurve::segment({c, c}, {1.0, 1.0}), ParamCurve::arc(o, radius, -q, q)};

  std::vector<ElementMap> e;
  e.push_back(build_transfinite_map({rotated(inner, -2.0 * q), inner,
                                     rotated(inner, 2.0 * q).reversed(),
                                     rotated(inner, 4.0 * q).reversed()},
                                    1));
  for (int k = 0; k < 4; ++k) {
    const double a = k * std::numbers::pi / 2.0;
    e.push_back(build_transfinite_map({rotated(ring[0], a), rotated(ring[1], a),
                                       rotated(ring[2], a), rotated(ring[3], a)},
                                      1));
  }
  for (int k = 0; k < 4; ++k) {
    const double a = k * std::numbers::pi / 2.0;
    e.push_back(build_transfinite_map({rotated(outer[0], a), rotated(outer[1], a),
                                       rotated(outer[2], a), rotated(outer[3], a)},
                                      2));
  }
  return build_mesh_from_elements(
      "circle_in_square", std::move(e), neumann,
      [radius](const Vec2& p) { return std::abs(p.norm() - radius) < 1e-12; });
}

}  // namespace

Mesh build_recipe_mesh(const std::string& recipe, const BoundaryPredicate& neumann) {
  if (recipe == "split_square") return split_square(neumann);
  if (recipe == "quarter_annulus") return quarter_annulus(neumann);
  if (recipe == "circle_in_square") return circle_in_square(neumann);
  throw std::invalid_argument("unknown mesh recipe: " + recipe);
}

}  // namespace lssem
