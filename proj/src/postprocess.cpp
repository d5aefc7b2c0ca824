#include "lssem/postprocess.hpp"

#include "lssem/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace lssem {

namespace {

struct NodeRef {
  Vec2 x;
  int element;
  int node;
};

std::vector<NodeRef> boundary_nodes(const Mesh& mesh, int order) {
  const GllRule& rule = gll_rule(order);
  const int n = order + 1;
  std::vector<NodeRef> out;
  for (int e = 0; e < mesh.size(); ++e) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i != 0 && i != order && j != 0 && j != order) continue;
        out.push_back({mesh.elements[e](rule.nodes[i], rule.nodes[j]), e, j * n + i});
      }
    }
  }
  return out;
}

// Evaluation of one element's fields and their reference derivatives at a
// tensor Gauss grid.
struct ElementSampler {
  int order;
  int points;
  Matrix e0, e1;
  explicit ElementSampler(int order_, int points_) : order(order_), points(points_) {
    e0 = gll_to_gauss(order, points);
    e1 = e0 * gll_rule(order).diff;
  }
  void sample(std::span<const double> grid, std::vector<double>& v, std::vector<double>& dxi,
              std::vector<double>& deta) const {
    const int qq = points * points;
    v.resize(qq);
    dxi.resize(qq);
    deta.resize(qq);
    tensor_apply(e0, e0, grid, v);
    tensor_apply(e0, e1, grid, dxi);
    tensor_apply(e1, e0, grid, deta);
  }
};

struct ElementIntegrals {
  double err_u = 0.0, norm_u = 0.0, err_p = 0.0, norm_p = 0.0, div = 0.0, div_raw = 0.0;
};

}  // namespace

Vector make_conforming(const Mesh& mesh, int order, const Vector& values) {
  const DofLayout layout(mesh.size(), order);
  if (values.size() != layout.size()) throw std::invalid_argument("vector size does not match mesh");
  const std::vector<NodeRef> nodes = boundary_nodes(mesh, order);
  std::vector<int> group(nodes.size(), -1);
  Vector out = values;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (group[a] >= 0) continue;
    std::vector<std::size_t> members{a};
    group[a] = static_cast<int>(a);
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      if (group[b] < 0 && (nodes[b].x - nodes[a].x).norm() <= kNodeMatchTolerance) {
        group[b] = static_cast<int>(a);
        members.push_back(b);
      }
    }
    if (members.size() < 2) continue;
    for (Field f : {Field::U1, Field::U2}) {
      double sum = 0.0;
      for (std::size_t m : members) {
        sum += values[layout.offset(nodes[m].element, f) + nodes[m].node];
      }
      const double mean = sum / static_cast<double>(members.size());
      for (std::size_t m : members) out[layout.offset(nodes[m].element, f) + nodes[m].node] = mean;
    }
  }
  return out;
}

FieldNorms field_norms(const Mesh& mesh, int order, const Vector& values, int extra_points) {
  const DofLayout layout(mesh.size(), order);
  const int q = 2 * order + extra_points;
  const ElementSampler sampler(order, q);
  const GaussRule& gauss = gauss_rule(q);
  FieldNorms total;
  for (int e = 0; e < mesh.size(); ++e) {
    const ElementMap& map = mesh.elements[e];
    std::array<std::vector<double>, 3> v, dxi, deta;
    for (int f = 0; f < kFields; ++f) {
      sampler.sample({values.data() + layout.offset(e, static_cast<Field>(f)),
                      static_cast<std::size_t>(layout.nodes_per_grid())},
                     v[f], dxi[f], deta[f]);
    }
    for (int j = 0; j < q; ++j) {
      for (int i = 0; i < q; ++i) {
        const int k = j * q + i;
        const PointMetric m = map.metric(gauss.nodes[i], gauss.nodes[j]);
        const double w = gauss.weights[i] * gauss.weights[j] * m.jacobian;
        double div = 0.0;
        for (int c = 0; c < 2; ++c) {
          const double ux = dxi[c][k] * m.xi_x + deta[c][k] * m.eta_x;
          const double uy = dxi[c][k] * m.xi_y + deta[c][k] * m.eta_y;
          total.velocity_h1_sq += w * (v[c][k] * v[c][k] + ux * ux + uy * uy);
          div += c == 0 ? ux : uy;
        }
        total.divergence_l2_sq += w * div * div;
        total.pressure_l2_sq += w * v[2][k] * v[2][k];
      }
    }
  }
  return total;
}

ErrorReport compute_errors(const Mesh& mesh, int order, const Vector& corrected, const Vector& raw,
                           const ProblemSpec& problem, const ErrorOptions& options) {
  if (!problem.exact) throw std::invalid_argument("problem has no exact solution");
  const ExactSolution& exact = *problem.exact;
  const DofLayout layout(mesh.size(), order);
  if (corrected.size() != layout.size() || raw.size() != layout.size()) {
    throw std::invalid_argument("vector size does not match mesh");
  }
  const int q = 2 * order + options.extra_points;
  const ElementSampler sampler(order, q);
  const GaussRule& gauss = gauss_rule(q);

  double q_shift = 0.0;
  double p_shift = 0.0;
  if (options.align_pressure) {
    const Vec2 pin = mesh.elements[0](-1.0, -1.0);
    q_shift = corrected[layout.index(0, Field::P, 0, 0)];
    p_shift = exact.pressure(pin, mesh.elements[0].subdomain());
  }

  std::vector<ElementIntegrals> parts(mesh.size());
  parallel_for(mesh.size(), [&](int e) {
    const ElementMap& map = mesh.elements[e];
    const int sub = map.subdomain();
    std::array<std::vector<double>, 3> v, dxi, deta;
    std::array<std::vector<double>, 2> rxi, reta, rv;
    for (int f = 0; f < kFields; ++f) {
      sampler.sample({corrected.data() + layout.offset(e, static_cast<Field>(f)),
                      static_cast<std::size_t>(layout.nodes_per_grid())},
                     v[f], dxi[f], deta[f]);
    }
    for (int c = 0; c < 2; ++c) {
      sampler.sample({raw.data() + layout.offset(e, static_cast<Field>(c)),
                      static_cast<std::size_t>(layout.nodes_per_grid())},
                     rv[c], rxi[c], reta[c]);
    }
    ElementIntegrals& acc = parts[e];
    for (int j = 0; j < q; ++j) {
      for (int i = 0; i < q; ++i) {
        const int k = j * q + i;
        const MapJet jet = map.jet(gauss.nodes[i], gauss.nodes[j]);
        const PointMetric m = point_metric(jet);
        const double w = gauss.weights[i] * gauss.weights[j] * m.jacobian;
        const Vec2 u = exact.velocity(jet.x, sub);
        const Mat2 g = exact.velocity_gradient(jet.x, sub);
        double div = 0.0;
        double div_raw = 0.0;
        for (int c = 0; c < 2; ++c) {
          const double ux = dxi[c][k] * m.xi_x + deta[c][k] * m.eta_x;
          const double uy = dxi[c][k] * m.xi_y + deta[c][k] * m.eta_y;
          const double ev = u[c] - v[c][k];
          const double ex = g(c, 0) - ux;
          const double ey = g(c, 1) - uy;
          acc.err_u += w * (ev * ev + ex * ex + ey * ey);
          acc.norm_u += w * (u[c] * u[c] + g(c, 0) * g(c, 0) + g(c, 1) * g(c, 1));
          div += c == 0 ? ux : uy;
          div_raw += c == 0 ? rxi[c][k] * m.xi_x + reta[c][k] * m.eta_x
                            : rxi[c][k] * m.xi_y + reta[c][k] * m.eta_y;
        }
        const double p = exact.pressure(jet.x, sub) - p_shift;
        const double ep = p - (v[2][k] - q_shift);
        acc.err_p += w * ep * ep;
        acc.norm_p += w * p * p;
        acc.div += w * div * div;
        acc.div_raw += w * div_raw * div_raw;
      }
    }
  });

  ElementIntegrals sum;
  for (const ElementIntegrals& a : parts) {
    sum.err_u += a.err_u;
    sum.norm_u += a.norm_u;
    sum.err_p += a.err_p;
    sum.norm_p += a.norm_p;
    sum.div += a.div;
    sum.div_raw += a.div_raw;
  }
  ErrorReport rep;
  rep.e_u = sum.norm_u > 0.0 ? std::sqrt(sum.err_u / sum.norm_u) : std::sqrt(sum.err_u);
  rep.e_p = sum.norm_p > 0.0 ? std::sqrt(sum.err_p / sum.norm_p) : std::sqrt(sum.err_p);
  rep.e_c = std::sqrt(sum.div);
  rep.e_c_raw = std::sqrt(sum.div_raw);
  return rep;
}

std::optional<SlopeFit> fit_log_slope(const std::vector<int>& orders,
                                      const std::vector<double>& errors) {
  if (orders.size() != errors.size() || orders.size() < 3) return std::nullopt;
  const double n = static_cast<double>(orders.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) return std::nullopt;
    const double x = orders[i];
    const double y = std::log10(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.converging = fit.slope < -kNoConvergenceSlope;
  return fit;
}

}  // namespace lssem
