#pragma once

#include "lssem/geometry.hpp"
#include "lssem/problem.hpp"
#include "lssem/spectral_basis.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace lssem::testing {

inline std::vector<double> random_values(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Vector random_vector(std::mt19937_64& rng, int n) {
  const auto v = random_values(rng, n);
  return Eigen::Map<const Vector>(v.data(), n);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline ElementMap rectangle_map(double x0, double y0, double x1, double y1, int subdomain = 1) {
  return build_transfinite_map({ParamCurve::segment({x0, y0}, {x1, y0}),
                                ParamCurve::segment({x1, y0}, {x1, y1}),
                                ParamCurve::segment({x0, y1}, {x1, y1}),
                                ParamCurve::segment({x0, y0}, {x0, y1})},
                               subdomain);
}

/// All data zero, Dirichlet everywhere, on the given geometry recipe.
inline ProblemSpec zero_problem(const std::string& geometry) {
  ProblemSpec p;
  p.name = "zero";
  p.geometry = geometry;
  p.force = [](const Vec2&, int) { return Vec2::Zero().eval(); };
  p.interface_jump = [](const Vec2&) { return Vec2::Zero().eval(); };
  p.dirichlet = [](const Vec2&, int) { return Vec2::Zero().eval(); };
  return p;
}

using Fn = std::function<double(double)>;

inline std::vector<double> nodal(int order, const Fn& f) {
  const GllRule& r = gll_rule(order);
  std::vector<double> v(r.size());
  for (int i = 0; i < r.size(); ++i) v[i] = f(r.nodes[i]);
  return v;
}

inline double interval_l2(const Fn& w) {
  const GaussRule& g = gauss_rule(40);
  double s = 0.0;
  for (int i = 0; i < g.points; ++i) s += g.weights[i] * w(g.nodes[i]) * w(g.nodes[i]);
  return s;
}

// Composite tensor Gauss over panels x panels of I x I with 3 points in s and
// 4 in t, so that no sample lies on the diagonal.
inline double brute_force_seminorm(const Fn& w, int panels) {
  const GaussRule& gs = gauss_rule(3);
  const GaussRule& gt = gauss_rule(4);
  const double h = 2.0 / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    for (int q = 0; q < panels; ++q) {
      for (int a = 0; a < gs.points; ++a) {
        const double s = -1.0 + h * (p + 0.5 * (gs.nodes[a] + 1.0));
        for (int b = 0; b < gt.points; ++b) {
          const double t = -1.0 + h * (q + 0.5 * (gt.nodes[b] + 1.0));
          const double d = (w(s) - w(t)) / (s - t);
          sum += 0.25 * h * h * gs.weights[a] * gt.weights[b] * d * d;
        }
      }
    }
  }
  return sum;
}

inline Fn random_polynomial(std::mt19937_64& rng, int degree) {
  const auto c = random_values(rng, degree + 1);
  return [c](double x) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
  };
}

// Integrals of all derivative fields up to order m of a nodal square grid,
// via tensor derivatives and a Gauss rule exact for the products.
inline double square_norm(const std::vector<double>& grid, int order, int m) {
  const int q = order + 2;
  const Matrix& e = gll_to_gauss(order, q);
  const GaussRule& g = gauss_rule(q);
  std::vector<std::vector<double>> fields{grid};
  if (m >= 1) {
    fields.push_back(tensor_derivative(grid, Direction::Xi, order));
    fields.push_back(tensor_derivative(grid, Direction::Eta, order));
  }
  if (m >= 2) {
    fields.push_back(tensor_derivative(fields[1], Direction::Xi, order));
    fields.push_back(tensor_derivative(fields[1], Direction::Eta, order));
    fields.push_back(tensor_derivative(fields[2], Direction::Eta, order));
  }
  double sum = 0.0;
  std::vector<double> at(q * q);
  for (std::size_t f = 0; f < fields.size(); ++f) {
    tensor_apply(e, e, fields[f], at);
    for (int j = 0; j < q; ++j) {
      for (int i = 0; i < q; ++i) sum += g.weights[i] * g.weights[j] * at[j * q + i] * at[j * q + i];
    }
  }
  return sum;
}

}  // namespace lssem::testing
