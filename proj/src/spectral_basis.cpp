#include "lssem/spectral_basis.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lssem {

LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  double dp_prev = 0.0;
  double dp = 1.0;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    const double dp_next = dp_prev + (2.0 * k + 1.0) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  return {p, dp};
}

namespace {

Matrix differentiation_matrix(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> lambda(n, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (k != j) lambda[j] *= (x[j] - x[k]);
    }
    lambda[j] = 1.0 / lambda[j];
  }
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (lambda[j] / lambda[i]) / (x[i] - x[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

constexpr int kNewtonMaxIterations = 100;

}  // namespace

GllRule make_gll_rule(int order) {
  if (order < 1 || order > 2 * kMaxOrder + 4) {
    throw std::invalid_argument("GLL order out of supported range: " + std::to_string(order));
  }
  const int n = order + 1;
  GllRule rule;
  rule.order = order;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton on (1 - x^2) P_W'(x), written through the P_{W-1}, P_W pair.
  for (int j = 0; j < n; ++j) {
    double x = -std::cos(std::numbers::pi * j / order);
    bool converged = false;
    for (int it = 0; it < kNewtonMaxIterations; ++it) {
      const double pw = legendre(order, x).p;
      const double pwm1 = legendre(order - 1, x).p;
      const double step = (x * pw - pwm1) / ((order + 1.0) * pw);
      x -= step;
      if (std::abs(step) < 1e-16) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      const double pw = legendre(order, x).p;
      const double pwm1 = legendre(order - 1, x).p;
      if (std::abs(x * pw - pwm1) > 1e-13) {
        throw std::runtime_error("GLL node iteration did not converge for W=" +
                                 std::to_string(order));
      }
    }
    rule.nodes[j] = x;
  }
  rule.nodes.front() = -1.0;
  rule.nodes.back() = 1.0;
  // Enforce exact symmetry about zero.
  for (int j = 0; j < n / 2; ++j) {
    const double s = 0.5 * (rule.nodes[n - 1 - j] - rule.nodes[j]);
    rule.nodes[j] = -s;
    rule.nodes[n - 1 - j] = s;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (int j = 0; j < n; ++j) {
    const double pw = legendre(order, rule.nodes[j]).p;
    rule.weights[j] = 2.0 / (order * (order + 1.0) * pw * pw);
  }
  rule.diff = differentiation_matrix(rule.nodes);
  return rule;
}

GaussRule make_gauss_rule(int points) {
  if (points < 1 || points > 4 * kMaxOrder + 8) {
    throw std::invalid_argument("Gauss rule size out of range: " + std::to_string(points));
  }
  GaussRule rule;
  rule.points = points;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  for (int i = 0; i < points; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    LegendreValue v{};
    for (int it = 0; it < kNewtonMaxIterations; ++it) {
      v = legendre(points, x);
      const double step = v.p / v.dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    v = legendre(points, x);
    if (std::abs(v.p) > 1e-12) {
      throw std::runtime_error("Gauss node iteration did not converge");
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * v.dp * v.dp);
  }
  for (int j = 0; j < points / 2; ++j) {
    const double s = 0.5 * (rule.nodes[points - 1 - j] - rule.nodes[j]);
    rule.nodes[j] = -s;
    rule.nodes[points - 1 - j] = s;
    const double w = 0.5 * (rule.weights[j] + rule.weights[points - 1 - j]);
    rule.weights[j] = rule.weights[points - 1 - j] = w;
  }
  if (points % 2 == 1) rule.nodes[points / 2] = 0.0;
  return rule;
}

namespace {

template <typename Key, typename Value, typename Make>
const Value& cached(std::map<Key, std::unique_ptr<Value>>& cache, std::mutex& mutex,
                    const Key& key, Make&& make) {
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<Value>(make())).first;
  }
  return *it->second;
}

}  // namespace

const GllRule& gll_rule(int order) {
  static std::map<int, std::unique_ptr<GllRule>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, order, [&] { return make_gll_rule(order); });
}

const GaussRule& gauss_rule(int points) {
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, points, [&] { return make_gauss_rule(points); });
}

Matrix interpolation_matrix(std::span<const double> from, std::span<const double> to) {
  const int n = static_cast<int>(from.size());
  const int m = static_cast<int>(to.size());
  std::vector<double> lambda(n, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (k != j) lambda[j] *= (from[j] - from[k]);
    }
    lambda[j] = 1.0 / lambda[j];
  }
  Matrix out = Matrix::Zero(m, n);
  for (int r = 0; r < m; ++r) {
    const double t = to[r];
    int exact = -1;
    for (int j = 0; j < n; ++j) {
      if (t == from[j]) {
        exact = j;
        break;
      }
    }
    if (exact >= 0) {
      out(r, exact) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      const double c = lambda[j] / (t - from[j]);
      out(r, j) = c;
      denom += c;
    }
    out.row(r) /= denom;
  }
  return out;
}

const Matrix& gll_to_gll(int from_order, int to_order) {
  static std::map<std::pair<int, int>, std::unique_ptr<Matrix>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, std::pair{from_order, to_order}, [&] {
    return interpolation_matrix(gll_rule(from_order).nodes, gll_rule(to_order).nodes);
  });
}

const Matrix& gll_to_gauss(int order, int gauss_points) {
  static std::map<std::pair<int, int>, std::unique_ptr<Matrix>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, std::pair{order, gauss_points}, [&] {
    return interpolation_matrix(gll_rule(order).nodes, gauss_rule(gauss_points).nodes);
  });
}

void tensor_apply(const Matrix& a_eta, const Matrix& a_xi, std::span<const double> in,
                  std::span<double> out) {
  Eigen::Map<const RowMajorMatrix> x(in.data(), a_eta.cols(), a_xi.cols());
  Eigen::Map<RowMajorMatrix> y(out.data(), a_eta.rows(), a_xi.rows());
  y.noalias() = a_eta * (x * a_xi.transpose());
}

void tensor_apply_transpose_add(const Matrix& a_eta, const Matrix& a_xi,
                                std::span<const double> in, std::span<double> out) {
  Eigen::Map<const RowMajorMatrix> y(in.data(), a_eta.rows(), a_xi.rows());
  Eigen::Map<RowMajorMatrix> x(out.data(), a_eta.cols(), a_xi.cols());
  x.noalias() += a_eta.transpose() * (y * a_xi);
}

std::vector<double> tensor_derivative(std::span<const double> grid, Direction dir, int order) {
  const GllRule& rule = gll_rule(order);
  const int n = rule.size();
  static thread_local Matrix identity;
  if (identity.rows() != n) identity = Matrix::Identity(n, n);
  std::vector<double> out(grid.size());
  if (dir == Direction::Xi) {
    tensor_apply(identity, rule.diff, grid, out);
  } else {
    tensor_apply(rule.diff, identity, grid, out);
  }
  return out;
}

int side_node_index(int side, int k, int order) {
  const int n = order + 1;
  switch (side) {
    case 0: return k;                      // eta = -1, along xi
    case 1: return k * n + order;          // xi = +1, along eta
    case 2: return order * n + k;          // eta = +1, along xi
    case 3: return k * n;                  // xi = -1, along eta
    default: throw std::invalid_argument("side index must be in 0..3");
  }
}

std::vector<double> extract_trace(std::span<const double> grid, int side, bool flip, int order) {
  const int n = order + 1;
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const int src = flip ? (n - 1 - k) : k;
    out[k] = grid[side_node_index(side, src, order)];
  }
  return out;
}

double evaluate_interpolant(std::span<const double> grid, int order, double xi, double eta) {
  const GllRule& rule = gll_rule(order);
  const std::array<double, 1> px{xi};
  const std::array<double, 1> py{eta};
  const Matrix lx = interpolation_matrix(rule.nodes, px);
  const Matrix ly = interpolation_matrix(rule.nodes, py);
  const int n = rule.size();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    double row = 0.0;
    for (int i = 0; i < n; ++i) row += lx(0, i) * grid[static_cast<std::size_t>(j) * n + i];
    sum += ly(0, j) * row;
  }
  return sum;
}

NodalField::NodalField(DofLayout layout, Vector values)
    : layout_(layout), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw std::invalid_argument("nodal vector size does not match the DOF layout");
  }
}

}  // namespace lssem
