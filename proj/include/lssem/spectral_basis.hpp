#pragma once

// Gauss-Lobatto-Legendre and Gauss-Legendre rules, Lagrange interpolation,
// tensor-product kernels and the nodal field layout shared by every module.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace lssem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kMaxOrder = 64;

/// Legendre polynomial P_n and its first derivative at x (three-term recurrence).
struct LegendreValue {
  double p;
  double dp;
};
LegendreValue legendre(int n, double x);

/// GLL rule of order W: W+1 nodes including the endpoints +-1, ascending.
struct GllRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  Matrix diff;  // diff(i, j) = l_j'(x_i)

  [[nodiscard]] int size() const { return order + 1; }
};

/// Gauss-Legendre rule with n interior points, ascending.
struct GaussRule {
  int points = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached, immutable rules. References stay valid for the program lifetime.
const GllRule& gll_rule(int order);
const GaussRule& gauss_rule(int points);

/// Builds a rule from scratch (no cache); throws std::runtime_error if the
/// Newton iteration for the nodes does not converge.
GllRule make_gll_rule(int order);
GaussRule make_gauss_rule(int points);

/// Row k holds the Lagrange basis on `from` evaluated at `to[k]` (barycentric form).
Matrix interpolation_matrix(std::span<const double> from, std::span<const double> to);

/// Interpolation from the order-`from_order` GLL nodes to the order-`to_order` GLL nodes.
const Matrix& gll_to_gll(int from_order, int to_order);
/// Interpolation from the order-W GLL nodes to an n-point Gauss rule.
const Matrix& gll_to_gauss(int order, int gauss_points);

/// out = A_eta * in * A_xi^T for grids stored row-major with rows along eta.
void tensor_apply(const Matrix& a_eta, const Matrix& a_xi, std::span<const double> in,
                  std::span<double> out);
/// out += A_eta^T * in * A_xi (adjoint of tensor_apply).
void tensor_apply_transpose_add(const Matrix& a_eta, const Matrix& a_xi,
                                std::span<const double> in, std::span<double> out);

enum class Direction { Xi, Eta };

/// Exact derivative of the degree-W interpolant at the GLL nodes.
std::vector<double> tensor_derivative(std::span<const double> grid, Direction dir, int order);

/// Local sides: 0 -> eta=-1, 1 -> xi=+1, 2 -> eta=+1, 3 -> xi=-1. Each side is
/// parametrized by the increasing reference coordinate running along it.
inline constexpr int kSides = 4;

/// Nodal values of the restriction to `side`, optionally reversed.
std::vector<double> extract_trace(std::span<const double> grid, int side, bool flip, int order);

/// Grid index of the k-th node along `side` (in its own parameter direction).
int side_node_index(int side, int k, int order);

/// Samples fn(xi, eta) at the order-d GLL grid, row-major over (eta, xi).
template <typename Fn>
std::vector<double> sample_on_gll_grid(int order, Fn&& fn) {
  const GllRule& rule = gll_rule(order);
  const int n = rule.size();
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(j) * n + i] = fn(rule.nodes[i], rule.nodes[j]);
    }
  }
  return out;
}

/// Evaluates the degree-W interpolant of `grid` at an arbitrary reference point.
double evaluate_interpolant(std::span<const double> grid, int order, double xi, double eta);

/// Field variables of the unknown vector.
enum class Field : int { U1 = 0, U2 = 1, P = 2 };
inline constexpr int kFields = 3;

/// DOF layout: element-major, then field (u1, u2, p), then row-major over (eta, xi).
class DofLayout {
 public:
  DofLayout() = default;
  DofLayout(int elements, int order) : elements_(elements), order_(order) {}

  [[nodiscard]] int elements() const { return elements_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] int nodes_per_grid() const { return (order_ + 1) * (order_ + 1); }
  [[nodiscard]] int dofs_per_element() const { return kFields * nodes_per_grid(); }
  [[nodiscard]] int size() const { return elements_ * dofs_per_element(); }
  [[nodiscard]] int offset(int element, Field f) const {
    return element * dofs_per_element() + static_cast<int>(f) * nodes_per_grid();
  }
  [[nodiscard]] int index(int element, Field f, int j, int i) const {
    return offset(element, f) + j * (order_ + 1) + i;
  }

 private:
  int elements_ = 0;
  int order_ = 0;
};

/// Global unknown vector viewed per element and field.
class NodalField {
 public:
  NodalField() = default;
  explicit NodalField(DofLayout layout) : layout_(layout), values_(Vector::Zero(layout.size())) {}
  NodalField(DofLayout layout, Vector values);

  [[nodiscard]] const DofLayout& layout() const { return layout_; }
  [[nodiscard]] const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  [[nodiscard]] std::span<const double> grid(int element, Field f) const {
    return {values_.data() + layout_.offset(element, f),
            static_cast<std::size_t>(layout_.nodes_per_grid())};
  }
  std::span<double> grid(int element, Field f) {
    return {values_.data() + layout_.offset(element, f),
            static_cast<std::size_t>(layout_.nodes_per_grid())};
  }

  [[nodiscard]] bool all_finite() const { return values_.allFinite(); }

 private:
  DofLayout layout_;
  Vector values_;
};

}  // namespace lssem
