#pragma once

// The least-squares functional over nonconforming spectral element functions
// and its normal equations A V = h, applied without forming A.
//
// Every term of the functional is a weighted residual ||B V - d||_G^2 with a
// linear map B, data d and a Gram G. Hence
//   A = sum B^T G B,   h = sum B^T G d,   offset = sum d^T G d,
// and R(V) = <A V, V> - 2 <h, V> + offset.

#include "lssem/geometry.hpp"
#include "lssem/parallel.hpp"
#include "lssem/problem.hpp"
#include "lssem/sobolev_forms.hpp"
#include "lssem/spectral_basis.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

namespace lssem {

enum class TermGroup { Pde, Divergence, InterElement, Interface, Boundary, Pin };
inline constexpr int kTermGroups = 6;

std::string_view to_string(TermGroup group);

using TermValues = std::array<double, kTermGroups>;

using LinearOperator = std::function<void(const Vector&, Vector&)>;

/// Normal equations of a quadratic functional.
struct NormalSystem {
  int dimension = 0;
  LinearOperator apply;
  Vector rhs;
  double offset = 0.0;
};

/// Hatted coefficients (degree of `order`) of the scaled operators L*sqrt(J) and D*sqrt(J).
struct ElementCoefficients {
  // -Laplacian: xi_xi, xi_eta, eta_eta, xi, eta (all times sqrt(J))
  std::array<std::vector<double>, 5> laplace;
  // gradient: [x or y][d_xi or d_eta] = (xi_x, eta_x | xi_y, eta_y) * sqrt(J)
  std::array<std::array<std::vector<double>, 2>, 2> gradient;
};

ElementCoefficients element_coefficients(const ElementMap& map, int order);

/// Interpolant of f(M(xi, eta)) * sqrt(J) on the order-d GLL grid (one grid
/// per vector component). Throws std::domain_error on a non-finite value.
std::array<std::vector<double>, 2> project_data(const ElementMap& map,
                                                const std::function<Vec2(const Vec2&)>& f,
                                                int degree);

class LeastSquaresFunctional {
 public:
  /// Metric and normal coefficients are projected to degree order + metric_extra_degree.
  LeastSquaresFunctional(const Mesh& mesh, const ProblemSpec& problem, int order,
                         bool pin_pressure, int metric_extra_degree = 0);
  ~LeastSquaresFunctional();
  LeastSquaresFunctional(const LeastSquaresFunctional&) = delete;
  LeastSquaresFunctional& operator=(const LeastSquaresFunctional&) = delete;

  [[nodiscard]] const DofLayout& layout() const { return layout_; }
  [[nodiscard]] int size() const { return layout_.size(); }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] bool pinned() const { return pinned_; }

  /// out = A v
  void apply(const Vector& v, Vector& out) const;
  [[nodiscard]] const Vector& rhs() const { return rhs_; }
  [[nodiscard]] double offset() const { return offset_; }

  /// Direct evaluation of R^W(v) by summing all residual norms.
  [[nodiscard]] double evaluate(const Vector& v) const;
  [[nodiscard]] TermValues evaluate_groups(const Vector& v) const;

  /// PDE residual (L^a u - F) of one element at the (2W+1)^2 Gauss points,
  /// component-major.
  [[nodiscard]] std::vector<double> pde_residual(int element, const Vector& v) const;
  [[nodiscard]] double pde_term(int element, const Vector& v) const;
  [[nodiscard]] double divergence_term(int element, const Vector& v) const;
  /// Sum of all residual norms attached to one mesh edge.
  [[nodiscard]] double edge_term(int edge, const Vector& v) const;

  [[nodiscard]] NormalSystem normal_system() const;

  /// Index of the penalized pressure node, or -1 when unpinned.
  [[nodiscard]] int pin_index() const { return pinned_ ? layout_.index(0, Field::P, 0, 0) : -1; }

  class Block;

 private:
  Mesh mesh_;
  int order_;
  bool pinned_;
  DofLayout layout_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::vector<int> element_pde_block_;
  std::vector<int> element_div_block_;
  std::vector<std::vector<int>> edge_blocks_;
  Vector rhs_;
  double offset_ = 0.0;
};

/// Normal system view of a functional; the functional must outlive it.
NormalSystem assemble_normal_system(const LeastSquaresFunctional& functional);

/// Nodal interpolant of a piecewise exact solution on every element.
Vector interpolate_exact(const Mesh& mesh, const ExactSolution& exact, int order);

}  // namespace lssem
