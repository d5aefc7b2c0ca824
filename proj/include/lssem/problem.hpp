#pragma once

#include "lssem/geometry.hpp"

#include <functional>
#include <optional>
#include <string>

namespace lssem {

/// Piecewise-smooth exact solution; the int argument is the subdomain (1 or 2).
struct ExactSolution {
  std::function<Vec2(const Vec2&, int)> velocity;
  /// (i, j) = d u_i / d x_j
  std::function<Mat2(const Vec2&, int)> velocity_gradient;
  std::function<double(const Vec2&, int)> pressure;
};

/// Stokes interface problem: -div(nu grad u) + grad p = f, div u = 0 in each
/// subdomain, [[u]] = 0 and [[(nu grad u - p I) n]] = g on the interface, with
/// Dirichlet or traction (nu du/dn - p n) data on the outer boundary.
struct ProblemSpec {
  std::string name;
  std::string geometry;
  double nu1 = 1.0;
  double nu2 = 1.0;
  std::function<Vec2(const Vec2&, int)> force;
  /// Stress jump g, with n pointing from subdomain 1 into subdomain 2.
  std::function<Vec2(const Vec2&)> interface_jump;
  std::function<Vec2(const Vec2&, int)> dirichlet;
  /// Traction data given the outward unit normal.
  std::function<Vec2(const Vec2&, const Vec2&, int)> neumann;
  /// Selects the boundary sides that carry traction data.
  BoundaryPredicate neumann_sides;
  std::optional<ExactSolution> exact;
  /// Penalize the pressure at the first node of element 0 (needed when no
  /// traction boundary fixes the pressure level).
  bool pin_pressure = true;

  [[nodiscard]] double viscosity(int subdomain) const { return subdomain == 1 ? nu1 : nu2; }
  /// Throws std::invalid_argument if viscosities are not positive or data are missing.
  void validate() const;
};

/// Mesh for the problem's geometry recipe with its traction sides marked.
Mesh build_mesh(const ProblemSpec& problem);

}  // namespace lssem
