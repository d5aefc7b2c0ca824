#pragma once

// Curvilinear quadrilateral elements built by transfinite (Gordon-Hall)
// blending of four side curves, their metric terms, and interface-fitted
// meshes with classified, oriented edges.

#include "lssem/spectral_basis.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lssem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Regular parametrized curve t in [-1, 1] -> R^2.
struct ParamCurve {
  std::function<Vec2(double)> eval;
  std::function<Vec2(double)> deriv;
  std::function<Vec2(double)> deriv2;

  static ParamCurve segment(const Vec2& a, const Vec2& b);
  /// Circular arc about `center`, angle running linearly from theta0 to theta1.
  static ParamCurve arc(const Vec2& center, double radius, double theta0, double theta1);
  /// Same curve traversed in the opposite direction.
  [[nodiscard]] ParamCurve reversed() const;
};

/// Map derivatives at one reference point.
struct MapJet {
  Vec2 x;
  Vec2 d_xi;
  Vec2 d_eta;
  Vec2 d_xixi;
  Vec2 d_xieta;
  Vec2 d_etaeta;
};

/// Pointwise metric of the element map.
struct PointMetric {
  double jacobian;
  double xi_x, xi_y, eta_x, eta_y;
  double lap_xi, lap_eta;  // Laplacians of the reference coordinates
};

PointMetric point_metric(const MapJet& jet);

/// Transfinite element map M : S -> element. Sides follow the local numbering
/// 0: eta=-1 (param xi), 1: xi=+1 (param eta), 2: eta=+1 (param xi),
/// 3: xi=-1 (param eta); each side curve runs with its reference parameter.
class ElementMap {
 public:
  ElementMap() = default;
  ElementMap(std::array<ParamCurve, kSides> sides, int subdomain);

  [[nodiscard]] Vec2 operator()(double xi, double eta) const;
  [[nodiscard]] MapJet jet(double xi, double eta) const;
  [[nodiscard]] PointMetric metric(double xi, double eta) const { return point_metric(jet(xi, eta)); }

  [[nodiscard]] const ParamCurve& side(int s) const { return sides_[s]; }
  [[nodiscard]] int subdomain() const { return subdomain_; }
  /// Reference point of parameter t on side s.
  [[nodiscard]] static std::array<double, 2> side_point(int side, double t);
  /// Outward unit normal on side s at parameter t (from the map, not the curve).
  [[nodiscard]] Vec2 outward_normal(int side, double t) const;
  /// |dM/dt| along side s.
  [[nodiscard]] double side_speed(int side, double t) const;

 private:
  std::array<ParamCurve, kSides> sides_;
  std::array<Vec2, 4> corners_;  // (-1,-1), (1,-1), (1,1), (-1,1)
  int subdomain_ = 1;
};

inline constexpr double kCornerTolerance = 1e-12;
inline constexpr double kMaxAspectRatio = 100.0;
inline constexpr double kMaxJacobianRatio = 1e6;

/// Validates the loop and samples the Jacobian on the (W+3)^2 metric grid.
/// Throws std::invalid_argument on corner mismatch, non-positive Jacobian or
/// degenerate shape (aspect ratio or Jacobian variation too large).
ElementMap build_transfinite_map(std::array<ParamCurve, kSides> sides, int subdomain,
                                 int check_order = 10);

/// Degree-W least-squares fit (GLL inner product) of samples on the (W+3)^2 GLL grid.
std::vector<double> project_metric_samples(std::span<const double> samples, int order);
/// Same for a side trace: samples at W+3 GLL points -> degree-W nodal values.
std::vector<double> project_trace_samples(std::span<const double> samples, int order);

struct MetricData {
  int order = 0;
  int grid_order = 0;  // W + 2, i.e. (W+3)^2 points
  std::vector<double> jacobian, xi_x, xi_y, eta_x, eta_y;
  // degree-W projections on the order-W GLL grid
  std::vector<double> hat_xi_x, hat_xi_y, hat_eta_x, hat_eta_y;
};

/// Metric samples and their degree-W projections; throws std::domain_error on
/// a singular Jacobian.
MetricData metric_at(const ElementMap& map, int order);

enum class EdgeKind { Interior1, Interior2, Interface, BoundaryDirichlet, BoundaryNeumann };

std::string_view to_string(EdgeKind kind);

struct EdgeRecord {
  EdgeKind kind = EdgeKind::BoundaryDirichlet;
  int element_a = -1;
  int side_a = -1;
  std::optional<int> element_b;
  std::optional<int> side_b;
  /// True when side_b runs opposite to side_a.
  bool flipped = false;
};

struct Mesh {
  std::string name;
  std::vector<ElementMap> elements;
  std::vector<EdgeRecord> edges;

  [[nodiscard]] int size() const { return static_cast<int>(elements.size()); }
  [[nodiscard]] int count_in_subdomain(int subdomain) const;
  [[nodiscard]] int count_edges(EdgeKind kind) const;
};

/// Marks unshared sides as Neumann when the predicate holds at the side midpoint.
using BoundaryPredicate = std::function<bool(const Vec2&)>;
/// Points on the physical interface (used to validate the classification).
using InterfacePredicate = std::function<bool(const Vec2&)>;

/// Finds shared sides, orients and classifies every edge. Throws
/// std::invalid_argument on non-matching shared edges, hanging nodes, or an
/// edge on the declared interface whose elements share a subdomain.
Mesh build_mesh_from_elements(std::string name, std::vector<ElementMap> elements,
                              const BoundaryPredicate& neumann = {},
                              const InterfacePredicate& interface = {});

/// Built-in recipes.
///  split_square    : [0,1]^2, interface y=0.5, 2x2 elements
///  quarter_annulus : 1<=r<=2, 0<=theta<=pi/2, interface r=1.5, 4 elements
///  circle_in_square: [-1,1]^2, interface r=0.5, 9 elements
Mesh build_recipe_mesh(const std::string& recipe, const BoundaryPredicate& neumann = {});

}  // namespace lssem
