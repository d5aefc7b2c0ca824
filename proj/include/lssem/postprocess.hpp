#pragma once

// Conforming velocity correction, error norms against an exact solution, and
// convergence-rate fits.

#include "lssem/geometry.hpp"
#include "lssem/problem.hpp"

#include <optional>
#include <vector>

namespace lssem {

inline constexpr double kNodeMatchTolerance = 1e-10;

/// Averages both velocity components over all element-boundary nodes that
/// coincide physically. Pressure and interior nodes are left unchanged.
Vector make_conforming(const Mesh& mesh, int order, const Vector& values);

struct ErrorReport {
  double e_u = 0.0;          // relative H1 velocity error
  double e_p = 0.0;          // relative L2 pressure error
  double e_c = 0.0;          // L2 norm of div of the corrected velocity
  double e_c_raw = 0.0;      // same before correction
};

struct ErrorOptions {
  /// Shift computed and exact pressure to vanish at the pinned node first.
  bool align_pressure = true;
  /// Gauss points per direction beyond 2W.
  int extra_points = 6;
};

/// Norms integrated with the exact element maps. `raw` is the uncorrected
/// solution (used for e_c_raw only). Throws std::invalid_argument when the
/// problem has no exact solution.
ErrorReport compute_errors(const Mesh& mesh, int order, const Vector& corrected, const Vector& raw,
                           const ProblemSpec& problem, const ErrorOptions& options = {});

/// Integrals of |u|^2 + |grad u|^2 and |p|^2 of a nodal field (exact metric).
struct FieldNorms {
  double velocity_h1_sq = 0.0;
  double pressure_l2_sq = 0.0;
  double divergence_l2_sq = 0.0;
};
FieldNorms field_norms(const Mesh& mesh, int order, const Vector& values, int extra_points = 6);

struct SlopeFit {
  double slope = 0.0;      // least-squares d log10(error) / dW
  double intercept = 0.0;
  bool converging = false; // false when the slope is not below -kNoConvergenceSlope
};

inline constexpr double kNoConvergenceSlope = 1e-3;

/// Needs at least three points with positive errors; nullopt otherwise.
std::optional<SlopeFit> fit_log_slope(const std::vector<int>& orders,
                                      const std::vector<double>& errors);

}  // namespace lssem
