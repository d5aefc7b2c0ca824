#pragma once

// Block-diagonal preconditioning and preconditioned conjugate gradients for
// the normal equations A V = h.

#include "lssem/geometry.hpp"
#include "lssem/ls_functional.hpp"

#include <Eigen/Cholesky>

#include <string>
#include <vector>

namespace lssem {

/// Per-element quadratic form nu^e (||u1||_{H2}^2 + ||u2||_{H2}^2) + ||p||_{H1}^2.
class BlockPreconditioner {
 public:
  /// Throws std::invalid_argument for an exponent outside {0, 2, 3} and
  /// std::runtime_error when a block fails to factor.
  BlockPreconditioner(const Mesh& mesh, int order, int exponent, double nu1, double nu2);

  /// out = P^{-1} in
  void apply(const Vector& in, Vector& out) const;
  /// out = P in
  void apply_forward(const Vector& in, Vector& out) const;

  [[nodiscard]] int exponent() const { return exponent_; }
  /// Velocity weight nu^e of element e.
  [[nodiscard]] double velocity_weight(int element) const { return weights_.at(element); }
  [[nodiscard]] const DofLayout& layout() const { return layout_; }

 private:
  DofLayout layout_;
  int exponent_;
  std::vector<double> weights_;
  const Matrix* h2_;
  const Matrix* h1_;
  Eigen::LLT<Matrix> h2_factor_;
  Eigen::LLT<Matrix> h1_factor_;
};

struct PcgOptions {
  double tolerance = 1e-12;
  int max_iterations = 20000;
};

struct SolveReport {
  int iterations = 0;
  /// ||h - A V|| / ||h||
  double relative_residual = 0.0;
  /// sqrt(r^T P^{-1} r) relative to its initial value; the stopping quantity.
  double preconditioned_residual = 0.0;
  double seconds = 0.0;
  double functional = 0.0;
  int order = 0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  int variant = 0;
  bool converged = false;
  std::string message;
};

struct SolveResult {
  Vector solution;
  SolveReport report;
};

/// Preconditioned CG from V = 0. Stops when the preconditioned residual falls
/// below the tolerance; on hitting the iteration cap the last iterate is
/// returned with converged = false. Throws std::runtime_error on breakdown
/// (non-positive curvature or a non-finite or non-decreasing energy).
SolveResult pcg(const NormalSystem& system, const LinearOperator& preconditioner,
                const PcgOptions& options);

/// Builds the functional, preconditioner and runs PCG for one order.
SolveResult solve_problem(const Mesh& mesh, const ProblemSpec& problem, int order, int exponent,
                          const PcgOptions& options, int metric_extra_degree = 0);

}  // namespace lssem
