#include "lssem/solver.hpp"

#include "lssem/sobolev_forms.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lssem {

BlockPreconditioner::BlockPreconditioner(const Mesh& mesh, int order, int exponent, double nu1,
                                         double nu2)
    : layout_(mesh.size(), order), exponent_(exponent) {
  if (exponent != 0 && exponent != 2 && exponent != 3) {
    throw std::invalid_argument("preconditioner exponent must be 0, 2 or 3");
  }
  h2_ = &sobolev_gram(GramKind::H2_S, order).matrix;
  h1_ = &sobolev_gram(GramKind::H1_S, order).matrix;
  h2_factor_.compute(*h2_);
  h1_factor_.compute(*h1_);
  if (h2_factor_.info() != Eigen::Success || h1_factor_.info() != Eigen::Success) {
    throw std::runtime_error("preconditioner block is not positive definite");
  }
  for (const ElementMap& e : mesh.elements) {
    const double nu = e.subdomain() == 1 ? nu1 : nu2;
    weights_.push_back(std::pow(nu, exponent));
  }
}

void BlockPreconditioner::apply(const Vector& in, Vector& out) const {
  out.resize(in.size());
  const int n = layout_.nodes_per_grid();
  parallel_for(layout_.elements(), [&](int e) {
    for (Field f : {Field::U1, Field::U2, Field::P}) {
      const int off = layout_.offset(e, f);
      if (f == Field::P) {
        out.segment(off, n) = h1_factor_.solve(in.segment(off, n));
      } else {
        out.segment(off, n) = h2_factor_.solve(in.segment(off, n)) / weights_[e];
      }
    }
  });
}

void BlockPreconditioner::apply_forward(const Vector& in, Vector& out) const {
  out.resize(in.size());
  const int n = layout_.nodes_per_grid();
  for (int e = 0; e < layout_.elements(); ++e) {
    for (Field f : {Field::U1, Field::U2, Field::P}) {
      const int off = layout_.offset(e, f);
      if (f == Field::P) {
        out.segment(off, n) = *h1_ * in.segment(off, n);
      } else {
        out.segment(off, n) = weights_[e] * (*h2_ * in.segment(off, n));
      }
    }
  }
}

SolveResult pcg(const NormalSystem& system, const LinearOperator& preconditioner,
                const PcgOptions& options) {
  if (!(options.tolerance > 0.0 && options.tolerance < 1.0)) {
    throw std::invalid_argument("PCG tolerance must lie in (0, 1)");
  }
  const auto start = std::chrono::steady_clock::now();
  SolveResult result;
  SolveReport& rep = result.report;
  const int n = system.dimension;
  Vector& x = result.solution;
  x = Vector::Zero(n);
  const double h_norm = system.rhs.norm();
  if (h_norm == 0.0) {
    rep.converged = true;
    rep.functional = system.offset;
    return result;
  }

  Vector r = system.rhs;
  Vector z;
  preconditioner(r, z);
  Vector p = z;
  Vector q(n);
  double rho = r.dot(z);
  const double rho0 = rho;
  // energy(x) = x^T A x - 2 h^T x, which CG decreases monotonically
  double energy = 0.0;
  int k = 0;
  while (true) {
    rep.preconditioned_residual = std::sqrt(std::max(rho, 0.0) / rho0);
    if (rep.preconditioned_residual <= options.tolerance) {
      rep.converged = true;
      break;
    }
    if (k >= options.max_iterations) {
      rep.message = "iteration limit reached";
      break;
    }
    system.apply(p, q);
    const double curvature = p.dot(q);
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
      throw std::runtime_error("PCG breakdown: <p, A p> = " + std::to_string(curvature) +
                               " at iteration " + std::to_string(k));
    }
    const double alpha = rho / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    const double next_energy = energy - alpha * rho;
    if (!(next_energy <= energy) || !std::isfinite(next_energy)) {
      throw std::runtime_error("PCG energy increased at iteration " + std::to_string(k));
    }
    energy = next_energy;
    preconditioner(r, z);
    const double rho_next = r.dot(z);
    p = z + (rho_next / rho) * p;
    rho = rho_next;
    ++k;
  }
  rep.iterations = k;
  Vector ax;
  system.apply(x, ax);
  rep.relative_residual = (system.rhs - ax).norm() / h_norm;
  rep.functional = std::max(0.0, ax.dot(x) - 2.0 * system.rhs.dot(x) + system.offset);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SolveResult solve_problem(const Mesh& mesh, const ProblemSpec& problem, int order, int exponent,
                          const PcgOptions& options, int metric_extra_degree) {
  const auto start = std::chrono::steady_clock::now();
  const LeastSquaresFunctional functional(mesh, problem, order, problem.pin_pressure,
                                          metric_extra_degree);
  const BlockPreconditioner precond(mesh, order, exponent, problem.nu1, problem.nu2);
  SolveResult result = pcg(functional.normal_system(),
                           [&precond](const Vector& in, Vector& out) { precond.apply(in, out); },
                           options);
  SolveReport& rep = result.report;
  rep.order = order;
  rep.nu1 = problem.nu1;
  rep.nu2 = problem.nu2;
  rep.variant = exponent;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace lssem
