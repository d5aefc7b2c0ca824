#pragma once

// Sobolev norms of nodal polynomials realized as dense symmetric Gram matrices.
//
// On the interval I = (-1, 1):   L2_I, Hhalf_I (L2 plus the s = 1/2 double integral)
// On the square   S = (-1, 1)^2: L2_S, H1_S, H2_S (sum of ||D^a w||^2, |a| <= m)
//
// Interval Grams act on the order-W GLL nodal values of a trace; square Grams
// on the row-major (eta, xi) nodal grid.

#include "lssem/spectral_basis.hpp"

#include <span>
#include <string_view>

namespace lssem {

enum class GramKind { L2_I, Hhalf_I, L2_S, H1_S, H2_S };

std::string_view to_string(GramKind kind);

struct SobolevGram {
  GramKind kind = GramKind::L2_I;
  int order = 0;
  Matrix matrix;

  /// v^T G v.
  [[nodiscard]] double value(std::span<const double> v) const;
  [[nodiscard]] int size() const { return static_cast<int>(matrix.rows()); }
};

SobolevGram gram_l2_interval(int order);
SobolevGram gram_hhalf_interval(int order);
SobolevGram gram_l2_square(int order);
SobolevGram gram_h1_square(int order);
SobolevGram gram_h2_square(int order);

/// Cached Gram for (kind, order); the reference stays valid for the program lifetime.
const SobolevGram& sobolev_gram(GramKind kind, int order);

/// 1D factors on the order-W GLL nodes: int w v, int w' v', int w'' v''.
struct IntervalFactors {
  Matrix mass;
  Matrix stiffness;
  Matrix stiffness2;
};
const IntervalFactors& interval_factors(int order);

/// out = G in for a square Gram, using its Kronecker-sum factorization.
void apply_square_gram(GramKind kind, int order, std::span<const double> in, std::span<double> out);

/// (a - b)^T G (a - b); throws std::invalid_argument on a length mismatch.
double edge_jump_value(const SobolevGram& gram, std::span<const double> trace_a,
                       std::span<const double> trace_b);

}  // namespace lssem
