#include "lssem/sobolev_forms.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace lssem {

std::string_view to_string(GramKind kind) {
  switch (kind) {
    case GramKind::L2_I: return "L2_I";
    case GramKind::Hhalf_I: return "Hhalf_I";
    case GramKind::L2_S: return "L2_S";
    case GramKind::H1_S: return "H1_S";
    case GramKind::H2_S: return "H2_S";
  }
  return "unknown";
}

double SobolevGram::value(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != size()) {
    throw std::invalid_argument("vector length does not match the Gram size");
  }
  Eigen::Map<const Vector> x(v.data(), static_cast<Eigen::Index>(v.size()));
  return x.dot(matrix * x);
}

namespace {

// Gauss points sufficient for products of two degree-W polynomials.
int exact_points(int order) { return order + 2; }

Matrix weighted_gram(const Matrix& e, const std::vector<double>& w) {
  Matrix we = e;
  for (Eigen::Index r = 0; r < e.rows(); ++r) we.row(r) *= w[r];
  Matrix g = e.transpose() * we;
  return 0.5 * (g + g.transpose());
}

IntervalFactors make_interval_factors(int order) {
  const GllRule& gll = gll_rule(order);
  const GaussRule& gauss = gauss_rule(exact_points(order));
  const Matrix e = interpolation_matrix(gll.nodes, gauss.nodes);
  const Matrix ed = e * gll.diff;
  const Matrix edd = ed * gll.diff;
  return {weighted_gram(e, gauss.weights), weighted_gram(ed, gauss.weights),
          weighted_gram(edd, gauss.weights)};
}

Matrix kron(const Matrix& a_eta, const Matrix& a_xi) {
  const Eigen::Index n = a_xi.rows();
  Matrix out(a_eta.rows() * n, a_eta.cols() * a_xi.cols());
  for (Eigen::Index j = 0; j < a_eta.rows(); ++j) {
    for (Eigen::Index jj = 0; jj < a_eta.cols(); ++jj) {
      out.block(j * n, jj * a_xi.cols(), n, a_xi.cols()) = a_eta(j, jj) * a_xi;
    }
  }
  return out;
}

}  // namespace

const IntervalFactors& interval_factors(int order) {
  static std::map<int, std::unique_ptr<IntervalFactors>> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, std::make_unique<IntervalFactors>(make_interval_factors(order)))
             .first;
  }
  return *it->second;
}

SobolevGram gram_l2_interval(int order) {
  return {GramKind::L2_I, order, interval_factors(order).mass};
}

SobolevGram gram_hhalf_interval(int order) {
  // (w(s) - w(t)) / (s - t) is a polynomial of degree W-1 in each variable, so
  // the double integral of its square is exact under tensor Gauss quadrature.
  // On the diagonal the divided difference is w'(s).
  const GllRule& gll = gll_rule(order);
  const GaussRule& gauss = gauss_rule(exact_points(order));
  const Matrix e = interpolation_matrix(gll.nodes, gauss.nodes);
  const Matrix ed = e * gll.diff;
  const int q = gauss.points;
  const int n = gll.size();
  Matrix rows(q * q, n);
  std::vector<double> w(static_cast<std::size_t>(q) * q);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      const int r = a * q + b;
      if (a == b) {
        rows.row(r) = ed.row(a);
      } else {
        rows.row(r) = (e.row(a) - e.row(b)) / (gauss.nodes[a] - gauss.nodes[b]);
      }
      w[r] = gauss.weights[a] * gauss.weights[b];
    }
  }
  Matrix g = interval_factors(order).mass + weighted_gram(rows, w);
  return {GramKind::Hhalf_I, order, 0.5 * (g + g.transpose())};
}

SobolevGram gram_l2_square(int order) {
  const IntervalFactors& f = interval_factors(order);
  return {GramKind::L2_S, order, kron(f.mass, f.mass)};
}

SobolevGram gram_h1_square(int order) {
  const IntervalFactors& f = interval_factors(order);
  Matrix g = kron(f.mass, f.mass) + kron(f.mass, f.stiffness) + kron(f.stiffness, f.mass);
  return {GramKind::H1_S, order, 0.5 * (g + g.transpose())};
}

SobolevGram gram_h2_square(int order) {
  const IntervalFactors& f = interval_factors(order);
  Matrix g = kron(f.mass, f.mass) + kron(f.mass, f.stiffness) + kron(f.stiffness, f.mass) +
             kron(f.mass, f.stiffness2) + kron(f.stiffness, f.stiffness) +
             kron(f.stiffness2, f.mass);
  return {GramKind::H2_S, order, 0.5 * (g + g.transpose())};
}

const SobolevGram& sobolev_gram(GramKind kind, int order) {
  static std::map<std::pair<GramKind, int>, std::unique_ptr<SobolevGram>> cache;
  static std::mutex mutex;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find({kind, order});
    if (it != cache.end()) return *it->second;
  }
  SobolevGram g;
  switch (kind) {
    case GramKind::L2_I: g = gram_l2_interval(order); break;
    case GramKind::Hhalf_I: g = gram_hhalf_interval(order); break;
    case GramKind::L2_S: g = gram_l2_square(order); break;
    case GramKind::H1_S: g = gram_h1_square(order); break;
    case GramKind::H2_S: g = gram_h2_square(order); break;
  }
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.try_emplace({kind, order}, std::make_unique<SobolevGram>(std::move(g)));
  return *it->second;
}

void apply_square_gram(GramKind kind, int order, std::span<const double> in,
                       std::span<double> out) {
  const IntervalFactors& f = interval_factors(order);
  const int n = order + 1;
  Eigen::Map<const RowMajorMatrix> x(in.data(), n, n);
  Eigen::Map<RowMajorMatrix> y(out.data(), n, n);
  // Rows run along eta, columns along xi: (A_eta kron A_xi) x = A_eta X A_xi^T.
  const RowMajorMatrix mx = x * f.mass;  // mass and stiffness matrices are symmetric
  switch (kind) {
    case GramKind::L2_S:
      y.noalias() = f.mass * mx;
      break;
    case GramKind::H1_S:
      y.noalias() = f.mass * mx + f.mass * (x * f.stiffness) + f.stiffness * mx;
      break;
    case GramKind::H2_S: {
      const RowMajorMatrix kx = x * f.stiffness;
      y.noalias() = f.mass * mx + f.mass * kx + f.stiffness * mx + f.mass * (x * f.stiffness2) +
                    f.stiffness * kx + f.stiffness2 * mx;
      break;
    }
    default:
      throw std::invalid_argument("apply_square_gram requires a square Gram kind");
  }
}

double edge_jump_value(const SobolevGram& gram, std::span<const double> trace_a,
                       std::span<const double> trace_b) {
  if (trace_a.size() != trace_b.size() || static_cast<int>(trace_a.size()) != gram.size()) {
    throw std::invalid_argument("trace lengths do not match the Gram size");
  }
  Vector d(gram.size());
  for (int k = 0; k < gram.size(); ++k) d[k] = trace_a[k] - trace_b[k];
  return d.dot(gram.matrix * d);
}

}  // namespace lssem
