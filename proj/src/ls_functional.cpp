#include "lssem/ls_functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

namespace lssem {

std::string_view to_string(TermGroup group) {
  switch (group) {
    case TermGroup::Pde: return "pde";
    case TermGroup::Divergence: return "divergence";
    case TermGroup::InterElement: return "inter_element";
    case TermGroup::Interface: return "interface";
    case TermGroup::Boundary: return "boundary";
    case TermGroup::Pin: return "pin";
  }
  return "unknown";
}

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("LSSEM_WORKERS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

namespace {

enum class TraceKind : int { Value = 0, DXi = 1, DEta = 2 };

// Dense maps from an order-W grid to the order-2W GLL nodes of a side trace.
struct TraceOperators {
  std::array<std::array<Matrix, 3>, kSides> op;
};

const TraceOperators& trace_operators(int order) {
  static std::map<int, std::unique_ptr<TraceOperators>> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return *it->second;

  const int n = order + 1;
  const Matrix& d = gll_rule(order).diff;
  const Matrix& up = gll_to_gll(order, 2 * order);
  auto ops = std::make_unique<TraceOperators>();
  for (int side = 0; side < kSides; ++side) {
    std::array<Matrix, 3> restrict_ops;
    for (auto& m : restrict_ops) m = Matrix::Zero(n, n * n);
    for (int k = 0; k < n; ++k) {
      const int node = side_node_index(side, k, order);
      const int j = node / n;
      const int i = node % n;
      restrict_ops[0](k, node) = 1.0;
      for (int q = 0; q < n; ++q) {
        restrict_ops[1](k, j * n + q) = d(i, q);
        restrict_ops[2](k, q * n + i) = d(j, q);
      }
    }
    for (int kind = 0; kind < 3; ++kind) ops->op[side][kind] = up * restrict_ops[kind];
  }
  it = cache.emplace(order, std::move(ops)).first;
  return *it->second;
}

TraceKind tangential_kind(int side) {
  return (side == 0 || side == 2) ? TraceKind::DXi : TraceKind::DEta;
}

// Degree-K fit of fn(t) along a side, evaluated at the order-2W nodes.
template <typename Fn>
std::vector<double> projected_side_function(int coef_order, int order, Fn&& fn) {
  const GllRule& fine = gll_rule(coef_order + 2);
  std::vector<double> samples(fine.nodes.size());
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k] = fn(fine.nodes[k]);
  const std::vector<double> coarse = project_trace_samples(samples, coef_order);
  const Matrix& up = gll_to_gll(coef_order, 2 * order);
  Eigen::Map<const Vector> cv(coarse.data(), static_cast<Eigen::Index>(coarse.size()));
  const Vector r = up * cv;
  return {r.data(), r.data() + r.size()};
}

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Residual blocks
// ---------------------------------------------------------------------------

class LeastSquaresFunctional::Block {
 public:
  Block(TermGroup group, std::vector<int> elements) : group_(group), elements_(std::move(elements)) {}
  virtual ~Block() = default;

  [[nodiscard]] TermGroup group() const { return group_; }
  [[nodiscard]] const std::vector<int>& elements() const { return elements_; }
  [[nodiscard]] const Vector& data() const { return data_; }

  /// r = B v
  virtual void forward(const Vector& v, const DofLayout& layout, Vector& r) const = 0;
  /// out = G r
  virtual void gram(const Vector& r, Vector& out) const = 0;
  /// local += B^T y, local holding the touched elements' DOFs slot by slot.
  virtual void adjoint(const Vector& y, const DofLayout& layout, Vector& local) const = 0;

  [[nodiscard]] double value(const Vector& v, const DofLayout& layout) const {
    Vector r;
    forward(v, layout, r);
    r -= data_;
    Vector g;
    gram(r, g);
    return r.dot(g);
  }

 protected:
  static std::span<const double> grid(const Vector& v, const DofLayout& layout, int element,
                                      Field f) {
    return {v.data() + layout.offset(element, f),
            static_cast<std::size_t>(layout.nodes_per_grid())};
  }
  static std::span<double> local_grid(Vector& local, const DofLayout& layout, int slot, Field f) {
    return {local.data() + slot * layout.dofs_per_element() +
                static_cast<int>(f) * layout.nodes_per_grid(),
            static_cast<std::size_t>(layout.nodes_per_grid())};
  }

  TermGroup group_;
  std::vector<int> elements_;
  Vector data_;
};

namespace {

using Block = LeastSquaresFunctional::Block;

// ||L^a(u, p) - F||_{0,S}^2, evaluated exactly at (2W+1)^2 Gauss points.
class PdeBlock final : public Block {
 public:
  PdeBlock(int element, const ElementMap& map, const ElementCoefficients& coef, int coef_order,
           double nu, const std::function<Vec2(const Vec2&)>& force, int order)
      : Block(TermGroup::Pde, {element}), order_(order), nu_(nu) {
    q_ = 2 * order + 1;
    const GllRule& rule = gll_rule(order);
    e0_ = gll_to_gauss(order, q_);
    e1_ = e0_ * rule.diff;
    e2_ = e1_ * rule.diff;
    const int qq = q_ * q_;
    const Matrix& ec = gll_to_gauss(coef_order, q_);
    auto at_gauss = [&](const std::vector<double>& g) {
      std::vector<double> out(qq);
      tensor_apply(ec, ec, g, out);
      return out;
    };
    for (int k = 0; k < 5; ++k) laplace_[k] = at_gauss(coef.laplace[k]);
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 2; ++d) gradient_[c][d] = at_gauss(coef.gradient[c][d]);
    }
    const GaussRule& gauss = gauss_rule(q_);
    weights_.resize(qq);
    for (int j = 0; j < q_; ++j) {
      for (int i = 0; i < q_; ++i) weights_[j * q_ + i] = gauss.weights[j] * gauss.weights[i];
    }
    data_ = Vector::Zero(2 * qq);
    if (force) {
      const auto projected = project_data(map, force, 2 * order);
      const Matrix& up = gll_to_gauss(2 * order, q_);
      for (int c = 0; c < 2; ++c) {
        tensor_apply(up, up, projected[c], std::span<double>(data_.data() + c * qq, qq));
      }
    }
  }

  void forward(const Vector& v, const DofLayout& layout, Vector& r) const override {
    const int qq = q_ * q_;
    r.setZero(2 * qq);
    std::vector<double> tmp(qq);
    const int e = elements_[0];
    const auto p = grid(v, layout, e, Field::P);
    std::vector<double> p_xi(qq);
    std::vector<double> p_eta(qq);
    tensor_apply(e0_, e1_, p, p_xi);
    tensor_apply(e1_, e0_, p, p_eta);
    for (int c = 0; c < 2; ++c) {
      const auto u = grid(v, layout, e, c == 0 ? Field::U1 : Field::U2);
      double* rc = r.data() + c * qq;
      const std::array<std::pair<const Matrix*, const Matrix*>, 5> ops{{
          {&e0_, &e2_}, {&e1_, &e1_}, {&e2_, &e0_}, {&e0_, &e1_}, {&e1_, &e0_}}};
      for (int k = 0; k < 5; ++k) {
        tensor_apply(*ops[k].first, *ops[k].second, u, tmp);
        for (int q = 0; q < qq; ++q) rc[q] -= nu_ * laplace_[k][q] * tmp[q];
      }
      for (int q = 0; q < qq; ++q) {
        rc[q] += gradient_[c][0][q] * p_xi[q] + gradient_[c][1][q] * p_eta[q];
      }
    }
  }

  void gram(const Vector& r, Vector& out) const override {
    const int qq = q_ * q_;
    out.resize(r.size());
    for (int c = 0; c < 2; ++c) {
      for (int q = 0; q < qq; ++q) out[c * qq + q] = weights_[q] * r[c * qq + q];
    }
  }

  void adjoint(const Vector& y, const DofLayout& layout, Vector& local) const override {
    const int qq = q_ * q_;
    std::vector<double> tmp(qq);
    std::vector<double> py_xi(qq, 0.0);
    std::vector<double> py_eta(qq, 0.0);
    const std::array<std::pair<const Matrix*, const Matrix*>, 5> ops{{
        {&e0_, &e2_}, {&e1_, &e1_}, {&e2_, &e0_}, {&e0_, &e1_}, {&e1_, &e0_}}};
    for (int c = 0; c < 2; ++c) {
      const double* yc = y.data() + c * qq;
      auto u = local_grid(local, layout, 0, c == 0 ? Field::U1 : Field::U2);
      for (int k = 0; k < 5; ++k) {
        for (int q = 0; q < qq; ++q) tmp[q] = -nu_ * laplace_[k][q] * yc[q];
        tensor_apply_transpose_add(*ops[k].first, *ops[k].second, tmp, u);
      }
      for (int q = 0; q < qq; ++q) {
        py_xi[q] += gradient_[c][0][q] * yc[q];
        py_eta[q] += gradient_[c][1][q] * yc[q];
      }
    }
    auto p = local_grid(local, layout, 0, Field::P);
    tensor_apply_transpose_add(e0_, e1_, py_xi, p);
    tensor_apply_transpose_add(e1_, e0_, py_eta, p);
  }

 private:
  int order_;
  double nu_;
  int q_ = 0;
  Matrix e0_, e1_, e2_;
  std::array<std::vector<double>, 5> laplace_;
  std::array<std::array<std::vector<double>, 2>, 2> gradient_;
  std::vector<double> weights_;
};

// ||D^a u||_{1,S}^2 with the degree-2W divergence held on the order-2W GLL grid.
class DivergenceBlock final : public Block {
 public:
  DivergenceBlock(int element, const ElementCoefficients& coef, int coef_order, int order)
      : Block(TermGroup::Divergence, {element}), order_(order) {
    m_ = 2 * order + 1;
    g0_ = gll_to_gll(order, 2 * order);
    g1_ = g0_ * gll_rule(order).diff;
    const Matrix& gc = gll_to_gll(coef_order, 2 * order);
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 2; ++d) {
        coef_[c][d].resize(m_ * m_);
        tensor_apply(gc, gc, coef.gradient[c][d], coef_[c][d]);
      }
    }
    data_ = Vector::Zero(m_ * m_);
  }

  void forward(const Vector& v, const DofLayout& layout, Vector& r) const override {
    const int mm = m_ * m_;
    r.setZero(mm);
    std::vector<double> dx(mm);
    std::vector<double> de(mm);
    for (int c = 0; c < 2; ++c) {
      const auto u = grid(v, layout, elements_[0], c == 0 ? Field::U1 : Field::U2);
      tensor_apply(g0_, g1_, u, dx);
      tensor_apply(g1_, g0_, u, de);
      for (int q = 0; q < mm; ++q) r[q] -= coef_[c][0][q] * dx[q] + coef_[c][1][q] * de[q];
    }
  }

  void gram(const Vector& r, Vector& out) const override {
    out.resize(r.size());
    apply_square_gram(GramKind::H1_S, 2 * order_, {r.data(), static_cast<std::size_t>(r.size())},
                      {out.data(), static_cast<std::size_t>(out.size())});
  }

  void adjoint(const Vector& y, const DofLayout& layout, Vector& local) const override {
    const int mm = m_ * m_;
    std::vector<double> t(mm);
    for (int c = 0; c < 2; ++c) {
      auto u = local_grid(local, layout, 0, c == 0 ? Field::U1 : Field::U2);
      for (int q = 0; q < mm; ++q) t[q] = -coef_[c][0][q] * y[q];
      tensor_apply_transpose_add(g0_, g1_, t, u);
      for (int q = 0; q < mm; ++q) t[q] = -coef_[c][1][q] * y[q];
      tensor_apply_transpose_add(g1_, g0_, t, u);
    }
  }

 private:
  int order_;
  int m_ = 0;
  Matrix g0_, g1_;
  std::array<std::array<std::vector<double>, 2>, 2> coef_;
};

// One coefficient-weighted trace of one field on one element side.
struct TraceTerm {
  int slot = 0;  // index into the block's element list
  Field field = Field::U1;
  int side = 0;
  TraceKind kind = TraceKind::Value;
  bool flip = false;
  std::vector<double> coeff;  // at the order-2W nodes, in the side's own direction
};

// ||sum of traces - data||_G^2 on the order-2W nodes of one edge.
class EdgeBlock final : public Block {
 public:
  EdgeBlock(TermGroup group, std::vector<int> elements, GramKind kind, int order,
            std::vector<TraceTerm> terms, Vector data)
      : Block(group, std::move(elements)),
        order_(order),
        gram_(&sobolev_gram(kind, 2 * order)),
        ops_(&trace_operators(order)),
        terms_(std::move(terms)) {
    data_ = data.size() ? std::move(data) : Vector::Zero(2 * order + 1);
  }

  void forward(const Vector& v, const DofLayout& layout, Vector& r) const override {
    const int m = 2 * order_ + 1;
    r.setZero(m);
    for (const TraceTerm& t : terms_) {
      const auto g = grid(v, layout, elements_[t.slot], t.field);
      Eigen::Map<const Vector> gv(g.data(), static_cast<Eigen::Index>(g.size()));
      const Vector tr = ops_->op[t.side][static_cast<int>(t.kind)] * gv;
      for (int k = 0; k < m; ++k) {
        const int src = t.flip ? m - 1 - k : k;
        r[k] += t.coeff[src] * tr[src];
      }
    }
  }

  void gram(const Vector& r, Vector& out) const override { out = gram_->matrix * r; }

  void adjoint(const Vector& y, const DofLayout& layout, Vector& local) const override {
    const int m = 2 * order_ + 1;
    Vector z(m);
    for (const TraceTerm& t : terms_) {
      for (int k = 0; k < m; ++k) {
        const int src = t.flip ? m - 1 - k : k;
        z[src] = t.coeff[src] * y[k];
      }
      auto g = local_grid(local, layout, t.slot, t.field);
      Eigen::Map<Vector> gv(g.data(), static_cast<Eigen::Index>(g.size()));
      gv.noalias() += ops_->op[t.side][static_cast<int>(t.kind)].transpose() * z;
    }
  }

 private:
  int order_;
  const SobolevGram* gram_;
  const TraceOperators* ops_;
  std::vector<TraceTerm> terms_;
};

class PinBlock final : public Block {
 public:
  explicit PinBlock() : Block(TermGroup::Pin, {0}) { data_ = Vector::Zero(1); }

  void forward(const Vector& v, const DofLayout& layout, Vector& r) const override {
    r.resize(1);
    r[0] = v[layout.index(0, Field::P, 0, 0)];
  }
  void gram(const Vector& r, Vector& out) const override { out = r; }
  void adjoint(const Vector& y, const DofLayout& layout, Vector& local) const override {
    local_grid(local, layout, 0, Field::P)[0] += y[0];
  }
};

// Geometric data of one element side at the order-2W nodes.
struct SideData {
  std::vector<Vec2> points;            // physical nodes
  std::vector<Vec2> normals;           // exact outward unit normals
  std::vector<double> inv_speed;       // hatted 1/|dM/dt|
  std::array<std::vector<double>, 2> hat_xi;   // hatted xi_x, xi_y along the side
  std::array<std::vector<double>, 2> hat_eta;  // hatted eta_x, eta_y along the side
  std::array<std::vector<double>, 2> normal_coef;  // hatted (xi . n), (eta . n)
  std::array<std::vector<double>, 2> hat_normal;   // hatted n_x, n_y
};

SideData side_data(const ElementMap& map, int side, int k_order, int order) {
  SideData s;
  const GllRule& edge = gll_rule(2 * order);
  for (double t : edge.nodes) {
    const auto [xi, eta] = ElementMap::side_point(side, t);
    s.points.push_back(map(xi, eta));
    s.normals.push_back(map.outward_normal(side, t));
  }
  s.inv_speed = projected_side_function(k_order, order,
                                       [&](double t) { return 1.0 / map.side_speed(side, t); });
  auto metric_part = [&](int which) {
    return projected_side_function(k_order, order, [&, which](double t) {
      const auto [xi, eta] = ElementMap::side_point(side, t);
      const PointMetric pm = map.metric(xi, eta);
      return std::array<double, 4>{pm.xi_x, pm.xi_y, pm.eta_x, pm.eta_y}[which];
    });
  };
  s.hat_xi[0] = metric_part(0);
  s.hat_xi[1] = metric_part(1);
  s.hat_eta[0] = metric_part(2);
  s.hat_eta[1] = metric_part(3);
  auto normal_part = [&](int which) {
    return projected_side_function(k_order, order, [&, which](double t) {
      const auto [xi, eta] = ElementMap::side_point(side, t);
      const PointMetric pm = map.metric(xi, eta);
      const Vec2 n = map.outward_normal(side, t);
      return which == 0 ? pm.xi_x * n.x() + pm.xi_y * n.y() : pm.eta_x * n.x() + pm.eta_y * n.y();
    });
  };
  s.normal_coef[0] = normal_part(0);
  s.normal_coef[1] = normal_part(1);
  for (int c = 0; c < 2; ++c) {
    s.hat_normal[c] =
        projected_side_function(k_order, order,
                                [&, c](double t) { return map.outward_normal(side, t)[c]; });
  }
  return s;
}

// Tangential derivative (d/dt trace) * (1/|dM/dt|)^a in the side's own direction.
TraceTerm tangential_term(int slot, Field f, int side, bool flip, std::vector<double> inv_speed) {
  return {slot, f, side, tangential_kind(side), flip, std::move(inv_speed)};
}

// nu du_k/dn - p n_k with the side's own outward normal.
std::vector<TraceTerm> traction_terms(int slot, int component, int side, bool flip, double nu,
                                      const SideData& s) {
  const Field f = component == 0 ? Field::U1 : Field::U2;
  return {{slot, f, side, TraceKind::DXi, flip, scaled(s.normal_coef[0], nu)},
          {slot, f, side, TraceKind::DEta, flip, scaled(s.normal_coef[1], nu)},
          {slot, Field::P, side, TraceKind::Value, flip, scaled(s.hat_normal[component], -1.0)}};
}

// Physical-derivative trace (u_c)_x^a or (u_c)_y^a.
std::vector<TraceTerm> derivative_terms(int slot, Field f, int side, bool flip, int axis,
                                        const SideData& s, double sign) {
  return {{slot, f, side, TraceKind::DXi, flip, scaled(s.hat_xi[axis], sign)},
          {slot, f, side, TraceKind::DEta, flip, scaled(s.hat_eta[axis], sign)}};
}

std::vector<double> ones(int m) { return std::vector<double>(m, 1.0); }

}  // namespace

// ---------------------------------------------------------------------------

ElementCoefficients element_coefficients(const ElementMap& map, int order) {
  const GllRule& fine = gll_rule(order + 2);
  const int n = fine.size();
  std::array<std::vector<double>, 9> samples;
  for (auto& s : samples) s.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const PointMetric m = map.metric(fine.nodes[i], fine.nodes[j]);
      const double sj = std::sqrt(m.jacobian);
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      samples[0][k] = (m.xi_x * m.xi_x + m.xi_y * m.xi_y) * sj;
      samples[1][k] = 2.0 * (m.xi_x * m.eta_x + m.xi_y * m.eta_y) * sj;
      samples[2][k] = (m.eta_x * m.eta_x + m.eta_y * m.eta_y) * sj;
      samples[3][k] = m.lap_xi * sj;
      samples[4][k] = m.lap_eta * sj;
      samples[5][k] = m.xi_x * sj;
      samples[6][k] = m.eta_x * sj;
      samples[7][k] = m.xi_y * sj;
      samples[8][k] = m.eta_y * sj;
    }
  }
  ElementCoefficients c;
  for (int k = 0; k < 5; ++k) c.laplace[k] = project_metric_samples(samples[k], order);
  c.gradient[0][0] = project_metric_samples(samples[5], order);
  c.gradient[0][1] = project_metric_samples(samples[6], order);
  c.gradient[1][0] = project_metric_samples(samples[7], order);
  c.gradient[1][1] = project_metric_samples(samples[8], order);
  return c;
}

std::array<std::vector<double>, 2> project_data(const ElementMap& map,
                                                const std::function<Vec2(const Vec2&)>& f,
                                                int degree) {
  std::array<std::vector<double>, 2> out;
  const GllRule& rule = gll_rule(degree);
  const int n = rule.size();
  out[0].resize(static_cast<std::size_t>(n) * n);
  out[1].resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const MapJet jet = map.jet(rule.nodes[i], rule.nodes[j]);
      const double jac = jet.d_xi.x() * jet.d_eta.y() - jet.d_eta.x() * jet.d_xi.y();
      const Vec2 v = f(jet.x) * std::sqrt(jac);
      if (!v.allFinite()) throw std::domain_error("non-finite data value");
      out[0][static_cast<std::size_t>(j) * n + i] = v.x();
      out[1][static_cast<std::size_t>(j) * n + i] = v.y();
    }
  }
  return out;
}

LeastSquaresFunctional::LeastSquaresFunctional(const Mesh& mesh, const ProblemSpec& problem,
                                               int order, bool pin_pressure,
                                               int metric_extra_degree)
    : mesh_(mesh), order_(order), pinned_(pin_pressure), layout_(mesh.size(), order) {
  if (order < 1 || order > kMaxOrder) {
    throw std::invalid_argument("polynomial order out of range: " + std::to_string(order));
  }
  problem.validate();
  if (metric_extra_degree < 0 || order + metric_extra_degree > kMaxOrder) {
    throw std::invalid_argument("metric degree out of range");
  }
  const int coef_order = order + metric_extra_degree;
  const int ne = mesh_.size();
  const int m = 2 * order + 1;
  element_pde_block_.resize(ne);
  element_div_block_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const ElementMap& map = mesh_.elements[e];
    const ElementCoefficients coef = element_coefficients(map, coef_order);
    const int sub = map.subdomain();
    std::function<Vec2(const Vec2&)> force = [&problem, sub](const Vec2& x) {
      return problem.force(x, sub);
    };
    element_pde_block_[e] = static_cast<int>(blocks_.size());
    blocks_.push_back(std::make_unique<PdeBlock>(e, map, coef, coef_order, problem.viscosity(sub),
                                                 force, order));
    element_div_block_[e] = static_cast<int>(blocks_.size());
    blocks_.push_back(std::make_unique<DivergenceBlock>(e, coef, coef_order, order));
  }

  const Matrix& d2w = gll_rule(2 * order).diff;
  edge_blocks_.resize(mesh_.edges.size());
  for (std::size_t ei = 0; ei < mesh_.edges.size(); ++ei) {
    const EdgeRecord& edge = mesh_.edges[ei];
    const int ea = edge.element_a;
    const int sa = edge.side_a;
    const ElementMap& ma = mesh_.elements[ea];
    const SideData da = side_data(ma, sa, coef_order, order);
    auto add = [&](TermGroup g, std::vector<int> els, GramKind kind, std::vector<TraceTerm> terms,
                   Vector data = {}) {
      edge_blocks_[ei].push_back(static_cast<int>(blocks_.size()));
      blocks_.push_back(std::make_unique<EdgeBlock>(g, std::move(els), kind, order,
                                                    std::move(terms), std::move(data)));
    };

    switch (edge.kind) {
      case EdgeKind::Interior1:
      case EdgeKind::Interior2: {
        const int eb = *edge.element_b;
        const int sb = *edge.side_b;
        const bool flip = edge.flipped;
        const SideData db = side_data(mesh_.elements[eb], sb, coef_order, order);
        for (Field f : {Field::U1, Field::U2}) {
          add(TermGroup::InterElement, {ea, eb}, GramKind::L2_I,
              {{0, f, sa, TraceKind::Value, false, ones(m)},
               {1, f, sb, TraceKind::Value, flip, scaled(ones(m), -1.0)}});
          for (int axis = 0; axis < 2; ++axis) {
            auto terms = derivative_terms(0, f, sa, false, axis, da, 1.0);
            auto tb = derivative_terms(1, f, sb, flip, axis, db, -1.0);
            terms.insert(terms.end(), tb.begin(), tb.end());
            add(TermGroup::InterElement, {ea, eb}, GramKind::Hhalf_I, std::move(terms));
          }
        }
        add(TermGroup::InterElement, {ea, eb}, GramKind::Hhalf_I,
            {{0, Field::P, sa, TraceKind::Value, false, ones(m)},
             {1, Field::P, sb, TraceKind::Value, flip, scaled(ones(m), -1.0)}});
        break;
      }
      case EdgeKind::Interface: {
        const int eb = *edge.element_b;
        const int sb = *edge.side_b;
        const bool flip = edge.flipped;
        const ElementMap& mb = mesh_.elements[eb];
        const SideData db = side_data(mb, sb, coef_order, order);
        const double nu_a = problem.viscosity(ma.subdomain());
        const double nu_b = problem.viscosity(mb.subdomain());
        for (Field f : {Field::U1, Field::U2}) {
          add(TermGroup::Interface, {ea, eb}, GramKind::L2_I,
              {{0, f, sa, TraceKind::Value, false, ones(m)},
               {1, f, sb, TraceKind::Value, flip, scaled(ones(m), -1.0)}});
          // A reversed side has the opposite tangent, so its derivative changes sign.
          add(TermGroup::Interface, {ea, eb}, GramKind::Hhalf_I,
              {tangential_term(0, f, sa, false, da.inv_speed),
               tangential_term(1, f, sb, flip, scaled(db.inv_speed, flip ? 1.0 : -1.0))});
        }
        for (int c = 0; c < 2; ++c) {
          // [[sigma n]] = sigma_a n_a + sigma_b n_b, since n_b = -n_a.
          auto terms = traction_terms(0, c, sa, false, nu_a, da);
          auto tb = traction_terms(1, c, sb, flip, nu_b, db);
          terms.insert(terms.end(), tb.begin(), tb.end());
          Vector data = Vector::Zero(m);
          if (problem.interface_jump) {
            for (int k = 0; k < m; ++k) data[k] = problem.interface_jump(da.points[k])[c];
          }
          add(TermGroup::Interface, {ea, eb}, GramKind::Hhalf_I, std::move(terms), std::move(data));
        }
        break;
      }
      case EdgeKind::BoundaryDirichlet: {
        const int sub = ma.subdomain();
        std::array<Vector, 2> values{Vector(m), Vector(m)};
        for (int k = 0; k < m; ++k) {
          const Vec2 u = problem.dirichlet(da.points[k], sub);
          values[0][k] = u.x();
          values[1][k] = u.y();
        }
        for (int c = 0; c < 2; ++c) {
          const Field f = c == 0 ? Field::U1 : Field::U2;
          Vector tangential = d2w * values[c];
          for (int k = 0; k < m; ++k) {
            const double t = gll_rule(2 * order).nodes[k];
            tangential[k] /= ma.side_speed(sa, t);
          }
          add(TermGroup::Boundary, {ea}, GramKind::L2_I, {{0, f, sa, TraceKind::Value, false, ones(m)}},
              values[c]);
          add(TermGroup::Boundary, {ea}, GramKind::Hhalf_I,
              {tangential_term(0, f, sa, false, da.inv_speed)}, tangential);
        }
        break;
      }
      case EdgeKind::BoundaryNeumann: {
        const int sub = ma.subdomain();
        const double nu = problem.viscosity(sub);
        for (int c = 0; c < 2; ++c) {
          Vector data(m);
          for (int k = 0; k < m; ++k) data[k] = problem.neumann(da.points[k], da.normals[k], sub)[c];
          add(TermGroup::Boundary, {ea}, GramKind::Hhalf_I, traction_terms(0, c, sa, false, nu, da),
              std::move(data));
        }
        break;
      }
    }
  }

  if (pinned_) blocks_.push_back(std::make_unique<PinBlock>());

  rhs_ = Vector::Zero(layout_.size());
  offset_ = 0.0;
  const int dpe = layout_.dofs_per_element();
  for (const auto& b : blocks_) {
    Vector gd;
    b->gram(b->data(), gd);
    offset_ += b->data().dot(gd);
    Vector local = Vector::Zero(static_cast<Eigen::Index>(b->elements().size()) * dpe);
    b->adjoint(gd, layout_, local);
    for (std::size_t s = 0; s < b->elements().size(); ++s) {
      rhs_.segment(b->elements()[s] * dpe, dpe) += local.segment(static_cast<Eigen::Index>(s) * dpe, dpe);
    }
  }
}

LeastSquaresFunctional::~LeastSquaresFunctional() = default;

void LeastSquaresFunctional::apply(const Vector& v, Vector& out) const {
  const int dpe = layout_.dofs_per_element();
  const int nb = static_cast<int>(blocks_.size());
  std::vector<Vector> locals(nb);
  parallel_for(nb, [&](int i) {
    const Block& b = *blocks_[i];
    Vector r;
    b.forward(v, layout_, r);
    Vector g;
    b.gram(r, g);
    locals[i] = Vector::Zero(static_cast<Eigen::Index>(b.elements().size()) * dpe);
    b.adjoint(g, layout_, locals[i]);
  });
  // Fixed-order reduction, independent of the worker count.
  out.setZero(layout_.size());
  for (int i = 0; i < nb; ++i) {
    const auto& els = blocks_[i]->elements();
    for (std::size_t s = 0; s < els.size(); ++s) {
      out.segment(els[s] * dpe, dpe) += locals[i].segment(static_cast<Eigen::Index>(s) * dpe, dpe);
    }
  }
}

TermValues LeastSquaresFunctional::evaluate_groups(const Vector& v) const {
  TermValues t{};
  for (const auto& b : blocks_) t[static_cast<int>(b->group())] += b->value(v, layout_);
  return t;
}

double LeastSquaresFunctional::evaluate(const Vector& v) const {
  double sum = 0.0;
  for (const auto& b : blocks_) sum += b->value(v, layout_);
  return sum;
}

std::vector<double> LeastSquaresFunctional::pde_residual(int element, const Vector& v) const {
  const Block& b = *blocks_.at(element_pde_block_.at(element));
  Vector r;
  b.forward(v, layout_, r);
  r -= b.data();
  return {r.data(), r.data() + r.size()};
}

double LeastSquaresFunctional::pde_term(int element, const Vector& v) const {
  return blocks_.at(element_pde_block_.at(element))->value(v, layout_);
}

double LeastSquaresFunctional::divergence_term(int element, const Vector& v) const {
  return blocks_.at(element_div_block_.at(element))->value(v, layout_);
}

double LeastSquaresFunctional::edge_term(int edge, const Vector& v) const {
  double sum = 0.0;
  for (int i : edge_blocks_.at(edge)) sum += blocks_[i]->value(v, layout_);
  return sum;
}

NormalSystem LeastSquaresFunctional::normal_system() const {
  return {size(), [this](const Vector& v, Vector& out) { apply(v, out); }, rhs_, offset_};
}

NormalSystem assemble_normal_system(const LeastSquaresFunctional& functional) {
  return functional.normal_system();
}

Vector interpolate_exact(const Mesh& mesh, const ExactSolution& exact, int order) {
  const DofLayout layout(mesh.size(), order);
  NodalField field(layout);
  const GllRule& rule = gll_rule(order);
  const int n = rule.size();
  for (int e = 0; e < mesh.size(); ++e) {
    const ElementMap& map = mesh.elements[e];
    const int sub = map.subdomain();
    auto u1 = field.grid(e, Field::U1);
    auto u2 = field.grid(e, Field::U2);
    auto p = field.grid(e, Field::P);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec2 x = map(rule.nodes[i], rule.nodes[j]);
        const Vec2 u = exact.velocity(x, sub);
        const std::size_t k = static_cast<std::size_t>(j) * n + i;
        u1[k] = u.x();
        u2[k] = u.y();
        p[k] = exact.pressure(x, sub);
      }
    }
  }
  return field.values();
}

}  // namespace lssem
