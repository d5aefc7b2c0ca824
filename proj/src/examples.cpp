#include "lssem/examples.hpp"

#include <cmath>
#include <stdexcept>

namespace lssem {

namespace {

// Exact fields written for nu = 1; velocities scale with 1/nu per subdomain.
struct Manufactured {
  std::function<Vec2(const Vec2&)> velocity;
  std::function<Mat2(const Vec2&)> gradient;
  std::function<double(const Vec2&, int)> pressure;
  std::function<Vec2(const Vec2&)> force;  // -div(nu grad u) + grad p, independent of nu
};

Manufactured example1() {
  Manufactured m;
  m.velocity = [](const Vec2& x) {
    const double a = x.y() - 0.5;
    return Vec2(a * x.x() * x.x(), -x.x() * a * a);
  };
  m.gradient = [](const Vec2& x) {
    const double a = x.y() - 0.5;
    Mat2 g;
    g << 2.0 * a * x.x(), x.x() * x.x(), -a * a, -2.0 * x.x() * a;
    return g;
  };
  m.pressure = [](const Vec2& x, int) { return std::exp(x.x()) - std::exp(x.y()); };
  m.force = [](const Vec2& x) {
    return Vec2(-2.0 * (x.y() - 0.5) + std::exp(x.x()), 2.0 * x.x() - std::exp(x.y()));
  };
  return m;
}

Manufactured example2() {
  Manufactured m = example1();
  m.pressure = [](const Vec2& x, int sub) {
    return 2.0 * x.x() * x.y() + x.x() * x.x() - (sub == 2 ? 3.0 : 0.0);
  };
  m.force = [](const Vec2& x) { return Vec2(1.0 + 2.0 * x.x(), 4.0 * x.x()); };
  return m;
}

Manufactured example3() {
  Manufactured m;
  m.velocity = [](const Vec2& x) {
    const double s = std::sin(2.25 - x.squaredNorm());
    return Vec2(-x.y() * s, x.x() * s);
  };
  m.gradient = [](const Vec2& x) {
    const double phi = 2.25 - x.squaredNorm();
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    Mat2 g;
    g << 2.0 * x.x() * x.y() * c, -s + 2.0 * x.y() * x.y() * c,
        s - 2.0 * x.x() * x.x() * c, -2.0 * x.x() * x.y() * c;
    return g;
  };
  m.pressure = [](const Vec2& x, int) { return std::exp(x.x() + x.y()) - std::exp(2.0); };
  m.force = [](const Vec2& x) {
    const double r2 = x.squaredNorm();
    const double s = std::sin(2.25 - r2);
    const double c = std::cos(2.25 - r2);
    const double e = std::exp(x.x() + x.y());
    return Vec2(-4.0 * r2 * x.y() * s - 8.0 * x.y() * c + e,
                4.0 * r2 * x.x() * s + 8.0 * x.x() * c + e);
  };
  return m;
}

Manufactured example4() {
  Manufactured m;
  m.velocity = [](const Vec2& x) {
    const double q = x.squaredNorm() - 0.25;
    return Vec2(x.y() * q, -x.x() * q);
  };
  m.gradient = [](const Vec2& x) {
    const double q = x.squaredNorm() - 0.25;
    Mat2 g;
    g << 2.0 * x.x() * x.y(), q + 2.0 * x.y() * x.y(),
        -q - 2.0 * x.x() * x.x(), -2.0 * x.x() * x.y();
    return g;
  };
  m.pressure = [](const Vec2& x, int) { return x.x() * x.x() - x.y() * x.y(); };
  m.force = [](const Vec2& x) {
    return Vec2(-8.0 * x.y() + 2.0 * x.x(), 8.0 * x.x() - 2.0 * x.y());
  };
  return m;
}

}  // namespace

const std::vector<std::string>& builtin_problem_ids() {
  static const std::vector<std::string> ids{"example1", "example2", "example3", "example4",
                                            "example5"};
  return ids;
}

Vec2 pin_point(const Mesh& mesh) { return mesh.elements.at(0)(-1.0, -1.0); }

ProblemSpec builtin_problem(const std::string& id, double nu1, double nu2) {
  Manufactured m;
  ProblemSpec spec;
  spec.name = id;
  if (id == "example1") {
    m = example1();
    spec.geometry = "split_square";
  } else if (id == "example2") {
    m = example2();
    spec.geometry = "split_square";
    spec.interface_jump = [](const Vec2&) { return Vec2(0.0, -3.0); };
  } else if (id == "example3") {
    m = example3();
    spec.geometry = "quarter_annulus";
  } else if (id == "example4" || id == "example5") {
    m = example4();
    spec.geometry = "circle_in_square";
  } else {
    throw std::invalid_argument("unknown example id: " + id);
  }
  spec.nu1 = nu1;
  spec.nu2 = nu2;
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw std::invalid_argument("viscosities must be positive");

  const auto nu = [nu1, nu2](int sub) { return sub == 1 ? nu1 : nu2; };
  auto velocity = [m, nu](const Vec2& x, int sub) -> Vec2 { return m.velocity(x) / nu(sub); };
  auto gradient = [m, nu](const Vec2& x, int sub) -> Mat2 { return m.gradient(x) / nu(sub); };
  std::function<double(const Vec2&, int)> pressure = m.pressure;

  spec.force = [m](const Vec2& x, int) { return m.force(x); };
  spec.dirichlet = velocity;
  if (id == "example5") {
    spec.pin_pressure = false;
    spec.neumann_sides = [](const Vec2& mid) { return std::abs(mid.y() + 1.0) < 1e-12; };
    spec.neumann = [m, pressure](const Vec2& x, const Vec2& n, int sub) -> Vec2 {
      // nu grad u = grad of the nu = 1 field
      return m.gradient(x) * n - pressure(x, sub) * n;
    };
  } else {
    const Mesh mesh = build_recipe_mesh(spec.geometry);
    const Vec2 pin = pin_point(mesh);
    const int sub = mesh.elements[0].subdomain();
    const double level = pressure(pin, sub);
    pressure = [m, level](const Vec2& x, int s) { return m.pressure(x, s) - level; };
  }
  spec.exact = ExactSolution{velocity, gradient, pressure};
  return spec;
}

}  // namespace lssem
