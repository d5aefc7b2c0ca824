#include "lssem/problem.hpp"

#include <stdexcept>

namespace lssem {

void ProblemSpec::validate() const {
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) {
    throw std::invalid_argument("viscosities must be positive");
  }
  if (!force) throw std::invalid_argument("problem has no body force");
  if (!dirichlet) throw std::invalid_argument("problem has no Dirichlet data");
  if (neumann_sides && !neumann) {
    throw std::invalid_argument("traction sides are marked but no traction data is given");
  }
}

Mesh build_mesh(const ProblemSpec& problem) {
  problem.validate();
  return build_recipe_mesh(problem.geometry, problem.neumann_sides);
}

}  // namespace lssem
