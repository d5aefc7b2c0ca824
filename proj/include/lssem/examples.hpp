#pragma once

// Built-in manufactured-solution problems.

#include "lssem/problem.hpp"

#include <string>
#include <vector>

namespace lssem {

/// Ids accepted by builtin_problem.
const std::vector<std::string>& builtin_problem_ids();

/// example1..example5 with viscosities (nu1, nu2). The exact pressure is
/// shifted to vanish at the pinned node of pinned problems. Throws
/// std::invalid_argument on an unknown id or non-positive viscosity.
ProblemSpec builtin_problem(const std::string& id, double nu1, double nu2);

/// Physical position of the pinned pressure node (element 0, first node).
Vec2 pin_point(const Mesh& mesh);

}  // namespace lssem
