#pragma once

#include <functional>
#include <vector>

#include "stokes/mapexpr.hpp"

namespace stokes {

using Objective = std::function<double(const Vec&)>;

struct MinimizeOptions {
  double initial_step = 0.2;
  double min_step = 1e-12;
  int max_iters = 400;
};

struct MinimizeResult {
  Vec point;
  double value = 0.0;
  int evals = 0;
};

// Coordinate descent along a tangent/axis frame with step halving, followed by
// a one-dimensional quadratic fit along each direction.  Trial points are
// projected back into the domain: spheres renormalize, balls clamp the radius,
// the curve parameter wraps mod 1.
MinimizeResult compass_minimize(const Objective& f, const Vec& start,
                                Domain dom, const MinimizeOptions& opt = {});

// Runs compass_minimize from every seed and keeps the smallest value; exact
// ties break toward the lexicographically smaller point, so the result does
// not depend on seed order.
MinimizeResult multistart_minimize(const Objective& f,
                                   const std::vector<Vec>& seeds, Domain dom,
                                   const MinimizeOptions& opt = {});

// x <- project(x + alpha (m(x) - x)); cheap contraction pass used to warm up
// fixed-point searches before the local polish
Vec damped_iteration(const SmoothMap& m, Vec x, Domain dom, double alpha,
                     int iters);

// Projection into the closed domain used by the solvers above.
Vec project_to_domain(const Vec& x, Domain dom);

}  // namespace stokes
