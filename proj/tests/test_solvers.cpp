#include "stokes/solvers.hpp"

#include <cmath>

#include "doctest.h"
#include "stokes/errors.hpp"

using namespace stokes;

TEST_CASE("compass search finds interior minima on the disk") {
  const Eigen::Vector2d target(0.31, -0.47);
  Objective f = [&](const Vec& x) { return (x - target).squaredNorm(); };
  const MinimizeResult r = compass_minimize(f, Vec::Zero(2), Domain::Disk2);
  CHECK((r.point - target).norm() <= 1e-7);
  CHECK(r.value <= 1e-13);
}

TEST_CASE("compass search respects the sphere constraint") {
  Vec target(3);
  target << 0.48, -0.6, 0.64;
  target.normalize();
  Objective f = [&](const Vec& x) { return (x - target).squaredNorm(); };
  Vec start(3);
  start << 1, 0, 0;
  const MinimizeResult r = compass_minimize(f, start, Domain::Sphere2);
  CHECK(std::abs(r.point.norm() - 1.0) <= 1e-12);
  CHECK((r.point - target).norm() <= 1e-6);
}

TEST_CASE("compass search wraps the curve parameter") {
  Objective f = [](const Vec& t) {
    return 1.0 - std::cos(2.0 * M_PI * (t[0] - 0.3));
  };
  Vec start(1);
  start << 0.95;  // reaching 0.3 requires stepping through the wrap
  const MinimizeResult r = compass_minimize(f, start, Domain::Curve);
  CHECK(std::abs(r.point[0] - 0.3) <= 1e-7);
}

TEST_CASE("multistart picks the global basin deterministically") {
  // double well along x with a tilt that makes the right well global
  Objective f = [](const Vec& x) {
    const double w = x[0] * x[0] - 0.25;
    return w * w + x[1] * x[1] - 0.1 * x[0];
  };
  std::vector<Vec> seeds;
  for (double sx : {-0.9, -0.4, 0.05, 0.6})
    for (double sy : {-0.5, 0.4}) {
      Vec s(2);
      s << sx, sy;
      seeds.push_back(s);
    }
  const MinimizeResult a = multistart_minimize(f, seeds, Domain::Disk2);
  CHECK(a.point[0] > 0.4);  // the global well, not the local one at x < 0
  CHECK(std::abs(a.point[1]) <= 1e-6);
  const MinimizeResult b = multistart_minimize(f, seeds, Domain::Disk2);
  CHECK(a.point == b.point);  // bitwise repeatable
  CHECK(a.value == b.value);

  CHECK_THROWS_AS(multistart_minimize(f, {}, Domain::Disk2), Error);
}

TEST_CASE("damped iteration contracts toward a fixed point") {
  // m(x) = (x + c) / 2 has fixed point c
  const Eigen::Vector2d c(0.2, -0.1);
  const auto m = make_map(2, 2, Domain::Disk2, [&](const double* x, double* y) {
    y[0] = 0.5 * (x[0] + c[0]);
    y[1] = 0.5 * (x[1] + c[1]);
  });
  Vec x0 = Vec::Zero(2);
  const Vec x = damped_iteration(*m, x0, Domain::Disk2, 0.8, 80);
  CHECK((x - c).norm() <= 1e-10);
}
