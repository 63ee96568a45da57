#include "stokes/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "stokes/errors.hpp"

namespace stokes {

Vec project_to_domain(const Vec& x, Domain dom) {
  switch (dom) {
    case Domain::Disk2:
    case Domain::Disk3: {
      const double r = x.norm();
      return r > 1.0 ? Vec(x / r) : x;
    }
    case Domain::Sphere1:
    case Domain::Sphere2:
    case Domain::Sphere3: {
      const double r = x.norm();
      return r > 1e-300 ? Vec(x / r) : Vec(Vec::Unit(x.size(), 0));
    }
    case Domain::Curve: {
      Vec t = x;
      t[0] -= std::floor(t[0]);
      return t;
    }
    case Domain::Cylinder: {
      Vec c = x;
      const double rho = std::hypot(c[0], c[1]);
      if (rho > 1.0) {
        c[0] /= rho;
        c[1] /= rho;
      }
      c[2] = std::clamp(c[2], -1.0, 1.0);
      return c;
    }
    case Domain::None:
      return x;
  }
  return x;
}

namespace {

bool is_sphere(Domain dom) {
  return dom == Domain::Sphere1 || dom == Domain::Sphere2 ||
         dom == Domain::Sphere3;
}

Eigen::MatrixXd search_directions(const Vec& x, Domain dom) {
  if (is_sphere(dom)) return equator_frame(Pole(x));
  return Eigen::MatrixXd::Identity(x.size(), x.size());
}

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

MinimizeResult compass_minimize(const Objective& f, const Vec& start,
                                Domain dom, const MinimizeOptions& opt) {
  MinimizeResult res;
  res.point = project_to_domain(start, dom);
  res.value = f(res.point);
  res.evals = 1;

  double step = opt.initial_step;
  for (int iter = 0; iter < opt.max_iters && step >= opt.min_step; ++iter) {
    const Eigen::MatrixXd dirs = search_directions(res.point, dom);
    Vec best_point;
    double best_value = res.value;
    for (int d = 0; d < dirs.cols(); ++d)
      for (double sign : {1.0, -1.0}) {
        const Vec trial =
            project_to_domain(res.point + sign * step * dirs.col(d), dom);
        const double v = f(trial);
        ++res.evals;
        if (v < best_value) {
          best_value = v;
          best_point = trial;
        }
      }
    if (best_value < res.value) {
      res.point = best_point;
      res.value = best_value;
    } else {
      step *= 0.5;
    }
  }

  // quadratic fit along each direction
  for (int pass = 0; pass < 2; ++pass) {
    const double s = 1e-4;
    const Eigen::MatrixXd dirs = search_directions(res.point, dom);
    for (int d = 0; d < dirs.cols(); ++d) {
      const Vec xp = project_to_domain(res.point + s * dirs.col(d), dom);
      const Vec xm = project_to_domain(res.point - s * dirs.col(d), dom);
      const double fp = f(xp), fm = f(xm);
      res.evals += 2;
      const double denom = fp - 2.0 * res.value + fm;
      if (denom <= 0.0) continue;  // not convex along this axis
      double t = 0.5 * s * (fm - fp) / denom;
      t = std::clamp(t, -8.0 * s, 8.0 * s);
      const Vec trial = project_to_domain(res.point + t * dirs.col(d), dom);
      const double v = f(trial);
      ++res.evals;
      if (v < res.value) {
        res.point = trial;
        res.value = v;
      }
    }
  }
  return res;
}

MinimizeResult multistart_minimize(const Objective& f,
                                   const std::vector<Vec>& seeds, Domain dom,
                                   const MinimizeOptions& opt) {
  if (seeds.empty())
    fail(ErrorCode::ConfigError, "multistart needs at least one seed");
  MinimizeResult best;
  bool have = false;
  int evals = 0;
  for (const Vec& seed : seeds) {
    MinimizeResult r = compass_minimize(f, seed, dom, opt);
    evals += r.evals;
    // strict improvement, or an exact tie decided by point order, keeps the
    // merge independent of seed order
    if (!have || r.value < best.value ||
        (r.value == best.value && lex_less(r.point, best.point))) {
      best = r;
      have = true;
    }
  }
  best.evals = evals;
  return best;
}

Vec damped_iteration(const SmoothMap& m, Vec x, Domain dom, double alpha,
                     int iters) {
  Vec y(m.out_dim());
  for (int i = 0; i < iters; ++i) {
    m.eval_into(x.data(), y.data());
    x = project_to_domain(x + alpha * (y - x), dom);
  }
  return x;
}

}  // namespace stokes
