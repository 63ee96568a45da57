#include "stokes/mapexpr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace stokes {

Vec SmoothMap::operator()(const Vec& x) const {
  if (x.size() != in_dim())
    fail(ErrorCode::ArityMismatch,
         "map expects " + std::to_string(in_dim()) + " input coordinate(s), got " +
             std::to_string(x.size()));
  check_in_domain(domain(), x);
  return eval_unchecked(x);
}

Vec SmoothMap::eval_unchecked(const Vec& x) const {
  Vec y(out_dim());
  eval_into(x.data(), y.data());
  return y;
}

// ---------------------------------------------------------------------------
// GridMap

GridMap::GridMap(std::shared_ptr<const SphereMesh> mesh, int out_dim,
                 std::vector<double> vert_values, bool sphere_valued)
    : mesh_(std::move(mesh)),
      out_(out_dim),
      values_(std::move(vert_values)),
      sphere_valued_(sphere_valued) {
  if (mesh_->dim != 1 && mesh_->dim != 2)
    fail(ErrorCode::UnsupportedDimension,
         "grid maps are tabulated on S^1 or S^2 meshes");
  if (values_.size() != std::size_t(mesh_->vert_count()) * out_)
    fail(ErrorCode::ArityMismatch, "value table does not match mesh vertex count");
  if (sphere_valued_) {
    for (int v = 0; v < mesh_->vert_count(); ++v) {
      double n2 = 0;
      for (int c = 0; c < out_; ++c) n2 += value(v, c) * value(v, c);
      if (std::abs(std::sqrt(n2) - 1.0) > 1e-9)
        fail(ErrorCode::NotSphereValued,
             "tabulated value at vertex " + std::to_string(v) +
                 " is off the unit sphere",
             Vec(mesh_->vert(v)));
    }
  }
}

GridMap GridMap::tabulate(const SmoothMap& m,
                          std::shared_ptr<const SphereMesh> mesh,
                          bool sphere_valued) {
  if (m.in_dim() != mesh->adim())
    fail(ErrorCode::ArityMismatch, "map arity does not match mesh dimension");
  std::vector<double> vals(std::size_t(mesh->vert_count()) * m.out_dim());
  for (int v = 0; v < mesh->vert_count(); ++v)
    m.eval_into(mesh->verts.data() + std::size_t(v) * mesh->adim(),
                vals.data() + std::size_t(v) * m.out_dim());
  return GridMap(std::move(mesh), m.out_dim(), std::move(vals), sphere_valued);
}

Domain GridMap::domain() const {
  return mesh_->dim == 1 ? Domain::Sphere1 : Domain::Sphere2;
}

void GridMap::eval_into(const double* x, double* y) const {
  if (mesh_->dim == 1) {
    const int n = mesh_->vert_count();
    const double alpha = std::atan2(x[1], x[0]);
    double p = alpha / (2.0 * M_PI) * n - 0.5;
    p -= n * std::floor(p / n);  // into [0, n)
    const int k = std::min(int(p), n - 1);
    const double frac = p - k;
    const int k1 = (k + 1) % n;
    for (int c = 0; c < out_; ++c)
      y[c] = (1.0 - frac) * value(k, c) + frac * value(k1, c);
  } else {
    Vec xv(3);
    xv << x[0], x[1], x[2];
    std::array<double, 3> b{};
    const int f = mesh_->locate(xv, b);
    const auto& fv = mesh_->faces[f];
    for (int c = 0; c < out_; ++c)
      y[c] = b[0] * value(fv[0], c) + b[1] * value(fv[1], c) +
             b[2] * value(fv[2], c);
  }
  if (sphere_valued_) {
    double n2 = 0;
    for (int c = 0; c < out_; ++c) n2 += y[c] * y[c];
    const double n = std::sqrt(n2);
    if (n < 1e-8)
      fail(ErrorCode::NearZeroValue,
           "interpolated sphere value degenerated to near zero");
    for (int c = 0; c < out_; ++c) y[c] /= n;
  }
}

// ---------------------------------------------------------------------------
// mollify

GridMap mollify(const GridMap& g, double width) {
  const SphereMesh& mesh = g.mesh();
  if (!(width > 0) || width < 2.0 * mesh.spacing)
    fail(ErrorCode::WidthTooSmall,
         "mollifier width " + std::to_string(width) +
             " is under two mesh spacings (" + std::to_string(mesh.spacing) + ")");
  const int out = g.out_dim();
  const int nv = mesh.vert_count();
  std::vector<double> vals(std::size_t(nv) * out, 0.0);
  auto kernel = [&](double d) {
    const double s = d / width;
    if (s >= 1.0) return 0.0;
    const double u = 1.0 - s * s;
    return u * u;
  };

  if (mesh.dim == 1) {
    const int halfwin = int(std::ceil(width / mesh.spacing));
    for (int j = 0; j < nv; ++j) {
      double den = 0.0;
      std::vector<double> num(out, 0.0);
      for (int dj = -halfwin; dj <= halfwin; ++dj) {
        const double k = kernel(std::abs(dj) * mesh.spacing);
        if (k == 0.0) continue;
        const int u = ((j + dj) % nv + nv) % nv;
        const double w = k * mesh.vert_weights[u];
        den += w;
        for (int c = 0; c < out; ++c) num[c] += w * g.value(u, c);
      }
      for (int c = 0; c < out; ++c) vals[std::size_t(j) * out + c] = num[c] / den;
    }
  } else {
    // vertex adjacency from the leaf triangulation
    std::vector<std::vector<int>> adj(nv);
    for (const auto& f : mesh.faces)
      for (int e = 0; e < 3; ++e) {
        adj[f[e]].push_back(f[(e + 1) % 3]);
        adj[f[e]].push_back(f[(e + 2) % 3]);
      }
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<int> stamp(nv, -1);
    std::deque<int> queue;
    std::vector<int> ball;
    for (int j = 0; j < nv; ++j) {
      const Eigen::Map<const Vec> xj(mesh.verts.data() + std::size_t(j) * 3, 3);
      ball.clear();
      queue.clear();
      queue.push_back(j);
      stamp[j] = j;
      while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        const Eigen::Map<const Vec> xu(mesh.verts.data() + std::size_t(u) * 3, 3);
        const double d = std::acos(std::clamp(xj.dot(xu), -1.0, 1.0));
        if (d >= width && u != j) continue;  // outside: do not expand
        ball.push_back(u);
        for (int w : adj[u])
          if (stamp[w] != j) {
            stamp[w] = j;
            queue.push_back(w);
          }
      }
      double den = 0.0;
      std::vector<double> num(out, 0.0);
      for (int u : ball) {
        const Eigen::Map<const Vec> xu(mesh.verts.data() + std::size_t(u) * 3, 3);
        const double d = std::acos(std::clamp(xj.dot(xu), -1.0, 1.0));
        const double k = kernel(d);
        if (k == 0.0) continue;
        const double w = k * mesh.vert_weights[u];
        den += w;
        for (int c = 0; c < out; ++c) num[c] += w * g.value(u, c);
      }
      for (int c = 0; c < out; ++c) vals[std::size_t(j) * out + c] = num[c] / den;
    }
  }

  if (g.sphere_valued()) {
    for (int v = 0; v < nv; ++v) {
      double n2 = 0;
      for (int c = 0; c < out; ++c) {
        const double t = vals[std::size_t(v) * out + c];
        n2 += t * t;
      }
      const double n = std::sqrt(n2);
      if (n < 1e-8)
        fail(ErrorCode::NearZeroValue,
             "mollified sphere value degenerated to near zero",
             Vec(mesh.vert(v)));
      for (int c = 0; c < out; ++c) vals[std::size_t(v) * out + c] /= n;
    }
  }
  return GridMap(g.mesh_ptr(), out, std::move(vals), g.sphere_valued());
}

// ---------------------------------------------------------------------------

MapPtr project_to_sphere(MapPtr m, double min_norm) {
  const int in = m->in_dim(), out = m->out_dim();
  const Domain dom = m->domain();
  return make_map(in, out, dom, [m, min_norm, in, out](const double* x, double* y) {
    m->eval_into(x, y);
    double n2 = 0;
    for (int c = 0; c < out; ++c) n2 += y[c] * y[c];
    const double n = std::sqrt(n2);
    if (n < min_norm) {
      Vec w(in);
      for (int i = 0; i < in; ++i) w[i] = x[i];
      fail(ErrorCode::NearZeroValue,
           "value norm " + std::to_string(n) + " below " + std::to_string(min_norm) +
               "; cannot project to the sphere",
           std::move(w));
    }
    for (int c = 0; c < out; ++c) y[c] /= n;
  });
}

double equivariance_defect(const SmoothMap& m, const SphereMesh& mesh) {
  if (m.in_dim() != mesh.adim())
    fail(ErrorCode::ArityMismatch, "map arity does not match mesh dimension");
  const int out = m.out_dim();
  const int n = mesh.node_count();
  std::vector<double> vals(std::size_t(n) * out);
  for (int i = 0; i < n; ++i)
    m.eval_into(mesh.nodes.data() + std::size_t(i) * mesh.adim(),
                vals.data() + std::size_t(i) * out);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const int j = mesh.antipode_index[i];
    double s2 = 0;
    for (int c = 0; c < out; ++c) {
      const double s = vals[std::size_t(i) * out + c] + vals[std::size_t(j) * out + c];
      s2 += s * s;
    }
    worst = std::max(worst, std::sqrt(s2));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// finite differences

Eigen::MatrixXd jacobian_in_frame(const SmoothMap& m, const Vec& x,
                                  const Eigen::MatrixXd& dirs,
                                  const JacobianStencil& st) {
  const int in = m.in_dim();
  const int out = m.out_dim();
  if (x.size() != in)
    fail(ErrorCode::ArityMismatch, "jacobian: point does not match map arity");
  if (dirs.rows() != in)
    fail(ErrorCode::ArityMismatch, "jacobian: direction rows do not match arity");
  if (in > 4 || out > 4)
    fail(ErrorCode::UnsupportedDimension, "maps are at most 4-dimensional here");
  const int ncols = int(dirs.cols());
  const Domain dom = m.domain();
  const bool sphere = dom == Domain::Sphere1 || dom == Domain::Sphere2 ||
                      dom == Domain::Sphere3;
  const bool ball = dom == Domain::Disk2 || dom == Domain::Disk3 ||
                    dom == Domain::Cylinder;
  const double h = st.h;

  Eigen::MatrixXd J(out, ncols);
  double xs[4], ya[4], yb[4], yc[4], yd[4], y0[4];

  auto shift_eval = [&](double step, int k, double* y) {
    double n2 = 0;
    for (int i = 0; i < in; ++i) {
      xs[i] = x[i] + step * dirs(i, k);
      n2 += xs[i] * xs[i];
    }
    if (sphere) {
      const double inv = 1.0 / std::sqrt(n2);
      for (int i = 0; i < in; ++i) xs[i] *= inv;
    }
    m.eval_into(xs, y);
  };
  auto inside = [&](double step, int k) {
    if (!ball) return true;
    double v[4] = {0, 0, 0, 0};
    for (int i = 0; i < in; ++i) v[i] = x[i] + step * dirs(i, k);
    if (dom == Domain::Cylinder)
      return std::hypot(v[0], v[1]) <= 1.0 + 1e-9 && std::abs(v[2]) <= 1.0 + 1e-9;
    double n2 = 0;
    for (int i = 0; i < in; ++i) n2 += v[i] * v[i];
    return n2 <= (1.0 + 1e-9) * (1.0 + 1e-9);
  };

  for (int k = 0; k < ncols; ++k) {
    if (st.order == 4) {
      shift_eval(h, k, ya);
      shift_eval(-h, k, yb);
      shift_eval(2 * h, k, yc);
      shift_eval(-2 * h, k, yd);
      for (int c = 0; c < out; ++c)
        J(c, k) = (-yc[c] + 8 * ya[c] - 8 * yb[c] + yd[c]) / (12 * h);
      continue;
    }
    const bool plus_ok = inside(h, k);
    const bool minus_ok = inside(-h, k);
    if (plus_ok && minus_ok) {
      shift_eval(h, k, ya);
      shift_eval(-h, k, yb);
      for (int c = 0; c < out; ++c) J(c, k) = (ya[c] - yb[c]) / (2 * h);
    } else if (plus_ok) {
      m.eval_into(x.data(), y0);
      shift_eval(h, k, ya);
      shift_eval(2 * h, k, yc);
      for (int c = 0; c < out; ++c)
        J(c, k) = (-3 * y0[c] + 4 * ya[c] - yc[c]) / (2 * h);
    } else {
      m.eval_into(x.data(), y0);
      shift_eval(-h, k, yb);
      shift_eval(-2 * h, k, yd);
      for (int c = 0; c < out; ++c)
        J(c, k) = (3 * y0[c] - 4 * yb[c] + yd[c]) / (2 * h);
    }
  }
  return J;
}

Eigen::MatrixXd jacobian(const SmoothMap& m, const Vec& x,
                         const JacobianStencil& st) {
  return jacobian_in_frame(
      m, x, Eigen::MatrixXd::Identity(m.in_dim(), m.in_dim()), st);
}

}  // namespace stokes
