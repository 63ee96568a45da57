#include "stokes/forms.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stokes/errors.hpp"

namespace stokes {

namespace {

double det_small(const Eigen::MatrixXd& j) {
  switch (j.rows()) {
    case 1:
      return j(0, 0);
    case 2:
      return j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    default:
      return j(0, 0) * (j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1)) -
             j(0, 1) * (j(1, 0) * j(2, 2) - j(1, 2) * j(2, 0)) +
             j(0, 2) * (j(1, 0) * j(2, 1) - j(1, 1) * j(2, 0));
  }
}

void require_square(const SmoothMap& m, int dim) {
  if (m.in_dim() != dim || m.out_dim() != dim)
    fail(ErrorCode::ArityMismatch,
         "integrand must map dimension " + std::to_string(dim) + " to itself, got " +
             std::to_string(m.in_dim()) + " -> " + std::to_string(m.out_dim()));
}

double volume_quadrature(const SmoothMap& m, const std::vector<double>& nodes,
                         const std::vector<double>& weights, int dim,
                         const JacobianStencil& st) {
  require_square(m, dim);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
  KahanSum acc;
  Eigen::VectorXd x(dim);
  const int n = int(weights.size());
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) x[d] = nodes[std::size_t(i) * dim + d];
    acc.add(weights[std::size_t(i)] * det_small(jacobian_in_frame(m, x, id, st)));
  }
  return acc.value();
}

// right-handed tangent frame at a unit vector: e1 x e2 points outward
Eigen::MatrixXd sphere_frame(const Eigen::Vector3d& x) {
  int a = 0;
  if (std::abs(x[1]) < std::abs(x[a])) a = 1;
  if (std::abs(x[2]) < std::abs(x[a])) a = 2;
  Eigen::Vector3d v = Eigen::Vector3d::Unit(a);
  v -= v.dot(x) * x;
  v.normalize();
  Eigen::Vector3d e2 = x.cross(v);
  e2.normalize();
  Eigen::MatrixXd frame(3, 2);
  frame.col(0) = e2.cross(x);
  frame.col(1) = e2;
  return frame;
}

Eigen::MatrixXd circle_frame(const Eigen::Vector2d& x) {
  Eigen::MatrixXd frame(2, 1);
  frame(0, 0) = -x[1];
  frame(1, 0) = x[0];
  return frame;
}

// m_k times the tangential Jacobian determinant of the other coordinates
double boundary_quadrature(const SmoothMap& m, const double* nodes,
                           const double* weights, int count, int dim, int k,
                           const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& frame_at,
                           const JacobianStencil& st) {
  require_square(m, dim);
  if (k < 1 || k > dim)
    fail(ErrorCode::ArityMismatch,
         "distinguished index " + std::to_string(k) + " out of range for dimension " +
             std::to_string(dim));
  std::vector<int> rows;
  for (int d = 0; d < dim; ++d)
    if (d != k - 1) rows.push_back(d);
  KahanSum acc;
  Eigen::VectorXd x(dim), y(dim);
  Eigen::MatrixXd tangential(dim - 1, dim - 1);
  for (int i = 0; i < count; ++i) {
    for (int d = 0; d < dim; ++d) x[d] = nodes[std::size_t(i) * dim + d];
    const Eigen::MatrixXd frame = frame_at(x);
    const Eigen::MatrixXd j = jacobian_in_frame(m, x, frame, st);
    for (int r = 0; r < dim - 1; ++r) tangential.row(r) = j.row(rows[std::size_t(r)]);
    m.eval_into(x.data(), y.data());
    acc.add(weights[i] * y[k - 1] * det_small(tangential));
  }
  return acc.value();
}

double disk_boundary_value(const SmoothMap& m, const DiskMesh& mesh, int k,
                           const JacobianStencil& st) {
  if (mesh.dim == 2) {
    auto frame = [](const Eigen::VectorXd& x) {
      return circle_frame(Eigen::Vector2d(x[0], x[1]));
    };
    return boundary_quadrature(m, mesh.boundary_nodes.data(),
                               mesh.boundary_weights.data(),
                               int(mesh.boundary_weights.size()), 2, k, frame, st);
  }
  auto frame = [](const Eigen::VectorXd& x) {
    return sphere_frame(Eigen::Vector3d(x[0], x[1], x[2]));
  };
  return boundary_quadrature(m, mesh.boundary_nodes.data(),
                             mesh.boundary_weights.data(),
                             int(mesh.boundary_weights.size()), 3, k, frame, st);
}

double sphere_value(const SmoothMap& m, const SphereMesh& mesh, int k,
                    const JacobianStencil& st) {
  if (mesh.dim == 1) {
    auto frame = [](const Eigen::VectorXd& x) {
      return circle_frame(Eigen::Vector2d(x[0], x[1]));
    };
    return boundary_quadrature(m, mesh.nodes.data(), mesh.weights.data(),
                               int(mesh.weights.size()), 2, k, frame, st);
  }
  if (mesh.dim == 2) {
    auto frame = [](const Eigen::VectorXd& x) {
      return sphere_frame(Eigen::Vector3d(x[0], x[1], x[2]));
    };
    return boundary_quadrature(m, mesh.nodes.data(), mesh.weights.data(),
                               int(mesh.weights.size()), 3, k, frame, st);
  }
  fail(ErrorCode::UnsupportedDimension,
       "form integration over the 3-sphere is not provided");
}

double cylinder_part_value(const SmoothMap& m, const CylinderMesh& mesh, int k,
                           BoundaryPart part, const JacobianStencil& st) {
  // outward-normal-first orientation fixes the frame on each patch:
  // top (+e_z): (e_x, e_y); bottom (-e_z): (e_y, e_x); side: (e_theta, e_z)
  auto top_frame = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd f(3, 2);
    f << 1, 0, 0, 1, 0, 0;
    return f;
  };
  auto bottom_frame = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd f(3, 2);
    f << 0, 1, 1, 0, 0, 0;
    return f;
  };
  auto side_frame = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd f(3, 2);
    f << -x[1], 0, x[0], 0, 0, 1;
    return f;
  };
  double total = 0.0;
  if (part == BoundaryPart::All || part == BoundaryPart::Top)
    total += boundary_quadrature(m, mesh.top.nodes.data(), mesh.top.weights.data(),
                                 int(mesh.top.weights.size()), 3, k, top_frame, st);
  if (part == BoundaryPart::All || part == BoundaryPart::Bottom)
    total += boundary_quadrature(m, mesh.bottom.nodes.data(),
                                 mesh.bottom.weights.data(),
                                 int(mesh.bottom.weights.size()), 3, k,
                                 bottom_frame, st);
  if (part == BoundaryPart::All || part == BoundaryPart::Side)
    total += boundary_quadrature(m, mesh.side.nodes.data(), mesh.side.weights.data(),
                                 int(mesh.side.weights.size()), 3, k, side_frame, st);
  return total;
}

}  // namespace

IntegralResult volume_pullback_integral(const SmoothMap& m, const DiskMesh& mesh,
                                        const JacobianStencil& st, bool refine) {
  IntegralResult out;
  out.resolution = mesh.resolution;
  out.value = volume_quadrature(m, mesh.nodes, mesh.weights, mesh.dim, st);
  if (refine) {
    const DiskMesh fine = make_disk_mesh(mesh.dim, 2 * mesh.resolution, mesh.inner);
    out.error = std::abs(volume_quadrature(m, fine.nodes, fine.weights, mesh.dim, st) -
                         out.value);
  }
  return out;
}

IntegralResult volume_pullback_integral(const SmoothMap& m,
                                        const CylinderMesh& mesh,
                                        const JacobianStencil& st, bool refine) {
  IntegralResult out;
  out.resolution = mesh.resolution;
  out.value = volume_quadrature(m, mesh.nodes, mesh.weights, 3, st);
  if (refine) {
    const CylinderMesh fine = make_cylinder_mesh(2 * mesh.resolution);
    out.error = std::abs(volume_quadrature(m, fine.nodes, fine.weights, 3, st) -
                         out.value);
  }
  return out;
}

IntegralResult boundary_form_integral(const SmoothMap& m, const DiskMesh& mesh,
                                      int k, const JacobianStencil& st,
                                      bool refine) {
  IntegralResult out;
  out.resolution = mesh.resolution;
  out.value = disk_boundary_value(m, mesh, k, st);
  if (refine) {
    const DiskMesh fine = make_disk_mesh(mesh.dim, 2 * mesh.resolution, mesh.inner);
    out.error = std::abs(disk_boundary_value(m, fine, k, st) - out.value);
  }
  return out;
}

IntegralResult boundary_form_integral(const SmoothMap& m, const SphereMesh& mesh,
                                      int k, const JacobianStencil& st,
                                      bool refine) {
  IntegralResult out;
  out.resolution = mesh.resolution;
  out.value = sphere_value(m, mesh, k, st);
  if (refine) {
    const SphereMesh fine = make_sphere_mesh(mesh.dim, 2 * mesh.resolution);
    out.error = std::abs(sphere_value(m, fine, k, st) - out.value);
  }
  return out;
}

IntegralResult boundary_form_integral(const SmoothMap& m,
                                      const CylinderMesh& mesh, int k,
                                      BoundaryPart part,
                                      const JacobianStencil& st, bool refine) {
  IntegralResult out;
  out.resolution = mesh.resolution;
  out.value = cylinder_part_value(m, mesh, k, part, st);
  if (refine) {
    const CylinderMesh fine = make_cylinder_mesh(2 * mesh.resolution);
    out.error = std::abs(cylinder_part_value(m, fine, k, part, st) - out.value);
  }
  return out;
}

namespace {

double curve_midpoint_value(const SmoothMap& g, int samples, int k, double t0,
                            double t1) {
  const int j = (k == 1) ? 1 : 0;
  const JacobianStencil st{1e-4, 4};
  Eigen::MatrixXd dir(1, 1);
  dir(0, 0) = 1.0;
  KahanSum acc;
  Eigen::VectorXd t(1), y(2);
  const double dt = (t1 - t0) / samples;
  for (int i = 0; i < samples; ++i) {
    t[0] = t0 + (i + 0.5) * dt;
    g.eval_into(t.data(), y.data());
    const Eigen::MatrixXd d = jacobian_in_frame(g, t, dir, st);
    acc.add(y[k - 1] * d(j, 0));
  }
  return acc.value() * dt;
}

double winding_value(const SmoothMap& g, int samples) {
  const JacobianStencil st{1e-4, 4};
  Eigen::MatrixXd dir(1, 1);
  dir(0, 0) = 1.0;
  KahanSum acc;
  Eigen::VectorXd t(1), y(2);
  for (int i = 0; i < samples; ++i) {
    t[0] = double(i) / samples;
    g.eval_into(t.data(), y.data());
    if (std::abs(std::hypot(y[0], y[1]) - 1.0) > 1e-9)
      fail(ErrorCode::NotOnCircle,
           "curve leaves the unit circle at t = " + std::to_string(t[0]), t);
    const Eigen::MatrixXd d = jacobian_in_frame(g, t, dir, st);
    acc.add(y[0] * d(1, 0) - y[1] * d(0, 0));
  }
  return acc.value() / samples;
}

void require_curve(const SmoothMap& g) {
  if (g.in_dim() != 1 || g.out_dim() != 2)
    fail(ErrorCode::ArityMismatch,
         "curve integrand must map 1 parameter to the plane, got " +
             std::to_string(g.in_dim()) + " -> " + std::to_string(g.out_dim()));
}

}  // namespace

IntegralResult winding_integral(const SmoothMap& g, const CurveMesh& curve) {
  require_curve(g);
  IntegralResult out;
  out.resolution = curve.samples;
  out.value = winding_value(g, curve.samples);
  out.error = std::abs(winding_value(g, 2 * curve.samples) - out.value);
  return out;
}

IntegralResult curve_form_integral(const SmoothMap& g, const CurveMesh& curve,
                                   int k, double t0, double t1) {
  require_curve(g);
  if (k < 1 || k > 2)
    fail(ErrorCode::ArityMismatch, "distinguished index must be 1 or 2");
  IntegralResult out;
  out.resolution = curve.samples;
  out.value = curve_midpoint_value(g, curve.samples, k, t0, t1);
  out.error =
      std::abs(curve_midpoint_value(g, 2 * curve.samples, k, t0, t1) - out.value);
  return out;
}

double stokes_residual(const SmoothMap& m, const DiskMesh& mesh, int k,
                       const JacobianStencil& st) {
  const double vol = volume_pullback_integral(m, mesh, st, false).value;
  const double bnd = disk_boundary_value(m, mesh, k, st);
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return std::abs(vol - sign * bnd);
}

DegreeResult mapping_degree(const SmoothMap& m, const SphereMesh& mesh,
                            const JacobianStencil& st) {
  const int dim = mesh.adim();
  if (m.in_dim() != dim || m.out_dim() != dim)
    fail(ErrorCode::ArityMismatch,
         "degree needs a sphere self-map in ambient dimension " +
             std::to_string(dim));
  Eigen::VectorXd x(dim), y(dim);
  const int n = int(mesh.weights.size());
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) x[d] = mesh.nodes[std::size_t(i) * dim + d];
    m.eval_into(x.data(), y.data());
    if (std::abs(y.norm() - 1.0) > 1e-6)
      fail(ErrorCode::NotSphereValued,
           "map leaves the unit sphere, |m(x)| = " + std::to_string(y.norm()), x);
  }
  const double coarse = sphere_value(m, mesh, 1, st);
  const SphereMesh fine_mesh = make_sphere_mesh(mesh.dim, 2 * mesh.resolution);
  const double fine = sphere_value(m, fine_mesh, 1, st);
  // centroid quadrature on geodesic triangles is second order in the spacing,
  // so one extrapolation step across a subdivision level cancels the leading
  // error; the circle rule is already spectral and keeps the finer value
  const double extrapolated = (mesh.dim == 2) ? (4.0 * fine - coarse) / 3.0 : fine;
  const double ball = (mesh.dim == 1) ? M_PI : 4.0 * M_PI / 3.0;
  const double ratio = extrapolated / ball;
  DegreeResult out;
  out.degree = int(std::lround(ratio));
  out.residual = std::abs(ratio - out.degree);
  out.integral.value = extrapolated;
  out.integral.error = std::abs(fine - coarse);
  out.integral.resolution = mesh.resolution;
  if (out.residual > 0.1)
    fail(ErrorCode::UnreliableDegree,
         "degree integral " + std::to_string(ratio) +
             " is not close to an integer");
  return out;
}

}  // namespace stokes
