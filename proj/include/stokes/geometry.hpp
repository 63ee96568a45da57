#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "stokes/errors.hpp"

namespace stokes {

using Vec = Eigen::VectorXd;

// Geometric domain a map is declared on.  "None" means unchecked.
enum class Domain {
  None,
  Disk2,
  Disk3,
  Sphere1,
  Sphere2,
  Sphere3,
  Curve,     // parametrized circle, input t in R (period 1)
  Cylinder,  // D^2 x [-1,1]
};

int ambient_dim(Domain d);
const char* domain_name(Domain d);
Domain domain_from_name(const std::string& name);

// Membership test with tolerance 1e-9; throws DomainError when violated.
void check_in_domain(Domain d, const Vec& x);

// Same test without the throw; dimension mismatches count as outside.
bool domain_contains(Domain d, const Vec& x);

constexpr double kUnitTol = 1e-12;

// ---------------------------------------------------------------------------
// point wrappers

struct UnitVector {
  Vec coords;

  UnitVector() = default;
  explicit UnitVector(Vec v);                 // requires | |v|-1 | <= 1e-12
  static UnitVector normalized(const Vec& v); // rescales, |v| >= 1e-14

  int dim() const { return static_cast<int>(coords.size()); }
  double operator[](int i) const { return coords[i]; }
};

struct DiskPoint {
  Vec coords;

  DiskPoint() = default;
  explicit DiskPoint(Vec v);  // requires |v| <= 1 + 1e-12

  int dim() const { return static_cast<int>(coords.size()); }
};

struct Pole {
  UnitVector point;

  Pole() = default;
  explicit Pole(UnitVector p) : point(std::move(p)) {}
  explicit Pole(const Vec& v) : point(UnitVector::normalized(v)) {}

  int dim() const { return point.dim(); }
  const Vec& vec() const { return point.coords; }
};

// exact coordinatewise negation; the only way antipodes are ever produced
inline Vec antipode(const Vec& x) { return -x; }
inline UnitVector antipode(const UnitVector& x) {
  UnitVector a;
  a.coords = -x.coords;
  return a;
}

// Signed angle to the equator of B, in [-pi/2, pi/2].
double latitude(const Vec& x, const Pole& B);

// Nearest-point projection onto the equator {y : <y,B> = 0} along the
// meridian through x.  Throws PoleProjection within 1e-9 of +-B.
Vec meridian_project(const Vec& x, const Pole& B);

// Retraction of the sphere minus {+-B} onto the equator; this is exactly the
// meridian projection and is idempotent.
inline Vec equator_retract(const Vec& x, const Pole& B) {
  return meridian_project(x, B);
}

// Orthonormal basis of the equator plane of B (ambient (d+1) x d), chosen
// deterministically; B = e_last gives the standard basis.
Eigen::MatrixXd equator_frame(const Pole& B);

// ---------------------------------------------------------------------------
// meshes
//
// All node coordinates are stored flat with stride = ambient dimension.
// Meshes are immutable after construction; refinement builds a new mesh.

struct DiskMesh {
  int dim = 2;        // 2 or 3
  int resolution = 0; // radial divisions; angular counts derive from it
  double inner = 0.0; // annulus inner radius; 0 for the full ball

  std::vector<double> nodes;    // interior quadrature nodes
  std::vector<double> weights;  // sums to |D^n| up to roundoff

  std::vector<double> boundary_nodes;    // on S^{n-1}
  std::vector<double> boundary_weights;  // sums to |S^{n-1}|

  int node_count() const { return static_cast<int>(weights.size()); }
  int boundary_count() const { return static_cast<int>(boundary_weights.size()); }
  Eigen::Map<const Vec> node(int i) const {
    return Eigen::Map<const Vec>(nodes.data() + std::size_t(i) * dim, dim);
  }
  Eigen::Map<const Vec> boundary_node(int i) const {
    return Eigen::Map<const Vec>(boundary_nodes.data() + std::size_t(i) * dim, dim);
  }
};

struct SphereMesh {
  int dim = 2;        // sphere dimension n in {1,2,3}; ambient = n+1
  int resolution = 0; // nodes per great circle, approximately
  int level = 0;      // subdivision depth (dim 2 only)
  double spacing = 0; // typical geodesic node separation

  // quadrature nodes (face centroids for dim 2, grid cells for dim 1 and 3)
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> antipode_index;  // exact pairing: nodes[a[i]] == -nodes[i]

  // interpolation support (dim 1: vertices on the circle in angular order;
  // dim 2: triangulated vertex set; dim 3: unused)
  std::vector<double> verts;
  std::vector<double> vert_weights;  // dual areas, used as mollifier mass
  std::vector<int> vert_antipode;
  std::vector<std::array<int, 3>> faces;  // leaf triangles (dim 2)

  // subdivision hierarchy for point location (dim 2)
  std::vector<std::vector<std::array<int, 3>>> level_faces;
  std::vector<std::vector<std::array<int, 4>>> level_children;

  int adim() const { return dim + 1; }
  int node_count() const { return static_cast<int>(weights.size()); }
  int vert_count() const { return static_cast<int>(vert_weights.size()); }
  Eigen::Map<const Vec> node(int i) const {
    return Eigen::Map<const Vec>(nodes.data() + std::size_t(i) * adim(), adim());
  }
  Eigen::Map<const Vec> vert(int i) const {
    return Eigen::Map<const Vec>(verts.data() + std::size_t(i) * adim(), adim());
  }

  // leaf triangle containing (the ray through) x, plus barycentric weights
  int locate(const Vec& x, std::array<double, 3>& bary) const;
};

struct CurveMesh {
  int samples = 0;  // t_i = i / samples, closed
  bool closed = true;

  double t(int i) const { return double(i) / samples; }
};

struct CylinderMesh {
  // C = D^2 x [-1, 1]
  int resolution = 0;  // radial divisions; angular = 4x, vertical = 2x

  std::vector<double> nodes;    // interior, stride 3
  std::vector<double> weights;  // sums to 2*pi

  enum class Part : std::uint8_t { Top, Bottom, Side };
  struct Patch {
    std::vector<double> nodes;    // stride 3
    std::vector<double> weights;
    int count() const { return static_cast<int>(weights.size()); }
    Eigen::Map<const Vec> node(int i) const {
      return Eigen::Map<const Vec>(nodes.data() + std::size_t(i) * 3, 3);
    }
  };
  Patch top;     // D_+, z = +1, outward normal +e_z
  Patch bottom;  // D_-, z = -1, outward normal -e_z
  Patch side;    // V, radius 1; vertical line groups below

  // side.nodes is ordered line-major: for each angular index a, all vertical
  // samples in a row.  angular_count * vertical_count == side.count().
  int angular_count = 0;
  int vertical_count = 0;

  // exact antipodal pairing across the whole boundary: global boundary index
  // (top, then bottom, then side) -> global boundary index
  std::vector<int> boundary_antipode;

  int node_count() const { return static_cast<int>(weights.size()); }
  Eigen::Map<const Vec> node(int i) const {
    return Eigen::Map<const Vec>(nodes.data() + std::size_t(i) * 3, 3);
  }
  Eigen::Map<const Vec> boundary_node(int g) const;
  int boundary_count() const { return top.count() + bottom.count() + side.count(); }
};

// inner > 0 restricts to the annulus/shell between the two radii;
// boundary nodes always sample the outer sphere only
DiskMesh make_disk_mesh(int dim, int resolution, double inner = 0.0);
SphereMesh make_sphere_mesh(int dim, int resolution);
CylinderMesh make_cylinder_mesh(int resolution);
inline CurveMesh make_curve_mesh(int samples) { return CurveMesh{samples, true}; }

// Gauss-Legendre rule on [-1, 1], exact for polynomials of degree 2n-1.
void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights);

}  // namespace stokes
