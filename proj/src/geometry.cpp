#include "stokes/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace stokes {

int ambient_dim(Domain d) {
  switch (d) {
    case Domain::None: return 0;
    case Domain::Disk2: return 2;
    case Domain::Disk3: return 3;
    case Domain::Sphere1: return 2;
    case Domain::Sphere2: return 3;
    case Domain::Sphere3: return 4;
    case Domain::Curve: return 1;
    case Domain::Cylinder: return 3;
  }
  return 0;
}

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::None: return "none";
    case Domain::Disk2: return "disk2";
    case Domain::Disk3: return "disk3";
    case Domain::Sphere1: return "sphere1";
    case Domain::Sphere2: return "sphere2";
    case Domain::Sphere3: return "sphere3";
    case Domain::Curve: return "curve";
    case Domain::Cylinder: return "cylinder";
  }
  return "none";
}

Domain domain_from_name(const std::string& name) {
  if (name == "none") return Domain::None;
  if (name == "disk2") return Domain::Disk2;
  if (name == "disk3") return Domain::Disk3;
  if (name == "sphere1") return Domain::Sphere1;
  if (name == "sphere2") return Domain::Sphere2;
  if (name == "sphere3") return Domain::Sphere3;
  if (name == "curve") return Domain::Curve;
  if (name == "cylinder") return Domain::Cylinder;
  fail(ErrorCode::ConfigError, "unknown domain name '" + name + "'");
}

static constexpr double kDomainTol = 1e-9;

void check_in_domain(Domain d, const Vec& x) {
  if (d == Domain::None || d == Domain::Curve) return;
  const int adim = ambient_dim(d);
  if (x.size() != adim)
    fail(ErrorCode::ArityMismatch,
         std::string("point dimension ") + std::to_string(x.size()) +
             " does not match domain " + domain_name(d));
  switch (d) {
    case Domain::Disk2:
    case Domain::Disk3:
      if (x.norm() > 1.0 + kDomainTol)
        fail(ErrorCode::DomainError, "point lies outside the unit ball", x);
      break;
    case Domain::Sphere1:
    case Domain::Sphere2:
    case Domain::Sphere3:
      if (std::abs(x.norm() - 1.0) > kDomainTol)
        fail(ErrorCode::DomainError, "point does not lie on the unit sphere", x);
      break;
    case Domain::Cylinder: {
      const double rho = std::hypot(x[0], x[1]);
      if (rho > 1.0 + kDomainTol || std::abs(x[2]) > 1.0 + kDomainTol)
        fail(ErrorCode::DomainError, "point lies outside the solid cylinder", x);
      break;
    }
    default:
      break;
  }
}

bool domain_contains(Domain d, const Vec& x) {
  if (d == Domain::None || d == Domain::Curve) return true;
  if (x.size() != ambient_dim(d)) return false;
  switch (d) {
    case Domain::Disk2:
    case Domain::Disk3:
      return x.norm() <= 1.0 + kDomainTol;
    case Domain::Sphere1:
    case Domain::Sphere2:
    case Domain::Sphere3:
      return std::abs(x.norm() - 1.0) <= kDomainTol;
    case Domain::Cylinder:
      return std::hypot(x[0], x[1]) <= 1.0 + kDomainTol &&
             std::abs(x[2]) <= 1.0 + kDomainTol;
    default:
      return true;
  }
}

UnitVector::UnitVector(Vec v) : coords(std::move(v)) {
  if (std::abs(coords.norm() - 1.0) > kUnitTol)
    fail(ErrorCode::DomainError, "vector is not unit length", coords);
}

UnitVector UnitVector::normalized(const Vec& v) {
  const double n = v.norm();
  if (n < 1e-14)
    fail(ErrorCode::NearZeroValue, "cannot normalize a near-zero vector", v);
  UnitVector u;
  u.coords = v / n;
  return u;
}

DiskPoint::DiskPoint(Vec v) : coords(std::move(v)) {
  if (coords.norm() > 1.0 + kUnitTol)
    fail(ErrorCode::DomainError, "point lies outside the closed unit ball", coords);
}

double latitude(const Vec& x, const Pole& B) {
  if (x.size() != B.dim())
    fail(ErrorCode::ArityMismatch, "latitude: dimension mismatch");
  const double n = x.norm();
  if (n < 1e-14)
    fail(ErrorCode::NearZeroValue, "latitude of the zero vector is undefined");
  const double c = std::clamp(x.dot(B.vec()) / n, -1.0, 1.0);
  return std::asin(c);
}

Vec meridian_project(const Vec& x, const Pole& B) {
  if (x.size() != B.dim())
    fail(ErrorCode::ArityMismatch, "meridian_project: dimension mismatch");
  const double d = x.dot(B.vec());
  Vec h = x - d * B.vec();
  const double hn = h.norm();
  if (hn < 1e-9)
    fail(ErrorCode::PoleProjection,
         "meridian projection undefined this close to the pole", x);
  return h / hn;
}

Eigen::MatrixXd equator_frame(const Pole& B) {
  const int m = B.dim();
  const Vec& b = B.vec();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  // Householder reflection taking e_m to b (or to -b when b points away from
  // e_m, which is the numerically stable choice).
  Vec u = b;
  if (b[m - 1] >= 0.0)
    u[m - 1] -= 1.0;
  else
    u[m - 1] += 1.0;
  const double un2 = u.squaredNorm();
  if (un2 > 1e-30) H -= (2.0 / un2) * (u * u.transpose());
  // First m-1 columns are orthonormal and orthogonal to the last column,
  // which is +-b; either sign spans the same equator plane.
  return H.leftCols(m - 1);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre

static double legendre(int n, double x, double& deriv) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  deriv = n * (x * p1 - p0) / (x * x - 1.0);
  return p1;
}

void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights) {
  if (n < 1) fail(ErrorCode::ConfigError, "gauss_legendre: need at least one node");
  points.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    // i-th root counted from +1 downward
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre(n, x, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(n, x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    points[n - 1 - i] = x;
    points[i] = -x;  // enforce exact symmetry
    weights[n - 1 - i] = w;
    weights[i] = w;
  }
  if (n % 2 == 1) {
    double dp = 0.0;
    legendre(n, 0.0, dp);
    points[half] = 0.0;
    weights[half] = 2.0 / (dp * dp);
  }
}

// ---------------------------------------------------------------------------
// disk meshes

// Cell masses for the radial factor: integral of r^{dim-1} over [r_i, r_{i+1}]
// computed as differences of the antiderivative, so the total telescopes.
// Nodes sit at the mass centroid of each cell, which zeroes the first moment
// of the rule and leaves a pure second-order error.
static void radial_cells(int nr, int dim, double r0, std::vector<double>& mid,
                         std::vector<double>& mass) {
  mid.resize(nr);
  mass.resize(nr);
  std::vector<double> F(nr + 1), G(nr + 1);
  for (int i = 0; i <= nr; ++i) {
    const double r = r0 + (1.0 - r0) * double(i) / nr;
    F[i] = (dim == 2) ? r * r / 2.0 : r * r * r / 3.0;
    G[i] = (dim == 2) ? r * r * r / 3.0 : r * r * r * r / 4.0;
  }
  for (int i = 0; i < nr; ++i) {
    mass[i] = F[i + 1] - F[i];
    mid[i] = (G[i + 1] - G[i]) / mass[i];
  }
}

DiskMesh make_disk_mesh(int dim, int resolution, double inner) {
  if (dim != 2 && dim != 3)
    fail(ErrorCode::UnsupportedDimension,
         "disk meshes exist for dimensions 2 and 3, not " + std::to_string(dim));
  if (resolution < 4)
    fail(ErrorCode::ConfigError, "disk mesh resolution must be at least 4");
  if (!(inner >= 0.0 && inner < 1.0))
    fail(ErrorCode::ConfigError, "annulus inner radius must lie in [0, 1)");

  DiskMesh mesh;
  mesh.dim = dim;
  mesh.resolution = resolution;
  mesh.inner = inner;

  const int nr = resolution;
  const int na = 4 * resolution;
  std::vector<double> rmid, rmass;
  radial_cells(nr, dim, inner, rmid, rmass);

  if (dim == 2) {
    mesh.nodes.reserve(std::size_t(nr) * na * 2);
    mesh.weights.reserve(std::size_t(nr) * na);
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < na; ++j) {
        const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
        mesh.nodes.push_back(rmid[i] * std::cos(th));
        mesh.nodes.push_back(rmid[i] * std::sin(th));
        mesh.weights.push_back(rmass[i] * (2.0 * M_PI / na));
      }
    }
    for (int j = 0; j < na; ++j) {
      const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
      mesh.boundary_nodes.push_back(std::cos(th));
      mesh.boundary_nodes.push_back(std::sin(th));
      mesh.boundary_weights.push_back(2.0 * M_PI / na);
    }
  } else {
    // polar direction integrated in cos(phi) with a Gauss-Legendre rule so
    // that smooth integrands converge fast enough for the tight identities
    const int np = 2 * resolution;
    std::vector<double> gc, gw;
    gauss_legendre(np, gc, gw);
    mesh.nodes.reserve(std::size_t(nr) * np * na * 3);
    for (int i = 0; i < nr; ++i) {
      for (int k = 0; k < np; ++k) {
        const double c = gc[k];
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < na; ++j) {
          const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
          mesh.nodes.push_back(rmid[i] * s * std::cos(th));
          mesh.nodes.push_back(rmid[i] * s * std::sin(th));
          mesh.nodes.push_back(rmid[i] * c);
          mesh.weights.push_back(rmass[i] * gw[k] * (2.0 * M_PI / na));
        }
      }
    }
    for (int k = 0; k < np; ++k) {
      const double c = gc[k];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int j = 0; j < na; ++j) {
        const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
        mesh.boundary_nodes.push_back(s * std::cos(th));
        mesh.boundary_nodes.push_back(s * std::sin(th));
        mesh.boundary_nodes.push_back(c);
        mesh.boundary_weights.push_back(gw[k] * (2.0 * M_PI / na));
      }
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// sphere meshes

static SphereMesh make_circle_mesh(int resolution) {
  SphereMesh mesh;
  mesh.dim = 1;
  int n = resolution;
  if (n % 2) ++n;  // antipodal pairing needs an even count
  mesh.resolution = n;
  mesh.spacing = 2.0 * M_PI / n;

  mesh.nodes.resize(std::size_t(n) * 2);
  mesh.weights.assign(n, 2.0 * M_PI / n);
  mesh.antipode_index.resize(n);
  const int h = n / 2;
  for (int j = 0; j < h; ++j) {
    const double th = (double(j) + 0.5) * (2.0 * M_PI / n);
    mesh.nodes[2 * j] = std::cos(th);
    mesh.nodes[2 * j + 1] = std::sin(th);
    // the second half is the exact pointwise negation of the first, so the
    // antipodal pairing is closed in floating point, not just to tolerance
    mesh.nodes[2 * (j + h)] = -mesh.nodes[2 * j];
    mesh.nodes[2 * (j + h) + 1] = -mesh.nodes[2 * j + 1];
    mesh.antipode_index[j] = j + h;
    mesh.antipode_index[j + h] = j;
  }
  mesh.verts = mesh.nodes;
  mesh.vert_weights = mesh.weights;
  mesh.vert_antipode = mesh.antipode_index;
  return mesh;
}

namespace {

struct IcoBuilder {
  std::vector<double> verts;      // stride 3
  std::vector<int> ap;            // vertex antipode
  std::vector<std::vector<std::array<int, 3>>> level_faces;
  std::vector<std::vector<std::array<int, 4>>> level_children;

  Eigen::Map<const Eigen::Vector3d> v(int i) const {
    return Eigen::Map<const Eigen::Vector3d>(verts.data() + std::size_t(i) * 3);
  }

  int push_vert(const Eigen::Vector3d& p) {
    verts.insert(verts.end(), {p[0], p[1], p[2]});
    ap.push_back(-1);
    return int(verts.size() / 3) - 1;
  }

  void base() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double nrm = std::sqrt(1.0 + phi * phi);
    const double a = 1.0 / nrm, b = phi / nrm;
    // six representatives; the other six vertices are their exact negations
    const double reps[6][3] = {{a, b, 0},  {-a, b, 0}, {0, a, b},
                               {0, -a, b}, {b, 0, a},  {b, 0, -a}};
    for (auto& r : reps) push_vert(Eigen::Vector3d(r[0], r[1], r[2]));
    for (int i = 0; i < 6; ++i) {
      const int j = push_vert(-v(i).eval());
      ap[i] = j;
      ap[j] = i;
    }
    // recover the 20 faces from the edge graph: edges are the closest pairs
    double min2 = 1e9;
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j)
        min2 = std::min(min2, (v(i) - v(j)).squaredNorm());
    auto adjacent = [&](int i, int j) {
      return (v(i) - v(j)).squaredNorm() < min2 * 1.1;
    };
    std::vector<std::array<int, 3>> faces;
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j)
        for (int k = j + 1; k < 12; ++k)
          if (adjacent(i, j) && adjacent(j, k) && adjacent(i, k)) {
            std::array<int, 3> f{i, j, k};
            if (v(f[0]).dot(v(f[1]).cross(v(f[2]))) < 0) std::swap(f[1], f[2]);
            faces.push_back(f);
          }
    level_faces.push_back(std::move(faces));
  }

  // midpoint vertex of edge (a,b), created on demand; the antipodal edge's
  // midpoint is produced by exact negation so vertex antipodes stay closed
  std::map<std::pair<int, int>, int> edge_mid;
  int midpoint(int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = edge_mid.find(key);
    if (it != edge_mid.end()) return it->second;
    const auto akey = std::minmax(ap[a], ap[b]);
    int id;
    auto ait = edge_mid.find(akey);
    if (ait != edge_mid.end()) {
      id = push_vert(-v(ait->second).eval());
      ap[id] = ait->second;
      ap[ait->second] = id;
    } else {
      id = push_vert((v(a) + v(b)).normalized());
    }
    edge_mid.emplace(key, id);
    return id;
  }

  void subdivide() {
    const auto& parents = level_faces.back();
    std::vector<std::array<int, 3>> kids;
    std::vector<std::array<int, 4>> links;
    kids.reserve(parents.size() * 4);
    links.reserve(parents.size());
    for (const auto& f : parents) {
      const int mab = midpoint(f[0], f[1]);
      const int mbc = midpoint(f[1], f[2]);
      const int mca = midpoint(f[2], f[0]);
      const int base = int(kids.size());
      kids.push_back({f[0], mab, mca});
      kids.push_back({f[1], mbc, mab});
      kids.push_back({f[2], mca, mbc});
      kids.push_back({mab, mbc, mca});
      links.push_back({base, base + 1, base + 2, base + 3});
    }
    level_children.push_back(std::move(links));
    level_faces.push_back(std::move(kids));
  }
};

double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c) {
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

}  // namespace

static SphereMesh make_icosphere_mesh(int resolution) {
  SphereMesh mesh;
  mesh.dim = 2;
  mesh.resolution = resolution;
  mesh.level = std::max(0, int(std::ceil(std::log2(double(resolution) / 6.0))));

  IcoBuilder ib;
  ib.base();
  for (int l = 0; l < mesh.level; ++l) ib.subdivide();

  mesh.verts = std::move(ib.verts);
  mesh.vert_antipode = std::move(ib.ap);
  mesh.level_faces = std::move(ib.level_faces);
  mesh.level_children = std::move(ib.level_children);
  mesh.faces = mesh.level_faces.back();

  const int nf = int(mesh.faces.size());
  const int nv = int(mesh.verts.size() / 3);

  // leaf face antipode pairing via vertex antipodes
  std::map<std::array<int, 3>, int> face_by_verts;
  for (int f = 0; f < nf; ++f) {
    std::array<int, 3> key = mesh.faces[f];
    std::sort(key.begin(), key.end());
    face_by_verts[key] = f;
  }
  std::vector<int> face_ap(nf);
  for (int f = 0; f < nf; ++f) {
    std::array<int, 3> key{mesh.vert_antipode[mesh.faces[f][0]],
                           mesh.vert_antipode[mesh.faces[f][1]],
                           mesh.vert_antipode[mesh.faces[f][2]]};
    std::sort(key.begin(), key.end());
    face_ap[f] = face_by_verts.at(key);
  }

  // quadrature nodes: projected centroids; weights: spherical areas.
  // Centroids of antipodal faces are produced by exact negation.
  mesh.nodes.assign(std::size_t(nf) * 3, 0.0);
  mesh.weights.assign(nf, 0.0);
  mesh.antipode_index = face_ap;
  auto vert3 = [&](int i) {
    return Eigen::Vector3d(mesh.verts[3 * i], mesh.verts[3 * i + 1],
                           mesh.verts[3 * i + 2]);
  };
  for (int f = 0; f < nf; ++f) {
    const auto& fv = mesh.faces[f];
    const Eigen::Vector3d a = vert3(fv[0]), b = vert3(fv[1]), c = vert3(fv[2]);
    const double area = spherical_triangle_area(a, b, c);
    mesh.weights[f] = area;
    if (face_ap[f] < f) {
      for (int d = 0; d < 3; ++d)
        mesh.nodes[3 * f + d] = -mesh.nodes[3 * face_ap[f] + d];
    } else {
      const Eigen::Vector3d ctr = (a + b + c).normalized();
      for (int d = 0; d < 3; ++d) mesh.nodes[3 * f + d] = ctr[d];
    }
  }

  // dual vertex weights (one third of each adjacent face), symmetrized so a
  // vertex and its antipode carry identical mass
  mesh.vert_weights.assign(nv, 0.0);
  for (int f = 0; f < nf; ++f)
    for (int d = 0; d < 3; ++d)
      mesh.vert_weights[mesh.faces[f][d]] += mesh.weights[f] / 3.0;
  for (int i = 0; i < nv; ++i) {
    const int j = mesh.vert_antipode[i];
    if (j > i) {
      const double w = 0.5 * (mesh.vert_weights[i] + mesh.vert_weights[j]);
      mesh.vert_weights[i] = w;
      mesh.vert_weights[j] = w;
    }
  }

  double maxedge = 0.0;
  for (const auto& f : mesh.faces)
    for (int e = 0; e < 3; ++e) {
      const double d = std::clamp(vert3(f[e]).dot(vert3(f[(e + 1) % 3])), -1.0, 1.0);
      maxedge = std::max(maxedge, std::acos(d));
    }
  mesh.spacing = maxedge;
  return mesh;
}

static SphereMesh make_glome_mesh(int resolution) {
  // product grid on S^3: chi (polar from e_4), phi (Gauss-Legendre in cos),
  // theta (uniform).  Volume element sin^2(chi) sin(phi) dchi dphi dtheta.
  SphereMesh mesh;
  mesh.dim = 3;
  int nchi = resolution / 2;
  if (nchi % 2) ++nchi;
  const int np = resolution / 2;
  const int nth = resolution;
  mesh.resolution = resolution;
  mesh.spacing = M_PI / nchi;

  std::vector<double> gc, gw;
  gauss_legendre(np, gc, gw);

  std::vector<double> F(nchi + 1);
  for (int i = 0; i <= nchi; ++i) {
    const double chi = double(i) * M_PI / nchi;
    F[i] = chi / 2.0 - std::sin(2.0 * chi) / 4.0;
  }

  const int total = nchi * np * nth;
  mesh.nodes.assign(std::size_t(total) * 4, 0.0);
  mesh.weights.assign(total, 0.0);
  mesh.antipode_index.assign(total, -1);
  auto idx = [&](int i, int k, int j) { return (i * np + k) * nth + j; };
  for (int i = 0; i < nchi; ++i) {
    const double chimass = F[i + 1] - F[i];
    const double chi = (double(i) + 0.5) * M_PI / nchi;
    const double schi = std::sin(chi), cchi = std::cos(chi);
    for (int k = 0; k < np; ++k) {
      const double cph = gc[k];
      const double sph = std::sqrt(std::max(0.0, 1.0 - cph * cph));
      for (int j = 0; j < nth; ++j) {
        const int me = idx(i, k, j);
        const int pa = idx(nchi - 1 - i, np - 1 - k, (j + nth / 2) % nth);
        mesh.antipode_index[me] = pa;
        if (pa < me) {
          for (int d = 0; d < 4; ++d) mesh.nodes[4 * me + d] = -mesh.nodes[4 * pa + d];
          mesh.weights[me] = mesh.weights[pa];
          continue;
        }
        const double th = (double(j) + 0.5) * (2.0 * M_PI / nth);
        mesh.nodes[4 * me + 0] = schi * sph * std::cos(th);
        mesh.nodes[4 * me + 1] = schi * sph * std::sin(th);
        mesh.nodes[4 * me + 2] = schi * cph;
        mesh.nodes[4 * me + 3] = cchi;
        mesh.weights[me] = chimass * gw[k] * (2.0 * M_PI / nth);
      }
    }
  }
  return mesh;
}

SphereMesh make_sphere_mesh(int dim, int resolution) {
  if (resolution < 4)
    fail(ErrorCode::ConfigError, "sphere mesh resolution must be at least 4");
  switch (dim) {
    case 1: return make_circle_mesh(resolution);
    case 2: return make_icosphere_mesh(resolution);
    case 3: return make_glome_mesh(resolution);
    default:
      fail(ErrorCode::UnsupportedDimension,
           "sphere meshes exist for dimensions 1, 2 and 3, not " +
               std::to_string(dim));
  }
}

// barycentric coordinates of the ray through x w.r.t. the planar triangle
static void bary_coords(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Eigen::Vector3d& c, const Eigen::Vector3d& x,
                        std::array<double, 3>& out) {
  const Eigen::Vector3d bc = b.cross(c), ca = c.cross(a), ab = a.cross(b);
  const double det = a.dot(bc);
  out[0] = x.dot(bc) / det;
  out[1] = x.dot(ca) / det;
  out[2] = x.dot(ab) / det;
}

int SphereMesh::locate(const Vec& x, std::array<double, 3>& bary) const {
  if (dim != 2)
    fail(ErrorCode::UnsupportedDimension, "locate is only defined on the 2-sphere");
  const Eigen::Vector3d p(x[0], x[1], x[2]);
  auto vert3 = [&](int i) {
    return Eigen::Vector3d(verts[3 * i], verts[3 * i + 1], verts[3 * i + 2]);
  };
  auto score = [&](const std::array<int, 3>& f, std::array<double, 3>& b) {
    bary_coords(vert3(f[0]), vert3(f[1]), vert3(f[2]), p, b);
    return std::min({b[0], b[1], b[2]});
  };

  int cur = 0;
  {
    double best = -1e300;
    std::array<double, 3> b;
    for (int f = 0; f < int(level_faces[0].size()); ++f) {
      const double s = score(level_faces[0][f], b);
      if (s > best) {
        best = s;
        cur = f;
        bary = b;
      }
    }
  }
  for (std::size_t l = 0; l < level_children.size(); ++l) {
    double best = -1e300;
    int pick = -1;
    std::array<double, 3> b;
    for (int ci : level_children[l][cur]) {
      const double s = score(level_faces[l + 1][ci], b);
      if (s > best) {
        best = s;
        pick = ci;
        bary = b;
      }
    }
    cur = pick;
  }
  double sum = 0.0;
  for (double& v : bary) {
    v = std::max(v, 0.0);
    sum += v;
  }
  for (double& v : bary) v /= sum;
  return cur;
}

// ---------------------------------------------------------------------------
// cylinder

CylinderMesh make_cylinder_mesh(int resolution) {
  if (resolution < 4)
    fail(ErrorCode::ConfigError, "cylinder mesh resolution must be at least 4");
  CylinderMesh mesh;
  mesh.resolution = resolution;
  const int nr = resolution;
  const int na = 4 * resolution;  // even, so antipodal angles are grid angles
  const int nz = 2 * resolution;

  std::vector<double> rmid, rmass;
  radial_cells(nr, 2, 0.0, rmid, rmass);

  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < na; ++j) {
      const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
      const double cx = rmid[i] * std::cos(th), cy = rmid[i] * std::sin(th);
      for (int k = 0; k < nz; ++k) {
        const double z = -1.0 + (double(k) + 0.5) * (2.0 / nz);
        mesh.nodes.insert(mesh.nodes.end(), {cx, cy, z});
        mesh.weights.push_back(rmass[i] * (2.0 * M_PI / na) * (2.0 / nz));
      }
    }

  // top disk at z = +1; bottom is its exact pointwise negation
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < na; ++j) {
      const double th = (double(j) + 0.5) * (2.0 * M_PI / na);
      mesh.top.nodes.insert(mesh.top.nodes.end(),
                            {rmid[i] * std::cos(th), rmid[i] * std::sin(th), 1.0});
      mesh.top.weights.push_back(rmass[i] * (2.0 * M_PI / na));
    }
  mesh.bottom.nodes.resize(mesh.top.nodes.size());
  mesh.bottom.weights = mesh.top.weights;
  for (std::size_t t = 0; t < mesh.top.nodes.size(); ++t)
    mesh.bottom.nodes[t] = -mesh.top.nodes[t];

  // side wall, line-major: all vertical samples of one angle in a row
  mesh.angular_count = na;
  mesh.vertical_count = nz;
  mesh.side.nodes.assign(std::size_t(na) * nz * 3, 0.0);
  mesh.side.weights.assign(std::size_t(na) * nz, (2.0 * M_PI / na) * (2.0 / nz));
  for (int a = 0; a < na; ++a)
    for (int k = 0; k < nz; ++k) {
      const std::size_t s = std::size_t(a) * nz + k;
      if (a >= na / 2) {
        const std::size_t pa = std::size_t(a - na / 2) * nz + (nz - 1 - k);
        for (int d = 0; d < 3; ++d)
          mesh.side.nodes[3 * s + d] = -mesh.side.nodes[3 * pa + d];
        continue;
      }
      const double th = (double(a) + 0.5) * (2.0 * M_PI / na);
      mesh.side.nodes[3 * s + 0] = std::cos(th);
      mesh.side.nodes[3 * s + 1] = std::sin(th);
      mesh.side.nodes[3 * s + 2] = -1.0 + (double(k) + 0.5) * (2.0 / nz);
    }

  const int nt = mesh.top.count();
  const int ns = mesh.side.count();
  mesh.boundary_antipode.resize(2 * nt + ns);
  for (int t = 0; t < nt; ++t) {
    mesh.boundary_antipode[t] = nt + t;
    mesh.boundary_antipode[nt + t] = t;
  }
  for (int a = 0; a < na; ++a)
    for (int k = 0; k < nz; ++k) {
      const int s = a * nz + k;
      const int pa = ((a + na / 2) % na) * nz + (nz - 1 - k);
      mesh.boundary_antipode[2 * nt + s] = 2 * nt + pa;
    }
  return mesh;
}

Eigen::Map<const Vec> CylinderMesh::boundary_node(int g) const {
  const int nt = top.count();
  if (g < nt) return top.node(g);
  if (g < 2 * nt) return bottom.node(g - nt);
  return side.node(g - 2 * nt);
}

}  // namespace stokes
