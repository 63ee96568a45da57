#include "stokes/constructions.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "stokes/errors.hpp"

using namespace stokes;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

// point at latitude l and longitude phi over the pole e3
Vec sph(double l, double phi) {
  return vec3(std::cos(l) * std::cos(phi), std::cos(l) * std::sin(phi),
              std::sin(l));
}

MapPtr identity_map(int n, Domain dom) {
  return make_map(n, n, dom, [n](const double* x, double* y) {
    for (int i = 0; i < n; ++i) y[i] = x[i];
  });
}

}  // namespace

TEST_CASE("boundary retraction projects along the ray from f(x) through x") {
  // constant center: the retraction is radial projection
  auto zero = make_map(2, 2, Domain::Disk2, [](const double*, double* y) {
    y[0] = 0.0;
    y[1] = 0.0;
  });
  auto radial = boundary_retraction(zero);
  const Vec g = radial->eval_unchecked(vec2(0.3, -0.4));
  CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(-0.8).epsilon(1e-12));

  // a generic contraction: the output is unit, on the ray, past x
  auto f = make_map(2, 2, Domain::Disk2, [](const double* x, double* y) {
    y[0] = 0.4 * x[1] + 0.2;
    y[1] = -0.3 * x[0] - 0.1;
  });
  auto r = boundary_retraction(f);
  for (int i = 0; i < 40; ++i) {
    const double a = 2.0 * kPi * i / 40.0;
    for (double rad : {0.0, 0.35, 0.8, 1.0}) {
      const Vec x = vec2(rad * std::cos(a), rad * std::sin(a));
      const Vec fx = f->eval_unchecked(x);
      const Vec gx = r->eval_unchecked(x);
      CHECK(std::abs(gx.norm() - 1.0) <= 1e-12);
      const Vec d = x - fx;
      const double t = (gx - x).dot(d) / d.squaredNorm();
      CHECK(t >= -1e-15);                       // exits forward
      CHECK((gx - x - t * d).norm() <= 1e-12);  // stays on the ray
    }
    // the boundary is fixed
    const Vec bx = vec2(std::cos(a), std::sin(a));
    CHECK((r->eval_unchecked(bx) - bx).norm() <= 1e-12);
  }

  // a fixed point is reported as the witness, not hidden
  auto idm = identity_map(2, Domain::Disk2);
  auto rid = boundary_retraction(idm);
  try {
    rid->eval_unchecked(vec2(0.25, 0.1));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FixedPointEncountered);
    REQUIRE(e.witness().has_value());
    CHECK((*e.witness() - vec2(0.25, 0.1)).norm() <= 1e-15);
  }

  auto uneven = make_map(2, 3, Domain::Disk2, [](const double* x, double* y) {
    y[0] = x[0];
    y[1] = x[1];
    y[2] = 0.0;
  });
  CHECK_THROWS_AS((void)boundary_retraction(uneven), Error);
}

TEST_CASE("odd normalization is odd bitwise and unit valued") {
  auto f = make_map(3, 3, Domain::Sphere2, [](const double* x, double* y) {
    y[0] = x[0] * x[0] + 0.1;
    y[1] = x[1];
    y[2] = 0.5 * x[2] + 0.2 * x[0];
  });
  auto h = odd_normalize(f);
  for (int i = 0; i < 25; ++i) {
    const Vec x = sph(-0.9 + 0.07 * i, 2.4 * i);
    const Vec hx = h->eval_unchecked(x);
    const Vec hmx = h->eval_unchecked(Vec(-x));
    CHECK(std::abs(hx.norm() - 1.0) <= 1e-12);
    for (int k = 0; k < 3; ++k) CHECK(hmx[k] == -hx[k]);  // exact negation
  }

  // even part drops out: only the x2 term survives here
  auto g = make_map(3, 3, Domain::Sphere2, [](const double* x, double* y) {
    y[0] = x[0] * x[0];
    y[1] = x[1];
    y[2] = 0.5;
  });
  const Vec v = odd_normalize(g)->eval_unchecked(sph(0.3, 1.0));
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(std::abs(v[1]) == doctest::Approx(1.0));
  CHECK(v[2] == doctest::Approx(0.0));

  auto constant = make_map(3, 3, Domain::Sphere2, [](const double*, double* y) {
    y[0] = 0.6;
    y[1] = 0.0;
    y[2] = 0.8;
  });
  auto hc = odd_normalize(constant);
  try {
    hc->eval_unchecked(sph(0.1, 0.2));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoincidenceEncountered);
    CHECK(e.witness().has_value());
  }
}

TEST_CASE("hemisphere restriction samples the upper sheet in disk coordinates") {
  auto id3 = identity_map(3, Domain::Sphere2);
  auto disk = upper_hemisphere_to_disk(id3);
  CHECK(disk->in_dim() == 2);
  CHECK(disk->out_dim() == 3);
  CHECK(disk->domain() == Domain::Disk2);

  const Vec mid = disk->eval_unchecked(vec2(0.3, -0.4));
  CHECK(mid[0] == doctest::Approx(0.3));
  CHECK(mid[1] == doctest::Approx(-0.4));
  CHECK(mid[2] == doctest::Approx(std::sqrt(1.0 - 0.25)));

  // the disk boundary samples the equator
  const Vec edge = disk->eval_unchecked(vec2(0.6, 0.8));
  CHECK(edge[2] == doctest::Approx(0.0));
}

TEST_CASE("separation profile pins the shadow band") {
  const double eps = 0.2;
  const std::vector<Vec> empty;
  CHECK(separation_profile(empty, eps, vec2(1, 0)) == 0.0);

  std::vector<Vec> shadow = {vec2(1, 0)};
  const double lo = -(kPi / 2 - eps);
  CHECK(separation_profile(shadow, eps, vec2(1, 0)) ==
        doctest::Approx(lo).epsilon(1e-12));
  CHECK(separation_profile(shadow, eps, vec2(-1, 0)) ==
        doctest::Approx(-lo).epsilon(1e-12));
  CHECK(separation_profile(shadow, eps, vec2(0, 1)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // odd in the evaluation point
  for (int i = 1; i < 12; ++i) {
    const double a = 0.5 * i;
    const Vec x = vec2(std::cos(a), std::sin(a));
    const double p = separation_profile(shadow, eps, x);
    const double m = separation_profile(shadow, eps, Vec(-x));
    CHECK(p + m == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(std::abs(p) <= kPi / 2 - eps + 1e-12);
  }

  // a point in both the shadow set and its antipodal image
  std::vector<Vec> clash = {vec2(1, 0), vec2(-1, 0)};
  try {
    separation_profile(clash, eps, vec2(1, 0));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSeparated);
  }
}

TEST_CASE("latitude stretch table translates diffeomorphically") {
  const double eps = 0.2;
  const double a = kPi / 2 - eps / 2, c = kPi / 2 - eps / 4;
  const LatitudeTable table(a, c);

  // closed form in the untapered zone
  for (double l = -a; l <= a; l += 0.1) {
    CHECK(table.value(l) ==
          doctest::Approx(std::asinh(std::tan(l))).epsilon(1e-14));
    CHECK(table.inverse(table.value(l)) == doctest::Approx(l).epsilon(1e-12));
  }

  // monotone and invertible through the taper
  double prev = table.value(a);
  for (double l = a + 1e-4; l < table.frozen(); l += 1e-3) {
    const double v = table.value(l);
    CHECK(v > prev);
    prev = v;
    CHECK(table.inverse(v) == doctest::Approx(l).epsilon(1e-9));
  }

  // shifts compose additively and mirror bitwise
  for (double l : {-1.2, -0.4, 0.0, 0.3, 1.0, 1.45}) {
    CHECK(table.shifted(l, 0.0) == l);
    const double one = table.shifted(table.shifted(l, 0.7), -0.2);
    const double two = table.shifted(l, 0.5);
    CHECK(one == doctest::Approx(two).epsilon(1e-9));
    CHECK(table.shifted(-l, -0.5) == -table.shifted(l, 0.5));
  }

  // the caps do not move
  CHECK(table.shifted(table.frozen(), 3.0) == table.frozen());
  CHECK(table.shifted(-c, -2.0) == -c);

  CHECK_THROWS_AS(LatitudeTable(1.0, 0.9), Error);
}

TEST_CASE("clearing family on the 2-sphere moves one blob above the equator") {
  const double eps = 0.2;
  const Pole B(vec3(0, 0, 1));
  const Vec x0 = sph(-0.3, 0.7);
  const DiffeoFamily fam =
      hemisphere_clearing_family({x0}, B, eps);
  CHECK(!fam.is_identity());
  CHECK(fam.eps() == eps);

  // time zero is the identity bitwise, caps are fixed bitwise
  const Vec probe = sph(0.4, 2.0);
  CHECK((fam.apply(0.0, probe) - probe).norm() == 0.0);
  const Vec nearpole = sph(kPi / 2 - 1e-3, 0.3);
  CHECK((fam.apply(1.0, nearpole) - nearpole).norm() == 0.0);

  for (double t : {0.25, 0.6, 1.0}) {
    for (int i = 0; i < 24; ++i) {
      const Vec x = sph(-1.3 + 0.11 * i, 2.7 * i);
      const Vec y = fam.apply(t, x);
      CHECK(std::abs(y.norm() - 1.0) <= 1e-12);
      // meridians are preserved
      const Vec sx = meridian_project(x, B);
      const Vec sy = meridian_project(y, B);
      CHECK((sx - sy).norm() <= 1e-9);
      // the family is a bijection: undo it
      CHECK((fam.apply_inverse(t, y) - x).norm() <= 1e-9);
      // and equivariant
      CHECK((fam.apply(t, Vec(-x)) + y).norm() <= 1e-9);
    }
  }

  // the equator lands at exactly t times the profile latitude
  for (double t : {0.3, 1.0}) {
    for (double phi : {0.0, 0.7, 2.0, 4.4}) {
      const Vec e = sph(0.0, phi);
      double th;
      fam.profile().eval_into(vec2(std::cos(phi), std::sin(phi)).data(), &th);
      CHECK(latitude(fam.apply(t, e), B) ==
            doctest::Approx(t * th).epsilon(1e-9));
    }
  }

  // latitudes translate monotonically along each meridian
  double prev = -10.0;
  for (double l = -1.45; l <= 1.45; l += 0.05) {
    const double moved = latitude(fam.apply(1.0, sph(l, 0.7)), B);
    CHECK(moved > prev);
    prev = moved;
  }

  // the blob ends up strictly above the equator
  CHECK(latitude(fam.apply_inverse(1.0, x0), B) > 0.0);

  // identity family: no profile to hand out
  const DiffeoFamily idf = DiffeoFamily::identity(B, eps);
  CHECK(idf.is_identity());
  CHECK((idf.apply(1.0, probe) - probe).norm() == 0.0);
  CHECK_THROWS_AS((void)idf.profile(), Error);
}

TEST_CASE("clearing family rejects inadmissible blobs") {
  const double eps = 0.2;
  const Pole B(vec3(0, 0, 1));

  // empty set: the identity family
  CHECK(hemisphere_clearing_family({}, B, eps).is_identity());

  const Vec x0 = sph(-0.3, 0.7);
  try {
    hemisphere_clearing_family({x0, Vec(-x0)}, B, eps);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeridianConditionViolated);
  }

  try {
    hemisphere_clearing_family({sph(1.45, 0.0)}, B, eps);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeridianConditionViolated);
  }

  // shadows of X and -X too close for the equator mesh
  try {
    hemisphere_clearing_family({sph(-0.2, 0.0), Vec(-sph(0.25, 0.004))}, B,
                               eps);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSeparated);
  }

  try {
    hemisphere_clearing_family({vec3(1.1, 0, 0)}, B, eps);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
}

TEST_CASE("clearing family on the 3-sphere") {
  const double eps = 0.2;
  const Pole B(vec4(0, 0, 0, 1));
  const double l0 = -0.25;
  const Vec u0 = vec3(std::cos(0.5), std::sin(0.5) * 0.6, std::sin(0.5) * 0.8);
  const Vec x0 = vec4(std::cos(l0) * u0[0], std::cos(l0) * u0[1],
                      std::cos(l0) * u0[2], std::sin(l0));
  const DiffeoFamily fam = hemisphere_clearing_family({x0}, B, eps);
  CHECK(!fam.is_identity());
  CHECK(fam.domain() == Domain::Sphere3);

  const Vec probe =
      vec4(0.5, -0.5, 0.5, std::sqrt(1.0 - 0.75));
  CHECK((fam.apply(0.0, probe) - probe).norm() == 0.0);
  for (double t : {0.5, 1.0}) {
    const Vec y = fam.apply(t, probe);
    CHECK(std::abs(y.norm() - 1.0) <= 1e-12);
    CHECK((fam.apply_inverse(t, y) - probe).norm() <= 1e-9);
    CHECK((fam.apply(t, Vec(-probe)) + y).norm() <= 1e-9);
  }
  CHECK(latitude(fam.apply_inverse(1.0, x0), B) > 0.0);
}

TEST_CASE("hemisphere-preserving replacement of the identity") {
  const Pole A(vec3(0, 0, 1));
  const DiffeoFamily psi = DiffeoFamily::identity(A, 0.2);
  auto id3 = identity_map(3, Domain::Sphere2);
  const double r = 0.05;
  const HemispherePreserving hp =
      make_hemisphere_preserving(*id3, psi, A, r, 384);

  CHECK(hp.d == doctest::Approx(kPi / 2).epsilon(1e-9));
  CHECK(hp.r == r);
  // the farthest the strip can swing from the input is pi/2 - r
  CHECK(hp.margin_raw >= kPi / 2 + r - 1e-12);
  CHECK(hp.margin_raw <= kPi / 2 + r + 0.7);
  CHECK(hp.margin > 1.0);

  const SphereMesh& mesh = hp.map.mesh();
  // exactly odd at the vertices, near-odd everywhere
  for (int v = 0; v < mesh.vert_count(); v += 7) {
    const int av = mesh.vert_antipode[v];
    for (int k = 0; k < 3; ++k)
      CHECK(hp.map.value(v, k) == -hp.map.value(av, k));
  }
  CHECK(equivariance_defect(hp.map, mesh) <= 1e-9);

  // latitude signs survive away from the equator, caps collapse to the poles
  int strip = 0, caps = 0;
  double minchord = 10.0;
  for (int v = 0; v < mesh.vert_count(); ++v) {
    const Vec x = mesh.vert(v);
    const double l = latitude(x, A);
    const Vec w = vec3(hp.map.value(v, 0), hp.map.value(v, 1),
                       hp.map.value(v, 2));
    if (std::abs(l) > mesh.spacing) {
      CHECK(latitude(w, A) * l > 0.0);
      ++strip;
    }
    if (std::abs(l) >= hp.r + 0.025 + 1e-12) {
      CHECK((w - (l > 0 ? Vec(A.vec()) : Vec(-A.vec()))).norm() <= 1e-12);
      ++caps;
    }
    minchord = std::min(minchord, (w + x).norm());  // against g* = identity
  }
  CHECK(strip > 1000);
  CHECK(caps > 1000);
  CHECK(minchord > 0.5);  // the separation invariant, chordal form

  // the equator maps near the equator (interpolation wobble only)
  for (double phi : {0.3, 1.1, 2.9, 5.0}) {
    const Vec w = hp.map.eval_unchecked(sph(0.0, phi));
    CHECK(std::abs(latitude(w, A)) <= 0.05);
  }
}

TEST_CASE("replacement rejects drifting strips, lost separation, uneven maps") {
  const Pole A(vec3(0, 0, 1));
  const DiffeoFamily psi = DiffeoFamily::identity(A, 0.2);

  // equator values drift too fast across the strip
  auto twist = make_map(3, 3, Domain::Sphere2, [](const double* x, double* y) {
    const double ang = 100.0 * x[2] * x[2];
    const double cs = std::cos(ang), sn = std::sin(ang);
    y[0] = cs * x[0] - sn * x[1];
    y[1] = sn * x[0] + cs * x[1];
    y[2] = x[2];
  });
  try {
    make_hemisphere_preserving(*twist, psi, A, 0.05, 384);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StripTooWide);
  }

  // a rotation dragging part of the upper hemisphere onto -A: the cap value
  // A lands antipodal to g* somewhere and the margin collapses
  const double al = -(kPi / 2 + 0.3);
  auto swing = make_map(3, 3, Domain::Sphere2, [al](const double* x, double* y) {
    const double cs = std::cos(al), sn = std::sin(al);
    y[0] = x[0];
    y[1] = cs * x[1] - sn * x[2];
    y[2] = sn * x[1] + cs * x[2];
  });
  try {
    make_hemisphere_preserving(*swing, psi, A, 0.01, 384);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationLost);
  }

  // non-equivariant input is refused up front
  auto lopsided =
      make_map(3, 3, Domain::Sphere2, [](const double* x, double* y) {
        const double n = std::sqrt((x[0] + 0.3) * (x[0] + 0.3) +
                                   x[1] * x[1] + x[2] * x[2]);
        y[0] = (x[0] + 0.3) / n;
        y[1] = x[1] / n;
        y[2] = x[2] / n;
      });
  try {
    make_hemisphere_preserving(*lopsided, psi, A, 0.05, 96);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
}

TEST_CASE("graft interpolates its three shells and smooths the seams") {
  const Pole B(vec3(0, 0, 1));
  const DiffeoFamily psi = hemisphere_clearing_family({sph(-0.3, 0.7)}, B, 0.2);
  auto g = identity_map(3, Domain::Sphere2);
  auto fhat = make_map(3, 3, Domain::Disk3, [](const double* x, double* y) {
    const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] +
                               (x[2] + 2.0) * (x[2] + 2.0));
    y[0] = x[0] / n;
    y[1] = x[1] / n;
    y[2] = (x[2] + 2.0) / n;
  });
  // the clearing family drags strip meridians almost to the poles, so the
  // drift budget forces a thin strip here
  const HemispherePreserving hp =
      make_hemisphere_preserving(*g, psi, Pole(vec3(0, 0, 1)), 0.008, 96);
  const double w = 0.02;
  auto F = graft(fhat, psi, g, hp.map, w);
  CHECK(F->domain() == Domain::Disk3);

  // center value is the core map at the origin
  CHECK((F->eval_unchecked(vec3(0, 0, 0)) -
         fhat->eval_unchecked(vec3(0, 0, 0))).norm() <= 1e-12);

  const Vec x = vec3(0.3, -0.5, 0.8).normalized();

  // clear of the seams each shell evaluates its own piece
  const Vec core = F->eval_unchecked(Vec(0.2 * x));
  CHECK((core - fhat->eval_unchecked(Vec(0.6 * x))).norm() <= 1e-12);
  const Vec middle = F->eval_unchecked(Vec(0.5 * x));
  CHECK((middle - psi.apply(0.5, x)).norm() <= 1e-12);
  const Vec littler = F->eval_unchecked(Vec((1.0 / 3.0 - 1.5 * w) * x));
  CHECK((littler - fhat->eval_unchecked(Vec(3.0 * (1.0 / 3.0 - 1.5 * w) * x)))
            .norm() <= 1e-12);

  // the boundary sphere carries the replacement exactly
  const Vec top = F->eval_unchecked(x);
  Vec expect(3);
  hp.map.eval_into(x.data(), expect.data());
  CHECK((top - expect).norm() <= 1e-12);

  // the raw pieces jump at the inner seam; the graft spreads that jump
  // across the band instead
  const double jump =
      (fhat->eval_unchecked(x) - psi.apply(0.0, x)).norm();
  CHECK(jump > 0.1);
  double maxstep = 0.0;
  Vec prev;
  int steps = 0;
  for (double t = 1.0 / 3.0 - 2.0 * w; t <= 1.0 / 3.0 + 2.0 * w; t += 5e-4) {
    const Vec v = F->eval_unchecked(Vec(t * x));
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    if (steps++) maxstep = std::max(maxstep, (v - prev).norm());
    prev = v;
  }
  CHECK(maxstep < 0.25 * jump);

  // an antipodal boundary replacement cancels the blend midway out
  GridMap bad = GridMap::tabulate(
      *make_map(3, 3, Domain::Sphere2,
                [&psi](const double* x2, double* y2) {
                  Eigen::Map<const Vec> xv(x2, 3);
                  Eigen::Map<Vec>(y2, 3) = -psi.apply(1.0, Vec(xv));
                }),
      hp.map.mesh_ptr(), true);
  auto Fbad = graft(fhat, psi, g, bad, w);
  // along a vertex direction the tabulated value is exact and the blend
  // cancels exactly halfway through the outer shell
  const Vec vdir = hp.map.mesh().vert(17);
  try {
    Fbad->eval_unchecked(Vec((5.0 / 6.0) * vdir));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DenominatorVanishes);
    CHECK(e.witness().has_value());
  }
}

TEST_CASE("cylinder collapse flattens the wall onto the equator") {
  auto q = cylinder_collapse();
  CHECK(q->domain() == Domain::Cylinder);

  // the axis maps to itself
  for (double z : {-1.0, -0.4, 0.0, 0.7, 1.0})
    CHECK((q->eval_unchecked(vec3(0, 0, z)) - vec3(0, 0, z)).norm() <= 1e-12);

  // vertical wall lines land on single equator points
  for (double a : {0.0, 0.9, 2.2, 4.0, 5.8}) {
    const Vec target = vec3(std::cos(a), std::sin(a), 0.0);
    for (double z = -1.0; z <= 1.0; z += 0.125) {
      const Vec v = q->eval_unchecked(vec3(std::cos(a), std::sin(a), z));
      CHECK((v - target).norm() <= 1e-12);
    }
  }

  // faces cover their closed hemispheres; the outer annulus sits on the
  // equator and the centers reach the poles
  for (double rho : {0.0, 0.2, 0.5, 0.8, 0.97}) {
    const Vec up = q->eval_unchecked(vec3(rho, 0, 1.0));
    CHECK(std::abs(up.norm() - 1.0) <= 1e-12);
    CHECK(up[2] >= 0.0);
    const Vec dn = q->eval_unchecked(vec3(0, rho, -1.0));
    CHECK(dn[2] <= 0.0);
  }
  CHECK(q->eval_unchecked(vec3(0.97, 0, 1.0))[2] == 0.0);
  CHECK((q->eval_unchecked(vec3(0, 0, 1)) - vec3(0, 0, 1)).norm() <= 1e-12);

  // odd on the boundary surface
  for (int i = 0; i < 30; ++i) {
    const double a = 0.21 * i;
    Vec p;
    if (i % 3 == 0)
      p = vec3(std::cos(a), std::sin(a), -1.0 + 2.0 * (i % 7) / 6.0);
    else
      p = vec3(0.9 * std::cos(a) * (i % 5) / 4.0,
               0.9 * std::sin(a) * (i % 5) / 4.0, (i % 3 == 1) ? 1.0 : -1.0);
    const Vec v = q->eval_unchecked(p);
    const Vec vm = q->eval_unchecked(Vec(-p));
    CHECK((vm + v).norm() <= 1e-8);
  }

  // interior values stay in the ball and cross the corner cone continuously
  Vec prev;
  int steps = 0;
  double maxstep = 0.0;
  for (double z = 0.3; z <= 0.7; z += 1e-3) {
    const Vec v = q->eval_unchecked(vec3(0.5, 0, z));
    CHECK(v.norm() <= 1.0 + 1e-12);
    if (steps++) maxstep = std::max(maxstep, (v - prev).norm());
    prev = v;
  }
  CHECK(maxstep <= 0.01);
  CHECK(q->eval_unchecked(vec3(0, 0, 0)).norm() == 0.0);
}

TEST_CASE("cylinder boundary profile wraps the sphere onto the shell") {
  auto s = cylinder_boundary_profile();
  CHECK(s->domain() == Domain::Sphere2);

  // equator onto the wall midline, poles onto the face centers
  for (double phi : {0.0, 1.2, 3.3, 5.1}) {
    const Vec v = s->eval_unchecked(sph(0.0, phi));
    CHECK((v - vec3(std::cos(phi), std::sin(phi), 0.0)).norm() <= 1e-12);
  }
  CHECK((s->eval_unchecked(vec3(0, 0, 1)) - vec3(0, 0, 1)).norm() == 0.0);
  CHECK((s->eval_unchecked(vec3(0, 0, -1)) - vec3(0, 0, -1)).norm() == 0.0);

  // low latitudes stay on the wall with the first two coordinates on the
  // unit circle exactly; high latitudes pin the third coordinate
  for (double l = -kPi / 4 + 1e-9; l <= kPi / 4; l += 0.05) {
    const Vec v = s->eval_unchecked(sph(l, 0.8));
    CHECK(std::abs(v[0] * v[0] + v[1] * v[1] - 1.0) <= 1e-14);
    CHECK(std::abs(v[2]) <= 1.0 + 1e-15);
  }
  for (double l = kPi / 4 + 1e-6; l < kPi / 2; l += 0.04) {
    CHECK(s->eval_unchecked(sph(l, 2.0))[2] == 1.0);
    CHECK(s->eval_unchecked(sph(-l, 2.0))[2] == -1.0);
  }

  // odd, and continuous toward the poles
  for (int i = 1; i < 20; ++i) {
    const Vec x = sph(-1.5 + 0.157 * i, 1.9 * i);
    CHECK((s->eval_unchecked(Vec(-x)) + s->eval_unchecked(x)).norm() <= 1e-14);
  }
  const Vec near_pole = s->eval_unchecked(sph(kPi / 2 - 1e-3, 0.4));
  CHECK((near_pole - vec3(0, 0, 1)).norm() <= 2e-3);
}

TEST_CASE("cylinder transfer keeps wall lines constant and face signs") {
  auto idball = identity_map(3, Domain::Disk3);
  auto F = cylinder_transfer(idball, 12);
  CHECK(F->domain() == Domain::Cylinder);

  // wall lines carry the equator values of the profile
  for (double a : {0.3, 1.7, 3.9}) {
    const Vec expect = vec3(std::cos(a), std::sin(a), 0.0);
    for (double z : {-1.0, 0.2, 1.0})
      CHECK((F->eval_unchecked(vec3(std::cos(a), std::sin(a), z)) - expect)
                .norm() <= 1e-12);
  }

  // equivariance across the whole boundary surface
  const CylinderMesh mesh = make_cylinder_mesh(12);
  for (int gidx = 0; gidx < mesh.boundary_count(); ++gidx) {
    const Vec p = mesh.boundary_node(gidx);
    const Vec pa = mesh.boundary_node(mesh.boundary_antipode[gidx]);
    CHECK((F->eval_unchecked(pa) + F->eval_unchecked(p)).norm() <= 1e-8);
  }

  // a map pushing everything upward violates the face sign check
  auto shifted = make_map(3, 3, Domain::Disk3, [](const double* x, double* y) {
    const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] +
                               (x[2] + 2.0) * (x[2] + 2.0));
    y[0] = x[0] / n;
    y[1] = x[1] / n;
    y[2] = (x[2] + 2.0) / n;
  });
  try {
    cylinder_transfer(shifted, 12);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HemispherePreservationViolated);
  }
}

TEST_CASE("dimensional reduction from the 2-sphere to the circle") {
  // preimage of A: the upper half of the small circle x1 = 0.9
  auto f = make_map(3, 2, Domain::Sphere2, [](const double* x, double* y) {
    const double u = x[1], v = x[0] - 0.9;
    const double n = std::hypot(u, v);
    y[0] = u / n;
    y[1] = v / n;
  });
  PoleSelection poles{Pole(vec2(1, 0)), Pole(vec3(0, 0, 1))};
  const ReduceResult res = reduce_dimension(f, poles);
  CHECK(res.captured >= 20);
  CHECK(!res.family.is_identity());
  CHECK(res.map->in_dim() == 2);
  CHECK(res.map->out_dim() == 1);

  // the reduced map takes unit values in the equator frame of A, and a
  // continuous map from the circle to two points is constant: the defect
  // below is the dimension-one contradiction in numeric form
  const double first =
      res.map->eval_unchecked(vec2(1, 0))[0];
  CHECK(std::abs(std::abs(first) - 1.0) <= 1e-12);
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * kPi * i / 64.0;
    const Vec v = res.map->eval_unchecked(vec2(std::cos(a), std::sin(a)));
    CHECK(v[0] == doctest::Approx(first).epsilon(1e-12));
  }
  CHECK(res.odd_defect == doctest::Approx(2.0).epsilon(1e-9));

  // with a generous pole tolerance the deformed equator counts as a hit
  ReduceParams loose;
  loose.pole_tol = 0.5;
  try {
    reduce_dimension(f, poles, loose);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PoleHit);
  }

  ReduceParams badcap;
  badcap.capture = -1.0;
  CHECK_THROWS_AS(reduce_dimension(f, poles, badcap), Error);
  PoleSelection wrong{Pole(vec3(1, 0, 0)), Pole(vec3(0, 0, 1))};
  CHECK_THROWS_AS(reduce_dimension(f, wrong), Error);
}

TEST_CASE("dimensional reduction from the 3-sphere to the 2-sphere") {
  // project onto three axes of a generic orthonormal frame and renormalize.
  // Keeping the frame away from the mesh's coordinate planes keeps stray
  // nodes off the singular circle, so the captured tube truncates cleanly.
  const double s30 = std::sqrt(30.0);
  const Vec a = vec4(1, 2, 3, 4) / s30;
  const Vec b = vec4(2, -1, 4, -3) / s30;
  const Vec c = vec4(3, -4, -1, 2) / s30;
  auto f = make_map(4, 3, Domain::Sphere3, [a, b, c](const double* x,
                                                     double* y) {
    Eigen::Map<const Vec> xv(x, 4);
    const double u = a.dot(xv), v = b.dot(xv), w = c.dot(xv);
    const double n = std::sqrt(u * u + v * v + w * w);
    y[0] = u / n;
    y[1] = v / n;
    y[2] = w / n;
  });
  PoleSelection poles{Pole(vec3(1, 0, 0)), Pole(b)};
  ReduceParams params;
  params.capture = 0.15;
  params.eps = 0.3;
  const ReduceResult res = reduce_dimension(f, poles, params);
  CHECK(res.captured >= 5);
  CHECK(!res.family.is_identity());
  CHECK(res.map->in_dim() == 3);
  CHECK(res.map->out_dim() == 2);

  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double a = 0.7 * i, b = 1.3 * i;
    const Vec u = vec3(std::cos(a) * std::cos(b), std::cos(a) * std::sin(b),
                       std::sin(a)).normalized();
    const Vec v = res.map->eval_unchecked(u);
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    worst = std::max(
        worst, (res.map->eval_unchecked(Vec(-u)) + v).norm());
  }
  // the input is equivariant, so the reduced map is too
  CHECK(worst <= 1e-6);
  CHECK(res.odd_defect <= 1e-6);
}
