#pragma once

#include <memory>
#include <vector>

#include "stokes/mapexpr.hpp"

namespace stokes {

// Poles picked for the dimensional reduction: A on the target sphere,
// B on the domain sphere.
struct PoleSelection {
  Pole A;
  Pole B;
};

// ---------------------------------------------------------------------------
// pointwise constructions

// g(x) = x + t*(x)(x - f(x)) with the nonnegative root t* of |g(x)| = 1: the
// point where the ray from f(x) through x exits the ball.  Restricted to
// |x| = 1 this is the identity.  Evaluation throws FixedPointEncountered
// (witness x) when |f(x) - x| < delta; that witness is the quantity the
// audit is after, not a malfunction.
MapPtr boundary_retraction(MapPtr f, double delta = 1e-6);

// x -> (f(x) - f(-x)) / |f(x) - f(-x)|.  Odd by algebra (the two evaluations
// are reused with swapped sign), unit norm by construction.  Evaluation
// throws CoincidenceEncountered (witness x) when the difference drops
// below delta.
MapPtr odd_normalize(MapPtr f, double delta = 1e-6);

// Restriction of a sphere map to the closed upper hemisphere in disk
// coordinates: u -> f(u, +sqrt(1 - |u|^2)).  Points with |u| = 1 sample the
// equator, so boundary equivariance of f transfers to the disk boundary.
MapPtr upper_hemisphere_to_disk(MapPtr f);

// ---------------------------------------------------------------------------
// equator clearing

// Raw latitude profile driven by the meridian shadows of a point set:
//   theta(x) = (pi/2 - eps) (d+ - d-) / (d+ + d-),
// where d+/d- are geodesic distances from x to the shadow set and to its
// antipodal image, both subsets of the equator sphere containing x.
// Odd in x; equals -pi/2 + eps on the shadow set and +pi/2 - eps on its
// antipodal image; identically 0 for an empty shadow set.
// Throws NotSeparated when x lies in both sets at once (d+ = d- = 0).
double separation_profile(const std::vector<Vec>& shadow, double eps,
                          const Vec& x);

// Latitude stretch table for the meridian translation flow: V(l) integrates
// 1/(cos(l) beta(l)) where beta tapers smoothly from 1 to 0 over the band
// [a, c].  Latitude translation in V-coordinates is a diffeomorphism of
// (-c, c) for every shift and freezes beyond the taper.
class LatitudeTable {
 public:
  LatitudeTable(double a, double c);

  double value(double l) const;        // V(l), sign-symmetric
  double inverse(double v) const;      // V^{-1}, sign-symmetric
  double shifted(double l, double s) const;  // V^{-1}(V(l) + s)

  double a() const { return a_; }
  double c() const { return c_; }
  // beyond this latitude a shift moves a point by less than roundoff
  double frozen() const { return frozen_; }

 private:
  double a_ = 0, c_ = 0, frozen_ = 0, va_ = 0;
  std::vector<double> lat_, val_, der_;  // graded toward c, l >= a
  double table_value(double l) const;
  double table_inverse(double v) const;
};

// Family of equivariant diffeomorphisms psi_t of S^n, each fixing every
// meridian of the axis pole and the caps |latitude| >= identity_cap
// pointwise.  psi_t carries the equator point with shadow e to latitude
// t * profile(e) exactly; latitudes translate in the stretched V-coordinate,
// so every psi_t is a diffeomorphism and psi_0 is the identity bitwise.
class DiffeoFamily {
 public:
  // the identity family (empty profile); axis fixes the ambient dimension
  static DiffeoFamily identity(const Pole& axis, double eps);

  Vec apply(double t, const Vec& x) const;          // psi_t(x)
  Vec apply_inverse(double t, const Vec& x) const;  // psi_t^{-1}(x)

  MapPtr at(double t) const;
  MapPtr inverse_at(double t) const;

  const Pole& axis() const { return axis_; }
  double eps() const { return eps_; }
  double identity_cap() const { return cap_; }
  bool is_identity() const { return profile_ == nullptr; }
  const GridMap& profile() const;  // odd latitude profile on the equator mesh
  Domain domain() const;           // sphere the family acts on

 private:
  friend DiffeoFamily hemisphere_clearing_family(const std::vector<Vec>&,
                                                 const Pole&, double, double,
                                                 int);
  DiffeoFamily() = default;

  double shift(double t, const Vec& x) const;  // V(t * profile(shadow(x)))

  Pole axis_;
  Eigen::MatrixXd frame_;  // equator frame of the axis
  double eps_ = 0, cap_ = 0;
  std::shared_ptr<const GridMap> profile_;
  std::shared_ptr<const LatitudeTable> table_;
};

// Builds the clearing family for a closed point set X on S^n (ambient
// dimension from B; n = 2 or 3): a family psi_t with psi_0 = identity and
// X inside psi_1 of the open upper hemisphere of B.  The latitude profile
// is the mollified separation_profile of the meridian shadows of X,
// symmetrized to be exactly odd at the equator mesh vertices.
//
// mollify_width = 0 picks a width from the shadow separation and the mesh
// spacing; equator_resolution = 0 picks the per-dimension default.
//
// Throws MeridianConditionViolated (a meridian of B meets both X and -X, or
// X enters the eps-caps at the poles), NotSeparated (shadows of X and -X
// closer than two mesh spacings), MollifyRangeViolated (the mollified
// profile leaves its latitude band, or some x in X fails the final
// latitude(psi_1^{-1}(x)) > 0 inclusion check).
DiffeoFamily hemisphere_clearing_family(const std::vector<Vec>& X, const Pole& B,
                                        double eps, double mollify_width = 0.0,
                                        int equator_resolution = 0);

// ---------------------------------------------------------------------------
// hemisphere-preserving replacement

struct HemispherePreserving {
  GridMap map;         // g-dagger tabulated on the construction mesh
  double d = 0;        // geodesic clearance of g*(equator) from the poles +-A
  double r = 0;        // strip half-width used
  double margin_raw = 0;  // min geodesic dist(g-tilde(v), -g*(v)) before mollify
  double margin = 0;      // same after mollification; must stay positive
};

// Builds g-dagger from g* = g o psi_1: on the equator of psi's axis the
// meridian projection of g* toward +-A; on the strip |l| <= r the point with
// the longitude of the equator value under it and latitude pi l / (2r); the
// caps beyond the strip collapse to +-A.  The result is mollified at the
// band edges, renormalized, and symmetrized to be exactly odd at vertices.
//
// Validates d(g*(v), g*(v-bar)) < d/10 on the strip (else StripTooWide) and
// the separation margin against -g*: at least d/10 before mollification and
// positive after (else SeparationLost).
HemispherePreserving make_hemisphere_preserving(const SmoothMap& g,
                                                const DiffeoFamily& psi,
                                                const Pole& A, double r,
                                                int resolution = 384,
                                                double mollify_width = 0.0);

// ---------------------------------------------------------------------------
// grafting homotopy

// Three-piece radial interpolation on the ball, from fhat(0) at the center
// to gdagger on the boundary sphere:
//   t in [0, 1/3]:   fhat(3 t x)
//   t in [1/3, 2/3]: g(psi_{3t-1}(x))
//   t in [2/3, 1]:   normalize((3t-2) gdagger(x) + (3-3t) g(psi_1(x)))
// with t = |y| and x = y/t.  The radial seams at t = 1/3 and 2/3 are
// mollified in t over bands of half-width seam_halfwidth and renormalized.
// Evaluation throws DenominatorVanishes (witness y) if the outer blend
// drops below 1e-8 in norm.
MapPtr graft(MapPtr fhat, const DiffeoFamily& psi, MapPtr g,
             const GridMap& gdagger, double seam_halfwidth = 0.02);

// ---------------------------------------------------------------------------
// cylinder transfer

// Collapse map from the solid cylinder D^2 x [-1,1] onto the ball: constant
// on every vertical line of the side wall (the line at angle alpha lands on
// the equator point (cos alpha, sin alpha, 0)), odd on the boundary, top and
// bottom faces onto the closed upper and lower hemispheres.
MapPtr cylinder_collapse();

// Profile map from the sphere onto the boundary surface of the cylinder:
// latitudes below the corner parallel wrap onto the side wall (so the first
// two output coordinates stay on the unit circle there), latitudes above it
// flatten onto the faces (third coordinate exactly +-1).  Odd, and flat at
// the corner crossing so the composite stays smooth.
MapPtr cylinder_boundary_profile();

// Transfer of a ball-to-sphere map to a cylinder-to-boundary-surface map:
// profile o fdagger o collapse.  Verifies on a check mesh that values along
// each vertical side line agree to 1e-9 (NotConstantOnV) and that the top
// and bottom faces keep the sign of the third output coordinate
// (HemispherePreservationViolated).
MapPtr cylinder_transfer(MapPtr fdagger, int check_resolution = 12);

// ---------------------------------------------------------------------------
// dimensional reduction

struct ReduceParams {
  double capture = 0.25;     // |f(node) - A| threshold for collecting X
  double pole_tol = 1e-6;    // PoleHit distance on the deformed equator
  double eps = 0.2;          // cap margin handed to the clearing family
  double mollify_width = 0.0;
  int domain_resolution = 0;   // mesh scanned for X; 0 = default
  int equator_resolution = 0;  // profile mesh; 0 = default
};

struct ReduceResult {
  MapPtr map;           // S^{n-1} -> S^{n-2} in equator coordinates
  DiffeoFamily family;  // clearing family used for the composition
  int captured = 0;     // domain nodes collected into X
  double odd_defect = 0;  // equivariance defect of the output on its mesh
};

// f~ = retract_A o f o psi_1 o embed_B: samples the preimage of A at the
// domain mesh nodes, clears it into the upper hemisphere of B, and retracts
// the composed values away from +-A onto the target equator.  Expressed in
// the equator frames of B (input) and A (output).
// Throws PoleHit (witness) when f o psi_1 comes within pole_tol of +-A on
// the equator mesh.
ReduceResult reduce_dimension(MapPtr f, const PoleSelection& poles,
                              const ReduceParams& params = {});

}  // namespace stokes
