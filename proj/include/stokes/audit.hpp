#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stokes/constructions.hpp"
#include "stokes/forms.hpp"
#include "stokes/geometry.hpp"
#include "stokes/mapexpr.hpp"

namespace stokes {

// A concrete point realizing (approximately) an existence claim.  Finders
// never claim nonexistence: they return the best point found plus its defect,
// and a large defect is a red flag for the caller, not an exception.
struct Witness {
  Vec point;
  double defect = 0.0;
  std::string method;
  int iterations = 0;
};

struct Certificate {
  std::string name;
  double value = 0.0;
  std::string note;
};

// One line of an audit: an identity that was checked numerically.  observed
// is the residual compared against the tolerance.  A failed verdict is not
// an exception; the interesting audits are the ones whose failure is the
// theorem's content, and detail narrates that.
struct Verdict {
  std::string name;
  bool pass = false;
  double tolerance = 0.0;
  double observed = 0.0;
  std::string detail;
};

struct AuditReport {
  std::string title;
  // insertion order is the serialization order; keep it deterministic
  std::vector<std::pair<std::string, IntegralResult>> quantities;
  std::vector<Certificate> certificates;
  std::vector<Verdict> verdicts;
  std::vector<Witness> witnesses;
  std::string narrative;

  bool all_passed() const;
  const IntegralResult* quantity(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// finders

struct RegularValue {
  Pole A;
  int preimages = 0;     // distinct preimages located (0 is acceptable)
  int trials_used = 0;
  double min_singular = 0.0;  // smallest tangent singular value among them
};

// Samples target points A uniformly until one is found whose located
// preimages all have full-rank tangent Jacobian (smallest singular value
// above 1e-6).  Throws NoRegularValueFound when the trial budget is spent,
// reporting how many candidates failed the rank check.
RegularValue sample_regular_value(const MapPtr& m, const SphereMesh& mesh,
                                  int trials, std::uint64_t seed,
                                  const JacobianStencil& st = {});

// Samples pole candidates B until the meridian projections of X and -X are
// separated by at least 2x the given mesh spacing (and, when cap_gate > 0,
// X stays below latitude pi/2 - cap_gate in absolute value).  ambient fixes
// the dimension when X is empty, in which case the first candidate wins.
// Throws NoPoleFound when the budget is spent.
Pole find_admissible_pole(const std::vector<Vec>& X, int ambient,
                          double spacing, int trials, std::uint64_t seed,
                          double cap_gate = 0.0);

// Multistart damped iteration x <- x + a(f(x) - x) over a deterministic seed
// grid, polished by compass descent on |f(x) - x|.  Always returns the best
// witness found.
Witness find_fixed_point(const MapPtr& f, int grid = 8, int warmup = 60);

enum class AntipodalMethod { Auto, Bisection, Multistart };

// Best witness for f(x) = f(-x).  Bisection requires a curve map t -> f(t)
// with one output (the circle case: phi(t) = f(t) - f(t+1/2) changes sign on
// [0, 1/2] by the intermediate value theorem); the witness point is then the
// parameter t.  Multistart minimizes |f(x) - f(-x)| over sphere seeds.
Witness find_antipodal(const MapPtr& f,
                       AntipodalMethod method = AntipodalMethod::Auto,
                       int budget = 60);

// ---------------------------------------------------------------------------
// certificates and ledgers

struct WindingCertificate {
  int k = 0;         // round(I / pi) where I = integral of h1 dh2
  bool odd = false;
  double residual = 0.0;  // |I/pi - k|
  IntegralResult integral;
};

// I = half the net arclength of the closed unit curve h (the cross terms
// integrate to zero on the circle), so I/pi is the winding number and the
// equivariant case makes it odd.  Throws NotOnCircle off the unit circle and
// UnreliableWinding when the residual exceeds 0.1.
WindingCertificate odd_winding_certificate(const MapPtr& h,
                                           const CurveMesh& curve);

// Audits the impossible chain for a sphere-valued map on the disk or ball:
// interior integral of det Dg, boundary form integral, the exact ball
// volume, and the boundary-identity defect.  On an annulus mesh the inner
// rim flux is also reported, since it carries the difference for radial
// projections.  The narrative names whichever link broke.
AuditReport retraction_audit(const MapPtr& g, const DiskMesh& mesh,
                             const JacobianStencil& st = {});

// Audits the cylinder decomposition for a sphere-valued map constant on
// vertical wall lines: T1 = interior det integral, T2 = wall form, T3/T4 =
// top face forms with and without the third-coordinate weight, T5 = rim
// curve integral, plus the rim winding certificate.  On an honest transfer
// the T1 = T2 + 2 T3 line fails and the narrative explains why that failure
// is forced.  Throws NotSphereValued / NotConstantOnV on precondition
// violations.
AuditReport cylinder_ledger(const MapPtr& f, const CylinderMesh& mesh,
                            const JacobianStencil& st = {});

}  // namespace stokes
