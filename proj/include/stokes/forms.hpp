#pragma once

#include "stokes/mapexpr.hpp"

namespace stokes {

// Every integral reports the value at the requested resolution together with
// the change observed when the resolution doubles, as an error estimate.
struct IntegralResult {
  double value = 0.0;
  double error = 0.0;
  int resolution = 0;
};

// Compensated summation; all integrators accumulate in fixed node order so
// results are reproducible bit for bit.
struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// integral of det(Dm) over the interior nodes
IntegralResult volume_pullback_integral(const SmoothMap& m, const DiskMesh& mesh,
                                        const JacobianStencil& st = {},
                                        bool refine = true);
IntegralResult volume_pullback_integral(const SmoothMap& m,
                                        const CylinderMesh& mesh,
                                        const JacobianStencil& st = {},
                                        bool refine = true);

enum class BoundaryPart { All, Top, Bottom, Side };

// integral over the (oriented) boundary of m_k times the tangential Jacobian
// determinant of the remaining coordinates, taken in increasing index order;
// k is 1-based.  No alternating sign is applied here: with this convention
// the k=1 and k=2 results on a circle are exact negatives of one another.
IntegralResult boundary_form_integral(const SmoothMap& m, const DiskMesh& mesh,
                                      int k, const JacobianStencil& st = {},
                                      bool refine = true);
IntegralResult boundary_form_integral(const SmoothMap& m, const SphereMesh& mesh,
                                      int k, const JacobianStencil& st = {},
                                      bool refine = true);
IntegralResult boundary_form_integral(const SmoothMap& m,
                                      const CylinderMesh& mesh, int k,
                                      BoundaryPart part = BoundaryPart::All,
                                      const JacobianStencil& st = {},
                                      bool refine = true);

// net arclength of a closed unit-circle-valued curve: integral of
// g1 g2' - g2 g1' over one period.  Samples must satisfy | |g|-1 | <= 1e-9.
IntegralResult winding_integral(const SmoothMap& g, const CurveMesh& curve);

// integral of g_k dg_j (j the other coordinate) over t in [t0, t1] by the
// midpoint rule, spectrally accurate when the integrand is (t1-t0)-periodic
IntegralResult curve_form_integral(const SmoothMap& g, const CurveMesh& curve,
                                   int k, double t0 = 0.0, double t1 = 1.0);

// |volume integral - (-1)^(k-1) boundary integral|
double stokes_residual(const SmoothMap& m, const DiskMesh& mesh, int k,
                       const JacobianStencil& st = {});

struct DegreeResult {
  int degree = 0;
  double residual = 0.0;
  IntegralResult integral;
};

// boundary form integral divided by the enclosed ball volume, rounded;
// throws NotSphereValued off the sphere and UnreliableDegree past 0.1
DegreeResult mapping_degree(const SmoothMap& m, const SphereMesh& mesh,
                            const JacobianStencil& st = {});

}  // namespace stokes
