#include "stokes/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

namespace stokes {

namespace {

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double geodesic(const Vec& x, const Vec& y) {
  return std::acos(clamp1(x.dot(y)));
}

// quintic step 0 -> 1 on [0, 1], first and second derivatives zero at both
// ends; arguments outside the interval clamp
double smooth5(double u) {
  u = std::min(1.0, std::max(0.0, u));
  return u * u * u * (10.0 + u * (6.0 * u - 15.0));
}

Vec eval_map(const SmoothMap& m, const Vec& x) {
  Vec y(m.out_dim());
  m.eval_into(x.data(), y.data());
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// pointwise constructions

MapPtr boundary_retraction(MapPtr f, double delta) {
  if (!f) fail(ErrorCode::ConfigError, "boundary retraction needs a map");
  if (f->out_dim() != f->in_dim())
    fail(ErrorCode::ArityMismatch,
         "boundary retraction needs a self-map; got " +
             std::to_string(f->in_dim()) + " -> " + std::to_string(f->out_dim()));
  const int n = f->in_dim();
  auto fn = [f, delta, n](const double* xin, double* yout) {
    Eigen::Map<const Vec> x(xin, n);
    Vec fx(n);
    f->eval_into(xin, fx.data());
    Vec d = x - fx;
    const double dn = d.norm();
    if (dn < delta)
      fail(ErrorCode::FixedPointEncountered,
           "|x - f(x)| = " + std::to_string(dn) + " is under delta = " +
               std::to_string(delta),
           Vec(x));
    // nonnegative root of |x + t d| = 1; c <= 0 inside the ball, so the
    // roots straddle zero and the division below never cancels
    const double b = x.dot(d);
    const double c = x.squaredNorm() - 1.0;
    const double disc = std::max(b * b - d.squaredNorm() * c, 0.0);
    const double root = std::sqrt(disc);
    const double t =
        (b > 0.0) ? (-c / (b + root)) : ((root - b) / d.squaredNorm());
    Eigen::Map<Vec>(yout, n) = x + t * d;
  };
  return make_map(n, n, f->domain(), fn);
}

MapPtr odd_normalize(MapPtr f, double delta) {
  if (!f) fail(ErrorCode::ConfigError, "odd normalization needs a map");
  const int n = f->in_dim();
  const int m = f->out_dim();
  auto fn = [f, delta, n, m](const double* xin, double* yout) {
    Eigen::Map<const Vec> x(xin, n);
    Vec mx = -x;
    Vec fx(m), fmx(m);
    f->eval_into(xin, fx.data());
    f->eval_into(mx.data(), fmx.data());
    // evaluating at -x swaps the two terms, so the output negates bitwise
    Vec d = fx - fmx;
    const double dn = d.norm();
    if (dn < delta)
      fail(ErrorCode::CoincidenceEncountered,
           "f(x) and f(-x) are within " + std::to_string(dn) + " of each other",
           Vec(x));
    Eigen::Map<Vec>(yout, m) = d / dn;
  };
  return make_map(n, m, f->domain(), fn);
}

MapPtr upper_hemisphere_to_disk(MapPtr f) {
  if (!f) fail(ErrorCode::ConfigError, "hemisphere restriction needs a map");
  const int a = f->in_dim();
  if (a < 2)
    fail(ErrorCode::UnsupportedDimension,
         "hemisphere restriction needs ambient dimension at least 2");
  const int n = a - 1;
  Domain dom = Domain::None;
  if (f->domain() == Domain::Sphere2) dom = Domain::Disk2;
  if (f->domain() == Domain::Sphere3) dom = Domain::Disk3;
  auto fn = [f, a, n](const double* u, double* y) {
    Vec x(a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = u[i];
      s += u[i] * u[i];
    }
    x[n] = std::sqrt(std::max(0.0, 1.0 - s));
    f->eval_into(x.data(), y);
  };
  return make_map(n, f->out_dim(), dom, fn);
}

// ---------------------------------------------------------------------------
// separation profile

double separation_profile(const std::vector<Vec>& shadow, double eps,
                          const Vec& x) {
  if (shadow.empty()) return 0.0;
  double dp = M_PI, dm = M_PI;
  for (const Vec& s : shadow) {
    if (s.size() != x.size())
      fail(ErrorCode::ArityMismatch, "shadow point dimension mismatch");
    const double dot = clamp1(s.dot(x));
    dp = std::min(dp, std::acos(dot));
    dm = std::min(dm, std::acos(-dot));
  }
  const double sum = dp + dm;
  if (sum < 1e-12)
    fail(ErrorCode::NotSeparated,
         "point lies in the shadow set and its antipodal image at once",
         Vec(x));
  return (M_PI / 2 - eps) * (dp - dm) / sum;
}

// ---------------------------------------------------------------------------
// latitude stretch table

namespace {
constexpr int kTableIntervals = 4000;
constexpr double kTableDeltaMin = 5e-5;  // closest node to the frozen cap
constexpr double kFrozenDelta = 2e-4;    // movement < 1e-12 beyond this
}  // namespace

LatitudeTable::LatitudeTable(double a, double c) : a_(a), c_(c) {
  if (!(0 < a && a < c && c < M_PI / 2))
    fail(ErrorCode::ConfigError, "latitude table needs 0 < a < c < pi/2");
  va_ = std::asinh(std::tan(a_));
  frozen_ = c_ - (c_ - a_) * kFrozenDelta;

  // translation speed cos(l) tapers to zero over [a, c]; V integrates its
  // reciprocal, so V blows up like (c - l)^{-2} and shifted latitudes can
  // never leave (-c, c)
  auto weight = [this](double l) {
    const double u = (l - a_) / (c_ - a_);
    return std::cos(l) * (1.0 - smooth5(u));
  };

  const int K = kTableIntervals;
  const double q = std::pow(kTableDeltaMin, 1.0 / K);
  lat_.resize(K + 1);
  val_.resize(K + 1);
  der_.resize(K + 1);
  lat_[0] = a_;
  val_[0] = va_;
  der_[0] = 1.0 / weight(a_);

  std::vector<double> gp, gw;
  gauss_legendre(16, gp, gw);
  double acc = va_;
  double dk = 1.0;
  for (int k = 1; k <= K; ++k) {
    dk *= q;
    const double lk = c_ - (c_ - a_) * dk;
    const double lprev = lat_[k - 1];
    const double h = lk - lprev;
    double s = 0.0;
    for (std::size_t j = 0; j < gp.size(); ++j)
      s += gw[j] / weight(lprev + 0.5 * h * (1.0 + gp[j]));
    acc += 0.5 * h * s;
    lat_[k] = lk;
    val_[k] = acc;
    der_[k] = 1.0 / weight(lk);
  }

  // the cubic pieces interpolate monotone data; slopes within three times
  // the secant keep every piece monotone
  for (int k = 0; k < K; ++k) {
    const double sec = (val_[k + 1] - val_[k]) / (lat_[k + 1] - lat_[k]);
    if (!(sec > 0) || !(der_[k] > 0) || der_[k] > 3.0 * sec ||
        der_[k + 1] > 3.0 * sec)
      fail(ErrorCode::ConfigError, "latitude table lost monotonicity");
  }
}

double LatitudeTable::table_value(double l) const {
  const int K = static_cast<int>(lat_.size()) - 1;
  const double delta =
      std::max((c_ - l) / (c_ - a_), kTableDeltaMin);
  const double lq = std::log(kTableDeltaMin) / K;
  int k = static_cast<int>(std::floor(std::log(delta) / lq));
  k = std::max(0, std::min(K - 1, k));
  while (k > 0 && l < lat_[k]) --k;
  while (k < K - 1 && l > lat_[k + 1]) ++k;
  const double h = lat_[k + 1] - lat_[k];
  const double u = std::min(1.0, std::max(0.0, (l - lat_[k]) / h));
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * val_[k] + h * (u3 - 2 * u2 + u) * der_[k] +
         (3 * u2 - 2 * u3) * val_[k + 1] + h * (u3 - u2) * der_[k + 1];
}

double LatitudeTable::table_inverse(double v) const {
  const auto it = std::upper_bound(val_.begin(), val_.end(), v);
  int k = static_cast<int>(it - val_.begin()) - 1;
  k = std::max(0, std::min(static_cast<int>(val_.size()) - 2, k));
  const double h = lat_[k + 1] - lat_[k];
  auto piece = [&](double u, double& dv) {
    const double u2 = u * u, u3 = u2 * u;
    dv = ((6 * u2 - 6 * u) * (val_[k] - val_[k + 1]) / h +
          (3 * u2 - 4 * u + 1) * der_[k] + (3 * u2 - 2 * u) * der_[k + 1]) *
         h;
    return (2 * u3 - 3 * u2 + 1) * val_[k] + h * (u3 - 2 * u2 + u) * der_[k] +
           (3 * u2 - 2 * u3) * val_[k + 1] + h * (u3 - u2) * der_[k + 1];
  };
  double lo = 0.0, hi = 1.0;
  double u = std::min(
      1.0, std::max(0.0, (v - val_[k]) / (val_[k + 1] - val_[k])));
  for (int i = 0; i < 100; ++i) {
    double dv;
    const double fv = piece(u, dv) - v;
    if (std::abs(fv) <= 1e-13 * std::max(1.0, std::abs(v))) break;
    if (fv > 0)
      hi = u;
    else
      lo = u;
    double next = u - fv / dv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
    if (hi - lo < 1e-16) break;
  }
  return lat_[k] + u * h;
}

double LatitudeTable::value(double l) const {
  const double al = std::abs(l);
  const double sg = (l < 0) ? -1.0 : 1.0;
  if (al <= a_) return sg * std::asinh(std::tan(al));
  return sg * table_value(std::min(al, lat_.back()));
}

double LatitudeTable::inverse(double v) const {
  const double av = std::abs(v);
  const double sg = (v < 0) ? -1.0 : 1.0;
  if (av <= va_) return sg * std::atan(std::sinh(av));
  return sg * table_inverse(std::min(av, val_.back()));
}

double LatitudeTable::shifted(double l, double s) const {
  if (s == 0.0) return l;
  // beyond the frozen latitude the speed taper puts any admissible shift
  // below roundoff; returning l keeps the caps fixed bitwise
  if (std::abs(l) >= frozen_) return l;
  return inverse(value(l) + s);
}

// ---------------------------------------------------------------------------
// diffeomorphism family

DiffeoFamily DiffeoFamily::identity(const Pole& axis, double eps) {
  if (!(eps > 0) || !(eps < M_PI / 2))
    fail(ErrorCode::ConfigError, "cap margin eps must lie in (0, pi/2)");
  DiffeoFamily fam;
  fam.axis_ = axis;
  fam.frame_ = equator_frame(axis);
  fam.eps_ = eps;
  fam.cap_ = M_PI / 2 - eps / 4;
  return fam;
}

Domain DiffeoFamily::domain() const {
  switch (axis_.dim()) {
    case 2: return Domain::Sphere1;
    case 3: return Domain::Sphere2;
    case 4: return Domain::Sphere3;
    default: return Domain::None;
  }
}

const GridMap& DiffeoFamily::profile() const {
  if (!profile_)
    fail(ErrorCode::ConfigError, "the identity family carries no profile");
  return *profile_;
}

double DiffeoFamily::shift(double t, const Vec& x) const {
  const double bdot = x.dot(axis_.vec());
  Vec e = x - bdot * axis_.vec();
  Vec u = frame_.transpose() * e;
  u /= u.norm();
  double th;
  profile_->eval_into(u.data(), &th);
  const double target = t * th;
  if (target == 0.0) return 0.0;
  return table_->value(target);
}

Vec DiffeoFamily::apply(double t, const Vec& x) const {
  if (x.size() != axis_.dim())
    fail(ErrorCode::ArityMismatch,
         "point dimension does not match the family axis");
  if (is_identity() || t == 0.0) return x;
  const double bdot = x.dot(axis_.vec());
  const double l = std::asin(clamp1(bdot));
  if (std::abs(l) >= table_->frozen()) return x;
  const double s = shift(t, x);
  if (s == 0.0) return x;
  const double l2 = table_->shifted(l, s);
  Vec e = x - bdot * axis_.vec();
  e /= e.norm();
  return std::cos(l2) * e + std::sin(l2) * axis_.vec();
}

Vec DiffeoFamily::apply_inverse(double t, const Vec& x) const {
  if (x.size() != axis_.dim())
    fail(ErrorCode::ArityMismatch,
         "point dimension does not match the family axis");
  if (is_identity() || t == 0.0) return x;
  const double bdot = x.dot(axis_.vec());
  const double l = std::asin(clamp1(bdot));
  if (std::abs(l) >= table_->frozen()) return x;
  // the meridian and its shadow are preserved, so undoing the translation
  // is the shift with opposite sign
  const double s = shift(t, x);
  if (s == 0.0) return x;
  const double l2 = table_->shifted(l, -s);
  Vec e = x - bdot * axis_.vec();
  e /= e.norm();
  return std::cos(l2) * e + std::sin(l2) * axis_.vec();
}

MapPtr DiffeoFamily::at(double t) const {
  DiffeoFamily fam = *this;
  const int a = axis_.dim();
  return make_map(a, a, domain(), [fam, t, a](const double* xin, double* y) {
    Eigen::Map<Vec>(y, a) = fam.apply(t, Vec(Eigen::Map<const Vec>(xin, a)));
  });
}

MapPtr DiffeoFamily::inverse_at(double t) const {
  DiffeoFamily fam = *this;
  const int a = axis_.dim();
  return make_map(a, a, domain(), [fam, t, a](const double* xin, double* y) {
    Eigen::Map<Vec>(y, a) =
        fam.apply_inverse(t, Vec(Eigen::Map<const Vec>(xin, a)));
  });
}

DiffeoFamily hemisphere_clearing_family(const std::vector<Vec>& X,
                                        const Pole& B, double eps,
                                        double mollify_width,
                                        int equator_resolution) {
  const int adim = B.dim();
  if (adim != 3 && adim != 4)
    fail(ErrorCode::UnsupportedDimension, "clearing families act on S^2 or S^3");
  DiffeoFamily fam = DiffeoFamily::identity(B, eps);
  if (X.empty()) return fam;

  const double gate = M_PI / 2 - eps;
  std::vector<Vec> shadows;
  shadows.reserve(X.size());
  for (const Vec& x : X) {
    if (x.size() != adim)
      fail(ErrorCode::ArityMismatch, "point dimension does not match the pole");
    if (std::abs(x.norm() - 1.0) > 1e-9)
      fail(ErrorCode::DomainError, "points of X must lie on the unit sphere",
           Vec(x));
    const double l = latitude(x, B);
    if (std::abs(l) > gate + 1e-12)
      fail(ErrorCode::MeridianConditionViolated,
           "a point of X enters the polar caps: |latitude| = " +
               std::to_string(std::abs(l)) + " exceeds " + std::to_string(gate),
           Vec(x));
    shadows.push_back(meridian_project(x, B));
  }

  // no meridian may meet X and -X at once, and the two shadow sets must
  // stay separated well past the mesh scale
  double sep = M_PI;
  for (std::size_t i = 0; i < shadows.size(); ++i)
    for (std::size_t j = 0; j < shadows.size(); ++j) {
      const double dist = geodesic(shadows[i], antipode(shadows[j]));
      sep = std::min(sep, dist);
      if (dist < 1e-9)
        fail(ErrorCode::MeridianConditionViolated,
             "a meridian meets X and its antipodal image", Vec(X[i]));
    }

  const int edim = adim - 2;  // the equator is S^1 or S^2
  const int res =
      equator_resolution > 0 ? equator_resolution : (edim == 1 ? 2048 : 192);
  auto mesh = std::make_shared<const SphereMesh>(make_sphere_mesh(edim, res));
  if (sep < 2.0 * mesh->spacing)
    fail(ErrorCode::NotSeparated,
         "shadow separation " + std::to_string(sep) +
             " is under two mesh spacings (" +
             std::to_string(2.0 * mesh->spacing) + ")");

  const Eigen::MatrixXd F = equator_frame(B);
  std::vector<Vec> sh;
  sh.reserve(shadows.size());
  for (const Vec& s : shadows) sh.push_back(F.transpose() * s);

  const int nv = mesh->vert_count();
  std::vector<double> raw(nv);
  for (int v = 0; v < nv; ++v)
    raw[v] = separation_profile(sh, eps, Vec(mesh->vert(v)));

  double width = mollify_width;
  if (!(width > 0)) {
    // keep the smoothing drift at the shadows well under eps/2
    const double drift = eps * sep / (4.0 * (M_PI / 2 - eps));
    width = std::max(2.05 * mesh->spacing,
                     std::min(0.5 * drift, 8.0 * mesh->spacing));
  }
  GridMap smooth = mollify(GridMap(mesh, 1, std::move(raw), false), width);

  std::vector<double> odd(nv);
  for (int v = 0; v < nv; ++v)
    odd[v] = 0.5 * (smooth.value(v, 0) - smooth.value(mesh->vert_antipode[v], 0));

  const double hi = M_PI / 2 - eps / 2;
  for (int v = 0; v < nv; ++v)
    if (std::abs(odd[v]) > hi + 1e-9)
      fail(ErrorCode::MollifyRangeViolated,
           "smoothed profile reaches latitude " + std::to_string(odd[v]) +
               "; the band ends at " + std::to_string(hi),
           Vec(mesh->vert(v)));

  auto profile = std::make_shared<const GridMap>(mesh, 1, std::move(odd), false);
  for (std::size_t i = 0; i < sh.size(); ++i) {
    double th;
    profile->eval_into(sh[i].data(), &th);
    if (th < -M_PI / 2 + eps / 2 - 1e-9 || th > -M_PI / 2 + 1.5 * eps + 1e-9)
      fail(ErrorCode::MollifyRangeViolated,
           "profile at a shadow point left its band: " + std::to_string(th),
           Vec(X[i]));
  }

  fam.profile_ = profile;
  fam.table_ = std::make_shared<const LatitudeTable>(M_PI / 2 - eps / 2,
                                                     M_PI / 2 - eps / 4);

  // the whole point: X must land strictly inside the open upper hemisphere
  for (const Vec& x : X) {
    const Vec y = fam.apply_inverse(1.0, x);
    if (!(latitude(y, B) > 0))
      fail(ErrorCode::MollifyRangeViolated,
           "a point of X stays at nonpositive latitude after clearing", Vec(x));
  }
  return fam;
}

// ---------------------------------------------------------------------------
// hemisphere-preserving replacement

namespace {

// latitude profile of the strip: linear pi l/(2r) up to |l| = r - b, then a
// quintic blend meeting the flat caps at |l| = r + b with matching value,
// slope and curvature
double strip_latitude(double l, double r, double b) {
  const double al = std::abs(l);
  const double sg = (l < 0) ? -1.0 : 1.0;
  if (al >= r + b) return sg * (M_PI / 2);
  if (al <= r - b) return M_PI * l / (2.0 * r);
  const double u = (al - (r - b)) / (2.0 * b);
  const double blend = u * (2.0 + u * u * (u - 2.0));  // 2u - 2u^3 + u^4
  return sg * (M_PI * (r - b) / (2.0 * r) + (M_PI * b / (2.0 * r)) * blend);
}

}  // namespace

HemispherePreserving make_hemisphere_preserving(const SmoothMap& g,
                                                const DiffeoFamily& psi,
                                                const Pole& A, double r,
                                                int resolution,
                                                double mollify_width) {
  if (psi.domain() != Domain::Sphere2)
    fail(ErrorCode::UnsupportedDimension,
         "the hemisphere-preserving replacement runs on S^2");
  if (g.in_dim() != 3 || g.out_dim() != 3)
    fail(ErrorCode::ArityMismatch, "g must map S^2 to S^2");
  if (A.dim() != 3)
    fail(ErrorCode::ArityMismatch, "pole A must have ambient dimension 3");
  if (!(r > 0) || !(r < M_PI / 4))
    fail(ErrorCode::ConfigError, "strip half-width must lie in (0, pi/4)");
  const double b = mollify_width > 0 ? mollify_width : r / 2;
  if (!(b < r))
    fail(ErrorCode::ConfigError,
         "band half-width must stay under the strip half-width");

  const Pole& B = psi.axis();
  auto mesh = std::make_shared<const SphereMesh>(make_sphere_mesh(2, resolution));
  const int nv = mesh->vert_count();

  std::vector<Vec> gs(nv);
  for (int v = 0; v < nv; ++v) {
    Vec y = eval_map(g, psi.apply(1.0, Vec(mesh->vert(v))));
    const double norm = y.norm();
    if (std::abs(norm - 1.0) > 1e-6)
      fail(ErrorCode::NotSphereValued,
           "g returned a value of norm " + std::to_string(norm),
           Vec(mesh->vert(v)));
    gs[v] = y / norm;
  }

  double defect = 0.0;
  for (int v = 0; v < nv; ++v)
    defect = std::max(defect, (gs[v] + gs[mesh->vert_antipode[v]]).norm());
  if (defect > 1e-6)
    fail(ErrorCode::DomainError,
         "the composition with the clearing family is not odd on the mesh "
         "(defect " + std::to_string(defect) + "); g must be equivariant");

  // clearance of the deformed equator image from the poles of A
  const Eigen::MatrixXd F = equator_frame(B);
  double d = M_PI;
  const int samples = 4096;
  for (int i = 0; i < samples; ++i) {
    const double phi = 2.0 * M_PI * i / samples;
    Vec e = F.col(0) * std::cos(phi) + F.col(1) * std::sin(phi);
    Vec y = eval_map(g, psi.apply(1.0, e));
    y /= y.norm();
    d = std::min(d, std::acos(std::min(1.0, std::abs(y.dot(A.vec())))));
  }
  if (!(d > 1e-9))
    fail(ErrorCode::StripTooWide,
         "the equator image touches a pole of A; no strip half-width works");

  const double band = r + b;
  std::vector<double> hard(std::size_t(nv) * 3), smoothv(std::size_t(nv) * 3);
  for (int v = 0; v < nv; ++v) {
    const Vec x = mesh->vert(v);
    const double l = latitude(x, B);
    Vec hv(3), sv(3);
    if (std::abs(l) >= band) {
      hv = sv = (l > 0) ? Vec(A.vec()) : Vec(-A.vec());
    } else {
      const Vec xbar = meridian_project(x, B);
      Vec gbar = eval_map(g, psi.apply(1.0, xbar));
      gbar /= gbar.norm();
      const double drift = geodesic(gs[v], gbar);
      if (drift >= d / 10)
        fail(ErrorCode::StripTooWide,
             "the composition drifts " + std::to_string(drift) +
                 " from its equator value inside the strip; the bound is " +
                 std::to_string(d / 10),
             Vec(x));
      const Vec et = meridian_project(gbar, A);
      const double ls = strip_latitude(l, r, b);
      sv = std::cos(ls) * et + std::sin(ls) * A.vec();
      if (std::abs(l) >= r) {
        hv = (l > 0) ? Vec(A.vec()) : Vec(-A.vec());
      } else {
        const double lh = M_PI * l / (2.0 * r);
        hv = std::cos(lh) * et + std::sin(lh) * A.vec();
      }
    }
    for (int k = 0; k < 3; ++k) {
      hard[std::size_t(v) * 3 + k] = hv[k];
      smoothv[std::size_t(v) * 3 + k] = sv[k];
    }
  }

  double margin_raw = M_PI;
  int worst = 0;
  for (int v = 0; v < nv; ++v) {
    const Vec hv = Eigen::Map<const Vec>(hard.data() + std::size_t(v) * 3, 3);
    const double m = geodesic(hv, antipode(gs[v]));
    if (m < margin_raw) {
      margin_raw = m;
      worst = v;
    }
  }
  if (margin_raw < d / 10)
    fail(ErrorCode::SeparationLost,
         "separation margin " + std::to_string(margin_raw) +
             " is under d/10 = " + std::to_string(d / 10) +
             " before band smoothing",
         Vec(mesh->vert(worst)));

  std::vector<double> vals(std::size_t(nv) * 3);
  for (int v = 0; v < nv; ++v) {
    const int av = mesh->vert_antipode[v];
    Vec w(3);
    for (int k = 0; k < 3; ++k)
      w[k] = 0.5 * (smoothv[std::size_t(v) * 3 + k] -
                    smoothv[std::size_t(av) * 3 + k]);
    const double norm = w.norm();
    if (norm < 1e-8)
      fail(ErrorCode::SeparationLost, "odd symmetrization collapsed a value",
           Vec(mesh->vert(v)));
    for (int k = 0; k < 3; ++k) vals[std::size_t(v) * 3 + k] = w[k] / norm;
  }

  double margin = M_PI;
  worst = 0;
  for (int v = 0; v < nv; ++v) {
    const Vec wv = Eigen::Map<const Vec>(vals.data() + std::size_t(v) * 3, 3);
    const double m = geodesic(wv, antipode(gs[v]));
    if (m < margin) {
      margin = m;
      worst = v;
    }
  }
  if (!(margin > 1e-9))
    fail(ErrorCode::SeparationLost,
         "separation margin vanished after band smoothing",
         Vec(mesh->vert(worst)));

  // hemisphere preservation at every vertex clear of the equator
  for (int v = 0; v < nv; ++v) {
    const double l = latitude(Vec(mesh->vert(v)), B);
    if (std::abs(l) <= mesh->spacing) continue;
    const double la = vals[std::size_t(v) * 3 + 0] * A.vec()[0] +
                      vals[std::size_t(v) * 3 + 1] * A.vec()[1] +
                      vals[std::size_t(v) * 3 + 2] * A.vec()[2];
    if ((l > 0 && la < -1e-12) || (l < 0 && la > 1e-12))
      fail(ErrorCode::HemispherePreservationViolated,
           "latitude sign flipped at a vertex off the equator",
           Vec(mesh->vert(v)));
  }

  return {GridMap(mesh, 3, std::move(vals), true), d, r, margin_raw, margin};
}

// ---------------------------------------------------------------------------
// grafting homotopy

MapPtr graft(MapPtr fhat, const DiffeoFamily& psi, MapPtr g,
             const GridMap& gdagger, double seam_halfwidth) {
  if (!fhat || !g) fail(ErrorCode::ConfigError, "grafting needs both maps");
  if (fhat->in_dim() != 3 || fhat->out_dim() != 3 || g->in_dim() != 3 ||
      g->out_dim() != 3)
    fail(ErrorCode::ArityMismatch, "grafting needs 3 -> 3 pieces");
  if (psi.domain() != Domain::Sphere2)
    fail(ErrorCode::UnsupportedDimension, "grafting runs over S^2 families");
  if (gdagger.out_dim() != 3 || gdagger.mesh().dim != 2)
    fail(ErrorCode::ArityMismatch,
         "the boundary replacement must be a sphere-valued grid on S^2");
  if (!(seam_halfwidth > 0) || !(seam_halfwidth < 1.0 / 12))
    fail(ErrorCode::ConfigError, "seam half-width must lie in (0, 1/12)");

  auto gd = std::make_shared<const GridMap>(gdagger);
  DiffeoFamily fam = psi;

  // raw three-piece interpolation at radius t along direction x
  auto piece = [fhat, g, gd, fam](double t, const Vec& x) -> Vec {
    Vec w(3);
    if (t >= 2.0 / 3.0) {
      Vec top(3);
      gd->eval_into(x.data(), top.data());
      const Vec gv = eval_map(*g, fam.apply(1.0, x));
      w = (3.0 * t - 2.0) * top + (3.0 - 3.0 * t) * gv;
      const double norm = w.norm();
      if (norm < 1e-8)
        fail(ErrorCode::DenominatorVanishes,
             "the boundary blend vanishes at radius " + std::to_string(t),
             Vec(t * x));
      return w / norm;
    }
    if (t >= 1.0 / 3.0)
      w = eval_map(*g, fam.apply(3.0 * t - 1.0, x));
    else
      w = eval_map(*fhat, Vec(3.0 * t * x));
    const double norm = w.norm();
    if (norm < 1e-8)
      fail(ErrorCode::DenominatorVanishes,
           "a graft piece vanishes at radius " + std::to_string(t), Vec(t * x));
    return w / norm;
  };

  const double w = seam_halfwidth;
  auto fn = [piece, w](const double* yin, double* yout) {
    Eigen::Map<const Vec> y(yin, 3);
    double t = y.norm();
    if (t > 1.0) t = 1.0;
    Eigen::Map<Vec> out(yout, 3);
    if (t < 1e-12) {
      Vec x(3);
      x << 1, 0, 0;
      out = piece(0.0, x);
      return;
    }
    const Vec x = y / t;
    const double dist = std::min(std::abs(t - 1.0 / 3.0),
                                 std::abs(t - 2.0 / 3.0));
    if (dist >= w) {
      out = piece(t, x);
      return;
    }
    // fade a radial kernel average in near the seams; the amplitude ramp is
    // flat at 1 on the inner half of each band, so the smoothed map is C^2
    const double eta = smooth5(2.0 * (1.0 - dist / w));
    Vec avg = Vec::Zero(3);
    double mass = 0.0;
    for (int j = -3; j <= 3; ++j) {
      const double u = j / 4.0;
      const double k = (1.0 - u * u) * (1.0 - u * u);
      const double tc = std::min(1.0, std::max(0.0, t + 0.5 * w * u));
      avg += k * piece(tc, x);
      mass += k;
    }
    Vec blend = (1.0 - eta) * piece(t, x) + eta * (avg / mass);
    const double norm = blend.norm();
    if (norm < 1e-8)
      fail(ErrorCode::DenominatorVanishes, "the seam average vanishes", Vec(y));
    out = blend / norm;
  };
  return make_map(3, 3, Domain::Disk3, fn);
}

// ---------------------------------------------------------------------------
// cylinder transfer

namespace {

// odd ramp: -1 -> 1 over [-1, 1], increasing, flat to second order at the ends
double ramp_full(double p) { return 2.0 * smooth5(0.5 * (p + 1.0)) - 1.0; }

// odd ramp that is identically 0 on |p| <= 0.55 and +-1 at p = +-1, flat to
// second order at both ends of its rise
double ramp_faces(double p) {
  const double sg = (p < 0) ? -1.0 : 1.0;
  return sg * smooth5((std::abs(p) - 0.55) / 0.45);
}

// odd latitude-to-perimeter reparametrization for the boundary profile:
// |tau| <= 1 is the side wall, |tau| in [1, 2] crosses a face to its center
double cyl_profile_tau(double lam) {
  const double al = std::abs(lam);
  const double sg = (lam < 0) ? -1.0 : 1.0;
  const double lc = M_PI / 4;
  if (al <= lc) {
    const double u = al / lc;
    // u + 4u^3 - 7u^4 + 3u^5: monotone, flat to second order at u = 1
    return sg * (u * (1.0 + u * u * (4.0 + u * (3.0 * u - 7.0))));
  }
  const double u = (al - lc) / (M_PI / 2 - lc);
  // 1 + 6u^3 - 8u^4 + 3u^5: picks up from the wall with two flat
  // derivatives, reaches 2 with slope 1 so the face center stays smooth
  return sg * (1.0 + u * u * u * (6.0 + u * (3.0 * u - 8.0)));
}

}  // namespace

MapPtr cylinder_collapse() {
  auto fn = [](const double* xin, double* yout) {
    const double x = xin[0], y = xin[1], z = xin[2];
    const double rho = std::hypot(x, y);
    const double m = std::max(rho, std::abs(z));
    Eigen::Map<Vec> out(yout, 3);
    if (m < 1e-14) {
      out.setZero();
      return;
    }
    double h1 = 1.0, h2 = 0.0;
    if (rho > 1e-14) {
      h1 = x / rho;
      h2 = y / rho;
    }
    // signed position along the perimeter of the square slice max(rho,|z|)=m:
    // 0 on the wall midline, +-1/2 at the corner circles, +-1 at the face
    // centers; continuous with continuous gradient across the corner rays
    double p;
    if (std::abs(z) >= rho)
      p = ((z < 0) ? -1.0 : 1.0) * (1.0 - rho / (2.0 * m));
    else
      p = z / (2.0 * m);
    // near the boundary slice the face profile takes over completely, so the
    // side wall lands on the equator exactly and faces keep their sign
    const double a = 0.5 * (1.0 - m * m);
    const double gamma =
        0.5 * M_PI * (a * ramp_full(p) + (1.0 - a) * ramp_faces(p));
    const double cg = std::cos(gamma);
    out[0] = m * cg * h1;
    out[1] = m * cg * h2;
    out[2] = m * std::sin(gamma);
  };
  return make_map(3, 3, Domain::Cylinder, fn);
}

MapPtr cylinder_boundary_profile() {
  auto fn = [](const double* win, double* yout) {
    const double lam = std::asin(clamp1(win[2]));
    const double tau = cyl_profile_tau(lam);
    const double rho = std::hypot(win[0], win[1]);
    double h1 = 1.0, h2 = 0.0;
    if (rho > 1e-14) {
      h1 = win[0] / rho;
      h2 = win[1] / rho;
    }
    Eigen::Map<Vec> out(yout, 3);
    if (std::abs(tau) <= 1.0) {
      out[0] = h1;
      out[1] = h2;
      out[2] = tau;
    } else {
      // 2 - |tau| vanishes linearly in the colatitude at the poles, which
      // cancels the unit factor (w1, w2)/rho smoothly
      const double ro = 2.0 - std::abs(tau);
      out[0] = ro * h1;
      out[1] = ro * h2;
      out[2] = (tau < 0) ? -1.0 : 1.0;
    }
  };
  return make_map(3, 3, Domain::Sphere2, fn);
}

MapPtr cylinder_transfer(MapPtr fdagger, int check_resolution) {
  if (!fdagger) fail(ErrorCode::ConfigError, "cylinder transfer needs a map");
  if (fdagger->in_dim() != 3 || fdagger->out_dim() != 3)
    fail(ErrorCode::ArityMismatch, "cylinder transfer needs a 3 -> 3 map");
  MapPtr q = cylinder_collapse();
  MapPtr s = cylinder_boundary_profile();
  MapPtr fd = std::move(fdagger);
  auto fn = [q, s, fd](const double* xin, double* yout) {
    Vec a(3), bv(3);
    q->eval_into(xin, a.data());
    fd->eval_into(a.data(), bv.data());
    const double norm = bv.norm();
    if (norm < 1e-8)
      fail(ErrorCode::NearZeroValue,
           "the transferred map vanished before the boundary profile",
           Vec(Eigen::Map<const Vec>(xin, 3)));
    bv /= norm;
    s->eval_into(bv.data(), yout);
  };
  MapPtr out = make_map(3, 3, Domain::Cylinder, fn);

  if (check_resolution > 0) {
    const CylinderMesh mesh = make_cylinder_mesh(check_resolution);
    for (int ai = 0; ai < mesh.angular_count; ++ai) {
      Vec first;
      for (int k = 0; k < mesh.vertical_count; ++k) {
        const Vec p = mesh.side.node(ai * mesh.vertical_count + k);
        const Vec v = out->eval_unchecked(p);
        if (k == 0)
          first = v;
        else if ((v - first).lpNorm<Eigen::Infinity>() > 1e-9)
          fail(ErrorCode::NotConstantOnV,
               "values vary along a vertical boundary line", Vec(p));
      }
    }
    // tabulated boundary maps wobble near the equator by their
    // interpolation error, so the sign check carries a small allowance
    const double tol = 0.05;
    for (int i = 0; i < mesh.top.count(); ++i) {
      const Vec p = mesh.top.node(i);
      if (out->eval_unchecked(p)[2] < -tol)
        fail(ErrorCode::HemispherePreservationViolated,
             "the top face maps below the equator", Vec(p));
    }
    for (int i = 0; i < mesh.bottom.count(); ++i) {
      const Vec p = mesh.bottom.node(i);
      if (out->eval_unchecked(p)[2] > tol)
        fail(ErrorCode::HemispherePreservationViolated,
             "the bottom face maps above the equator", Vec(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dimensional reduction

ReduceResult reduce_dimension(MapPtr f, const PoleSelection& poles,
                              const ReduceParams& params) {
  if (!f) fail(ErrorCode::ConfigError, "reduction needs a map");
  const int adim = f->in_dim();
  if (adim != 3 && adim != 4)
    fail(ErrorCode::UnsupportedDimension, "reduction runs on S^2 or S^3");
  if (f->out_dim() != adim - 1)
    fail(ErrorCode::ArityMismatch,
         "reduction needs a map to the sphere one dimension down");
  if (poles.B.dim() != adim || poles.A.dim() != adim - 1)
    fail(ErrorCode::ArityMismatch, "pole dimensions must match the map");
  if (!(params.capture > 0))
    fail(ErrorCode::ConfigError, "capture radius must be positive");

  const int sdim = adim - 1;
  const int dres = params.domain_resolution > 0 ? params.domain_resolution
                                                : (sdim == 2 ? 192 : 48);
  const SphereMesh dmesh = make_sphere_mesh(sdim, dres);

  const Vec Avec = poles.A.vec();
  std::vector<Vec> X;
  for (int i = 0; i < dmesh.node_count(); ++i) {
    const Vec x = dmesh.node(i);
    if ((f->eval_unchecked(x) - Avec).norm() <= params.capture)
      X.push_back(x);
  }

  DiffeoFamily fam =
      hemisphere_clearing_family(X, poles.B, params.eps, params.mollify_width,
                                 params.equator_resolution);

  const Eigen::MatrixXd FB = equator_frame(poles.B);
  const Eigen::MatrixXd FA = equator_frame(poles.A);

  const int eres = params.equator_resolution > 0 ? params.equator_resolution
                                                 : (sdim == 2 ? 2048 : 192);
  auto emesh =
      std::make_shared<const SphereMesh>(make_sphere_mesh(sdim - 1, eres));
  for (int v = 0; v < emesh->vert_count(); ++v) {
    const Vec e = FB * Vec(emesh->vert(v));
    const Vec y = f->eval_unchecked(fam.apply(1.0, e));
    if (std::min((y - Avec).norm(), (y + Avec).norm()) < params.pole_tol)
      fail(ErrorCode::PoleHit,
           "the composed map comes within " + std::to_string(params.pole_tol) +
               " of a pole of A on the equator",
           Vec(e));
  }

  DiffeoFamily famc = fam;
  MapPtr f0 = f;
  auto fn = [f0, famc, FB, FA, Avec, sdim](const double* uin, double* yout) {
    Eigen::Map<const Vec> u(uin, sdim);
    const Vec e = FB * u;
    const Vec y = f0->eval_unchecked(famc.apply(1.0, e));
    Vec z = y - y.dot(Avec) * Avec;
    const double nz = z.norm();
    if (nz < 1e-12)
      fail(ErrorCode::PoleHit, "the composed map hit a pole of A", Vec(e));
    Eigen::Map<Vec>(yout, sdim - 1) = FA.transpose() * (z / nz);
  };
  const Domain dom = (sdim == 2) ? Domain::Sphere1 : Domain::Sphere2;
  MapPtr out = make_map(sdim, sdim - 1, dom, fn);

  const double defect = equivariance_defect(*out, *emesh);
  return ReduceResult{std::move(out), std::move(fam),
                      static_cast<int>(X.size()), defect};
}

}  // namespace stokes
