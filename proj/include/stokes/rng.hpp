#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace stokes {

// Deterministic random source.  Distributions are hand-rolled on top of the
// raw engine so that streams are identical across standard libraries; report
// reproducibility depends on this.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

  double gaussian() {
    // Box-Muller; one value per call keeps the stream easy to reason about.
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // uniform on the unit sphere in ambient dimension dim
  Eigen::VectorXd sphere_point(int dim) {
    Eigen::VectorXd v(dim);
    double n = 0.0;
    do {
      for (int i = 0; i < dim; ++i) v[i] = gaussian();
      n = v.norm();
    } while (n < 1e-8);
    return v / n;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace stokes
