#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "orbitkit/space.hpp"

namespace orbitkit {

/// Seeded generator whose draws do not depend on the standard library's
/// distribution implementations, so point sets are reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
  }

  /// Unit vector (in the given norm) with a direction that is uniform for the
  /// euclidean case and reasonably spread for the others.
  Vector unit_vector(int dim, NormKind kind) {
    Vector v(dim);
    do {
      for (int i = 0; i < dim; ++i) v(i) = normal();
    } while (v.norm() == 0.0);
    return v / norm(v, kind);
  }

  /// Uniform point in the ball of radius 1 of the given norm.
  Vector in_unit_ball(int dim, NormKind kind) {
    Vector v(dim);
    switch (kind) {
      case NormKind::sup:
        for (int i = 0; i < dim; ++i) v(i) = uniform(-1.0, 1.0);
        return v;
      case NormKind::euclidean: {
        Vector d = unit_vector(dim, kind);
        return d * std::pow(uniform(), 1.0 / dim);
      }
      case NormKind::l1: {
        double total = exponential();
        for (int i = 0; i < dim; ++i) {
          v(i) = exponential();
          total += v(i);
        }
        for (int i = 0; i < dim; ++i) v(i) = (uniform() < 0.5 ? -1.0 : 1.0) * v(i) / total;
        return v;
      }
    }
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace orbitkit
