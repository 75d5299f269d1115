#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "orbitkit/errors.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// Dormand-Prince 5(4) embedded pair with error control per unit time:
/// each accepted step satisfies |err_i| <= tol * (1 + |y_i|) * |h|.
class DormandPrince54 {
 public:
  using Rhs = std::function<void(const Vector& y, Vector& dy)>;
  /// Called after every accepted step with (t, y). Returning false aborts.
  using Observer = std::function<bool(double t, const Vector& y)>;

  struct Stats {
    long accepted = 0;
    long rejected = 0;
    double error_estimate = 0.0;
    double last_step = 0.0;
  };

  explicit DormandPrince54(double tol) : tol_(tol) {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  }

  /// Integrates the autonomous system y' = f(y) from t0 to t1 (either
  /// direction). `h_hint` carries the step size between segments.
  Stats integrate(const Rhs& f, Vector& y, double t0, double t1, double& h_hint, const Observer& observe) const {
    Stats stats;
    const double span = t1 - t0;
    if (span == 0.0) return stats;
    const double dir = span > 0 ? 1.0 : -1.0;
    const auto n = y.size();
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    f(y, k1);
    double h = h_hint > 0 ? std::min(h_hint, std::abs(span)) : initial_step(y, k1, std::abs(span));
    double t = t0;
    const long max_steps = 5'000'000;
    while (dir * (t1 - t) > 0.0) {
      if (stats.accepted + stats.rejected > max_steps)
        throw Error(ErrorKind::StepUnderflow, "step budget exhausted");
      const double remaining = std::abs(t1 - t);
      bool last = false;
      const double proposed = h;
      if (h >= remaining * (1.0 - 1e-12)) {
        h = remaining;
        last = true;
      }
      const double hs = dir * h;
      ytmp = y + hs * (a21 * k1);
      f(ytmp, k2);
      ytmp = y + hs * (a31 * k1 + a32 * k2);
      f(ytmp, k3);
      ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      f(ytmp, k4);
      ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(ytmp, k5);
      ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(ytmp, k6);
      ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      f(ynew, k7);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double ratio = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = tol_ * (1.0 + std::max(std::abs(y(i)), std::abs(ynew(i)))) * h;
        ratio = std::max(ratio, std::abs(err(i)) / scale);
      }
      if (!std::isfinite(ratio)) ratio = 1e10;

      if (ratio <= 1.0) {
        t = last ? t1 : t + hs;
        y = ynew;
        k1 = k7;
        ++stats.accepted;
        stats.error_estimate += err.cwiseAbs().maxCoeff();
        stats.last_step = h;
        if (observe && !observe(t, y)) return stats;
        const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.25), 0.2, 5.0);
        h = last ? proposed : h * grow;
        h_hint = h;
      } else {
        ++stats.rejected;
        h *= std::clamp(0.9 * std::pow(ratio, -0.25), 0.1, 0.9);
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
          throw Error(ErrorKind::StepUnderflow, "step size underflow at t = " + std::to_string(t));
      }
    }
    return stats;
  }

 private:
  double initial_step(const Vector& y, const Vector& f0, double span) const {
    const double fn = f0.cwiseAbs().maxCoeff();
    const double yn = y.cwiseAbs().maxCoeff();
    double h = fn > 0 ? 0.01 * (1.0 + yn) / fn : span;
    return std::clamp(h, 1e-8 * span, span);
  }

  double tol_;

  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                          b6 = 11.0 / 84.0;
  // b - b*, with b* the embedded 4th-order weights.
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

}  // namespace orbitkit
