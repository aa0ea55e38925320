#pragma once

#include <cmath>
#include <string>

#include "curvcrit/errors.hpp"

namespace curvcrit {

/// Critical Sobolev exponent 2N/(N-2).
inline double critical_exponent(int N) {
    if (N < 3) throw ConfigError("dimension must be at least 3, got " + std::to_string(N));
    return 2.0 * N / (N - 2.0);
}

/// Identity branch of the diffusion coefficient, 1/sqrt(1+t).
///
/// Shared by the truncated coefficient (on [0,r]) and by the untruncated
/// residual so that both evaluate bit-identically where they coincide.
inline double mean_curvature_coefficient(double t) {
    return 1.0 / std::sqrt(1.0 + t);
}

/// C1 truncation of 1/sqrt(1+t).
///
/// Piecewise definition:
///   a(t) = 1/sqrt(1+t)          for t in [0, r],
///   a(t) = cubic bridge eta(t)  for t in [r, r+delta],
///   a(t) = K0                   for t >= r+delta,
/// where K0 = 1/sqrt(1+r+delta) and the bridge matches value and first
/// derivative at both knots (Hermite conditions, with slope 0 at r+delta).
/// The coefficient is non-increasing and sandwiched in [K0, 1].
struct TruncatedCoefficient {
    double r = 0.0;
    double delta = 0.0;
    double K0 = 0.0;
    /// Bridge polynomial eta(r+s) = b0 + b1 s + b2 s^2 + b3 s^3, s in [0, delta].
    double bridge_coeffs[4] = {0.0, 0.0, 0.0, 0.0};
};

/// Builds the truncated coefficient for given r > 0 (or r = 0), delta > 0.
///
/// Throws ConditionOneViolated unless 2/two_star < K0 < 1, and
/// NonMonotoneBridge if the cubic bridge fails to be non-increasing on
/// [r, r+delta] (the bridge slope is a quadratic, so monotonicity is checked
/// exactly at its extremum and the interval endpoints).
inline TruncatedCoefficient build_coefficient(double r, double delta, double two_star) {
    if (r < 0.0) throw NegativeArgument("truncation radius r must be >= 0");
    if (!(delta > 0.0)) throw ConfigError("bridge width delta must be > 0");

    TruncatedCoefficient c;
    c.r = r;
    c.delta = delta;
    c.K0 = 1.0 / std::sqrt(1.0 + r + delta);

    if (!(c.K0 > 2.0 / two_star) || !(c.K0 < 1.0)) {
        throw ConditionOneViolated(
            "plateau value K0 = " + std::to_string(c.K0) +
            " violates 2/two_star < K0 < 1; shrink r + delta");
    }

    const double p0 = 1.0 / std::sqrt(1.0 + r);
    const double m0 = -0.5 / std::sqrt((1.0 + r) * (1.0 + r) * (1.0 + r));
    const double p1 = c.K0;
    const double m1 = 0.0;
    const double d = delta;

    c.bridge_coeffs[0] = p0;
    c.bridge_coeffs[1] = m0;
    c.bridge_coeffs[2] = (3.0 * (p1 - p0) - d * (2.0 * m0 + m1)) / (d * d);
    c.bridge_coeffs[3] = (-2.0 * (p1 - p0) + d * (m0 + m1)) / (d * d * d);

    // eta'(s) = b1 + 2 b2 s + 3 b3 s^2 must stay <= 0 on [0, d].
    const double b1 = c.bridge_coeffs[1];
    const double b2 = c.bridge_coeffs[2];
    const double b3 = c.bridge_coeffs[3];
    double worst = std::max(b1, b1 + 2.0 * b2 * d + 3.0 * b3 * d * d);
    if (b3 != 0.0) {
        const double s_ext = -b2 / (3.0 * b3);
        if (s_ext > 0.0 && s_ext < d)
            worst = std::max(worst, b1 + 2.0 * b2 * s_ext + 3.0 * b3 * s_ext * s_ext);
    }
    const double slope_scale = std::abs(m0) + std::abs(p1 - p0) / d;
    if (worst > 1e-12 * std::max(1.0, slope_scale)) {
        throw NonMonotoneBridge(
            "cubic bridge is not non-increasing on its interval; shrink delta");
    }
    return c;
}

/// Evaluates the bridge cubic at offset s = t - r.
inline double eval_bridge(const TruncatedCoefficient& c, double s) {
    const double* b = c.bridge_coeffs;
    return b[0] + s * (b[1] + s * (b[2] + s * b[3]));
}

/// Evaluates the bridge slope at offset s = t - r.
inline double eval_bridge_prime(const TruncatedCoefficient& c, double s) {
    const double* b = c.bridge_coeffs;
    return b[1] + s * (2.0 * b[2] + s * (3.0 * b[3]));
}

/// a(t) for t >= 0. Throws NegativeArgument for t < 0.
inline double eval_a(const TruncatedCoefficient& c, double t) {
    if (t < 0.0) throw NegativeArgument("coefficient argument must be >= 0");
    if (t <= c.r) return mean_curvature_coefficient(t);
    if (t < c.r + c.delta) return eval_bridge(c, t - c.r);
    return c.K0;
}

/// a'(t), piecewise analytic (one-sided values agree at the knots).
inline double eval_a_prime(const TruncatedCoefficient& c, double t) {
    if (t < 0.0) throw NegativeArgument("coefficient argument must be >= 0");
    if (t <= c.r) {
        const double s = 1.0 + t;
        return -0.5 / std::sqrt(s * s * s);
    }
    if (t < c.r + c.delta) return eval_bridge_prime(c, t - c.r);
    return 0.0;
}

/// Antiderivative A(t) = integral of a over [0, t], in closed form.
///
/// On [0, r] this is 2(sqrt(1+t) - 1), written as 2t/(sqrt(1+t)+1) to avoid
/// cancellation for small t; across the bridge and plateau the polynomial and
/// constant pieces integrate exactly.
inline double eval_A(const TruncatedCoefficient& c, double t) {
    if (t < 0.0) throw NegativeArgument("antiderivative argument must be >= 0");
    if (t <= c.r) return 2.0 * t / (std::sqrt(1.0 + t) + 1.0);

    const double A_r = 2.0 * c.r / (std::sqrt(1.0 + c.r) + 1.0);
    const double* b = c.bridge_coeffs;
    const auto bridge_integral = [&](double s) {
        return s * (b[0] + s * (b[1] / 2.0 + s * (b[2] / 3.0 + s * (b[3] / 4.0))));
    };
    if (t < c.r + c.delta) return A_r + bridge_integral(t - c.r);
    return A_r + bridge_integral(c.delta) + c.K0 * (t - c.r - c.delta);
}

} // namespace curvcrit
