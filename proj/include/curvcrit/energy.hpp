#pragma once

#include <cmath>

#include "curvcrit/grid.hpp"
#include "curvcrit/params.hpp"
#include "curvcrit/thresholds.hpp"
#include "curvcrit/truncation.hpp"

namespace curvcrit {

/// Energy diagnostics of one field.
struct EnergyReport {
    double I = 0.0;
    double J = 0.0;
    double norm_sq = 0.0;       // h1_norm_sq(u)
    double phi = 1.0;           // cutoff value at norm_sq
    double residual_norm = 0.0; // L2 norm of the J-gradient
};

namespace detail {

/// All integral pieces of the energies, gathered in one face sweep and one
/// node sweep: diffusion = (1/2) sum w A(|g_f|^2), norm_sq = sum w |g_f|^2,
/// lq = ||u||_q^q, crit = ||u||_{2*}^{2*}.
struct EnergyParts {
    double diffusion = 0.0;
    double norm_sq = 0.0;
    double lq = 0.0;
    double crit = 0.0;
};

inline EnergyParts energy_parts(const Field& u, const ProblemParams& p) {
    EnergyParts parts;
    const double w = u.spec.cell_volume() / u.spec.N;
    const int N = u.spec.N;
    double acc_A = 0.0, acc_t = 0.0;
    sweep_faces(u, [&](int, const std::array<int, kMaxDim>&, const double* g) {
        double t = 0.0;
        for (int k = 0; k < N; ++k) t += g[k] * g[k];
        acc_A += eval_A(p.coeff, t);
        acc_t += t;
    });
    parts.diffusion = 0.5 * acc_A * w;
    parts.norm_sq = acc_t * w;
    double lq = 0.0, crit = 0.0;
    for (double x : u.values) {
        const double ax = std::abs(x);
        lq += std::pow(ax, p.q);
        crit += std::pow(ax, p.two_star);
    }
    const double hN = u.spec.cell_volume();
    parts.lq = lq * hN;
    parts.crit = crit * hN;
    return parts;
}

} // namespace detail

/// Untruncated energy: (1/2) sum w A(|grad|^2) - (lambda/q)||u||_q^q
/// - (1/2*)||u||_{2*}^{2*}.
inline double eval_I(const Field& u, const ProblemParams& p) {
    const detail::EnergyParts parts = detail::energy_parts(u, p);
    return parts.diffusion - (p.lambda / p.q) * parts.lq - (1.0 / p.two_star) * parts.crit;
}

namespace detail {

/// exp(-1/s) extended by 0 for s <= 0; the C-infinity one-sided mollifier.
inline double partition_piece(double s) {
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

/// Its derivative exp(-1/s)/s^2, again 0 for s <= 0.
inline double partition_piece_prime(double s) {
    return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0;
}

} // namespace detail

/// Smooth non-increasing step: exactly 1 on (-inf, R0], exactly 0 on
/// [R1, inf), built from the exponential partition of unity.
inline double smooth_cutoff(double t, double R0, double R1) {
    if (!(R1 > R0)) throw DegenerateWindow("cutoff window requires R0 < R1");
    const double x = (t - R0) / (R1 - R0);
    const double fa = detail::partition_piece(1.0 - x);
    const double fb = detail::partition_piece(x);
    return fa / (fa + fb);
}

/// Derivative of smooth_cutoff in t; exactly 0 outside (R0, R1).
inline double smooth_cutoff_prime(double t, double R0, double R1) {
    if (!(R1 > R0)) throw DegenerateWindow("cutoff window requires R0 < R1");
    const double w = R1 - R0;
    const double x = (t - R0) / w;
    const double fa = detail::partition_piece(1.0 - x);
    const double fb = detail::partition_piece(x);
    const double num = detail::partition_piece_prime(1.0 - x) * fb +
                       fa * detail::partition_piece_prime(x);
    if (num == 0.0) return 0.0;
    const double den = fa + fb;
    return -num / (w * den * den);
}

/// Truncated energy: the critical term of I is scaled by phi(||u||^2).
/// When phi = 1 (norm_sq <= R0) the value reduces bit-for-bit to eval_I.
inline double eval_J(const Field& u, const ProblemParams& p, const Thresholds& th) {
    const detail::EnergyParts parts = detail::energy_parts(u, p);
    const double phi = smooth_cutoff(parts.norm_sq, th.R0, th.R1);
    return parts.diffusion - (p.lambda / p.q) * parts.lq -
           phi * ((1.0 / p.two_star) * parts.crit);
}

namespace detail {

/// Shared gradient assembly. The diffusion part is the exact adjoint of the
/// face-gradient reconstruction with face coefficient a(|g_f|^2); the local
/// terms differentiate the node sums; phi scales the critical term and dphi
/// carries the cutoff chain term through d(norm_sq)/du.
inline Field grad_core(const Field& u, const ProblemParams& p, double phi, double dphi,
                       double crit) {
    Field g = zero_field(u.spec);
    add_divergence_form(u, [&p](double t) { return eval_a(p.coeff, t); }, 1.0, g);
    const double qm1 = p.q - 1.0;
    const double sm2 = p.two_star - 2.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double x = u.values[i];
        const double ax = std::abs(x);
        g.values[i] -= p.lambda * std::copysign(std::pow(ax, qm1), x);
        g.values[i] -= phi * (std::pow(ax, sm2) * x);
    }
    if (dphi != 0.0) {
        // d/du of phi(norm_sq): dphi * 2 * (adjoint with unit coefficient)
        add_divergence_form(u, [](double) { return 1.0; },
                            -dphi * (2.0 / p.two_star) * crit, g);
    }
    return g;
}

} // namespace detail

/// Exact discrete gradient of eval_I (the weak-form residual field of the
/// truncated problem), in L^2 density form: the directional derivative of
/// eval_I along v equals l2_inner(grad_I, v).
inline Field grad_I(const Field& u, const ProblemParams& p) {
    const detail::EnergyParts parts = detail::energy_parts(u, p);
    return detail::grad_core(u, p, 1.0, 0.0, parts.crit);
}

/// Exact discrete gradient of eval_J. Coincides bit-for-bit with grad_I
/// whenever norm_sq <= R0 (phi = 1 and the chain term vanishes identically).
inline Field grad_J(const Field& u, const ProblemParams& p, const Thresholds& th) {
    const detail::EnergyParts parts = detail::energy_parts(u, p);
    const double phi = smooth_cutoff(parts.norm_sq, th.R0, th.R1);
    const double dphi = smooth_cutoff_prime(parts.norm_sq, th.R0, th.R1);
    return detail::grad_core(u, p, phi, dphi, parts.crit);
}

/// L^2 norm of the weak residual of the ORIGINAL problem: the same gradient
/// assembly with the untruncated coefficient 1/sqrt(1+t) at every face. On
/// fields with sup_grad^2 <= r this equals ||grad_I|| bit-for-bit, because
/// both coefficients evaluate the identical expression on [0, r].
inline double residual_P(const Field& u, const ProblemParams& p) {
    Field g = zero_field(u.spec);
    add_divergence_form(u, [](double t) { return mean_curvature_coefficient(t); }, 1.0, g);
    const double qm1 = p.q - 1.0;
    const double sm2 = p.two_star - 2.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double x = u.values[i];
        const double ax = std::abs(x);
        g.values[i] -= p.lambda * std::copysign(std::pow(ax, qm1), x);
        g.values[i] -= std::pow(ax, sm2) * x;
    }
    return l2_norm(g);
}

/// L^2 norm of the truncated-problem residual grad_I.
inline double residual_T(const Field& u, const ProblemParams& p) {
    return l2_norm(grad_I(u, p));
}

/// Full diagnostics in one pass.
inline EnergyReport energy_report(const Field& u, const ProblemParams& p, const Thresholds& th) {
    const detail::EnergyParts parts = detail::energy_parts(u, p);
    EnergyReport rep;
    rep.norm_sq = parts.norm_sq;
    rep.phi = smooth_cutoff(parts.norm_sq, th.R0, th.R1);
    rep.I = parts.diffusion - (p.lambda / p.q) * parts.lq - (1.0 / p.two_star) * parts.crit;
    rep.J = parts.diffusion - (p.lambda / p.q) * parts.lq -
            rep.phi * ((1.0 / p.two_star) * parts.crit);
    const double dphi = smooth_cutoff_prime(parts.norm_sq, th.R0, th.R1);
    rep.residual_norm = l2_norm(detail::grad_core(u, p, rep.phi, dphi, parts.crit));
    return rep;
}

} // namespace curvcrit
