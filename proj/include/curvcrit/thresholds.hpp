#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "curvcrit/grid.hpp"
#include "curvcrit/params.hpp"

namespace curvcrit {

/// Derived constants of one problem instance: S, Sq estimates, the root
/// window [R0, R1] at the instance's lambda, the parameter thresholds, and
/// the compactness level bound at that lambda.
struct Thresholds {
    double S = 0.0;
    double Sq = 0.0;
    double R0 = 0.0;
    double R1 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double lambda_star = 0.0;
    double ps_bound = 0.0;
};

/// Constant pack for the window lower-bound function
/// g(t) = (K0/2) t - (lambda/(q Sq^{q/2})) t^{q/2} - (1/(2* S^{2*/2})) t^{2*/2}.
struct GConstants {
    double K0 = 0.0;
    double S = 0.0;
    double Sq = 0.0;
    double q = 0.0;
    double two_star = 0.0;
};

inline GConstants g_constants(const ProblemParams& p, double S, double Sq) {
    return GConstants{p.coeff.K0, S, Sq, p.q, p.two_star};
}

/// Deterministic RNG stream: one engine per (seed, salt) purpose.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t salt) {
    return std::mt19937_64(seed + 0x9E3779B97F4A7C15ull * (salt + 1));
}

/// Uniform double in [0, 1) with implementation-independent bit use.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Options for the Rayleigh-quotient minimizer.
struct SobolevOptions {
    int starts = 3;
    int max_iter = 50000;
    double tol = 1e-12;      // relative per-step decrease considered stationary
    std::uint64_t seed = 12345;
};

struct SobolevEstimates {
    double S = 0.0;
    double Sq = 0.0;
};

namespace detail {

/// Projected gradient descent on the Rayleigh quotient
/// Q(u) = h1_norm_sq(u) / lp_norm(u, p)^2, keeping the iterate lp-normalized.
/// Returns the best quotient reached from this start.
inline double rayleigh_descent(Field u, double p, const SobolevOptions& opts) {
    const double np = lp_norm(u, p);
    if (np == 0.0) throw NonConvergence("zero start field in Rayleigh descent");
    scale_field(u, 1.0 / np);
    double Q = h1_norm_sq(u);
    double step = 1.0;
    int stall = 0;
    double last_rel = 1.0;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // density gradient of Q at an lp-normalized point
        Field g = zero_field(u.spec);
        add_divergence_form(u, [](double) { return 1.0; }, 2.0, g);
        const double pm1 = p - 1.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double x = u.values[i];
            g.values[i] -= 2.0 * Q * std::copysign(std::pow(std::abs(x), pm1), x);
        }
        bool improved = false;
        double s = step;
        Field v = u;
        double Qv = Q;
        for (int ls = 0; ls < 60; ++ls) {
            v = axpy(u, -s, g);
            const double nv = lp_norm(v, p);
            if (nv > 0.0) {
                scale_field(v, 1.0 / nv);
                Qv = h1_norm_sq(v);
                if (Qv < Q) { improved = true; break; }
            }
            s *= 0.5;
        }
        if (!improved) break; // no descent direction resolvable: stationary
        last_rel = (Q - Qv) / Q;
        u = std::move(v);
        Q = Qv;
        step = s * 2.0;
        if (last_rel < opts.tol) {
            if (++stall >= 20) break;
        } else {
            stall = 0;
        }
    }
    if (it >= opts.max_iter && last_rel > 1e-6)
        throw NonConvergence("Rayleigh quotient still changing at iteration cap");
    return Q;
}

} // namespace detail

/// Best discrete embedding constant inf ||u||^2 / ||u||_{L^p}^2 found by
/// multistart projected-gradient minimization. Start 0 is the ground sine
/// mode; the rest are random nodal fields.
inline double estimate_sobolev_constant(const DomainSpec& dom, double p,
                                        const SobolevOptions& opts, std::uint64_t salt) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(1, opts.starts); ++s) {
        Field u0;
        if (s == 0) {
            u0 = eigenfield(dom, std::vector<int>(dom.N, 1));
        } else {
            auto rng = make_rng(opts.seed, salt * 1000 + static_cast<std::uint64_t>(s));
            u0 = zero_field(dom);
            for (double& x : u0.values) x = 2.0 * uniform01(rng) - 1.0;
        }
        best = std::min(best, detail::rayleigh_descent(std::move(u0), p, opts));
    }
    return best;
}

/// S (critical exponent) and Sq (exponent q) on the given discretization.
inline SobolevEstimates estimate_sobolev_constants(const DomainSpec& dom, double q,
                                                   const SobolevOptions& opts) {
    SobolevEstimates e;
    e.S = estimate_sobolev_constant(dom, critical_exponent(dom.N), opts, 1);
    e.Sq = estimate_sobolev_constant(dom, q, opts, 2);
    return e;
}

/// g(t) at parameter lambda.
inline double eval_g(double t, double lambda, const GConstants& k) {
    if (t < 0.0) throw NegativeArgument("g argument must be >= 0");
    if (lambda < 0.0) throw NegativeArgument("lambda must be >= 0");
    const double Cq = lambda / (k.q * std::pow(k.Sq, k.q / 2.0));
    const double Cs = 1.0 / (k.two_star * std::pow(k.S, k.two_star / 2.0));
    const double sub = (lambda == 0.0) ? 0.0 : Cq * std::pow(t, k.q / 2.0);
    return (k.K0 / 2.0) * t - sub - Cs * std::pow(t, k.two_star / 2.0);
}

/// g'(t); for lambda > 0 this tends to -inf as t -> 0+.
inline double eval_g_prime(double t, double lambda, const GConstants& k) {
    const double a = k.q / 2.0;
    const double b = k.two_star / 2.0;
    const double Cq = lambda / (k.q * std::pow(k.Sq, a));
    const double Cs = 1.0 / (k.two_star * std::pow(k.S, b));
    const double sub = (lambda == 0.0) ? 0.0 : a * Cq * std::pow(t, a - 1.0);
    return k.K0 / 2.0 - sub - b * Cs * std::pow(t, b - 1.0);
}

/// Location and value of the interior maximum of g, when one exists.
struct GMax {
    bool positive = false; // g_max > 0
    double t_max = 0.0;
    double g_max = 0.0;
};

/// Finds the interior argmax of g. For lambda > 0, g' rises on (0, t_infl]
/// and falls beyond the closed-form inflection point t_infl of g; if
/// g'(t_infl) <= 0 then g' < 0 everywhere and g has no positive values.
inline GMax max_of_g(double lambda, const GConstants& k) {
    const double a = k.q / 2.0;
    const double b = k.two_star / 2.0;
    const double Cq = lambda / (k.q * std::pow(k.Sq, a));
    const double Cs = 1.0 / (k.two_star * std::pow(k.S, b));

    GMax m;
    if (lambda == 0.0) {
        m.t_max = std::pow((k.K0 / 2.0) / (b * Cs), 1.0 / (b - 1.0));
        m.g_max = eval_g(m.t_max, lambda, k);
        m.positive = m.g_max > 0.0;
        return m;
    }
    const double t_infl = std::pow(a * (1.0 - a) * Cq / (b * (b - 1.0) * Cs), 1.0 / (b - a));
    if (!(eval_g_prime(t_infl, lambda, k) > 0.0)) return m; // g strictly decreasing
    double lo = t_infl, hi = t_infl;
    for (int i = 0; i < 400 && eval_g_prime(hi, lambda, k) > 0.0; ++i) hi *= 2.0;
    for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-14); ++i) {
        const double mid = std::sqrt(lo) * std::sqrt(hi);
        (eval_g_prime(mid, lambda, k) > 0.0 ? lo : hi) = mid;
    }
    m.t_max = std::sqrt(lo) * std::sqrt(hi);
    m.g_max = eval_g(m.t_max, lambda, k);
    m.positive = m.g_max > 0.0;
    return m;
}

struct RootPair {
    double R0 = 0.0;
    double R1 = 0.0;
};

/// The two roots R0 < R1 of g around its positive maximum, each located by
/// geometric (log-space) bisection so that tiny R0 values keep full relative
/// accuracy. At lambda = 0 the lower root degenerates to R0 = 0 exactly.
inline RootPair find_roots(double lambda, const GConstants& k) {
    if (lambda < 0.0) throw NegativeArgument("lambda must be >= 0");
    const GMax m = max_of_g(lambda, k);
    if (!m.positive)
        throw NoPositiveMaximum("g has no positive maximum at lambda = " + std::to_string(lambda));

    RootPair roots;
    // upper root: bracket [t_max, T] with g(T) < 0
    {
        double lo = m.t_max, hi = 2.0 * m.t_max;
        for (int i = 0; i < 400 && eval_g(hi, lambda, k) >= 0.0; ++i) hi *= 2.0;
        for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-15); ++i) {
            const double mid = std::sqrt(lo) * std::sqrt(hi);
            (eval_g(mid, lambda, k) >= 0.0 ? lo : hi) = mid;
        }
        roots.R1 = std::sqrt(lo) * std::sqrt(hi);
    }
    if (lambda == 0.0) {
        roots.R0 = 0.0;
        return roots;
    }
    // lower root: start from the prescribed bracket seed and shrink
    // geometrically until the sublinear term dominates (g < 0)
    {
        double lo = 1e-14 * roots.R1;
        for (int i = 0; i < 400 && eval_g(lo, lambda, k) >= 0.0; ++i) lo *= 1e-2;
        if (eval_g(lo, lambda, k) >= 0.0)
            throw NoPositiveMaximum("lower bracket for R0 not found");
        double hi = m.t_max;
        for (int i = 0; i < 400 && hi > lo * (1.0 + 1e-15); ++i) {
            const double mid = std::sqrt(lo) * std::sqrt(hi);
            (eval_g(mid, lambda, k) < 0.0 ? lo : hi) = mid;
        }
        roots.R0 = std::sqrt(lo) * std::sqrt(hi);
    }
    return roots;
}

/// Largest lambda for which the construction window exists and R0 <= r:
/// tau1 = min(lambda_crit, lambda_r), with lambda_crit the root of
/// max_t g(t; lambda) = 0 and lambda_r the solution of R0(lambda) = r
/// (+inf when R0 stays below r all the way to lambda_crit).
inline double compute_tau1(const GConstants& k, double r) {
    // max_t g is strictly decreasing in lambda: bracket and bisect
    double lo = 1.0, hi = 1.0;
    if (max_of_g(lo, k).positive) {
        for (int i = 0; i < 400 && max_of_g(hi, k).positive; ++i) hi *= 2.0;
    } else {
        for (int i = 0; i < 400 && !max_of_g(lo, k).positive; ++i) lo *= 0.5;
    }
    for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-10); ++i) {
        const double mid = std::sqrt(lo) * std::sqrt(hi);
        (max_of_g(mid, k).positive ? lo : hi) = mid;
    }
    const double lambda_crit = std::sqrt(lo) * std::sqrt(hi);

    // R0 is strictly increasing in lambda; lo is certified inside the window
    const double lambda_probe = lo;
    if (r > 0.0 && find_roots(lambda_probe, k).R0 > r) {
        double llo = lambda_probe * 1e-12, lhi = lambda_probe;
        for (int i = 0; i < 400 && find_roots(llo, k).R0 > r; ++i) llo *= 1e-2;
        for (int i = 0; i < 200 && lhi > llo * (1.0 + 1e-10); ++i) {
            const double mid = std::sqrt(llo) * std::sqrt(lhi);
            (find_roots(mid, k).R0 <= r ? llo : lhi) = mid;
        }
        const double lambda_r = std::sqrt(llo) * std::sqrt(lhi);
        return std::min(lambda_crit, lambda_r);
    }
    if (r == 0.0) return 0.0;
    return lambda_crit;
}

/// Right-hand side of the compactness level bound at parameter lambda.
inline double ps_level_bound(double lambda, const GConstants& k, double omega_measure) {
    const double s = k.two_star;
    const double N = 2.0 * s / (s - 2.0);
    const double edge = k.K0 / 2.0 - 1.0 / s; // positive under 2/2* < K0
    const double head = edge * std::pow(k.K0, (N - 2.0) / 2.0) * std::pow(k.S, N / 2.0);
    if (lambda == 0.0) return head;
    const double D = 1.0 / k.q - 1.0 / s;
    const double inner = (k.q / s) * lambda * D * std::pow(omega_measure, (s - k.q) / s) *
                         std::pow(k.S, s / 2.0) / edge;
    return head - lambda * D * std::pow(omega_measure, (s - k.q) / 2.0) *
                      std::pow(inner, k.q / (s - k.q));
}

/// Unique positive root in lambda of ps_level_bound, by bisection; the bound
/// is positive for every lambda below it.
inline double compute_tau2(const GConstants& k, double omega_measure) {
    double lo = 1.0, hi = 1.0;
    if (ps_level_bound(lo, k, omega_measure) > 0.0) {
        for (int i = 0; i < 400 && ps_level_bound(hi, k, omega_measure) > 0.0; ++i) hi *= 2.0;
    } else {
        for (int i = 0; i < 400 && !(ps_level_bound(lo, k, omega_measure) > 0.0); ++i) lo *= 0.5;
    }
    for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-11); ++i) {
        const double mid = std::sqrt(lo) * std::sqrt(hi);
        (ps_level_bound(mid, k, omega_measure) > 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo) * std::sqrt(hi);
}

inline double lambda_star(double tau1, double tau2) { return std::min(tau1, tau2); }

/// Assembles the full threshold record for p.lambda from precomputed Sobolev
/// estimates. When p.lambda sits outside the window regime the roots are
/// reported as NaN; the solve-time guard uses lambda_star, not the roots.
inline Thresholds assemble_thresholds(const ProblemParams& p, double S, double Sq) {
    const GConstants k = g_constants(p, S, Sq);
    Thresholds th;
    th.S = S;
    th.Sq = Sq;
    th.tau1 = compute_tau1(k, p.coeff.r);
    th.tau2 = compute_tau2(k, p.domain.measure());
    th.lambda_star = lambda_star(th.tau1, th.tau2);
    try {
        const RootPair roots = find_roots(p.lambda, k);
        th.R0 = roots.R0;
        th.R1 = roots.R1;
    } catch (const NoPositiveMaximum&) {
        th.R0 = std::numeric_limits<double>::quiet_NaN();
        th.R1 = std::numeric_limits<double>::quiet_NaN();
    }
    th.ps_bound = ps_level_bound(p.lambda, k, p.domain.measure());
    return th;
}

/// One-call pipeline: Sobolev estimation plus threshold assembly.
inline Thresholds compute_thresholds(const ProblemParams& p, const SobolevOptions& opts) {
    const SobolevEstimates e = estimate_sobolev_constants(p.domain, p.q, opts);
    return assemble_thresholds(p, e.S, e.Sq);
}

} // namespace curvcrit
