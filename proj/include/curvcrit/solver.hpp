#pragma once

#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "curvcrit/energy.hpp"
#include "curvcrit/grid.hpp"
#include "curvcrit/params.hpp"
#include "curvcrit/thresholds.hpp"

namespace curvcrit {

/// One converged critical point and its diagnostics.
struct SolutionRecord {
    Field u;
    double level = 0.0; // J value, the found stand-in for the minimax level
    EnergyReport report;
    int iterations = 0;
    double lambda = 0.0;
};

/// Records sorted by level; each sign pair is stored once (the negation is an
/// equally valid critical point by symmetry).
struct SolutionSet {
    std::vector<SolutionRecord> records;
};

struct DescentOptions {
    double tol = 1e-8;       // stop when ||grad_J||_{L2} <= tol
    int max_iter = 200000;
    double armijo = 1e-4;    // sufficient-decrease fraction
    double min_step = 1e-16; // below this the line search reports a stall
};

/// Standard normal deviate from the deterministic uniform stream.
inline double normal_deviate(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng); // in (0, 1]
    const double u2 = uniform01(rng);
    const double pi = 3.14159265358979323846;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

/// m seed fields on the sphere ||u|| = R inside the span of the k lowest sine
/// modes, R halved from sqrt(R1) until every sampled seed has negative J.
/// The first sample points along the newest basis direction; the rest are
/// random unit combinations. Each seed represents the antipodal pair {u, -u}.
inline std::vector<Field> symmetric_seeds(int k, const ProblemParams& p, const Thresholds& th,
                                          int m, std::mt19937_64& rng) {
    if (k < 1) throw ConfigError("subspace index k must be >= 1");
    if (m < 1) throw ConfigError("samples per sphere must be >= 1");
    const auto modes = lowest_modes(p.domain, k);
    std::vector<Field> basis;
    basis.reserve(modes.size());
    for (const auto& mv : modes) {
        Field e = eigenfield(p.domain, mv);
        scale_field(e, 1.0 / std::sqrt(h1_norm_sq(e)));
        basis.push_back(std::move(e));
    }

    std::vector<Field> dirs;
    dirs.reserve(static_cast<std::size_t>(m));
    for (int s = 0; s < m; ++s) {
        std::vector<double> c(static_cast<std::size_t>(k), 0.0);
        if (s == 0) {
            c.back() = 1.0;
        } else {
            double nrm = 0.0;
            while (nrm == 0.0) {
                for (double& ci : c) ci = normal_deviate(rng);
                nrm = 0.0;
                for (double ci : c) nrm += ci * ci;
                nrm = std::sqrt(nrm);
            }
            for (double& ci : c) ci /= nrm;
        }
        Field u = zero_field(p.domain);
        for (int j = 0; j < k; ++j)
            for (std::size_t i = 0; i < u.values.size(); ++i)
                u.values[i] += c[static_cast<std::size_t>(j)] * basis[static_cast<std::size_t>(j)].values[i];
        scale_field(u, 1.0 / std::sqrt(h1_norm_sq(u)));
        dirs.push_back(std::move(u));
    }

    double R = std::sqrt(th.R1);
    while (R > 1e-10) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const Field& d : dirs) {
            Field u = d;
            scale_field(u, R);
            worst = std::max(worst, eval_J(u, p, th));
        }
        if (worst < 0.0) {
            std::vector<Field> seeds;
            seeds.reserve(dirs.size());
            for (const Field& d : dirs) {
                Field u = d;
                scale_field(u, R);
                seeds.push_back(std::move(u));
            }
            return seeds;
        }
        R *= 0.5;
    }
    throw RadiusSearchFailed(
        "no sphere radius above 1e-10 gives negative J; lambda may be too small for this grid");
}

/// Backtracking gradient descent on J from one seed. J decreases monotonically
/// across accepted steps; terminates when the L2 residual drops to tol.
inline SolutionRecord descend(const Field& seed, const ProblemParams& p, const Thresholds& th,
                              const DescentOptions& opts = {}) {
    Field u = seed;
    double J = eval_J(u, p, th);
    Field g = grad_J(u, p, th);
    double gn2 = l2_inner(g, g);
    double step = 1.0;
    int iter = 0;
    while (std::sqrt(gn2) > opts.tol) {
        if (iter >= opts.max_iter)
            throw MaxIterations("descent exceeded " + std::to_string(opts.max_iter) +
                                " iterations (residual " + std::to_string(std::sqrt(gn2)) + ")");
        double s = step;
        bool accepted = false;
        Field trial;
        double Jt = 0.0;
        while (s >= opts.min_step) {
            trial = axpy(u, -s, g);
            Jt = eval_J(trial, p, th);
            if (Jt <= J - opts.armijo * s * gn2) { accepted = true; break; }
            s *= 0.5;
        }
        if (!accepted) throw LineSearchStalled("line search step fell below minimum");
        u = std::move(trial);
        J = Jt;
        step = s * 2.0;
        ++iter;
        g = grad_J(u, p, th);
        gn2 = l2_inner(g, g);
    }
    SolutionRecord rec;
    rec.report = energy_report(u, p, th);
    rec.level = rec.report.J;
    rec.u = std::move(u);
    rec.iterations = iter;
    rec.lambda = p.lambda;
    return rec;
}

struct MultistartOptions {
    DescentOptions descent;
    int seeds_per_sphere = 3;
    double dedup_tol = 1e-3; // relative to the larger L2 norm
    int threads = 1;
    std::uint64_t seed = 12345;
};

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers; results land in
/// caller-owned slots so the merge order is index order regardless of timing.
template <class Fn>
inline void parallel_index(std::size_t count, int threads, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Multistart search over the nested sphere families j = 1..k: descends every
/// seed, keeps negative-level converged records, dedups modulo sign, sorts by
/// level. Per-seed failures are collected, not fatal; an empty result throws.
inline SolutionSet find_multiple(int k, const ProblemParams& p, const Thresholds& th,
                                 const MultistartOptions& opts) {
    auto rng = make_rng(opts.seed, 7001);
    std::vector<Field> seeds;
    for (int j = 1; j <= k; ++j) {
        auto batch = symmetric_seeds(j, p, th, opts.seeds_per_sphere, rng);
        for (auto& s : batch) seeds.push_back(std::move(s));
    }

    std::vector<std::optional<SolutionRecord>> results(seeds.size());
    std::vector<std::string> failures(seeds.size());
    detail::parallel_index(seeds.size(), opts.threads, [&](std::size_t i) {
        try {
            results[i] = descend(seeds[i], p, th, opts.descent);
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    std::vector<SolutionRecord> converged;
    for (auto& r : results)
        if (r && r->level < 0.0) converged.push_back(std::move(*r));
    std::sort(converged.begin(), converged.end(),
              [](const SolutionRecord& a, const SolutionRecord& b) { return a.level < b.level; });

    SolutionSet set;
    for (auto& rec : converged) {
        bool duplicate = false;
        for (const SolutionRecord& kept : set.records) {
            const double tol =
                opts.dedup_tol * std::max(l2_norm(rec.u), l2_norm(kept.u));
            if (l2_distance_mod_sign(rec.u, kept.u) <= tol) { duplicate = true; break; }
        }
        if (!duplicate) set.records.push_back(std::move(rec));
    }
    if (set.records.empty()) {
        std::string why = "no seed converged to a negative level";
        for (std::size_t i = 0; i < failures.size(); ++i)
            if (!failures[i].empty()) why += "; seed " + std::to_string(i) + ": " + failures[i];
        throw EmptySet(why);
    }
    return set;
}

/// One sweep step: the thresholds at this lambda plus either a record or the
/// failure reason.
struct SweepPoint {
    double lambda = 0.0;
    Thresholds th;
    std::optional<SolutionRecord> rec;
    std::string error;
};

/// Warm-started descent along a decreasing lambda schedule. Each step rescales
/// the previous solution onto the first halved sphere with negative J; if no
/// such radius exists the step falls back to a cold ground-mode seed.
inline std::vector<SweepPoint> lambda_sweep(const std::vector<double>& lambdas,
                                            const ProblemParams& p_template, double S, double Sq,
                                            const MultistartOptions& opts) {
    std::vector<SweepPoint> points;
    points.reserve(lambdas.size());
    std::optional<Field> prev;
    for (std::size_t idx = 0; idx < lambdas.size(); ++idx) {
        ProblemParams p = p_template;
        p.lambda = lambdas[idx];
        SweepPoint point;
        point.lambda = p.lambda;
        point.th = assemble_thresholds(p, S, Sq);
        try {
            std::optional<Field> seed;
            if (prev) {
                double R = std::sqrt(h1_norm_sq(*prev));
                for (int i = 0; i < 200 && R > 1e-12; ++i) {
                    Field cand = *prev;
                    scale_field(cand, R / std::sqrt(h1_norm_sq(*prev)));
                    if (eval_J(cand, p, point.th) < 0.0) { seed = std::move(cand); break; }
                    R *= 0.5;
                }
            }
            if (!seed) {
                auto rng = make_rng(opts.seed, 8000 + idx);
                seed = symmetric_seeds(1, p, point.th, 1, rng)[0];
            }
            SolutionRecord rec = descend(*seed, p, point.th, opts.descent);
            prev = rec.u;
            point.rec = std::move(rec);
        } catch (const Error& e) {
            point.error = e.what();
        }
        points.push_back(std::move(point));
    }
    return points;
}

} // namespace curvcrit
