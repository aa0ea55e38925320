#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "curvcrit/energy.hpp"
#include "curvcrit/solver.hpp"

namespace curvcrit {

/// Outcome of one consequence check: pass/fail, the measured quantities
/// backing the verdict, and a failure explanation when there is one.
struct CheckResult {
    std::string check;
    std::string subject;
    bool pass = false;
    std::vector<std::pair<std::string, double>> measured;
    std::string detail;
};

/// Negative-level confinement chain: a record at negative level must sit
/// inside the lower window (||u||^2 < R0), where the truncated and plain
/// energies coincide and the cutoff is identically one.
inline CheckResult check_negative_level(const SolutionRecord& rec, const Thresholds& th) {
    CheckResult r;
    r.check = "negative_level";
    if (!(rec.level < 0.0)) {
        r.detail = "precondition rejected: level is not negative";
        return r;
    }
    const double norm_sq = rec.report.norm_sq;
    const double dJI = std::abs(rec.report.J - rec.report.I);
    const double dphi = std::abs(rec.report.phi - 1.0);
    r.measured = {{"norm_sq", norm_sq},
                  {"R0", th.R0},
                  {"J_minus_I", dJI},
                  {"phi", rec.report.phi}};
    const bool confined = norm_sq < th.R0 + 1e-9;
    const bool same_energy = dJI <= 1e-12 * std::abs(rec.report.I);
    const bool full_cutoff = dphi <= 1e-12;
    r.pass = confined && same_energy && full_cutoff;
    if (!r.pass) {
        if (!confined) r.detail = "||u||^2 exceeds R0";
        else if (!same_energy) r.detail = "J deviates from I";
        else r.detail = "cutoff not at 1";
    }
    return r;
}

/// Recovery of the original problem: gradients stay within the identity
/// branch of the coefficient and the untruncated residual is at tolerance
/// (and, in that regime, bit-identical to the truncated residual).
inline CheckResult check_recovery(const SolutionRecord& rec, const ProblemParams& p,
                                  double tol = 1e-8) {
    CheckResult r;
    r.check = "recovery";
    const double sg = sup_grad(rec.u);
    const double sg2 = sg * sg;
    const double rp = residual_P(rec.u, p);
    const bool in_regime = sg2 <= p.coeff.r;
    double rt = std::numeric_limits<double>::quiet_NaN();
    bool bit_identical = false;
    if (in_regime) {
        rt = residual_T(rec.u, p);
        bit_identical = (rp == rt);
    }
    r.measured = {{"supgrad_sq", sg2},
                  {"r", p.coeff.r},
                  {"residual_P", rp},
                  {"residual_T", rt},
                  {"bit_identical", bit_identical ? 1.0 : 0.0}};
    r.pass = in_regime && rp <= tol && bit_identical;
    if (!r.pass) {
        if (!in_regime) r.detail = "sup_grad^2 exceeds r; exact-equality sub-check skipped";
        else if (!(rp <= tol)) r.detail = "untruncated residual above tolerance";
        else r.detail = "residuals not bit-identical inside the identity branch";
    }
    return r;
}

/// Uniform bound surrogate: the per-record ratio ||u||_inf / ||u|| must stay
/// within a 10x band across the collection; the max ratio estimates C.
inline CheckResult check_ratio_bound(const std::vector<SolutionRecord>& recs) {
    CheckResult r;
    r.check = "ratio_bound";
    if (recs.size() < 3) {
        r.detail = "precondition rejected: need at least 3 records";
        return r;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const SolutionRecord& rec : recs) {
        const double h1 = std::sqrt(h1_norm_sq(rec.u));
        if (h1 == 0.0) {
            r.detail = "zero field in collection";
            return r;
        }
        const double ratio = linf_norm(rec.u) / h1;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    r.measured = {{"C_estimate", hi}, {"band", hi / lo}};
    r.pass = hi / lo <= 10.0;
    if (!r.pass) r.detail = "ratio band wider than 10";
    return r;
}

/// Decay along a decreasing-lambda sweep: each of ||u||, ||u||_inf,
/// ||grad u||_inf non-increasing up to 5% per step and ending below 10% of
/// its start; the window root R0 must decrease alongside.
inline CheckResult check_decay(const std::vector<SolutionRecord>& recs,
                               const std::vector<double>& R0s) {
    CheckResult r;
    r.check = "decay";
    if (recs.size() < 5 || R0s.size() != recs.size()) {
        r.detail = "precondition rejected: need >= 5 records with matching R0 list";
        return r;
    }
    for (std::size_t j = 0; j + 1 < recs.size(); ++j) {
        if (!(recs[j + 1].lambda < recs[j].lambda)) {
            r.detail = "precondition rejected: lambda sequence not strictly decreasing";
            return r;
        }
    }
    const char* names[3] = {"h1", "linf", "supgrad"};
    std::vector<double> seq[3];
    for (const SolutionRecord& rec : recs) {
        seq[0].push_back(std::sqrt(h1_norm_sq(rec.u)));
        seq[1].push_back(linf_norm(rec.u));
        seq[2].push_back(sup_grad(rec.u));
    }
    r.pass = true;
    for (int s = 0; s < 3; ++s) {
        double worst_step = 0.0;
        for (std::size_t j = 0; j + 1 < seq[s].size(); ++j)
            worst_step = std::max(worst_step, seq[s][j + 1] / seq[s][j]);
        const double final_frac = seq[s].back() / seq[s].front();
        r.measured.emplace_back(std::string(names[s]) + "_worst_step", worst_step);
        r.measured.emplace_back(std::string(names[s]) + "_final_frac", final_frac);
        if (worst_step > 1.05) {
            r.pass = false;
            r.detail = std::string(names[s]) + " increases by more than 5% in one step";
        }
        if (!(final_frac < 0.1)) {
            r.pass = false;
            if (r.detail.empty()) r.detail = std::string(names[s]) + " final value not below 10% of initial";
        }
    }
    for (std::size_t j = 0; j + 1 < R0s.size(); ++j) {
        if (!(R0s[j + 1] < R0s[j])) {
            r.pass = false;
            r.detail = "R0 not strictly decreasing along the sweep";
            break;
        }
    }
    return r;
}

/// Diagnostic probe: the high-power integral sum |u|^{2* * 2*/2} h^N along a
/// sweep, asserted bounded by its value at the largest lambda (10x headroom).
inline CheckResult check_integrability(const std::vector<SolutionRecord>& recs, double two_star) {
    CheckResult r;
    r.check = "integrability";
    if (recs.empty()) {
        r.detail = "precondition rejected: empty collection";
        return r;
    }
    const double expo = two_star * two_star / 2.0;
    std::vector<double> probe;
    for (const SolutionRecord& rec : recs) {
        double acc = 0.0;
        for (double x : rec.u.values) acc += std::pow(std::abs(x), expo);
        probe.push_back(acc * rec.u.spec.cell_volume());
    }
    double mx = 0.0;
    bool finite = true;
    for (double v : probe) {
        if (!std::isfinite(v)) finite = false;
        mx = std::max(mx, v);
    }
    r.measured = {{"first", probe.front()}, {"max", mx}};
    r.pass = finite && mx <= 10.0 * probe.front() + 1e-300;
    if (!r.pass) r.detail = finite ? "probe grows along the sweep" : "non-finite probe value";
    return r;
}

/// Largest sweep lambda below which every record passes check_recovery.
/// Records must be ordered by decreasing lambda; NaN when none pass.
inline double recovery_threshold(const std::vector<SolutionRecord>& recs,
                                 const ProblemParams& base, double tol = 1e-8) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        ProblemParams p = base;
        p.lambda = it->lambda;
        if (!check_recovery(*it, p, tol).pass) break;
        best = it->lambda;
    }
    return best;
}

} // namespace curvcrit
