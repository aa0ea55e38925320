#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "curvcrit/energy.hpp"

using namespace curvcrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Instance {
    ProblemParams p;
    Thresholds th;
};

/// Shared n=9 instance with genuinely estimated embedding constants and
/// lambda fixed at a quarter of the admissible bound.
const Instance& inst9() {
    static const Instance inst = [] {
        const DomainSpec d = make_domain(3, {1.0, 1.0, 1.0}, 9);
        const SobolevOptions so;
        const SobolevEstimates e = estimate_sobolev_constants(d, 1.5, so);
        const ProblemParams p0 = make_problem(d, 1.5, 0.0, 1.0, 1.0);
        const Thresholds th0 = assemble_thresholds(p0, e.S, e.Sq);
        Instance out;
        out.p = make_problem(d, 1.5, th0.lambda_star / 4.0, 1.0, 1.0);
        out.th = assemble_thresholds(out.p, e.S, e.Sq);
        return out;
    }();
    return inst;
}

Field random_field(const DomainSpec& d, std::uint64_t salt) {
    auto rng = make_rng(321, salt);
    Field f = zero_field(d);
    for (double& x : f.values) x = 2.0 * uniform01(rng) - 1.0;
    return f;
}

/// Random field bounded away from zero pointwise: |u| in [0.1, 1].
Field random_bulk_field(const DomainSpec& d, std::uint64_t salt) {
    auto rng = make_rng(654, salt);
    Field f = zero_field(d);
    for (double& x : f.values) {
        const double mag = 0.1 + 0.9 * uniform01(rng);
        x = (uniform01(rng) < 0.5) ? -mag : mag;
    }
    return f;
}

Field scaled_to_norm_sq(const Field& u, double target) {
    Field out = u;
    scale_field(out, std::sqrt(target / h1_norm_sq(u)));
    return out;
}

bool bitwise_equal(const Field& a, const Field& b) {
    if (a.values.size() != b.values.size()) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] != b.values[i]) return false;
    return true;
}

double directional_fd(const std::function<double(const Field&)>& f, const Field& u,
                      const Field& v) {
    const double eps = 1e-4 * (1.0 + linf_norm(u)) / (1.0 + linf_norm(v));
    return (f(axpy(u, eps, v)) - f(axpy(u, -eps, v))) / (2.0 * eps);
}

} // namespace

TEST_CASE("zero field carries zero energy and zero residuals") {
    const auto& [p, th] = inst9();
    const Field u = zero_field(p.domain);
    REQUIRE(eval_I(u, p) == 0.0);
    REQUIRE(eval_J(u, p, th) == 0.0);
    for (double g : grad_I(u, p).values) REQUIRE(g == 0.0);
    REQUIRE(residual_P(u, p) == 0.0);
    REQUIRE(residual_T(u, p) == 0.0);
    const EnergyReport rep = energy_report(u, p, th);
    REQUIRE(rep.I == 0.0);
    REQUIRE(rep.J == 0.0);
    REQUIRE(rep.norm_sq == 0.0);
    REQUIRE(rep.phi == 1.0);
    REQUIRE(rep.residual_norm == 0.0);
}

TEST_CASE("untruncated energy matches a from-scratch evaluation on gentle slopes") {
    const auto& [p, th] = inst9();
    const DomainSpec& d = p.domain;
    // keep every face inside the identity branch: A(t) = 2(sqrt(1+t) - 1)
    Field u = eigenfield(d, {1, 1, 1});
    scale_field(u, 0.5 * std::sqrt(p.coeff.r) / sup_grad(u));
    REQUIRE(sup_grad(u) * sup_grad(u) <= p.coeff.r);

    const FaceGradient fg = face_gradient(u);
    const double w = d.cell_volume() / d.N;
    double diffusion = 0.0;
    for (const auto& comp : fg.comps) {
        for (std::size_t f = 0; f * static_cast<std::size_t>(d.N) < comp.size(); ++f) {
            double t = 0.0;
            for (int k = 0; k < d.N; ++k) {
                const double g = comp[f * static_cast<std::size_t>(d.N) + static_cast<std::size_t>(k)];
                t += g * g;
            }
            diffusion += 0.5 * 2.0 * (std::sqrt(1.0 + t) - 1.0) * w;
        }
    }
    double lq = 0.0, crit = 0.0;
    const double hN = d.cell_volume();
    for (double x : u.values) {
        lq += std::pow(std::abs(x), p.q) * hN;
        crit += std::pow(std::abs(x), p.two_star) * hN;
    }
    const double want = diffusion - (p.lambda / p.q) * lq - (1.0 / p.two_star) * crit;
    REQUIRE_THAT(eval_I(u, p), WithinRel(want, 1e-13));
}

TEST_CASE("energy is affine in lambda with the subcritical norm as slope") {
    const auto& [p, th] = inst9();
    const ProblemParams p0 = make_problem(p.domain, p.q, 0.0, p.coeff.r, p.coeff.delta);
    const ProblemParams p7 = make_problem(p.domain, p.q, 0.07, p.coeff.r, p.coeff.delta);
    for (std::uint64_t salt : {11u, 12u}) {
        const Field u = random_field(p.domain, salt);
        const double slope = (eval_I(u, p7) - eval_I(u, p0)) / 0.07;
        REQUIRE_THAT(slope, WithinRel(-std::pow(lp_norm(u, p.q), p.q) / p.q, 1e-10));
    }
}

TEST_CASE("cutoff is exactly one below the window and exactly zero above") {
    REQUIRE(smooth_cutoff(0.5, 1.0, 3.0) == 1.0);
    REQUIRE(smooth_cutoff(1.0, 1.0, 3.0) == 1.0);
    REQUIRE(smooth_cutoff(3.0, 1.0, 3.0) == 0.0);
    REQUIRE(smooth_cutoff(4.0, 1.0, 3.0) == 0.0);
    REQUIRE(smooth_cutoff(1e9, 1.0, 3.0) == 0.0);
    REQUIRE(smooth_cutoff(2.0, 1.0, 3.0) == 0.5);

    // near the edges the partition ratio is below machine epsilon, so the
    // value saturates at exactly 1 or 0; strictness holds in the interior
    double prev = 1.0;
    for (int i = 1; i <= 99; ++i) {
        const double t = 1.0 + 2.0 * i / 100.0;
        const double v = smooth_cutoff(t, 1.0, 3.0);
        REQUIRE(v <= prev);
        if (i >= 4 && i <= 96) REQUIRE(v < prev);
        prev = v;
    }

    for (double t : {0.5, 1.0, 3.0, 4.0}) REQUIRE(smooth_cutoff_prime(t, 1.0, 3.0) == 0.0);
    for (double t : {1.3, 2.0, 2.7}) {
        const double h = 1e-6;
        const double fd = (smooth_cutoff(t + h, 1.0, 3.0) - smooth_cutoff(t - h, 1.0, 3.0)) / (2.0 * h);
        REQUIRE_THAT(smooth_cutoff_prime(t, 1.0, 3.0), WithinRel(fd, 1e-6));
    }

    REQUIRE_THROWS_AS(smooth_cutoff(1.0, 2.0, 2.0), DegenerateWindow);
    REQUIRE_THROWS_AS(smooth_cutoff_prime(1.0, 2.0, 1.0), DegenerateWindow);
}

TEST_CASE("truncation is inert below the lower radius") {
    const auto& [p, th] = inst9();
    const Field u = scaled_to_norm_sq(eigenfield(p.domain, {1, 1, 1}), th.R0 / 2.0);
    REQUIRE(eval_J(u, p, th) == eval_I(u, p));
    REQUIRE(bitwise_equal(grad_J(u, p, th), grad_I(u, p)));
    const EnergyReport rep = energy_report(u, p, th);
    REQUIRE(rep.phi == 1.0);
    REQUIRE(rep.J == rep.I);
    REQUIRE(rep.residual_norm == residual_T(u, p));
}

TEST_CASE("above the upper radius the critical term is removed entirely") {
    const auto& [p, th] = inst9();
    const Field u = scaled_to_norm_sq(random_field(p.domain, 13), 2.0 * th.R1);
    const EnergyReport rep = energy_report(u, p, th);
    REQUIRE(rep.phi == 0.0);
    const double crit = std::pow(lp_norm(u, p.two_star), p.two_star);
    REQUIRE_THAT(rep.J, WithinRel(rep.I + crit / p.two_star, 1e-12));

    // the cutoff is flat here, so the gradient has no chain term
    const Field g = grad_J(u, p, th);
    for (std::uint64_t salt : {21u, 22u, 23u}) {
        const Field v = random_field(p.domain, salt);
        const double fd =
            directional_fd([&](const Field& w) { return eval_J(w, p, th); }, u, v);
        REQUIRE_THAT(l2_inner(g, v), WithinRel(fd, 1e-6));
    }
}

TEST_CASE("gradient of the truncated energy matches central differences in the bulk") {
    const auto& [p, th] = inst9();
    for (std::uint64_t fs = 1; fs <= 5; ++fs) {
        const Field u = random_bulk_field(p.domain, fs);
        const Field g = grad_J(u, p, th);
        for (std::uint64_t vs = 0; vs < 4; ++vs) {
            const Field v = random_field(p.domain, 100 + fs * 10 + vs);
            const double fd =
                directional_fd([&](const Field& w) { return eval_J(w, p, th); }, u, v);
            const double an = l2_inner(g, v);
            REQUIRE(std::abs(an - fd) <= 1e-6 * std::abs(fd));
        }
    }
}

TEST_CASE("gradient stays exact through the cutoff transition window") {
    const auto& [p, th] = inst9();
    const Field u =
        scaled_to_norm_sq(eigenfield(p.domain, {1, 1, 1}), (th.R0 + th.R1) / 2.0);
    const double dphi = smooth_cutoff_prime(h1_norm_sq(u), th.R0, th.R1);
    REQUIRE(dphi < 0.0); // the chain term is genuinely active here
    const Field g = grad_J(u, p, th);
    for (std::uint64_t vs = 0; vs < 10; ++vs) {
        const Field v = random_field(p.domain, 200 + vs);
        const double fd =
            directional_fd([&](const Field& w) { return eval_J(w, p, th); }, u, v);
        REQUIRE_THAT(l2_inner(g, v), WithinRel(fd, 1e-6));
    }
}

TEST_CASE("energies are even and gradients odd under global sign flip") {
    const auto& [p, th] = inst9();
    for (std::uint64_t salt : {31u, 32u, 33u}) {
        const Field u = random_field(p.domain, salt);
        const Field m = negated(u);
        REQUIRE(eval_I(m, p) == eval_I(u, p));
        REQUIRE(eval_J(m, p, th) == eval_J(u, p, th));
        REQUIRE(residual_P(m, p) == residual_P(u, p));
        REQUIRE(bitwise_equal(grad_J(m, p, th), negated(grad_J(u, p, th))));
    }
}

TEST_CASE("original and truncated residuals coincide exactly on admissible slopes") {
    const auto& [p, th] = inst9();
    Field u = eigenfield(p.domain, {1, 1, 2});
    scale_field(u, std::sqrt(p.coeff.r / 2.0) / sup_grad(u));
    REQUIRE(sup_grad(u) * sup_grad(u) <= p.coeff.r);
    REQUIRE(residual_P(u, p) == residual_T(u, p));

    // a steep spike leaves the identity branch and the two residuals separate
    Field spike = zero_field(p.domain);
    spike.values[spike.values.size() / 2] = 10.0;
    REQUIRE(sup_grad(spike) * sup_grad(spike) > p.coeff.r);
    REQUIRE(residual_P(spike, p) != residual_T(spike, p));
}

TEST_CASE("truncated energy dominates its scalar lower envelope") {
    const auto& [p, th] = inst9();
    const GConstants k = g_constants(p, th.S, th.Sq);
    const auto check = [&](const Field& u) {
        const double t = h1_norm_sq(u);
        const double J = eval_J(u, p, th);
        REQUIRE(J >= eval_g(t, p.lambda, k) - 1e-9 * (1.0 + std::abs(J)));
    };
    const Field e1 = eigenfield(p.domain, {1, 1, 1});
    for (int i = 0; i <= 24; ++i) {
        const double t = th.R0 * 0.5 * std::pow(4.0 * th.R1 / (th.R0 * 0.5), i / 24.0);
        check(scaled_to_norm_sq(e1, t));
    }
    for (std::uint64_t salt : {41u, 42u}) check(random_bulk_field(p.domain, salt));
    Field mix = axpy(e1, 0.7, eigenfield(p.domain, {1, 2, 1}));
    for (double t : {th.R0, (th.R0 + th.R1) / 2.0, th.R1, 3.0 * th.R1})
        check(scaled_to_norm_sq(mix, t));
}

TEST_CASE("far beyond the window the energy grows like the plateau quadratic") {
    const auto& [p, th] = inst9();
    const Field e1 = eigenfield(p.domain, {1, 1, 1});
    const double t1 = 4.0 * th.R1, t2 = 9.0 * th.R1, t3 = 25.0 * th.R1;
    const double J1 = eval_J(scaled_to_norm_sq(e1, t1), p, th);
    const double J2 = eval_J(scaled_to_norm_sq(e1, t2), p, th);
    const double J3 = eval_J(scaled_to_norm_sq(e1, t3), p, th);
    REQUIRE(J3 > 0.0);
    REQUIRE(J2 > J1);
    REQUIRE(J3 > J2);
    const double slope_a = (J2 - J1) / (t2 - t1);
    const double slope_b = (J3 - J2) / (t3 - t2);
    REQUIRE_THAT(slope_a, WithinRel(slope_b, 0.10));
    REQUIRE(slope_b > 0.3 * p.coeff.K0);
    REQUIRE(slope_b < 0.6 * p.coeff.K0);
}

TEST_CASE("diagnostic report mirrors the standalone evaluators") {
    const auto& [p, th] = inst9();
    const Field u = scaled_to_norm_sq(random_field(p.domain, 51), (th.R0 + th.R1) / 2.0);
    const EnergyReport rep = energy_report(u, p, th);
    REQUIRE(rep.I == eval_I(u, p));
    REQUIRE(rep.J == eval_J(u, p, th));
    REQUIRE(rep.norm_sq == h1_norm_sq(u));
    REQUIRE(rep.phi == smooth_cutoff(rep.norm_sq, th.R0, th.R1));
    REQUIRE(rep.residual_norm == l2_norm(grad_J(u, p, th)));
}
