#pragma once

#include "curvcrit/grid.hpp"
#include "curvcrit/truncation.hpp"

namespace curvcrit {

/// Full description of one problem instance: exponents, parameter lambda,
/// truncated coefficient, and discretized domain.
struct ProblemParams {
    int N = 3;
    double q = 1.5;
    double lambda = 0.0;
    double two_star = 6.0;
    TruncatedCoefficient coeff;
    DomainSpec domain;
};

/// Validates exponent ranges, builds the coefficient, and assembles the
/// parameter pack. lambda is stored as given; positivity is enforced where a
/// threshold window is required, not here.
inline ProblemParams make_problem(const DomainSpec& domain, double q, double lambda,
                                  double r, double delta) {
    if (!(q > 1.0 && q < 2.0))
        throw ConfigError("subcritical exponent q must lie in (1,2)");
    if (!(lambda >= 0.0))
        throw ConfigError("lambda must be >= 0");
    ProblemParams p;
    p.N = domain.N;
    p.q = q;
    p.lambda = lambda;
    p.two_star = critical_exponent(domain.N);
    p.coeff = build_coefficient(r, delta, p.two_star);
    p.domain = domain;
    return p;
}

} // namespace curvcrit
