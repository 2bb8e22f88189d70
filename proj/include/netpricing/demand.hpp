#pragma once

#include <string>
#include <vector>

namespace netpricing {

enum class Side { left, right };

enum class DemandKind {
    uniform,
    affine,
    poly_concave,
    ced,
    exponential,
    power_elastic,
    log_inverse,
    piecewise_linear,
};

// Which structural classes a demand curve belongs to. The containment chain is
// uniform ⊆ concave ⊆ mhr ⊆ mpe, so tags are cumulative: anything tagged
// concave is also tagged mhr and mpe.
struct DemandClassTags {
    bool uniform = false;
    bool concave = false;
    bool mhr = false;   // hazard rate |λ'|/λ non-decreasing
    bool mpe = false;   // x·|λ'|/λ non-decreasing and vanishing at 0
    bool numeric = false;  // set when tags came from sampling, not closed form
};

// Inverse demand curve λ(x): the price at which exactly x mass of buyers still
// values the good that much or more. Non-increasing, non-negative on [0, T].
// Immutable after construction; safe to share across threads.
class DemandFunction {
public:
    DemandKind kind = DemandKind::uniform;

    // Parameters; which ones are meaningful depends on kind.
    double l0 = 1.0;      // scale (uniform value, affine intercept is `a`)
    double a = 1.0;       // root / scale parameter
    double b = 1.0;       // affine slope
    double alpha = 1.0;   // exponent for poly_concave / ced / log_inverse
    double k = 1.0;       // exponential rate
    double r = 2.0;       // power_elastic elasticity parameter
    double eps = 0.0;     // power_elastic truncation point
    double x_trunc = -1.0;  // exponential: flat below this point (<0 disables)
    double T = 1.0;       // population bound; domain is [0, T]

    // (x_i, λ_i) knots, non-increasing in λ, strictly increasing in x.
    std::vector<std::pair<double, double>> breaks;

    static DemandFunction make_uniform(double value, double population);
    static DemandFunction make_affine(double intercept, double slope);
    static DemandFunction make_poly_concave(double scale, double root, double exponent);
    static DemandFunction make_ced(double scale, double root, double exponent);
    // x_trunc < 0 means no flat truncation; population <= 0 picks a default.
    static DemandFunction make_exponential(double scale, double rate,
                                           double x_trunc = -1.0,
                                           double population = -1.0);
    // eps <= 0 picks the default truncation 1e-4 * population.
    static DemandFunction make_power_elastic(double scale, double r,
                                             double population, double eps = -1.0);
    static DemandFunction make_log_inverse(double scale, double exponent);
    static DemandFunction make_piecewise_linear(std::vector<std::pair<double, double>> knots);

    // λ(x). Throws std::domain_error outside [0, T] (tiny slack for roundoff).
    double value(double x) const;

    // One-sided derivative λ'(x), always <= 0. Left at 0 is a domain error.
    double derivative(double x, Side side) const;

    // Λ(x) = ∫_0^x λ(t) dt, in closed form where the kind permits.
    double cumulative_value(double x) const;

    // x·|λ'(x)| / λ(x); the hazard rate is this divided by x.
    double mpe_factor(double x, Side side) const;

    // Largest x in [0, T] with λ(x) >= p (0 if even λ(0) < p).
    double inverse(double p) const;

    DemandClassTags classify(int samples = 256) const;

    std::string kind_name() const;

private:
    void check_domain(double x) const;
};

}  // namespace netpricing
