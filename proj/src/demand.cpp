#include "netpricing/demand.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kDomainSlack = 1e-9;

// ∫_L^∞ u^(1/alpha) e^(-u) du, used by the log-inverse cumulative value.
// The integrand decays fast; composite Simpson over [L, L+80] is plenty.
double upper_gamma_tail(double L, double alpha) {
    const double hi = L + 80.0;
    const int n = 4000;  // even
    const double h = (hi - L) / n;
    auto f = [&](double u) { return std::pow(u, 1.0 / alpha) * std::exp(-u); };
    double s = f(L) + f(hi);
    for (int i = 1; i < n; ++i) s += f(L + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

void DemandFunction::check_domain(double x) const {
    if (x < -kDomainSlack || x > T * (1.0 + 1e-12) + kDomainSlack)
        throw std::domain_error("demand evaluated outside [0, T]: x=" + std::to_string(x));
}

DemandFunction DemandFunction::make_uniform(double value, double population) {
    if (value < 0 || population <= 0) throw SchemaError("uniform demand needs value >= 0, population > 0");
    DemandFunction d;
    d.kind = DemandKind::uniform;
    d.l0 = value;
    d.T = population;
    return d;
}

DemandFunction DemandFunction::make_affine(double intercept, double slope) {
    if (intercept <= 0 || slope <= 0) throw SchemaError("affine demand needs positive intercept and slope");
    DemandFunction d;
    d.kind = DemandKind::affine;
    d.a = intercept;
    d.b = slope;
    d.T = intercept / slope;  // domain ends where the price hits zero
    return d;
}

DemandFunction DemandFunction::make_poly_concave(double scale, double root, double exponent) {
    if (scale <= 0 || root <= 0 || exponent < 1.0)
        throw SchemaError("poly_concave demand needs scale > 0, root > 0, exponent >= 1");
    DemandFunction d;
    d.kind = DemandKind::poly_concave;
    d.l0 = scale;
    d.a = root;
    d.alpha = exponent;
    d.T = root;
    return d;
}

DemandFunction DemandFunction::make_ced(double scale, double root, double exponent) {
    if (scale <= 0 || root <= 0 || exponent < 1.0)
        throw SchemaError("ced demand needs scale > 0, root > 0, exponent >= 1");
    DemandFunction d;
    d.kind = DemandKind::ced;
    d.l0 = scale;
    d.a = root;
    d.alpha = exponent;
    d.T = root;
    return d;
}

DemandFunction DemandFunction::make_exponential(double scale, double rate, double x_trunc,
                                                double population) {
    if (scale <= 0 || rate <= 0) throw SchemaError("exponential demand needs scale > 0, rate > 0");
    DemandFunction d;
    d.kind = DemandKind::exponential;
    d.l0 = scale;
    d.k = rate;
    d.x_trunc = x_trunc;
    // Default population: the point where the price has decayed to 1e-9 of scale.
    d.T = population > 0 ? population : std::log(1e9) / rate;
    if (x_trunc >= d.T) throw SchemaError("exponential truncation point must lie inside [0, T)");
    return d;
}

DemandFunction DemandFunction::make_power_elastic(double scale, double r, double population,
                                                  double eps) {
    if (scale <= 0 || r < 1.0 || population <= 0)
        throw SchemaError("power_elastic demand needs scale > 0, r >= 1, population > 0");
    DemandFunction d;
    d.kind = DemandKind::power_elastic;
    d.a = scale;
    d.r = r;
    d.T = population;
    d.eps = eps > 0 ? eps : 1e-4 * population;
    if (d.eps >= population) throw SchemaError("power_elastic truncation must be below the population");
    return d;
}

DemandFunction DemandFunction::make_log_inverse(double scale, double exponent) {
    if (scale <= 0 || exponent < 1.0) throw SchemaError("log_inverse demand needs scale > 0, exponent >= 1");
    DemandFunction d;
    d.kind = DemandKind::log_inverse;
    d.a = scale;
    d.alpha = exponent;
    d.T = scale;
    // Flat floor near zero keeps λ(0) finite; the clipped mass is ~1e-12 of scale.
    d.eps = 1e-12 * scale;
    return d;
}

DemandFunction DemandFunction::make_piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw SchemaError("piecewise_linear demand needs at least two knots");
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1].first <= knots[i].first)
            throw SchemaError("piecewise_linear knots must have strictly increasing x");
        if (knots[i + 1].second > knots[i].second + 1e-12)
            throw SchemaError("piecewise_linear knots must be non-increasing in value");
    }
    if (knots.front().first != 0.0) throw SchemaError("piecewise_linear knots must start at x = 0");
    if (knots.front().second < 0 || knots.back().second < 0)
        throw SchemaError("piecewise_linear values must be non-negative");
    DemandFunction d;
    d.kind = DemandKind::piecewise_linear;
    d.breaks = std::move(knots);
    d.T = d.breaks.back().first;
    return d;
}

double DemandFunction::value(double x) const {
    check_domain(x);
    x = std::clamp(x, 0.0, T);
    switch (kind) {
        case DemandKind::uniform:
            return l0;
        case DemandKind::affine:
            return std::max(a - b * x, 0.0);
        case DemandKind::poly_concave:
            return l0 * std::max(1.0 - std::pow(x / a, alpha), 0.0);
        case DemandKind::ced:
            return l0 * std::pow(std::max(1.0 - x / a, 0.0), alpha);
        case DemandKind::exponential: {
            double xe = (x_trunc > 0 && x < x_trunc) ? x_trunc : x;
            return l0 * std::exp(-k * xe);
        }
        case DemandKind::power_elastic:
            return a * std::pow(std::max(x, eps), -1.0 / r);
        case DemandKind::log_inverse: {
            double xe = std::max(x, eps);
            if (xe >= a) return 0.0;
            return std::pow(std::log(a / xe), 1.0 / alpha);
        }
        case DemandKind::piecewise_linear: {
            auto it = std::upper_bound(breaks.begin(), breaks.end(), x,
                                       [](double v, const auto& p) { return v < p.first; });
            if (it == breaks.begin()) return breaks.front().second;
            if (it == breaks.end()) return breaks.back().second;
            auto [x1, y1] = *(it - 1);
            auto [x2, y2] = *it;
            return y1 + (y2 - y1) * (x - x1) / (x2 - x1);
        }
    }
    return 0.0;
}

double DemandFunction::derivative(double x, Side side) const {
    check_domain(x);
    if (x <= 0 && side == Side::left)
        throw std::domain_error("left derivative of demand at x = 0 is undefined");
    x = std::clamp(x, 0.0, T);
    switch (kind) {
        case DemandKind::uniform:
            return 0.0;
        case DemandKind::affine:
            return -b;
        case DemandKind::poly_concave:
            return -l0 * alpha * std::pow(x / a, alpha - 1.0) / a;
        case DemandKind::ced:
            return -l0 * alpha * std::pow(std::max(1.0 - x / a, 0.0), alpha - 1.0) / a;
        case DemandKind::exponential: {
            if (x_trunc > 0) {
                if (x < x_trunc || (x == x_trunc && side == Side::left)) return 0.0;
            }
            return -l0 * k * std::exp(-k * x);
        }
        case DemandKind::power_elastic: {
            if (x < eps || (x == eps && side == Side::left)) return 0.0;
            return -(a / r) * std::pow(x, -1.0 / r - 1.0);
        }
        case DemandKind::log_inverse: {
            if (x < eps || (x == eps && side == Side::left)) return 0.0;
            if (x >= a) x = a;
            double L = std::log(a / x);
            if (L <= 0) return 0.0;
            return -std::pow(L, 1.0 / alpha - 1.0) / (alpha * x);
        }
        case DemandKind::piecewise_linear: {
            // Segment slope; at a knot the requested side picks the segment.
            for (size_t i = 0; i + 1 < breaks.size(); ++i) {
                double x1 = breaks[i].first, x2 = breaks[i + 1].first;
                bool inside = (side == Side::right) ? (x >= x1 && x < x2) : (x > x1 && x <= x2);
                if (inside) return (breaks[i + 1].second - breaks[i].second) / (x2 - x1);
            }
            // x == T from the right, or x == 0 from the right of an empty match.
            double x1 = breaks[breaks.size() - 2].first, x2 = breaks.back().first;
            return (breaks.back().second - breaks[breaks.size() - 2].second) / (x2 - x1);
        }
    }
    return 0.0;
}

double DemandFunction::cumulative_value(double x) const {
    check_domain(x);
    x = std::clamp(x, 0.0, T);
    switch (kind) {
        case DemandKind::uniform:
            return l0 * x;
        case DemandKind::affine:
            return a * x - 0.5 * b * x * x;
        case DemandKind::poly_concave:
            return l0 * (x - std::pow(x, alpha + 1.0) / ((alpha + 1.0) * std::pow(a, alpha)));
        case DemandKind::ced:
            return l0 * a / (alpha + 1.0) *
                   (1.0 - std::pow(std::max(1.0 - x / a, 0.0), alpha + 1.0));
        case DemandKind::exponential: {
            double tau = x_trunc > 0 ? x_trunc : 0.0;
            if (x <= tau) return l0 * std::exp(-k * tau) * x;
            return l0 * std::exp(-k * tau) * tau + l0 / k * (std::exp(-k * tau) - std::exp(-k * x));
        }
        case DemandKind::power_elastic: {
            double flat = a * std::pow(eps, -1.0 / r);
            if (x <= eps) return flat * x;
            double tail;
            if (r == 1.0) {
                tail = a * (std::log(x) - std::log(eps));
            } else {
                double q = 1.0 - 1.0 / r;
                tail = a / q * (std::pow(x, q) - std::pow(eps, q));
            }
            return flat * eps + tail;
        }
        case DemandKind::log_inverse: {
            if (x <= eps) return value(eps) * x;
            double xe = std::min(x, a);
            double head = value(eps) * eps;
            double tail = a * (upper_gamma_tail(std::log(a / xe), alpha) -
                               upper_gamma_tail(std::log(a / eps), alpha));
            return head + tail;
        }
        case DemandKind::piecewise_linear: {
            double acc = 0.0;
            for (size_t i = 0; i + 1 < breaks.size(); ++i) {
                double x1 = breaks[i].first, x2 = breaks[i + 1].first;
                double y1 = breaks[i].second, y2 = breaks[i + 1].second;
                if (x <= x1) break;
                double hi = std::min(x, x2);
                double yhi = y1 + (y2 - y1) * (hi - x1) / (x2 - x1);
                acc += 0.5 * (y1 + yhi) * (hi - x1);
            }
            return acc;
        }
    }
    return 0.0;
}

double DemandFunction::mpe_factor(double x, Side side) const {
    double v = value(x);
    if (v <= 0) throw std::domain_error("mpe factor undefined where demand value is zero");
    if (x <= 0) return 0.0;
    return x * std::abs(derivative(x, side)) / v;
}

double DemandFunction::inverse(double p) const {
    if (p <= value(T)) return T;
    switch (kind) {
        case DemandKind::uniform:
            return p <= l0 * (1.0 + 1e-15) ? T : 0.0;
        case DemandKind::affine:
            return std::clamp((a - p) / b, 0.0, T);
        case DemandKind::poly_concave: {
            if (p >= l0) return 0.0;
            return std::clamp(a * std::pow(1.0 - p / l0, 1.0 / alpha), 0.0, T);
        }
        case DemandKind::ced: {
            if (p >= l0) return 0.0;
            return std::clamp(a * (1.0 - std::pow(p / l0, 1.0 / alpha)), 0.0, T);
        }
        case DemandKind::exponential: {
            double tau = x_trunc > 0 ? x_trunc : 0.0;
            double flat = l0 * std::exp(-k * tau);
            if (p > flat) return 0.0;
            if (p <= 0) return T;
            return std::clamp(std::log(l0 / p) / k, 0.0, T);
        }
        case DemandKind::power_elastic: {
            double flat = a * std::pow(eps, -1.0 / r);
            if (p > flat) return 0.0;
            if (p <= 0) return T;
            return std::clamp(std::pow(a / p, r), 0.0, T);
        }
        case DemandKind::log_inverse: {
            if (p <= 0) return T;
            if (p > value(eps)) return 0.0;
            return std::clamp(a * std::exp(-std::pow(p, alpha)), 0.0, T);
        }
        case DemandKind::piecewise_linear: {
            if (p > breaks.front().second) return 0.0;
            double best = 0.0;
            for (size_t i = 0; i + 1 < breaks.size(); ++i) {
                double x1 = breaks[i].first, x2 = breaks[i + 1].first;
                double y1 = breaks[i].second, y2 = breaks[i + 1].second;
                if (y2 >= p) {
                    best = x2;
                    continue;
                }
                if (y1 >= p && y1 > y2) {
                    best = std::max(best, x1 + (y1 - p) * (x2 - x1) / (y1 - y2));
                }
                break;
            }
            return std::clamp(best, 0.0, T);
        }
    }
    return 0.0;
}

DemandClassTags DemandFunction::classify(int samples) const {
    if (samples < 2) throw std::invalid_argument("classify needs at least 2 samples");
    DemandClassTags t;
    auto chain = [&]() {  // enforce the containment chain on the way out
        if (t.uniform) t.concave = true;
        if (t.concave) t.mhr = true;
        if (t.mhr) t.mpe = true;
    };
    switch (kind) {
        case DemandKind::uniform:
            t.uniform = true;
            chain();
            return t;
        case DemandKind::affine:
        case DemandKind::poly_concave:
            t.concave = true;
            chain();
            return t;
        case DemandKind::ced:
            t.concave = (alpha == 1.0);
            t.mhr = true;
            chain();
            return t;
        case DemandKind::exponential:
            t.mhr = true;
            chain();
            return t;
        case DemandKind::power_elastic:
            // x·|λ'|/λ is the constant 1/r above the truncation point: it does
            // not vanish at 0, so the function sits outside all four classes.
            return t;
        case DemandKind::log_inverse:
            t.mpe = true;
            return t;
        case DemandKind::piecewise_linear:
            break;
    }
    // Piecewise data: monotonicity scan of λ', h and x·h over a grid plus knots.
    t.numeric = true;
    const double tol = 1e-9;
    std::vector<double> xs;
    for (int i = 0; i <= samples; ++i) xs.push_back(T * i / samples);
    for (auto& bp : breaks) xs.push_back(bp.first);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    bool is_uniform = true, is_concave = true, is_mhr = true, is_mpe = true;
    double last_mag = 0, last_h = 0, last_xh = 0;
    for (double x : xs) {
        double v = value(x);
        if (v <= 0) break;  // classes are judged where demand is positive
        double dm = x > 0 ? std::abs(derivative(x, Side::left))
                          : std::abs(derivative(x, Side::right));
        double dp = x < T ? std::abs(derivative(x, Side::right)) : dm;
        if (dp > tol || dm > tol) is_uniform = false;
        // concavity: |λ'| non-decreasing, including across a kink
        if (dp + tol < dm || dm + tol < last_mag) is_concave = false;
        last_mag = std::max(last_mag, dp);
        double hm = dm / v, hp = dp / v;
        if (hm + tol < last_h) is_mhr = false;
        last_h = std::max(last_h, hp);
        if (x * hm + tol < last_xh) is_mpe = false;
        last_xh = std::max(last_xh, x * hp);
    }
    // With finitely many linear segments, x·h(x) always vanishes at 0, so the
    // scan above is the whole MPE test.
    t.uniform = is_uniform;
    t.concave = is_concave;
    t.mhr = is_mhr;
    t.mpe = is_mpe;
    chain();
    return t;
}

std::string DemandFunction::kind_name() const {
    switch (kind) {
        case DemandKind::uniform: return "uniform";
        case DemandKind::affine: return "affine";
        case DemandKind::poly_concave: return "poly_concave";
        case DemandKind::ced: return "ced";
        case DemandKind::exponential: return "exponential";
        case DemandKind::power_elastic: return "power_elastic";
        case DemandKind::log_inverse: return "log_inverse";
        case DemandKind::piecewise_linear: return "piecewise_linear";
    }
    return "?";
}

}  // namespace netpricing
