#include "bmo/constants.hpp"

#include <algorithm>
#include <cmath>

#include "bmo/errors.hpp"

namespace bmo::constants {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw BoundDomainError(what);
}

const double kSqrt2 = std::sqrt(2.0);

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[192];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

}  // namespace

AlphaBeta alpha_beta_rp(double p, double tilde_norm) {
    require(p > 1.0, "alpha_beta_rp: need p > 1");
    require(tilde_norm >= 0.0, "alpha_beta_rp: need norm >= 0");
    const double n2 = tilde_norm * tilde_norm;
    const double den = 1.0 - (p - 1.0) * (p + 2.0) * n2;
    require(den > 0.0, "alpha_beta_rp: 1 - (p-1)(p+2) norm^2 must be positive");
    return {p * (p - 1.0) * n2 / den, 2.0 * (p - 1.0) / den};
}

AlphaBeta alpha_beta_ap(double p, double norm) {
    require(p > 1.0, "alpha_beta_ap: need p > 1");
    require(norm >= 0.0, "alpha_beta_ap: need norm >= 0");
    const double n2 = norm * norm;
    const double den = (p - 1.0) * (p - 1.0) - (3.0 * p - 2.0) * n2;
    require(den > 0.0, "alpha_beta_ap: (p-1)^2 - (3p-2) norm^2 must be positive");
    return {p * n2 / den, 2.0 * (p - 1.0) / den};
}

ContractionP find_contraction_p(double norm, Variant variant, double target) {
    require(norm >= 0.0, "find_contraction_p: need norm >= 0");
    ContractionP r;
    if (norm == 0.0) {
        // The map no longer depends on its inputs; every p is a contraction.
        r.found = true;
        r.p = variant == Variant::Rp ? 1.5 : 5.0;
        return r;
    }

    const auto factors = [&](double p) {
        return variant == Variant::Rp ? alpha_beta_rp(p, norm) : alpha_beta_ap(p, norm);
    };
    const auto qualifies = [&](double p) {
        try {
            const AlphaBeta ab = factors(p);
            return std::max(ab.alpha, ab.beta) <= target;
        } catch (const BoundDomainError&) {
            return false;
        }
    };

    double lo, hi;
    if (variant == Variant::Rp) {
        // max(alpha, beta) grows from 0 as p moves away from 1; bisect for the
        // largest qualifying p and return the inner bracket.
        lo = 1.0 + 1e-12;
        if (!qualifies(lo)) return r;
        hi = 2.0;
        while (qualifies(hi) && hi < 1e6) { lo = hi; hi *= 2.0; }
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (qualifies(mid) ? lo : hi) = mid;
        }
        r.p = lo;
    } else {
        // Factors fall towards 0 as p grows; bisect for the smallest
        // qualifying p and return the outer bracket.
        hi = std::max(4.0, 2.0 * kazamaki_admissible_p_min(norm));
        while (!qualifies(hi) && hi < 1e12) hi *= 2.0;
        if (!qualifies(hi)) return r;
        lo = 1.0 + 1e-12;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (qualifies(mid) ? hi : lo) = mid;
        }
        r.p = hi;
    }
    const AlphaBeta ab = factors(r.p);
    r.alpha = ab.alpha;
    r.beta = ab.beta;
    r.found = true;
    return r;
}

double bmo_bound_from_rp(double p, double c_p, double beta) {
    require(p > 1.0, "bmo_bound_from_rp: need p > 1");
    require(c_p >= 1.0, "bmo_bound_from_rp: need C_p >= 1");
    require(beta > p / (p - 1.0), "bmo_bound_from_rp: need beta > p/(p-1)");
    return 2.0 * std::expm1(beta * (c_p - 1.0)) / (p * (beta * (p - 1.0) - p));
}

double bmo_bound_from_ap(double p, double d_p, double beta) {
    require(p > 1.0, "bmo_bound_from_ap: need p > 1");
    require(d_p >= 1.0, "bmo_bound_from_ap: need D_p >= 1");
    require(beta > p, "bmo_bound_from_ap: need beta > p");
    return 2.0 * (p - 1.0) * (p - 1.0) * std::expm1(beta * (d_p - 1.0)) / (p * (beta - p));
}

namespace detail {

double golden_min(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > rel_tol * (std::abs(a) + std::abs(b) + 1e-300)) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - g * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + g * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

namespace {

// Minimize a bound over beta on (beta_min, inf): bracket by doubling, then
// golden section. The objectives blow up at both ends of the domain.
double minimize_over_beta(const std::function<double(double)>& bound, double beta_min) {
    double lo = beta_min * (1.0 + 1e-9) + 1e-9;
    double hi = std::max(2.0 * beta_min, beta_min + 1.0);
    double best = bound(hi);
    while (true) {
        const double next = hi * 2.0;
        const double v = bound(next);
        if (v >= best || next > 1e9) break;
        best = v;
        hi = next;
    }
    const double beta = detail::golden_min(bound, lo, hi * 2.0, 1e-10);
    return bound(beta);
}

}  // namespace

double bmo_bound_from_rp_min(double p, double c_p) {
    if (c_p == 1.0) return 0.0;
    return minimize_over_beta([&](double b) { return bmo_bound_from_rp(p, c_p, b); },
                              p / (p - 1.0));
}

double bmo_bound_from_ap_min(double p, double d_p) {
    if (d_p == 1.0) return 0.0;
    return minimize_over_beta([&](double b) { return bmo_bound_from_ap(p, d_p, b); }, p);
}

double f_of_p(double p, double norm) {
    require(p > 0.0 && p < 1.0, "f_of_p: need p in (0,1)");
    return 1.0 / p + norm * norm / (2.0 * (1.0 - p));
}

PStar p_star_and_f(double norm) {
    require(norm >= 0.0, "p_star_and_f: need norm >= 0");
    PStar r;
    r.p_star = kSqrt2 / (kSqrt2 + norm);   // = 1 when norm = 0 (limit case)
    r.c = 1.0 + 0.5 * kSqrt2 * norm;
    r.f_star = r.c * r.c;
    return r;
}

double kazamaki_admissible_p_min(double norm) {
    const double r = 1.0 + norm / kSqrt2;
    return r * r;
}

bool kazamaki_admissible(double norm, double p) {
    return norm < kSqrt2 * (std::sqrt(p) - 1.0);
}

double kazamaki_constant_sq(double norm, double ap_sup_term, double p) {
    require(norm >= 0.0, "kazamaki_constant_sq: need norm >= 0");
    require(ap_sup_term >= 1.0, "kazamaki_constant_sq: need sup term >= 1");
    if (!kazamaki_admissible(norm, p))
        throw BoundDomainError("kazamaki_constant_sq: p violates norm < sqrt2(sqrt p - 1)");
    return 2.0 * p * std::pow(2.0, 1.0 / p) * std::pow(ap_sup_term, (p - 1.0) / p);
}

double gaussian_ap_oracle(double p, double norm) {
    return std::exp(p * norm * norm / (2.0 * (p - 1.0) * (p - 1.0)));
}

double gaussian_rp_oracle(double p, double norm) {
    return std::exp(p * (p - 1.0) * norm * norm / 2.0);
}

ConstantComparison compare_constants(double norm,
                                     const std::function<double(double)>& ap_sup_oracle) {
    ConstantComparison r;
    const PStar ps = p_star_and_f(norm);
    r.c_sq = ps.f_star;

    const double p_min = kazamaki_admissible_p_min(norm);
    const auto ck2 = [&](double p) { return kazamaki_constant_sq(norm, ap_sup_oracle(p), p); };

    // Grid over admissible p, then a golden refinement around the grid best.
    const double lo = p_min * (1.0 + 1e-9) + 1e-12;
    const double hi = 6.0 * p_min + 10.0;
    const int n_grid = 512;
    double best_p = lo, best = ck2(lo);
    for (int i = 1; i <= n_grid; ++i) {
        const double p = lo + (hi - lo) * i / n_grid;
        const double v = ck2(p);
        if (v < best) { best = v; best_p = p; }
    }
    const double span = (hi - lo) / n_grid;
    const double p_ref = detail::golden_min(ck2, std::max(lo, best_p - span), best_p + span);
    if (ck2(p_ref) < best) { best = ck2(p_ref); best_p = p_ref; }

    r.ck_sq_min = best;
    r.p_at_min = best_p;
    r.ratio = r.c_sq / (0.5 * r.ck_sq_min);
    r.pass = r.c_sq <= 0.5 * r.ck_sq_min;
    return r;
}

double positivity_lower_bound(double p, double y_sup, double tilde_norm, double psi_bmo) {
    const double n2 = tilde_norm * tilde_norm;
    return 1.0 - 0.5 * p * (p - 1.0) * y_sup * n2 - 0.5 * (p - 1.0) * n2 -
           0.5 * (p - 1.0) * psi_bmo * psi_bmo;
}

std::vector<BoundReport> bound_table(double norm, double p, double beta) {
    std::vector<BoundReport> t;
    const PStar ps = p_star_and_f(norm);
    t.push_back({"p_star", ps.p_star, "norm >= 0", fmt("norm=%.6g", norm)});
    t.push_back({"C", ps.c, "norm >= 0", fmt("norm=%.6g", norm)});
    t.push_back({"C_sq", ps.f_star, "norm >= 0", fmt("norm=%.6g", norm)});

    try {
        const AlphaBeta ab = alpha_beta_rp(p, norm);
        t.push_back({"alpha_rp", ab.alpha, "1-(p-1)(p+2)norm^2 > 0", fmt("p=%.6g norm=%.6g", p, norm)});
        t.push_back({"beta_rp", ab.beta, "1-(p-1)(p+2)norm^2 > 0", fmt("p=%.6g norm=%.6g", p, norm)});
    } catch (const BoundDomainError&) {}
    try {
        const AlphaBeta ab = alpha_beta_ap(p, norm);
        t.push_back({"alpha_ap", ab.alpha, "(p-1)^2-(3p-2)norm^2 > 0", fmt("p=%.6g norm=%.6g", p, norm)});
        t.push_back({"beta_ap", ab.beta, "(p-1)^2-(3p-2)norm^2 > 0", fmt("p=%.6g norm=%.6g", p, norm)});
    } catch (const BoundDomainError&) {}

    const double cp = gaussian_rp_oracle(p, norm);
    const double dp = gaussian_ap_oracle(p, norm);
    t.push_back({"gaussian_C_p", cp, "p > 1", fmt("p=%.6g norm=%.6g", p, norm)});
    t.push_back({"gaussian_D_p", dp, "p > 1", fmt("p=%.6g norm=%.6g", p, norm)});
    try {
        t.push_back({"bmo_bound_from_rp", bmo_bound_from_rp(p, cp, beta),
                     "beta > p/(p-1)", fmt("p=%.6g beta=%.6g", p, beta)});
    } catch (const BoundDomainError&) {}
    try {
        t.push_back({"bmo_bound_from_ap", bmo_bound_from_ap(p, dp, beta),
                     "beta > p", fmt("p=%.6g beta=%.6g", p, beta)});
    } catch (const BoundDomainError&) {}
    t.push_back({"bmo_bound_from_rp_min", bmo_bound_from_rp_min(p, cp), "beta minimized",
                 fmt("p=%.6g", p)});
    t.push_back({"bmo_bound_from_ap_min", bmo_bound_from_ap_min(p, dp), "beta minimized",
                 fmt("p=%.6g", p)});

    t.push_back({"kazamaki_p_min", kazamaki_admissible_p_min(norm),
                 "admissibility threshold", fmt("norm=%.6g", norm)});
    const ConstantComparison cc = compare_constants(
        norm, [&](double q) { return gaussian_ap_oracle(q, norm); });
    t.push_back({"CK_sq_min", cc.ck_sq_min, "p admissible, gaussian oracle",
                 fmt("norm=%.6g p_at_min=%.6g", norm, cc.p_at_min)});
    t.push_back({"C_sq_over_half_CK_sq", cc.ratio, "<= 1", fmt("norm=%.6g", norm)});
    return t;
}

}  // namespace bmo::constants
