#pragma once

#include <functional>
#include <string>
#include <vector>

namespace bmo::constants {

// Deterministic closed forms for every bound used by the experiments.
// Domain checks are strict inequalities with no slack; violations throw
// BoundDomainError naming the condition.

struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;
};

// Contraction factors of the Picard map for the reverse-Holder route,
// in terms of n = ||tilde M||_BMO(tilde P). Valid while
// 1 - (p-1)(p+2) n^2 > 0; both factors vanish as p -> 1+.
AlphaBeta alpha_beta_rp(double p, double tilde_norm);

// Same for the Muckenhoupt route in terms of n = ||M||_BMO(P). Valid while
// (p-1)^2 - (3p-2) n^2 > 0; both factors vanish as p -> infinity.
AlphaBeta alpha_beta_ap(double p, double norm);

enum class Variant { Rp, Ap };

struct ContractionP {
    bool found = false;
    double p = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

// Search for a p with max(alpha, beta) <= target (default 0.5): towards 1+
// for the Rp variant, towards +infinity for Ap. A zero norm short-circuits:
// the map is then independent of its inputs, any p works, and the midpoint
// of the default range is reported with alpha = beta = 0.
ContractionP find_contraction_p(double norm, Variant variant, double target = 0.5);

// Upper bound for ||M||^2_BMO(P) from the reverse-Holder constant C_p,
// valid for beta > p/(p-1).
double bmo_bound_from_rp(double p, double c_p, double beta);
// The same bound minimized over admissible beta (golden section).
double bmo_bound_from_rp_min(double p, double c_p);

// Upper bound for ||tilde M||^2_BMO(tilde P) from the Muckenhoupt constant
// D_p, valid for beta > p.
double bmo_bound_from_ap(double p, double d_p, double beta);
double bmo_bound_from_ap_min(double p, double d_p);

struct PStar {
    double p_star = 0.0;     // argmin of f over (0,1)
    double f_star = 0.0;     // minimum value, equals c^2
    double c = 0.0;          // 1 + (sqrt2/2) * norm
};

// f(p) = 1/p + norm^2 / (2(1-p)) on (0,1); its minimizer and minimum in
// closed form.
PStar p_star_and_f(double norm);
double f_of_p(double p, double norm);

// Admissibility threshold: p must exceed (1 + norm/sqrt2)^2, equivalently
// norm < sqrt2 (sqrt p - 1).
double kazamaki_admissible_p_min(double norm);
bool kazamaki_admissible(double norm, double p);

// Squared isomorphism constant of the classical proof:
// 2p * 2^{1/p} * (ap_sup_term)^{(p-1)/p}, for admissible p.
double kazamaki_constant_sq(double norm, double ap_sup_term, double p);

// The negative-moment oracle for a constant integrand with ||.||_BMO = norm:
// sup_tau E~[{E_{tau,T}(tilde M)}^{-1/(p-1)} | F_tau] = exp(p norm^2 / (2(p-1)^2)).
double gaussian_ap_oracle(double p, double norm);
// Forward p-th moment oracle: exp(p(p-1) norm^2 / 2).
double gaussian_rp_oracle(double p, double norm);

struct ConstantComparison {
    double c_sq = 0.0;
    double ck_sq_min = 0.0;
    double p_at_min = 0.0;
    double ratio = 0.0;      // c_sq / (ck_sq_min / 2)
    bool pass = false;       // c_sq <= ck_sq_min / 2
};

// Verifies c^2 <= ck^2 / 2 with ck^2 minimized over a grid of admissible p,
// given an oracle p -> ap_sup_term.
ConstantComparison compare_constants(double norm,
                                     const std::function<double(double)>& ap_sup_oracle);

// Lower bound on the solved Y in the contraction region; positivity of this
// expression forces positivity of the solution.
double positivity_lower_bound(double p, double y_sup, double tilde_norm, double psi_bmo);

struct BoundReport {
    std::string name;
    double value = 0.0;
    std::string domain;     // validity condition, echoed
    std::string inputs;     // parameter echo
};

// The closed-form table behind the `constants` CLI subcommand.
std::vector<BoundReport> bound_table(double norm, double p, double beta);

namespace detail {
// Golden-section minimum of a unimodal f on [lo, hi], relative tolerance.
double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double rel_tol = 1e-9);
}  // namespace detail

}  // namespace bmo::constants
