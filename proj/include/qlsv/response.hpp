#ifndef QLSV_RESPONSE_HPP
#define QLSV_RESPONSE_HPP

#include <cstdint>
#include <vector>

#include "qlsv/cocycle.hpp"
#include "qlsv/statistics.hpp"

namespace qlsv {

struct ResponseSeries {
    BasePoint anchor;
    int K = 0;
    GridFunction hhat;               // truncated response density
    GridFunction h_omega;            // unperturbed density at the anchor
    std::vector<double> term_norms;  // L1 norms of the K+1 summands
    double tail_estimate = 0.0;
    double depth_residual = 0.0;
    double hhat_l1 = 0.0;
    bool converged = true;  // term norms decay over the last quartile
};

/// Truncated series for the response density
///   hhat = sum_{i<=K} delta(sigma^{-(i+1)} w)
///          L^i_{sigma^{-i} w} [ d/dgamma L_{beta(sigma^{-(i+1)} w)}
///                               (h_{sigma^{-(i+1)} w}) ],
/// built from one deep pullback and a forward walk; the summand derivative
/// is the closed-form kernel derivative, so each summand integrates to
/// exactly zero.  Requires alpha_upper < 1/2.
ResponseSeries response_density(const CocycleContext& ctx, const BasePoint& omega,
                                int K, int depth);

struct ResponseValidation {
    std::vector<double> eps;
    std::vector<double> residual;       // |(h_eps - h)/eps - hhat|_L1
    std::vector<double> stability;      // |h_eps - h|_L1
    LineFit response_fit;               // log residual vs log |eps|
    LineFit stability_fit;              // log distance vs log |eps|
    double truncation_floor = 0.0;
    bool inconclusive = false;          // floor dominates the whole grid
    ResponseSeries series;
};

/// Linear-response rate check: residual r(eps) fitted against
/// C |eps|^{1-2 alpha} after subtracting the K-truncation floor, plus the
/// statistical-stability prerequisite |h_eps - h| ~ |eps|.
ResponseValidation response_validate(const CocycleContext& ctx,
                                     const BasePoint& omega,
                                     const std::vector<double>& eps_grid, int K,
                                     int depth);

struct DerivativeReport {
    double term1 = 0.0;  // int f0^2 hhat
    double term2 = 0.0;  // -2 int (int F hhat)(int f0 dmu); identically 0
    double term3 = 0.0;  // sum_n int L^n(-L(w,F) h + f0 hhat) f_{s^n w,0}
    double term4 = 0.0;  // double sum with the kernel derivative inside
    // term1 + term2 + 2 (term3 + term4): the correlation series enter the
    // variance twice
    double formula_value = 0.0;
    double fd_value = 0.0;
    double fd_eps = 0.0;
    double agreement_gap = 0.0;
    double error_budget = 0.0;
    double tail3 = 0.0;
    double tail4 = 0.0;
    double khat_tail = 0.0;   // response-series truncation contribution
    double mc_stderr = 0.0;
    double fd_model_error = 0.0;
    std::vector<double> per_omega_formula;
    bool pass = false;
};

/// Derivative of the limit variance at eps = 0: the four-term formula versus
/// a central finite difference of the Green-Kubo variance, computed with
/// common anchors and truncations.  The parameter range gate (alpha < 1/5,
/// or alpha < (1+eta)/5 for vanishing observables) is enforced; beyond it
/// the summability of the double sum is unknown and the computation is
/// refused.
DerivativeReport variance_derivative(const CocycleContext& ctx,
                                     const ObservableProcess& obs, int K,
                                     int n_max, int j_max, int omega_count,
                                     std::uint64_t seed, int depth);

struct FastDecayResult {
    std::vector<double> norm;
    LineFit fit;
    double required_slope = 0.0;
    bool pass = false;
};

/// Decay of |L^n psi|_L1 for a mean-zero psi with |psi| <= C0 x^{-gamma},
/// |psi'| <= C1 x^{-gamma-1}; the envelope improves from n^{1-1/alpha} to
/// n^{-1/alpha + gamma/alpha}.
FastDecayResult fast_decay_check(const CocycleContext& ctx, const BasePoint& omega,
                                 const GridFunction& psi, double gamma_sing,
                                 int n_max);

}  // namespace qlsv

#endif
