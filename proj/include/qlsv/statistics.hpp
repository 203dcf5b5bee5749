#ifndef QLSV_STATISTICS_HPP
#define QLSV_STATISTICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qlsv/cocycle.hpp"
#include "qlsv/observable.hpp"

namespace qlsv {

/// Fiber family of observables.
///  - Constant: one C^2 function for every fiber.
///  - Special: phi_omega = u (g - c_omega) with u <= K x^{gamma_obs}; built
///    from the unperturbed densities, vanishing at the neutral point, and
///    fiberwise centered by construction.
///  - Custom: arbitrary state -> observable map with a uniform C^2 bound.
struct ObservableProcess {
    enum class Family { Constant, Special, Custom };
    Family family = Family::Constant;
    Observable F;  // Constant
    Observable u;  // Special
    Observable g;  // Special
    double gamma_obs = 0.0;
    std::function<Observable(double)> custom;
    double uniform_c2_bound = 0.0;

    static ObservableProcess constant(Observable f);
    static ObservableProcess special(Observable u, Observable g, double gamma_obs);
};

/// Kolmogorov-Smirnov statistic of the samples against N(0, sigma2).
double ks_statistic_normal(std::vector<double> samples, double sigma2);

/// Two-sample KS statistic.
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);

struct VarianceEstimate {
    double eps = 0.0;
    double sigma2 = 0.0;
    double term0 = 0.0;
    int n_max = 0;
    double tail_bound = 0.0;
    double mc_stderr = 0.0;
    double fitted_prefactor = 0.0;
    double decay_exponent = 0.0;          // envelope exponent used for the tail
    std::vector<double> corr_mean;        // C_n averaged over anchors, n >= 1
    std::vector<double> per_omega;        // per-anchor term0 + 2 sum C_n
    double residual_max = 0.0;            // worst pullback residual
};

/// Green-Kubo variance: the stationary second moment plus twice the summed
/// correlations, with correlation terms evaluated by duality as
/// int f_{sigma^n w} L^n(f_w h_w) dm.  Truncation at n_max carries an
/// explicit tail bound from the fitted decay envelope; the spread over
/// sampled anchors gives the Monte Carlo error.
VarianceEstimate green_kubo_variance(const CocycleContext& ctx,
                                     const ObservableProcess& obs, double eps,
                                     int n_max, int omega_count,
                                     std::uint64_t seed, int depth);

struct CltReport {
    int n = 0;
    int trials = 0;
    double sigma2_hat = 0.0;
    double ks_stat = 0.0;
    double ks_critical = 0.0;
    bool degenerate = false;
    bool pass = false;
    double mean_normalized = 0.0;
    double second_moment = 0.0;
    std::vector<double> sums;  // normalized Birkhoff sums, one per trial
};

/// Normalized Birkhoff sums over orbits started from mu_{omega,eps}
/// (inverse-CDF draws), with per-fiber centering constants computed from the
/// pushed-forward densities.  KS tested against N(0, sigma2_est.sigma2) at
/// the 5% level; a degenerate variance estimate switches to the
/// point-mass-at-zero branch, which passes iff the empirical second moment
/// lies within the variance estimate's own error budget.
CltReport birkhoff_clt(const CocycleContext& ctx, const ObservableProcess& obs,
                       const BasePoint& omega, int n, int trials, double eps,
                       std::uint64_t seed, const VarianceEstimate& sigma2_est,
                       int depth);

struct ContinuityPoint {
    double eps;
    double sigma2;
    double tail_bound;
    double mc_stderr;
    double delta_abs;   // |sigma2(eps) - sigma2(0)|
    double delta_err;   // paired stderr of the difference
};

struct ContinuityReport {
    std::vector<ContinuityPoint> curve;
    double sigma2_zero = 0.0;
    double max_abs_delta = 0.0;
    LineFit modulus_fit;            // log |delta| vs log |eps|
    bool monotone_up_to_err = true; // |delta| decreasing toward 0
    double budget = 0.0;            // tail + MC at eps = 0
};

/// sigma2 over a symmetric eps grid with common anchors, against sigma2(0).
ContinuityReport variance_continuity_experiment(const CocycleContext& ctx,
                                                const ObservableProcess& obs,
                                                const std::vector<double>& eps_grid,
                                                int n_max, int omega_count,
                                                std::uint64_t seed, int depth);

}  // namespace qlsv

#endif
