#include "qlsv/response.hpp"

#include <algorithm>
#include <cmath>

namespace qlsv {

namespace {

double series_tail(double kappa, int k_max) {
    // sum_{i > K} i^{-kappa}
    if (!(kappa > 1.0)) throw DomainError("series tail requires kappa > 1");
    return std::pow(static_cast<double>(k_max), 1.0 - kappa) / (kappa - 1.0);
}

}  // namespace

ResponseSeries response_density(const CocycleContext& ctx, const BasePoint& omega,
                                int K, int depth) {
    if (K < 1) throw DomainError("response_density: K >= 1");
    if (!(ctx.params->alpha_upper < 0.5)) {
        throw ConfigError("response series requires alpha_upper < 1/2");
    }

    // operators op[m] at fiber sigma^{-m} w for m = 1..K+1
    std::vector<OperatorPtr> ops(static_cast<std::size_t>(K) + 2);
    std::vector<double> deltas(static_cast<std::size_t>(K) + 2, 0.0);
    for (int m = 1; m <= K + 1; ++m) {
        const BasePoint wm = ctx.base->advance(omega, -m);
        ops[static_cast<std::size_t>(m)] = ctx.op_at(wm, 0.0);
        deltas[static_cast<std::size_t>(m)] = ctx.params->delta(*ctx.base, wm);
    }

    const EquivariantDensity deep =
        equivariant_density(ctx, ctx.base->advance(omega, -(K + 1)), depth, 0.0);

    ResponseSeries rs;
    rs.anchor = omega;
    rs.K = K;
    rs.depth_residual = deep.residual;
    rs.term_norms.assign(static_cast<std::size_t>(K) + 1, 0.0);
    rs.hhat = GridFunction(ctx.grid, FunctionTag::Signed);

    // walk densities forward; h_m lives at fiber sigma^{-m} w
    GridFunction h = deep.h;  // at m = K+1
    for (int i = K; i >= 0; --i) {
        // summand i is built from the fiber at sigma^{-(i+1)} w
        const int m = i + 1;
        const MapParameter p(ops[static_cast<std::size_t>(m)]->gamma,
                             ctx.boundary_mode);
        GridFunction s = operator_parameter_derivative(p, h);
        const double d = deltas[static_cast<std::size_t>(m)];
        for (auto& v : s.values) v *= d;
        // push i steps: ops[i], ops[i-1], .., ops[1]
        for (int step = i; step >= 1; --step) {
            s = apply(*ops[static_cast<std::size_t>(step)], s, ctx.mode);
        }
        rs.term_norms[static_cast<std::size_t>(i)] = l1_norm(s);
        for (int c = 0; c < rs.hhat.size(); ++c) rs.hhat[c] += s[c];
        // advance the density to the next fiber (sigma^{-i} w)
        h = apply(*ops[static_cast<std::size_t>(m)], h, ctx.mode);
    }
    rs.h_omega = h;  // now at the anchor
    rs.h_omega.tag = FunctionTag::Density;
    rs.hhat_l1 = l1_norm(rs.hhat);

    // tail envelope i^{-(1/alpha - 1)} fitted on the upper half
    const double kappa = 1.0 / ctx.params->alpha_upper - 1.0;
    double c_hat = 0.0;
    for (int i = std::max(2, K / 2); i <= K; ++i) {
        c_hat = std::max(c_hat, rs.term_norms[static_cast<std::size_t>(i)] *
                                    std::pow(static_cast<double>(i), kappa));
    }
    rs.tail_estimate = c_hat * series_tail(kappa, K);

    // convergence: last-quartile mean below the previous quartile's
    double last = 0.0, prev = 0.0;
    const int q = std::max(1, K / 4);
    for (int i = K - q + 1; i <= K; ++i) last += rs.term_norms[static_cast<std::size_t>(i)];
    for (int i = K - 2 * q + 1; i <= K - q; ++i) {
        prev += rs.term_norms[static_cast<std::size_t>(std::max(i, 0))];
    }
    rs.converged = last <= prev || last == 0.0;
    return rs;
}

ResponseValidation response_validate(const CocycleContext& ctx,
                                     const BasePoint& omega,
                                     const std::vector<double>& eps_grid, int K,
                                     int depth) {
    if (eps_grid.size() < 4) {
        throw DomainError("response_validate: need at least 4 eps magnitudes");
    }
    ResponseValidation rv;
    rv.series = response_density(ctx, omega, K, depth);
    rv.truncation_floor = rv.series.tail_estimate;

    const int depth_v = depth + K + 1;  // same total pullback span as the series
    const GridFunction h0 = equivariant_density(ctx, omega, depth_v, 0.0).h;

    for (double e : eps_grid) {
        if (e == 0.0) throw DomainError("response_validate: eps grid must avoid 0");
        const GridFunction he = equivariant_density(ctx, omega, depth_v, e).h;
        rv.eps.push_back(e);
        rv.stability.push_back(l1_distance(he, h0));
        GridFunction diff(ctx.grid, FunctionTag::Signed);
        for (int i = 0; i < diff.size(); ++i) {
            diff[i] = (he[i] - h0[i]) / e - rv.series.hhat[i];
        }
        rv.residual.push_back(l1_norm(diff));
    }

    std::vector<double> mags(rv.eps.size());
    for (std::size_t i = 0; i < rv.eps.size(); ++i) mags[i] = std::abs(rv.eps[i]);
    rv.stability_fit = fit_loglog(mags, rv.stability);

    // subtract the K-truncation floor before fitting the response rate
    std::vector<double> adj;
    std::vector<double> adj_mag;
    int floored = 0;
    for (std::size_t i = 0; i < rv.residual.size(); ++i) {
        const double r = rv.residual[i] - rv.truncation_floor;
        if (r > 0.0) {
            adj.push_back(r);
            adj_mag.push_back(mags[i]);
        } else {
            ++floored;
        }
    }
    if (adj.size() >= 2) {
        rv.response_fit = fit_loglog(adj_mag, adj);
    }
    rv.inconclusive = adj.size() < 2 || floored > static_cast<int>(rv.residual.size()) / 2;
    return rv;
}

DerivativeReport variance_derivative(const CocycleContext& ctx,
                                     const ObservableProcess& obs, int K,
                                     int n_max, int j_max, int omega_count,
                                     std::uint64_t seed, int depth) {
    if (n_max < 64 || j_max < 64) {
        throw DomainError("variance_derivative: n_max, j_max >= 64");
    }
    const double alpha = ctx.params->alpha_upper;
    double eta = 0.0;
    if (obs.family == ObservableProcess::Family::Special) {
        eta = std::min(obs.gamma_obs, alpha);
    }
    if (!(alpha < (1.0 + eta) / 5.0)) {
        throw ConfigError(
            "variance_derivative: needs alpha < 1/5 (or alpha < (1+eta)/5 for "
            "vanishing observables); summability beyond that range is unknown");
    }

    const auto anchors = ctx.base->sample_omegas(omega_count, seed);
    DerivativeReport rep;
    rep.per_omega_formula.resize(static_cast<std::size_t>(omega_count));

    double sum1 = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    std::vector<double> term3_by_n(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<double> term4_by_n(static_cast<std::size_t>(n_max) + 1, 0.0);
    double khat_tail = 0.0;

    for (int m = 0; m < omega_count; ++m) {
        const BasePoint& w = anchors[static_cast<std::size_t>(m)];
        const ResponseSeries rs = response_density(ctx, w, K, depth);
        khat_tail = std::max(khat_tail, rs.tail_estimate);
        const GridFunction& h = rs.h_omega;
        const GridFunction& hhat = rs.hhat;

        // forward operators and pushed data along sigma^k w
        std::vector<OperatorPtr> fwd(static_cast<std::size_t>(n_max));
        std::vector<double> delta_fwd(static_cast<std::size_t>(n_max));
        for (int k = 0; k < n_max; ++k) {
            const BasePoint wk = ctx.base->advance(w, k);
            fwd[static_cast<std::size_t>(k)] = ctx.op_at(wk, 0.0);
            delta_fwd[static_cast<std::size_t>(k)] = ctx.params->delta(*ctx.base, wk);
        }

        // centered fiber averages f_{sigma^n w, 0} for n = 0..n_max
        std::vector<GridFunction> favg(static_cast<std::size_t>(n_max) + 1);
        std::vector<GridFunction> f2avg(static_cast<std::size_t>(n_max) + 1);
        {
            GridFunction hk = h;
            for (int k = 0; k <= n_max; ++k) {
                // constant family: F - int F h; special: u(g - c_w) - mean
                if (obs.family == ObservableProcess::Family::Constant) {
                    GridFunction a = obs.F.averages(ctx.grid);
                    const double c = cell_dot(a, hk) / integrate(hk);
                    GridFunction a2 = sample_cell_averages(ctx.grid, [&](double x) {
                        const double v = obs.F.f(x) - c;
                        return v * v;
                    });
                    for (auto& v : a.values) v -= c;
                    favg[static_cast<std::size_t>(k)] = std::move(a);
                    f2avg[static_cast<std::size_t>(k)] = std::move(a2);
                } else if (obs.family == ObservableProcess::Family::Special) {
                    const GridFunction ua = obs.u.averages(ctx.grid);
                    const GridFunction gua = sample_cell_averages(
                        ctx.grid, [&](double x) { return obs.g.f(x) * obs.u.f(x); });
                    const double umass = cell_dot(ua, hk);
                    if (umass < 1e-12) {
                        throw DegenerateDensityError("variance_derivative: int u dmu ~ 0");
                    }
                    const double cw = cell_dot(gua, hk) / umass;
                    GridFunction a = sample_cell_averages(ctx.grid, [&](double x) {
                        return obs.u.f(x) * (obs.g.f(x) - cw);
                    });
                    const double c = cell_dot(a, hk) / integrate(hk);
                    GridFunction a2 = sample_cell_averages(ctx.grid, [&](double x) {
                        const double v = obs.u.f(x) * (obs.g.f(x) - cw) - c;
                        return v * v;
                    });
                    for (auto& v : a.values) v -= c;
                    favg[static_cast<std::size_t>(k)] = std::move(a);
                    f2avg[static_cast<std::size_t>(k)] = std::move(a2);
                } else {
                    throw ConfigError("variance_derivative: custom families not supported");
                }
                if (k < n_max) {
                    hk = apply(*fwd[static_cast<std::size_t>(k)], hk, ctx.mode);
                }
            }
        }

        // term 1: int f0^2 hhat
        const double t1 = cell_dot(f2avg[0], hhat);
        // L(w, F) = int F hhat = int (f0 + c) hhat = int f0 hhat  (hhat has
        // zero mean), evaluated with the centered averages directly
        const double lwf = cell_dot(favg[0], hhat);
        // term 2: -2 L(w,F) int f0 dmu; the centering makes the second factor 0
        const double t2 = -2.0 * lwf * cell_dot(favg[0], h);

        // term 3: push v = -L(w,F) h + f0 hhat
        double t3 = 0.0;
        {
            GridFunction v(ctx.grid, FunctionTag::Signed);
            for (int i = 0; i < v.size(); ++i) {
                v[i] = -lwf * h[i] + favg[0][i] * hhat[i];
            }
            for (int n = 1; n <= n_max; ++n) {
                v = apply(*fwd[static_cast<std::size_t>(n - 1)], v, ctx.mode);
                const double c_n = cell_dot(favg[static_cast<std::size_t>(n)], v);
                t3 += c_n;
                term3_by_n[static_cast<std::size_t>(n)] += std::abs(c_n) / omega_count;
            }
        }

        // term 4: for each j, the kernel derivative of L^j(f0 h) pushed to n
        double t4 = 0.0;
        {
            GridFunction u(ctx.grid, FunctionTag::Signed);
            for (int i = 0; i < u.size(); ++i) u[i] = favg[0][i] * h[i];
            const int j_hi = std::min(j_max, n_max - 1);
            for (int j = 0; j <= j_hi; ++j) {
                const MapParameter pj(fwd[static_cast<std::size_t>(j)]->gamma,
                                      ctx.boundary_mode);
                GridFunction b = operator_parameter_derivative(pj, u);
                const double dj = delta_fwd[static_cast<std::size_t>(j)];
                for (auto& x : b.values) x *= dj;
                for (int n = j + 1; n <= n_max; ++n) {
                    if (n > j + 1) {
                        b = apply(*fwd[static_cast<std::size_t>(n - 1)], b, ctx.mode);
                    }
                    const double c_n = cell_dot(favg[static_cast<std::size_t>(n)], b);
                    t4 += c_n;
                    term4_by_n[static_cast<std::size_t>(n)] += std::abs(c_n) / omega_count;
                }
                u = apply(*fwd[static_cast<std::size_t>(j)], u, ctx.mode);
            }
        }

        rep.per_omega_formula[static_cast<std::size_t>(m)] =
            t1 + t2 + 2.0 * (t3 + t4);
        sum1 += t1 / omega_count;
        sum2 += t2 / omega_count;
        sum3 += t3 / omega_count;
        sum4 += t4 / omega_count;
    }

    rep.term1 = sum1;
    rep.term2 = sum2;
    rep.term3 = sum3;
    rep.term4 = sum4;
    // the variance carries the correlation sum twice; the per-n derivative
    // analysis is done on single correlation terms, so their series re-enter
    // the derivative with the factor 2 (the finite-difference oracle pins
    // this assembly)
    rep.formula_value = sum1 + sum2 + 2.0 * (sum3 + sum4);
    rep.khat_tail = khat_tail;

    if (omega_count > 1) {
        double var = 0.0;
        const double mean = rep.formula_value;
        for (double v : rep.per_omega_formula) var += (v - mean) * (v - mean);
        rep.mc_stderr = std::sqrt(var / (omega_count - 1) / omega_count);
    }

    // truncation tails: term 3 from the n^{1-1/alpha} envelope, term 4 from
    // the n^{1-(1-alpha)/(2 alpha)} envelope (the n^{1-(1+eta-alpha)/(2
    // alpha)} variant for vanishing observables)
    {
        const double k3 = 1.0 / alpha - 1.0;
        double c3 = 0.0;
        for (int n = std::max(2, n_max / 2); n <= n_max; ++n) {
            c3 = std::max(c3, term3_by_n[static_cast<std::size_t>(n)] *
                                  std::pow(static_cast<double>(n), k3));
        }
        rep.tail3 = c3 * series_tail(k3, n_max);
        const double k4 = (1.0 + eta - alpha) / (2.0 * alpha) - 1.0;
        double c4 = 0.0;
        for (int n = std::max(2, n_max / 2); n <= n_max; ++n) {
            c4 = std::max(c4, term4_by_n[static_cast<std::size_t>(n)] *
                                  std::pow(static_cast<double>(n), k4));
        }
        rep.tail4 = c4 * series_tail(k4, n_max);
    }

    // finite difference of the Green-Kubo variance with common anchors.
    // Pilot central differences at two widths calibrate the (1-2 alpha)
    // error constant; the budget-side constant comes from the variance
    // estimates' own tails and paired spread.
    const double eps0 = ctx.params->eps0;
    auto sigma2_at = [&](double e) {
        return green_kubo_variance(ctx, obs, e, n_max, omega_count, seed, depth);
    };
    const double e1 = 0.5 * eps0, e2 = 0.25 * eps0;
    const VarianceEstimate sp1 = sigma2_at(e1), sm1 = sigma2_at(-e1);
    const VarianceEstimate sp2 = sigma2_at(e2), sm2 = sigma2_at(-e2);
    const double d1 = (sp1.sigma2 - sm1.sigma2) / (2.0 * e1);
    const double d2 = (sp2.sigma2 - sm2.sigma2) / (2.0 * e2);
    const double theory_pow = 1.0 - 2.0 * alpha;
    const double c_theory =
        std::abs(d1 - d2) / std::max(std::pow(e1, theory_pow), 1e-300);
    double c_noise = 0.0;
    {
        // paired stderr of the +/- difference at the pilot width
        double mean = 0.0, var = 0.0;
        std::vector<double> diff(sp2.per_omega.size());
        for (std::size_t i = 0; i < diff.size(); ++i) {
            diff[i] = sp2.per_omega[i] - sm2.per_omega[i];
            mean += diff[i] / diff.size();
        }
        for (double v : diff) var += (v - mean) * (v - mean);
        const double se = diff.size() > 1
                              ? std::sqrt(var / (diff.size() - 1) / diff.size())
                              : 0.0;
        c_noise = 0.5 * se;  // fd noise ~ c_noise / eps
    }
    double eps_star = e2;
    if (c_theory > 0.0 && c_noise > 0.0) {
        eps_star = std::pow(c_noise / (theory_pow * c_theory),
                            1.0 / (2.0 - 2.0 * alpha));
    }
    eps_star = std::clamp(eps_star, eps0 / 64.0, e1);
    const VarianceEstimate spf = sigma2_at(eps_star), smf = sigma2_at(-eps_star);
    rep.fd_eps = eps_star;
    rep.fd_value = (spf.sigma2 - smf.sigma2) / (2.0 * eps_star);
    rep.fd_model_error = c_theory * std::pow(eps_star, theory_pow) +
                         c_noise / eps_star +
                         std::abs(d1 - d2);  // pilot spread as a floor

    rep.agreement_gap = std::abs(rep.formula_value - rep.fd_value);
    rep.error_budget = 2.0 * (rep.tail3 + rep.tail4) +
                       (2.0 + static_cast<double>(n_max)) * rep.khat_tail +
                       3.0 * rep.mc_stderr + rep.fd_model_error;
    rep.pass = rep.agreement_gap <= rep.error_budget;
    return rep;
}

FastDecayResult fast_decay_check(const CocycleContext& ctx, const BasePoint& omega,
                                 const GridFunction& psi, double gamma_sing,
                                 int n_max) {
    if (n_max < 16) throw DomainError("fast_decay_check: n_max >= 16");
    if (std::abs(integrate(psi)) > 1e-8) {
        throw DomainError("fast_decay_check: psi must have zero mean");
    }
    const double alpha = ctx.params->alpha_upper;
    if (!(gamma_sing > 0.0 && gamma_sing <= alpha)) {
        throw DomainError("fast_decay_check: need 0 < gamma <= alpha");
    }

    FastDecayResult out;
    GridFunction u = psi;
    out.norm.push_back(l1_norm(u));
    const double floor = 10.0 * std::numeric_limits<double>::epsilon() * out.norm[0];
    for (int n = 1; n <= n_max; ++n) {
        u = apply(*ctx.op_at(ctx.base->advance(omega, n - 1), 0.0), u, ctx.mode);
        out.norm.push_back(l1_norm(u));
    }
    std::vector<double> xs, ys;
    for (int n = std::max(1, n_max / 4); n <= n_max; ++n) {
        if (out.norm[static_cast<std::size_t>(n)] > floor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(out.norm[static_cast<std::size_t>(n)]);
        }
    }
    out.required_slope = -1.0 / alpha + gamma_sing / alpha + 0.2;
    if (xs.size() < 2) {
        // everything at the numerical floor decays faster than any envelope
        out.pass = true;
        return out;
    }
    out.fit = fit_loglog(xs, ys);
    out.pass = out.fit.slope <= out.required_slope;
    return out;
}

}  // namespace qlsv
