#include "qlsv/statistics.hpp"

#include <algorithm>
#include <cmath>

namespace qlsv {

ObservableProcess ObservableProcess::constant(Observable f) {
    ObservableProcess p;
    p.family = Family::Constant;
    p.uniform_c2_bound = f.norms().c2;
    p.F = std::move(f);
    return p;
}

ObservableProcess ObservableProcess::special(Observable u, Observable g,
                                             double gamma_obs) {
    if (!(gamma_obs > 0.0)) throw DomainError("special observable: gamma_obs > 0");
    ObservableProcess p;
    p.family = Family::Special;
    p.uniform_c2_bound = 2.0 * u.norms().c0 * g.norms().c0;
    p.u = std::move(u);
    p.g = std::move(g);
    p.gamma_obs = gamma_obs;
    return p;
}

double ks_statistic_normal(std::vector<double> s, double sigma2) {
    if (s.empty()) throw DomainError("ks: empty sample");
    if (!(sigma2 > 0.0)) throw DomainError("ks: sigma2 must be positive");
    std::sort(s.begin(), s.end());
    const double sigma = std::sqrt(sigma2);
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-s[i] / (sigma * std::sqrt(2.0)));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
        d = std::max(d, std::abs(static_cast<double>(i) / n - cdf));
    }
    return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i; else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

namespace {

// Cell averages of the building blocks of the observable family, combined
// per fiber into centered averages and pointwise evaluators without
// re-sampling anything on the hot path.
struct ObservableBlocks {
    const ObservableProcess* proc;
    GridPtr grid;
    GridFunction avg_f, avg_f2;                       // Constant
    GridFunction avg_u, avg_gu, avg_u2, avg_u2g, avg_u2g2;  // Special

    ObservableBlocks(const ObservableProcess& p, const GridPtr& g)
        : proc(&p), grid(g) {
        switch (p.family) {
            case ObservableProcess::Family::Constant:
                avg_f = p.F.averages(g);
                avg_f2 = sample_cell_averages(
                    g, [&](double x) { const double v = p.F.f(x); return v * v; });
                break;
            case ObservableProcess::Family::Special: {
                auto& u = p.u.f;
                auto& gg = p.g.f;
                avg_u = p.u.averages(g);
                avg_gu = sample_cell_averages(g, [&](double x) { return gg(x) * u(x); });
                avg_u2 = sample_cell_averages(g, [&](double x) { return u(x) * u(x); });
                avg_u2g = sample_cell_averages(
                    g, [&](double x) { return u(x) * u(x) * gg(x); });
                avg_u2g2 = sample_cell_averages(g, [&](double x) {
                    const double v = u(x) * gg(x);
                    return v * v;
                });
                break;
            }
            case ObservableProcess::Family::Custom:
                break;
        }
    }
};

// Centered fiber observable: grid averages of f and f^2, the pointwise
// constants, and an evaluator.
struct FiberData {
    GridFunction f_avg;
    GridFunction f2_avg;
    double c_special = 0.0;  // c_omega of the special family
    double c_center = 0.0;   // mean subtracted afterwards
};

// h_eps: density used for centering; h_zero: density defining c_omega of the
// special family (equal to h_eps at eps = 0).
FiberData resolve_fiber(const ObservableBlocks& blocks, double state,
                        const GridFunction& h_eps, const GridFunction& h_zero) {
    const auto& p = *blocks.proc;
    FiberData out;
    switch (p.family) {
        case ObservableProcess::Family::Constant: {
            const double mass = integrate(h_eps);
            const double c = cell_dot(blocks.avg_f, h_eps) / mass;
            out.c_center = c;
            out.f_avg = blocks.avg_f;
            for (auto& v : out.f_avg.values) v -= c;
            out.f2_avg = blocks.avg_f2;
            for (int i = 0; i < out.f2_avg.size(); ++i) {
                out.f2_avg[i] += -2.0 * c * blocks.avg_f[i] + c * c;
            }
            return out;
        }
        case ObservableProcess::Family::Special: {
            const double u_mass = cell_dot(blocks.avg_u, h_zero);
            if (u_mass < 1e-12) {
                throw DegenerateDensityError("special observable: int u dmu ~ 0");
            }
            const double cw = cell_dot(blocks.avg_gu, h_zero) / u_mass;
            // F = gu - cw u, then center against h_eps
            GridFunction F_avg(blocks.grid, FunctionTag::Signed);
            for (int i = 0; i < F_avg.size(); ++i) {
                F_avg[i] = blocks.avg_gu[i] - cw * blocks.avg_u[i];
            }
            const double mass = integrate(h_eps);
            const double c = cell_dot(F_avg, h_eps) / mass;
            out.c_special = cw;
            out.c_center = c;
            out.f_avg = F_avg;
            for (auto& v : out.f_avg.values) v -= c;
            out.f2_avg = GridFunction(blocks.grid, FunctionTag::Signed);
            for (int i = 0; i < out.f2_avg.size(); ++i) {
                const double F2 = blocks.avg_u2g2[i] - 2.0 * cw * blocks.avg_u2g[i] +
                                  cw * cw * blocks.avg_u2[i];
                out.f2_avg[i] = F2 - 2.0 * c * F_avg[i] + c * c;
            }
            return out;
        }
        case ObservableProcess::Family::Custom: {
            const Observable obs = p.custom(state);
            const GridFunction avg = obs.averages(blocks.grid);
            const GridFunction avg2 = sample_cell_averages(
                blocks.grid, [&](double x) { const double v = obs.f(x); return v * v; });
            const double mass = integrate(h_eps);
            const double c = cell_dot(avg, h_eps) / mass;
            out.c_center = c;
            out.f_avg = avg;
            for (auto& v : out.f_avg.values) v -= c;
            out.f2_avg = avg2;
            for (int i = 0; i < avg2.size(); ++i) {
                out.f2_avg[i] += -2.0 * c * avg[i] + c * c;
            }
            return out;
        }
    }
    throw DomainError("unknown observable family");
}

double tail_exponent(const ObservableProcess& obs, double alpha) {
    // decay envelope |C_n| <= C n^{-kappa}
    if (obs.family == ObservableProcess::Family::Special) {
        return (1.0 + std::min(obs.gamma_obs, alpha)) / alpha - 1.0;
    }
    return 1.0 / alpha - 1.0;
}

double zeta_tail(double kappa, int n_max) {
    // sum_{n > n_max} n^{-kappa} <= integral bound, kappa > 1
    if (!(kappa > 1.0)) {
        throw DomainError("tail bound requires a summable envelope (kappa > 1)");
    }
    return std::pow(static_cast<double>(n_max), 1.0 - kappa) / (kappa - 1.0);
}

}  // namespace

VarianceEstimate green_kubo_variance(const CocycleContext& ctx,
                                     const ObservableProcess& obs, double eps,
                                     int n_max, int omega_count,
                                     std::uint64_t seed, int depth) {
    if (n_max < 16) throw DomainError("green_kubo_variance: n_max >= 16");
    if (omega_count < 1) throw DomainError("green_kubo_variance: omega_count >= 1");

    const ObservableBlocks blocks(obs, ctx.grid);
    const bool needs_zero =
        obs.family == ObservableProcess::Family::Special && eps != 0.0;

    VarianceEstimate est;
    est.eps = eps;
    est.n_max = n_max;
    est.corr_mean.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    est.per_omega.resize(static_cast<std::size_t>(omega_count));

    std::vector<std::vector<double>> corr_all(
        static_cast<std::size_t>(omega_count),
        std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0));
    std::vector<double> term0_all(static_cast<std::size_t>(omega_count));

    const auto anchors = ctx.base->sample_omegas(omega_count, seed);
    for (int m = 0; m < omega_count; ++m) {
        const BasePoint& w = anchors[static_cast<std::size_t>(m)];
        const EquivariantDensity ed = equivariant_density(ctx, w, depth, eps);
        est.residual_max = std::max(est.residual_max, ed.residual);
        GridFunction h = ed.h;
        GridFunction h0 = needs_zero ? equivariant_density(ctx, w, depth, 0.0).h : h;

        FiberData fiber = resolve_fiber(blocks, ctx.base->state(w), h, h0);
        term0_all[m] = cell_dot(fiber.f2_avg, h);

        // signed function pushed forward; dot against the centered fiber
        // averages at sigma^n w
        GridFunction u(ctx.grid, FunctionTag::Signed);
        for (int i = 0; i < u.size(); ++i) u[i] = fiber.f_avg[i] * h[i];

        for (int n = 1; n <= n_max; ++n) {
            const BasePoint wn = ctx.base->advance(w, n - 1);
            const OperatorPtr op = ctx.op_at(wn, eps);
            u = apply(*op, u, ctx.mode);
            h = apply(*op, h, ctx.mode);
            if (needs_zero) h0 = apply(*ctx.op_at(wn, 0.0), h0, ctx.mode);
            const FiberData fn = resolve_fiber(
                blocks, ctx.base->state(ctx.base->advance(w, n)), h, needs_zero ? h0 : h);
            corr_all[m][static_cast<std::size_t>(n)] = cell_dot(fn.f_avg, u);
        }
    }

    // reduce over anchors
    for (int m = 0; m < omega_count; ++m) {
        double two_sum = 0.0;
        for (int n = 1; n <= n_max; ++n) {
            est.corr_mean[static_cast<std::size_t>(n)] +=
                corr_all[m][static_cast<std::size_t>(n)] / omega_count;
            two_sum += 2.0 * corr_all[m][static_cast<std::size_t>(n)];
        }
        est.per_omega[static_cast<std::size_t>(m)] = term0_all[m] + two_sum;
        est.term0 += term0_all[m] / omega_count;
    }
    est.sigma2 = pairwise_sum(est.per_omega) / omega_count;

    if (omega_count > 1) {
        double var = 0.0;
        for (double v : est.per_omega) {
            var += (v - est.sigma2) * (v - est.sigma2);
        }
        est.mc_stderr = std::sqrt(var / (omega_count - 1) / omega_count);
    }

    // tail from the decay envelope fitted on the upper half of the prefix
    const double kappa = tail_exponent(obs, ctx.params->alpha_upper);
    est.decay_exponent = kappa;
    double c_hat = 0.0;
    for (int n = std::max(2, n_max / 2); n <= n_max; ++n) {
        c_hat = std::max(c_hat, std::abs(est.corr_mean[static_cast<std::size_t>(n)]) *
                                    std::pow(static_cast<double>(n), kappa));
    }
    est.fitted_prefactor = c_hat;
    est.tail_bound = 2.0 * c_hat * zeta_tail(kappa, n_max);

    if (est.sigma2 < -(est.tail_bound + 3.0 * est.mc_stderr) - 1e-12) {
        throw NumericError("green_kubo_variance: negative beyond error budget");
    }
    return est;
}

CltReport birkhoff_clt(const CocycleContext& ctx, const ObservableProcess& obs,
                       const BasePoint& omega, int n, int trials, double eps,
                       std::uint64_t seed, const VarianceEstimate& sigma2_est,
                       int depth) {
    if (n < 1000) throw DomainError("birkhoff_clt: n must be >= 1e3");
    if (trials < 1000) throw DomainError("birkhoff_clt: trials must be >= 1e3");

    const ObservableBlocks blocks(obs, ctx.grid);
    const bool needs_zero =
        obs.family == ObservableProcess::Family::Special && eps != 0.0;

    GridFunction h = equivariant_density(ctx, omega, depth, eps).h;
    const DensitySampler sampler(h);
    GridFunction h0 = needs_zero ? equivariant_density(ctx, omega, depth, 0.0).h : h;

    // per-step data: map parameter and the fiber centering constants
    std::vector<MapParameter> ps;
    ps.reserve(static_cast<std::size_t>(n));
    std::vector<double> c_special(static_cast<std::size_t>(n));
    std::vector<double> c_center(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const BasePoint wk = ctx.base->advance(omega, k);
        ps.push_back(ctx.map_parameter(wk, eps));
        const FiberData fd =
            resolve_fiber(blocks, ctx.base->state(wk), h, needs_zero ? h0 : h);
        c_special[static_cast<std::size_t>(k)] = fd.c_special;
        c_center[static_cast<std::size_t>(k)] = fd.c_center;
        const OperatorPtr op = ctx.op_at(wk, eps);
        h = apply(*op, h, ctx.mode);
        if (needs_zero) h0 = apply(*ctx.op_at(wk, 0.0), h0, ctx.mode);
    }

    CltReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.sums.resize(static_cast<std::size_t>(trials));
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    const auto family = obs.family;
    parallel_for(trials, ctx.mode, [&](int t) {
        RngStream rng(seed, 0x424c54ull + static_cast<std::uint64_t>(t));
        double x = sampler.draw(rng.uniform());
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            double v;
            switch (family) {
                case ObservableProcess::Family::Constant:
                    v = obs.F.f(x);
                    break;
                case ObservableProcess::Family::Special:
                    v = obs.u.f(x) *
                        (obs.g.f(x) - c_special[static_cast<std::size_t>(k)]);
                    break;
                default:
                    v = obs.custom(ctx.base->state(ctx.base->advance(omega, k))).f(x);
            }
            s += v - c_center[static_cast<std::size_t>(k)];
            x = orbit_step(ps[static_cast<std::size_t>(k)], x, rng);
        }
        rep.sums[static_cast<std::size_t>(t)] = s * inv_sqrt_n;
    });

    rep.mean_normalized = pairwise_sum(rep.sums) / trials;
    {
        std::vector<double> sq(rep.sums.size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = rep.sums[i] * rep.sums[i];
        rep.second_moment = pairwise_sum(sq) / trials;
    }

    rep.sigma2_hat = sigma2_est.sigma2;
    rep.ks_critical = 1.36 / std::sqrt(static_cast<double>(trials));
    const double degenerate_scale =
        3.0 * (sigma2_est.tail_bound + sigma2_est.mc_stderr);
    if (rep.sigma2_hat <= degenerate_scale) {
        // paper convention: the limit is the unit mass at 0; pass iff the
        // empirical spread collapses within the estimate's own budget
        rep.degenerate = true;
        rep.ks_stat = rep.second_moment;
        rep.pass = rep.second_moment <= std::max(degenerate_scale, 1e-12);
    } else {
        rep.ks_stat = ks_statistic_normal(rep.sums, rep.sigma2_hat);
        rep.pass = rep.ks_stat <= rep.ks_critical;
    }
    return rep;
}

ContinuityReport variance_continuity_experiment(const CocycleContext& ctx,
                                                const ObservableProcess& obs,
                                                const std::vector<double>& eps_grid,
                                                int n_max, int omega_count,
                                                std::uint64_t seed, int depth) {
    for (double e : eps_grid) {
        if (std::abs(e) > ctx.params->eps0) {
            throw DomainError("continuity: eps grid outside (-eps0, eps0)");
        }
    }
    const VarianceEstimate base =
        green_kubo_variance(ctx, obs, 0.0, n_max, omega_count, seed, depth);

    ContinuityReport rep;
    rep.sigma2_zero = base.sigma2;
    // pullback residuals feed the budget alongside truncation and MC spread
    rep.budget = base.tail_bound + base.mc_stderr + base.residual_max;

    for (double e : eps_grid) {
        if (e == 0.0) continue;
        const VarianceEstimate ve =
            green_kubo_variance(ctx, obs, e, n_max, omega_count, seed, depth);
        ContinuityPoint pt;
        pt.eps = e;
        pt.sigma2 = ve.sigma2;
        pt.tail_bound = ve.tail_bound;
        pt.mc_stderr = ve.mc_stderr;
        pt.delta_abs = std::abs(ve.sigma2 - base.sigma2);
        // paired differences over common anchors
        double mean_d = 0.0;
        for (std::size_t m = 0; m < ve.per_omega.size(); ++m) {
            mean_d += (ve.per_omega[m] - base.per_omega[m]) / ve.per_omega.size();
        }
        double var_d = 0.0;
        for (std::size_t m = 0; m < ve.per_omega.size(); ++m) {
            const double d = ve.per_omega[m] - base.per_omega[m] - mean_d;
            var_d += d * d;
        }
        pt.delta_err = ve.per_omega.size() > 1
                           ? std::sqrt(var_d / (ve.per_omega.size() - 1) /
                                       ve.per_omega.size())
                           : 0.0;
        rep.curve.push_back(pt);
        rep.max_abs_delta = std::max(rep.max_abs_delta, pt.delta_abs);
    }

    std::sort(rep.curve.begin(), rep.curve.end(),
              [](const ContinuityPoint& a, const ContinuityPoint& b) {
                  return std::abs(a.eps) < std::abs(b.eps) ||
                         (std::abs(a.eps) == std::abs(b.eps) && a.eps < b.eps);
              });

    // group by |eps|: modulus and monotonicity
    std::vector<double> mags, mods, errs;
    for (const auto& pt : rep.curve) {
        const double m = std::abs(pt.eps);
        if (!mags.empty() && mags.back() == m) {
            mods.back() = std::max(mods.back(), pt.delta_abs);
            errs.back() = std::max(errs.back(), pt.delta_err);
        } else {
            mags.push_back(m);
            mods.push_back(pt.delta_abs);
            errs.push_back(pt.delta_err);
        }
    }
    for (std::size_t i = 0; i + 1 < mags.size(); ++i) {
        if (mods[i] > mods[i + 1] + errs[i] + errs[i + 1]) {
            rep.monotone_up_to_err = false;
        }
    }
    if (mags.size() >= 2) {
        bool positive = true;
        for (double m : mods) positive = positive && m > 0.0;
        if (positive) rep.modulus_fit = fit_loglog(mags, mods);
    }
    return rep;
}

}  // namespace qlsv
