// Acceptance suite: one quantitative criterion per experiment family, each
// printed as a single pass/fail line.  Thresholds are fixed here, not
// calibrated at run time.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "qlsv/cones.hpp"
#include "qlsv/response.hpp"
#include "qlsv/statistics.hpp"

#include "../support.hpp"

using namespace qlsv;

namespace {

constexpr double kGolden = 0.6180339887498949;

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
};

struct Setup {
    BaseSystem base;
    ParameterProcess params;

    Setup(const char* beta, const char* delta, double lo, double hi, double eps0)
        : base(BaseSystem::rotation(kGolden)) {
        params.beta_expr = ParamExpr::parse(beta);
        params.delta_expr = ParamExpr::parse(delta);
        params.alpha_lower = lo;
        params.alpha_upper = hi;
        params.eps0 = eps0;
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---- criterion 1: doubling-map variance oracle -------------------------

bool doubling_variance_oracle(std::string& detail) {
    Setup s("const:0.0", "const:0.0", 0.0, 0.3, 0.0);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(4096, 1.0));
    ctx.boundary_mode = true;
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    const VarianceEstimate ve = green_kubo_variance(ctx, obs, 0.0, 64, 4, 101, 64);
    double worst_corr = 0.0;
    for (int n = 1; n <= ve.n_max; ++n) {
        worst_corr = std::max(worst_corr,
                              std::abs(ve.corr_mean[static_cast<std::size_t>(n)]));
    }
    detail = fmt("sigma2=%.6f (want 0.500 +- 0.001), max|C_n|=%.2e (want < 1e-4)",
                 ve.sigma2, worst_corr);
    return std::abs(ve.sigma2 - 0.5) <= 1e-3 && worst_corr < 1e-4;
}

// ---- criteria 2 and 3: quenched CLT ------------------------------------

bool clt_multi_anchor(const Setup& s, const ObservableProcess& obs, int grid_n,
                      double grid_p, int var_n_max, int var_depth, int clt_depth,
                      std::string& detail) {
    CocycleContext ctx(s.base, s.params, GradedGrid::make(grid_n, grid_p));
    const VarianceEstimate ve =
        green_kubo_variance(ctx, obs, 0.0, var_n_max, 12, 202, var_depth);
    const int n = 10000, trials = 10000;
    const auto anchors = s.base.sample_omegas(5, 77);
    int passed = 0;
    std::string ks_list;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const CltReport rep = birkhoff_clt(ctx, obs, anchors[a], n, trials, 0.0,
                                           303 + a, ve, clt_depth);
        if (rep.pass) ++passed;
        ks_list += fmt("%s%.4f", a ? "," : "", rep.ks_stat);
    }
    detail = fmt("sigma2=%.4f+-%.4f, KS=[%s] vs crit 0.0136, %d/5 anchors pass",
                 ve.sigma2, ve.tail_bound + ve.mc_stderr, ks_list.c_str(), passed);
    return passed >= 4;
}

bool clt_case_i(std::string& detail) {
    Setup s("sin:0.2,0.1", "const:0.0", 0.05, 0.3, 0.0);
    return clt_multi_anchor(s, ObservableProcess::constant(Observable::cosine()),
                            4096, 3.0, 256, 800, 2000, detail);
}

bool clt_case_ii(std::string& detail) {
    Setup s("sin:0.5,0.1", "const:0.0", 0.3, 0.6, 0.0);
    const ObservableProcess obs = ObservableProcess::special(
        Observable::power(0.3), Observable::identity(), 0.3);
    return clt_multi_anchor(s, obs, 4096, 3.0, 512, 3000, 6000, detail);
}

// ---- criterion 4: decay rates ------------------------------------------

bool decay_rates(std::string& detail) {
    Setup s("sin:0.4,0.05", "const:0.0", 0.3, 0.45, 0.0);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(4096, 3.0));
    const BasePoint omega = s.base.sample_omegas(1, 5).front();
    const GridFunction h = equivariant_density(ctx, omega, 2000, 0.0).h;
    const GridFunction phi = Observable::cosine().averages(ctx.grid);
    const DecayProfile prof = decay_profile(ctx, omega, phi, h, 2000, 0.0);
    const double want_generic = -(1.0 / 0.45 - 1.0) + 0.15;

    // singular mean-zero test function for the fast variant, gamma = alpha/2
    const double gs = 0.225;
    GridFunction psi(ctx.grid, FunctionTag::Signed);
    for (int i = 0; i < ctx.grid->size(); ++i) {
        const double lo = ctx.grid->node(i), hi = ctx.grid->node(i + 1);
        const double anti =
            (std::pow(hi, 1.0 - gs) - std::pow(lo, 1.0 - gs)) / (1.0 - gs);
        psi[i] = anti / (hi - lo) - 1.0 / (1.0 - gs);
    }
    const FastDecayResult fast = fast_decay_check(ctx, omega, psi, gs, 1000);

    detail = fmt("slope=%.3f (want <= %.3f), fast slope=%.3f (want <= %.3f)",
                 prof.fit.slope, want_generic, fast.fit.slope,
                 fast.required_slope);
    return prof.fit.slope <= want_generic && fast.pass;
}

// ---- criteria 5 and 6: statistical stability and linear response -------

struct ResponseOutcome {
    ResponseValidation rv;
    bool stability_pass;
    bool rate_pass;
    bool ratio_pass;
};

ResponseOutcome run_response(const CocycleContext& ctx, const BasePoint& omega) {
    const std::vector<double> grid_eps = {0.1,     0.0316227766, 0.01,
                                          0.0031622776, -0.1,   -0.0316227766,
                                          -0.01,   -0.0031622776};
    ResponseOutcome out{response_validate(ctx, omega, grid_eps, 512, 500), false,
                        false, false};
    out.stability_pass = out.rv.stability_fit.slope >= 0.9;
    out.rate_pass = !out.rv.inconclusive && out.rv.response_fit.slope >= 0.15;
    // growth of the residual from |eps| = 10^-2.5 to 10^-1: the zero-
    // tolerance theory ratio is 10^{1.5 (1-2 alpha)} = 3.98; with the same
    // 0.25 slope tolerance the criterion grants, the accepted floor is
    // 10^{1.5 (0.4-0.25)}
    const double ratio_floor = std::pow(10.0, 1.5 * (0.4 - 0.25));
    const bool monotone_plus = out.rv.residual[0] > out.rv.residual[1] &&
                               out.rv.residual[1] > out.rv.residual[2] &&
                               out.rv.residual[2] > out.rv.residual[3];
    const bool monotone_minus = out.rv.residual[4] > out.rv.residual[5] &&
                                out.rv.residual[5] > out.rv.residual[6] &&
                                out.rv.residual[6] > out.rv.residual[7];
    out.ratio_pass =
        out.rv.residual[0] >= ratio_floor * out.rv.residual[3] &&
        out.rv.residual[4] >= ratio_floor * out.rv.residual[7] &&
        monotone_plus && monotone_minus;
    return out;
}

bool statistical_stability(std::string& detail) {
    Setup s("sin:0.18,0.02", "const:1.0", 0.05, 0.3, 0.1);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(4096, 3.0));
    const BasePoint omega = s.base.sample_omegas(1, 5).front();
    const ResponseOutcome out = run_response(ctx, omega);
    detail = fmt("stability slope=%.3f (want >= 0.9)", out.rv.stability_fit.slope);
    return out.stability_pass;
}

bool linear_response_rate(std::string& detail) {
    Setup s("sin:0.18,0.02", "const:1.0", 0.05, 0.3, 0.1);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(4096, 3.0));
    const BasePoint omega = s.base.sample_omegas(1, 5).front();
    const ResponseOutcome out = run_response(ctx, omega);

    // uniformity of |hhat|_L1 over anchors
    double lo = 1e300, hi = 0.0;
    for (const BasePoint& w : s.base.sample_omegas(16, 404)) {
        const ResponseSeries rs = response_density(ctx, w, 256, 400);
        lo = std::min(lo, rs.hhat_l1);
        hi = std::max(hi, rs.hhat_l1);
    }
    const bool uniform_pass = hi <= 3.0 * lo;
    detail = fmt("slope=%.3f (want >= 0.15), ratio +:%.2f -:%.2f (theory 3.98, "
                 "floor 1.68), hhat L1 range [%.3f, %.3f] (factor %.2f, want <= 3)",
                 out.rv.response_fit.slope,
                 out.rv.residual[0] / out.rv.residual[3],
                 out.rv.residual[4] / out.rv.residual[7], lo, hi, hi / lo);
    return out.rate_pass && out.ratio_pass && uniform_pass;
}

// ---- criterion 7: autonomous response oracle ---------------------------

bool autonomous_response_oracle(std::string& detail) {
    Setup s("const:0.25", "const:1.0", 0.1, 0.35, 0.05);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(4096, 3.0));
    const BasePoint omega = s.base.sample_omegas(1, 5).front();
    const ResponseSeries rs = response_density(ctx, omega, 512, 400);

    auto fixed_density = [&](double gamma) {
        const OperatorPtr op = build_operator(MapParameter(gamma), ctx.grid);
        GridFunction h(ctx.grid, FunctionTag::Density, 1.0);
        GridFunction prev = h;
        for (int k = 0; k < 200000; ++k) {
            prev = h;
            h = apply(*op, h);
            if ((k & 31) == 0 && l1_distance(h, prev) < 1e-15) break;
        }
        const double mass = integrate(h);
        for (auto& v : h.values) v /= mass;
        return h;
    };
    const GridFunction h0 = fixed_density(0.25);
    auto quotient = [&](double e) {
        const GridFunction he = fixed_density(0.25 + e);
        GridFunction d(ctx.grid, FunctionTag::Signed);
        for (int i = 0; i < d.size(); ++i) d[i] = (he[i] - h0[i]) / e;
        return d;
    };
    // in the small-eps regime the quotient converges linearly (the
    // |eps|^{1-2 gamma} component carries a small constant and dominates only
    // at larger eps), so a first-order Richardson pair extrapolates it
    const double e1 = 1e-5, e2 = 2.5e-6;
    const GridFunction d1 = quotient(e1), d2 = quotient(e2);
    GridFunction extrap(ctx.grid, FunctionTag::Signed);
    for (int i = 0; i < extrap.size(); ++i) {
        extrap[i] = (4.0 * d2[i] - d1[i]) / 3.0;
    }
    const double gap = l1_distance(rs.hhat, extrap);
    const double budget = rs.tail_estimate + 1e-3;
    detail = fmt("|hhat - extrapolated quotient|_1 = %.2e (budget %.2e)", gap,
                 budget);
    return gap <= budget;
}

// ---- criterion 8: variance continuity ----------------------------------

bool variance_continuity(std::string& detail) {
    Setup s("sin:0.38,0.025", "const:1.0", 0.25, 0.45, 0.045);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(2048, 3.0));
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    const ContinuityReport rep = variance_continuity_experiment(
        ctx, obs, {0.04, 0.02, 0.01, -0.04, -0.02, -0.01}, 384, 12, 505, 1500);

    // modulus envelope C |eps|^{1-2 alpha} anchored at the largest magnitude
    double m_big = 0.0, m_small = 0.0;
    for (const auto& pt : rep.curve) {
        if (std::abs(pt.eps) == 0.04) m_big = std::max(m_big, pt.delta_abs);
        if (std::abs(pt.eps) == 0.01) m_small = std::max(m_small, pt.delta_abs);
    }
    const double exponent = 1.0 - 2.0 * 0.45;
    const double envelope = m_big / std::pow(0.04, exponent);
    const bool envelope_pass =
        m_small <= 2.0 * rep.budget + envelope * std::pow(0.01, exponent);
    detail = fmt("|delta|(0.04)=%.4g, |delta|(0.01)=%.4g, monotone=%d, "
                 "budget=%.4g, envelope bound=%.4g",
                 m_big, m_small, static_cast<int>(rep.monotone_up_to_err),
                 rep.budget, 2.0 * rep.budget + envelope * std::pow(0.01, exponent));
    return rep.monotone_up_to_err && envelope_pass;
}

// ---- criterion 9: variance differentiability ---------------------------

bool variance_differentiability(std::string& detail) {
    Setup s("sin:0.15,0.01", "const:1.0", 0.05, 0.18, 0.02);
    CocycleContext ctx(s.base, s.params, GradedGrid::make(2048, 3.0));
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    const DerivativeReport rep =
        variance_derivative(ctx, obs, 256, 128, 128, 16, 606, 250);

    Setup flat("sin:0.15,0.01", "const:0.0", 0.05, 0.18, 0.02);
    CocycleContext ctx0(flat.base, flat.params, GradedGrid::make(2048, 3.0));
    const DerivativeReport zero =
        variance_derivative(ctx0, obs, 64, 128, 128, 4, 606, 250);
    const bool zero_pass = std::abs(zero.formula_value) <= 1e-10 &&
                           std::abs(zero.fd_value) <=
                               3.0 * zero.mc_stderr + 1e-8;

    detail = fmt("formula=%.4f fd=%.4f gap=%.4g budget=%.4g; delta==0: "
                 "formula=%.2e fd=%.2e",
                 rep.formula_value, rep.fd_value, rep.agreement_gap,
                 rep.error_budget, zero.formula_value, zero.fd_value);
    return rep.pass && zero_pass;
}

// ---- criterion 10: cone invariance suite --------------------------------

bool cone_invariance_suite(std::string& detail) {
    auto grid = GradedGrid::make(2048, 3.0);
    const double alpha = 0.5;
    ConeParams cp{3.0, alpha, 8.0, 120.0};
    int checked = 0;
    double worst = 1.0;
    for (int k = 0; k < 400; ++k) {
        auto [u, v] = testsupport::kronecker2(k);
        const double beta = 0.05 + 0.45 * u;       // beta <= alpha
        const double ap = 0.05 + 0.40 * v;         // singularity exponent
        const MapParameter p(beta);
        const OperatorPtr op = build_operator(p, grid);
        GridFunction f(grid, FunctionTag::Density);
        for (int i = 0; i < grid->size(); ++i) {
            const double lo = grid->node(i), hi = grid->node(i + 1);
            const double anti =
                (std::pow(hi, 1.0 - ap) - std::pow(lo, 1.0 - ap)) / (1.0 - ap);
            f[i] = (0.3 + u) + (0.3 + v) * anti / (hi - lo);
        }
        const GridFunction lf = apply(*op, f);
        const ConeReport rep = cone_check(lf, cp, ConeWhich::Star, 1e-6);
        for (const auto& w : rep.worst) worst = std::min(worst, w.margin);
        if (rep.member) ++checked;
    }

    // decomposition sweep over 20 observables against computed densities
    int decomposed = 0;
    for (int k = 0; k < 20; ++k) {
        const double gamma = 0.1 + 0.02 * k;
        const OperatorPtr op = build_operator(MapParameter(gamma), grid);
        GridFunction h(grid, FunctionTag::Density, 1.0);
        for (int it = 0; it < 2500; ++it) h = apply(*op, h);
        const double mass = integrate(h);
        for (auto& v : h.values) v /= mass;
        const Observable phi = (k % 2 == 0) ? Observable::cosine()
                                            : Observable::affine(0.5, -1.0);
        const ConeDecomposition dec =
            cone_decompose(phi.averages(grid), phi.norms(), h, cp);
        if (cone_check(dec.psi1, cp, ConeWhich::Star, 1e-6).member &&
            cone_check(dec.psi2, cp, ConeWhich::Star, 1e-6).member) {
            ++decomposed;
        }
    }
    detail = fmt("%d/400 pairs pass (worst margin %.2e, want >= -1e-6), "
                 "%d/20 decompositions pass",
                 checked, worst, decomposed);
    return checked == 400 && decomposed == 20;
}

// ---- criterion 11: oracle equivalence -----------------------------------

bool oracle_equivalence(std::string& detail) {
    auto grid = GradedGrid::make(128, 3.0);
    // entrywise kernel agreement, row-stochastic (mass) convention
    const MapParameter p(0.25);
    const OperatorPtr op = build_operator(p, grid);
    const auto dense = testsupport::dense_kernel_bisect(p, *grid);
    double worst = 0.0;
    for (int j = 0; j < grid->size(); ++j) {
        std::vector<double> row(static_cast<std::size_t>(grid->size()), 0.0);
        for (int k = op->row_ptr[j]; k < op->row_ptr[j + 1]; ++k) {
            row[static_cast<std::size_t>(op->col[k])] += op->weight[k];
        }
        for (int i = 0; i < grid->size(); ++i) {
            const double scale = grid->cell_width(j) / grid->cell_width(i);
            worst = std::max(worst, std::abs(row[static_cast<std::size_t>(i)] -
                                             dense[j][i]) * scale);
        }
    }

    // pullback vs dense power iteration for the autonomous case; the
    // single-step residual reaches the float floor at this depth, so the
    // comparison carries a machine-noise guard
    GridFunction h(grid, FunctionTag::Density, 1.0);
    GridFunction prev = h;
    for (int k = 0; k < 2000; ++k) {
        prev = h;
        h = apply(*op, h);
    }
    const double residual = l1_distance(h, prev);
    const auto fixed = testsupport::dense_power_fixed_density(dense, *grid);
    GridFunction oracle(grid, FunctionTag::Density);
    oracle.values = fixed;
    const double dist = l1_distance(h, oracle);

    detail = fmt("kernel worst entry diff=%.2e (want <= 1e-9), pullback vs "
                 "power iteration %.2e (residual %.2e)",
                 worst, dist, residual);
    return worst <= 1e-9 && dist <= std::max(2.0 * residual, 1e-11);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "doubling-map variance oracle", doubling_variance_oracle},
        {2, "quenched CLT, case (i), alpha=0.3", clt_case_i},
        {3, "quenched CLT, case (ii), alpha=0.6, vanishing observable", clt_case_ii},
        {4, "polynomial decay rates (generic and fast)", decay_rates},
        {5, "statistical stability |h_eps - h| ~ |eps|", statistical_stability},
        {6, "linear response rate and uniformity", linear_response_rate},
        {7, "autonomous response oracle", autonomous_response_oracle},
        {8, "variance continuity at alpha=0.45", variance_continuity},
        {9, "variance differentiability at alpha=0.18", variance_differentiability},
        {10, "cone invariance and decomposition suite", cone_invariance_suite},
        {11, "sparse kernel and pullback vs dense oracles", oracle_equivalence},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (argc > 1) {
            bool wanted = false;
            for (int a = 1; a < argc; ++a) {
                if (std::atoi(argv[a]) == c.id) wanted = true;
            }
            if (!wanted) continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = fmt("exception: %s", e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("[%s] criterion %2d: %s  --  %s  [%.1fs]\n",
                    ok ? "PASS" : "FAIL", c.id, c.name, detail.c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
