#include "doctest.h"

#include <cmath>

#include "qlsv/response.hpp"

using namespace qlsv;

namespace {

constexpr double kGolden = 0.6180339887498949;

struct QuenchedSetup {
    BaseSystem base = BaseSystem::rotation(kGolden);
    ParameterProcess params;
    GridPtr grid;
    QuenchedSetup(int n_cells, const char* beta, const char* delta, double lo,
                  double hi, double eps0)
        : grid(GradedGrid::make(n_cells, 3.0)) {
        params.beta_expr = ParamExpr::parse(beta);
        params.delta_expr = ParamExpr::parse(delta);
        params.alpha_lower = lo;
        params.alpha_upper = hi;
        params.eps0 = eps0;
    }
};

}  // namespace

TEST_CASE("response series vanishes when delta is zero") {
    QuenchedSetup s(512, "sin:0.2,0.02", "const:0.0", 0.1, 0.3, 0.05);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 3).front();
    const ResponseSeries rs = response_density(ctx, omega, 32, 200);
    CHECK(rs.hhat_l1 == 0.0);
    CHECK(std::abs(integrate(rs.hhat)) == 0.0);
}

TEST_CASE("response series integrates to zero and is linear in delta") {
    QuenchedSetup s(512, "sin:0.2,0.02", "const:0.5", 0.05, 0.3, 0.05);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 3).front();
    const ResponseSeries rs = response_density(ctx, omega, 64, 300);
    CHECK(std::abs(integrate(rs.hhat)) <= 1e-10);
    CHECK(rs.hhat_l1 > 0.0);
    CHECK(rs.converged);

    // doubling delta doubles hhat cellwise
    QuenchedSetup s2(512, "sin:0.2,0.02", "const:1.0", 0.05, 0.3, 0.05);
    CocycleContext ctx2(s2.base, s2.params, s2.grid);
    const ResponseSeries rs2 = response_density(ctx2, omega, 64, 300);
    for (int i = 0; i < rs.hhat.size(); ++i) {
        CHECK(rs2.hhat[i] == doctest::Approx(2.0 * rs.hhat[i]).epsilon(1e-9));
    }
}

TEST_CASE("response series truncation consistency") {
    QuenchedSetup s(512, "sin:0.22,0.03", "const:1.0", 0.05, 0.3, 0.05);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 11).front();
    const ResponseSeries a = response_density(ctx, omega, 48, 300);
    const ResponseSeries b = response_density(ctx, omega, 96, 300);
    CHECK(l1_distance(a.hhat, b.hhat) <= 3.0 * a.tail_estimate + 1e-8);
}

TEST_CASE("autonomous response matches the Richardson oracle") {
    // constant beta = 0.25, delta = 1: hhat equals d/dgamma of the
    // single-map fixed density, which the two-parameter fixed points give by
    // extrapolated finite differences
    const int n_cells = 1024;
    QuenchedSetup s(n_cells, "const:0.25", "const:1.0", 0.1, 0.35, 0.05);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 3).front();
    const ResponseSeries rs = response_density(ctx, omega, 256, 400);

    auto fixed_density = [&](double gamma) {
        const OperatorPtr op = build_operator(MapParameter(gamma), s.grid);
        GridFunction h(s.grid, FunctionTag::Density, 1.0);
        GridFunction prev = h;
        for (int k = 0; k < 100000; ++k) {
            prev = h;
            h = apply(*op, h);
            if ((k & 31) == 0 && l1_distance(h, prev) < 1e-15) break;
        }
        const double mass = integrate(h);
        for (auto& v : h.values) v /= mass;
        return h;
    };
    const GridFunction h0 = fixed_density(0.25);
    auto diff_quotient = [&](double e) {
        const GridFunction he = fixed_density(0.25 + e);
        GridFunction d(s.grid, FunctionTag::Signed);
        for (int i = 0; i < d.size(); ++i) d[i] = (he[i] - h0[i]) / e;
        return d;
    };
    // below the fractional-rate crossover the quotient converges linearly;
    // a first-order Richardson pair from that regime extrapolates it
    const double e1 = 1e-5, e2 = 2.5e-6;
    const GridFunction d1 = diff_quotient(e1);
    const GridFunction d2 = diff_quotient(e2);
    GridFunction richardson(s.grid, FunctionTag::Signed);
    for (int i = 0; i < richardson.size(); ++i) {
        richardson[i] = (4.0 * d2[i] - d1[i]) / 3.0;
    }
    CHECK(l1_distance(rs.hhat, richardson) <= rs.tail_estimate + 1e-3);
}

TEST_CASE("response validation: statistical stability and rate") {
    QuenchedSetup s(1024, "sin:0.18,0.02", "const:1.0", 0.05, 0.3, 0.1);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 5).front();
    const ResponseValidation rv = response_validate(
        ctx, omega, {0.1, 0.0316227766, 0.01, 0.0031622776, -0.1, -0.01}, 128, 300);
    // stability: |h_eps - h| ~ |eps|
    CHECK(rv.stability_fit.slope >= 0.9);
    // response rate after floor subtraction: theory 1 - 2 alpha = 0.4
    if (!rv.inconclusive) {
        CHECK(rv.response_fit.slope >= 0.4 - 0.25);
    }
    // residuals shrink with |eps|
    CHECK(rv.residual.front() > rv.residual[2]);
}

TEST_CASE("fast decay check on a singular mean-zero function") {
    QuenchedSetup s(1024, "sin:0.38,0.02", "const:0.0", 0.3, 0.4, 0.0);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 3).front();
    const double gamma_sing = 0.2;  // alpha/2
    GridFunction psi(s.grid, FunctionTag::Signed);
    for (int i = 0; i < s.grid->size(); ++i) {
        const double lo = s.grid->node(i), hi = s.grid->node(i + 1);
        const double anti = (std::pow(hi, 1.0 - gamma_sing) -
                             std::pow(lo, 1.0 - gamma_sing)) /
                            (1.0 - gamma_sing);
        psi[i] = anti / (hi - lo) - 1.0 / (1.0 - gamma_sing);
    }
    // exact mean zero by construction
    CHECK(std::abs(integrate(psi)) <= 1e-10);
    const FastDecayResult res = fast_decay_check(ctx, omega, psi, gamma_sing, 512);
    CHECK(res.required_slope == doctest::Approx(-1.0 / 0.4 + 0.5 + 0.2));
    CHECK(res.pass);

    // gamma = alpha reduces to the generic exponent
    const FastDecayResult generic =
        fast_decay_check(ctx, omega, psi, 0.4, 128);
    CHECK(generic.required_slope == doctest::Approx(-1.0 / 0.4 + 1.0 + 0.2));

    GridFunction zero(s.grid, FunctionTag::Signed, 0.0);
    const FastDecayResult z = fast_decay_check(ctx, omega, zero, gamma_sing, 64);
    for (double v : z.norm) CHECK(v == 0.0);
}

TEST_CASE("decay profile: centered constants vanish, slope matches theory") {
    QuenchedSetup s(1024, "sin:0.4,0.05", "const:0.0", 0.3, 0.45, 0.0);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 3).front();
    const GridFunction h = equivariant_density(ctx, omega, 600, 0.0).h;

    GridFunction cst(s.grid, FunctionTag::Signed, 4.2);
    const DecayProfile flat = decay_profile(ctx, omega, cst, h, 16, 0.0);
    for (double v : flat.norm) CHECK(v <= 1e-12);

    const GridFunction phi = Observable::cosine().averages(s.grid);
    const DecayProfile prof = decay_profile(ctx, omega, phi, h, 600, 0.0);
    // envelope n^{1 - 1/alpha} with alpha = 0.45
    CHECK(prof.fit.slope <= -(1.0 / 0.45 - 1.0) + 0.15);
}

TEST_CASE("variance derivative refuses the unproved parameter range") {
    QuenchedSetup s(256, "sin:0.3,0.02", "const:1.0", 0.1, 0.4, 0.02);
    CocycleContext ctx(s.base, s.params, s.grid);
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    CHECK_THROWS_AS(variance_derivative(ctx, obs, 16, 64, 64, 2, 3, 100),
                    ConfigError);
}

TEST_CASE("variance derivative: delta == 0 gives zero on both routes") {
    QuenchedSetup s(256, "sin:0.15,0.02", "const:0.0", 0.05, 0.19, 0.02);
    CocycleContext ctx(s.base, s.params, s.grid);
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    const DerivativeReport rep = variance_derivative(ctx, obs, 32, 64, 64, 3, 3, 120);
    CHECK(std::abs(rep.term1) <= 1e-12);
    CHECK(std::abs(rep.term4) <= 1e-12);
    CHECK(std::abs(rep.formula_value) <= 1e-10);
    CHECK(std::abs(rep.fd_value) <= 1e-8);
    CHECK(rep.pass);
}

TEST_CASE("variance derivative: constant observables give zero formula") {
    QuenchedSetup s(256, "sin:0.15,0.02", "const:1.0", 0.03, 0.19, 0.02);
    CocycleContext ctx(s.base, s.params, s.grid);
    const ObservableProcess obs =
        ObservableProcess::constant(Observable::constant(1.5));
    const DerivativeReport rep = variance_derivative(ctx, obs, 32, 64, 64, 2, 3, 120);
    CHECK(std::abs(rep.formula_value) <= 1e-10);
}

TEST_CASE("variance derivative agrees with finite differences at test scale") {
    QuenchedSetup s(512, "sin:0.15,0.01", "const:1.0", 0.05, 0.18, 0.02);
    CocycleContext ctx(s.base, s.params, s.grid);
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    const DerivativeReport rep =
        variance_derivative(ctx, obs, 96, 96, 96, 4, 3, 200);
    CHECK(rep.agreement_gap <= rep.error_budget);
}

TEST_CASE("variance derivative is invariant under F -> F + const") {
    QuenchedSetup s(256, "sin:0.15,0.02", "const:1.0", 0.05, 0.19, 0.02);
    CocycleContext ctx(s.base, s.params, s.grid);
    const ObservableProcess obs = ObservableProcess::constant(Observable::cosine());
    Observable shifted_obs{
        [](double x) { return std::cos(2.0 * M_PI * x) + 5.0; },
        [](double x) { return -2.0 * M_PI * std::sin(2.0 * M_PI * x); },
        [](double x) {
            return -4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * x);
        },
        "cos+5"};
    const ObservableProcess shifted =
        ObservableProcess::constant(std::move(shifted_obs));
    const DerivativeReport a = variance_derivative(ctx, obs, 24, 64, 64, 2, 3, 120);
    const DerivativeReport b =
        variance_derivative(ctx, shifted, 24, 64, 64, 2, 3, 120);
    CHECK(a.term1 == doctest::Approx(b.term1).epsilon(1e-10));
    CHECK(a.term3 == doctest::Approx(b.term3).epsilon(1e-10));
    CHECK(a.term4 == doctest::Approx(b.term4).epsilon(1e-10));
    CHECK(a.formula_value == doctest::Approx(b.formula_value).epsilon(1e-10));
}

TEST_CASE("kernel derivative stays L1 bounded along pushed cone differences") {
    // the inner objects of the double-sum term: L^j(f0 h) stays a difference
    // of cone functions and the kernel derivative applied to it keeps a
    // uniform L1 bound over j
    QuenchedSetup s(1024, "sin:0.25,0.05", "const:1.0", 0.1, 0.3, 0.0);
    CocycleContext ctx(s.base, s.params, s.grid);
    const BasePoint omega = s.base.sample_omegas(1, 9).front();
    const GridFunction h = equivariant_density(ctx, omega, 400, 0.0).h;
    GridFunction favg = Observable::cosine().averages(s.grid);
    const double c = cell_dot(favg, h) / integrate(h);
    for (auto& v : favg.values) v -= c;
    GridFunction u(s.grid, FunctionTag::Signed);
    for (int i = 0; i < u.size(); ++i) u[i] = favg[i] * h[i];
    double c_cal = 0.0;
    for (int j = 0; j < 32; ++j) {
        const BasePoint wj = s.base.advance(omega, j);
        const MapParameter pj = ctx.map_parameter(wj, 0.0);
        c_cal = std::max(c_cal, l1_norm(operator_parameter_derivative(pj, u)));
        u = apply(*ctx.op_at(wj, 0.0), u);
    }
    CHECK(c_cal > 0.0);
    CHECK(c_cal <= 10.0);  // recorded calibration constant for this sweep
}
