// Timing comparison of the OpenMP kernels against their serial reference
// implementations: operator assembly, sparse apply along a composition, and
// the Monte Carlo orbit ensemble.

#include <chrono>
#include <cstdio>

#include "qlsv/cocycle.hpp"
#include "qlsv/statistics.hpp"

using namespace qlsv;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return seconds_since(t0);
}

}  // namespace

int main() {
    const int n_cells = 4096;
    const auto grid = GradedGrid::make(n_cells, 3.0);

    std::printf("threads available: %d\n", thread_budget());

    // operator assembly
    double t_build_serial = 0.0, t_build_par = 0.0;
    {
        const int reps = 40;
        t_build_serial = timed([&] {
            for (int r = 0; r < reps; ++r) {
                build_operator(MapParameter(0.2 + 1e-4 * r), grid, ExecMode::Serial);
            }
        });
        t_build_par = timed([&] {
            for (int r = 0; r < reps; ++r) {
                build_operator(MapParameter(0.3 + 1e-4 * r), grid, ExecMode::Parallel);
            }
        });
        std::printf("operator build x%d     serial %.3fs  parallel %.3fs  speedup %.2f\n",
                    reps, t_build_serial, t_build_par,
                    t_build_serial / t_build_par);
    }

    // sparse apply chain
    {
        const OperatorPtr op = build_operator(MapParameter(0.25), grid);
        GridFunction f(grid, FunctionTag::Density, 1.0);
        const int reps = 4000;
        std::vector<double> buf;
        double ts = timed([&] {
            std::vector<double> cur = f.values;
            for (int r = 0; r < reps; ++r) {
                apply_into(*op, cur, buf, ExecMode::Serial);
                cur.swap(buf);
            }
        });
        double tp = timed([&] {
            std::vector<double> cur = f.values;
            for (int r = 0; r < reps; ++r) {
                apply_into(*op, cur, buf, ExecMode::Parallel);
                cur.swap(buf);
            }
        });
        std::printf("sparse apply x%d    serial %.3fs  parallel %.3fs  speedup %.2f\n",
                    reps, ts, tp, ts / tp);
    }

    // orbit ensemble
    {
        const BaseSystem base = BaseSystem::rotation(0.6180339887498949);
        ParameterProcess params;
        params.beta_expr = ParamExpr::parse("sin:0.25,0.05");
        params.delta_expr = ParamExpr::parse("const:0.0");
        params.alpha_lower = 0.05;
        params.alpha_upper = 0.35;
        params.eps0 = 0.0;
        CocycleContext ctx(base, params, grid);
        const BasePoint omega = base.sample_omegas(1, 7).front();
        GridFunction nu(grid, FunctionTag::Density, 1.0);
        double ts, tp;
        ctx.mode = ExecMode::Serial;
        ts = timed([&] { entry_time_tail(ctx, omega, nu, 2000, 200000, 11); });
        ctx.mode = ExecMode::Parallel;
        tp = timed([&] { entry_time_tail(ctx, omega, nu, 2000, 200000, 11); });
        std::printf("orbit ensemble        serial %.3fs  parallel %.3fs  speedup %.2f\n",
                    ts, tp, ts / tp);
    }
    return 0;
}
