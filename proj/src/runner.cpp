#include "qlsv/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "qlsv/cones.hpp"
#include "qlsv/response.hpp"

namespace qlsv {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kVersionString = "quenched-lsv 0.1.0";

GridFunction cache_lookup_or_compute(const fs::path& cache_dir,
                                     const std::string& key,
                                     const std::function<GridFunction()>& producer,
                                     bool* hit) {
    if (hit) *hit = false;
    if (cache_dir.empty()) return producer();
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    const fs::path path = cache_dir / (key + ".gfn");
    if (fs::exists(path)) {
        try {
            GridFunction f = read_grid_function(path);
            if (hit) *hit = true;
            return f;
        } catch (const NumericError&) {
            // corrupted entry: fall through and overwrite
        }
    }
    GridFunction f = producer();
    try {
        write_grid_function(path, f);
    } catch (const NumericError&) {
        // unwritable cache: proceed uncached
    }
    return f;
}

namespace {

struct OutputSet {
    fs::path dir;
    std::vector<std::pair<std::string, std::uint64_t>> files;

    void write(const std::string& name, const std::string& bytes) {
        atomic_write(dir / name, bytes);
        files.emplace_back(name, fnv1a64(bytes));
    }
};

std::string csv_row(std::initializer_list<double> vals) {
    std::string row;
    bool first = true;
    for (double v : vals) {
        if (!first) row += ",";
        row += format_double(v);
        first = false;
    }
    row += "\n";
    return row;
}

json fit_to_json(const LineFit& f) {
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"slope_stderr", f.slope_stderr},
            {"points", f.n}};
}

// Default anchor: the first sampled omega.
BasePoint anchor_of(const BaseSystem& base, std::uint64_t seed) {
    return base.sample_omegas(1, seed).front();
}

std::string density_cache_key(const ExperimentConfig& c, double eps) {
    std::ostringstream os;
    os << std::hex
       << fnv1a64(c.canonical() + "|density|" + format_double(eps) + "|" +
                  std::to_string(c.depth));
    return os.str();
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    RunResult result;
    const auto t0 = std::chrono::steady_clock::now();

    try {
        config.validate();
    } catch (const ConfigError& e) {
        result.exit_code = 2;
        result.verdict = std::string("config error: ") + e.what();
        return result;
    }

    OutputSet out;
    out.dir = config.out_dir;
    std::error_code ec;
    fs::create_directories(out.dir, ec);

    json report;
    report["kind"] = to_string(config.kind);
    result.verdict = "n/a";

    try {
        const BaseSystem base = config.make_base();
        const ParameterProcess params = config.make_params();
        CocycleContext ctx(base, params, GradedGrid::make(config.grid_n, config.grid_p));
        ctx.boundary_mode = config.boundary_mode;
        const BasePoint omega = anchor_of(base, config.seed);

        switch (config.kind) {
            case ExperimentKind::Density: {
                bool hit = false;
                EquivariantDensity ed;
                ed.h = cache_lookup_or_compute(
                    config.cache_dir, density_cache_key(config, config.eps),
                    [&] {
                        ed = equivariant_density(ctx, omega, config.depth,
                                                 config.eps);
                        return ed.h;
                    },
                    &hit);
                if (hit) {
                    // served from cache: per-run pullback diagnostics absent
                    ed.anchor = omega;
                    ed.pullback_depth = config.depth;
                    ed.residual = -1.0;
                    ed.min_value = *std::min_element(ed.h.values.begin(),
                                                     ed.h.values.end());
                }
                out.write("density.gfn", encode_grid_function(ed.h));
                std::string csv = "cell_center,value\n";
                for (int i = 0; i < ed.h.size(); ++i) {
                    csv += csv_row({ctx.grid->cell_center(i), ed.h[i]});
                }
                out.write("density.csv", csv);
                report["residual"] = ed.residual;
                report["min_value"] = ed.min_value;
                report["cache_hit"] = hit;
                result.verdict = "pass";
                break;
            }
            case ExperimentKind::Cones: {
                const EquivariantDensity ed =
                    equivariant_density(ctx, omega, config.depth, config.eps);
                ConeParams cp;
                cp.alpha = params.alpha_upper;
                const ConeReport cr = cone_check(ed.h, cp, ConeWhich::Both);
                json worst = json::array();
                for (const auto& w : cr.worst) {
                    worst.push_back({{"condition", cone_condition_name(w.condition)},
                                     {"location", w.location},
                                     {"margin", w.margin}});
                }
                report["member"] = cr.member;
                report["conditions"] = worst;
                report["residual"] = ed.residual;
                result.verdict = cr.member ? "pass" : "fail";
                break;
            }
            case ExperimentKind::Decay: {
                const EquivariantDensity ed =
                    equivariant_density(ctx, omega, config.depth, config.eps);
                const ObservableProcess obs = config.make_observable();
                const GridFunction phi = obs.family == ObservableProcess::Family::Constant
                                             ? obs.F.averages(ctx.grid)
                                             : sample_cell_averages(ctx.grid, [&](double x) {
                                                   return obs.u.f(x) * obs.g.f(x);
                                               });
                const DecayProfile prof = decay_profile(ctx, omega, phi, ed.h,
                                                        config.n_max, config.eps);
                std::string csv = "n,norm\n";
                for (std::size_t i = 0; i < prof.n.size(); ++i) {
                    csv += csv_row({static_cast<double>(prof.n[i]), prof.norm[i]});
                }
                out.write("decay_profile.csv", csv);
                report["fit"] = fit_to_json(prof.fit);
                const double expected = 1.0 - 1.0 / params.alpha_upper;
                report["expected_slope"] = expected;
                result.verdict = prof.fit.slope <= expected + 0.15 ? "pass"
                                                                   : "inconclusive";
                break;
            }
            case ExperimentKind::EntryTime: {
                GridFunction nu(ctx.grid, FunctionTag::Density, 1.0);
                const EntryTimeTail tail = entry_time_tail(
                    ctx, omega, nu, config.n_max, config.trials, config.seed);
                std::string csv = "n,tail\n";
                for (std::size_t i = 0; i < tail.tail.size(); ++i) {
                    csv += csv_row({static_cast<double>(i), tail.tail[i]});
                }
                out.write("entry_tail.csv", csv);
                report["fit"] = fit_to_json(tail.fit);
                report["expected_upper"] = -1.0 / params.alpha_upper;
                result.verdict =
                    tail.fit.slope <= -1.0 / params.alpha_upper + 0.3
                        ? "pass"
                        : "inconclusive";
                break;
            }
            case ExperimentKind::Clt: {
                const ObservableProcess obs = config.make_observable();
                const VarianceEstimate ve = green_kubo_variance(
                    ctx, obs, config.eps, config.n_max, config.omega_count,
                    config.seed, config.depth);
                const CltReport clt =
                    birkhoff_clt(ctx, obs, omega, config.n, config.trials,
                                 config.eps, config.seed, ve, config.depth);
                std::string csv = "trial,sum\n";
                for (std::size_t i = 0; i < clt.sums.size(); ++i) {
                    csv += csv_row({static_cast<double>(i), clt.sums[i]});
                }
                out.write("clt_samples.csv", csv);
                report["sigma2_hat"] = clt.sigma2_hat;
                report["ks_stat"] = clt.ks_stat;
                report["ks_critical"] = clt.ks_critical;
                report["degenerate"] = clt.degenerate;
                report["mean_normalized"] = clt.mean_normalized;
                result.verdict = clt.pass
                                     ? (clt.degenerate ? "pass(unit-mass)" : "pass")
                                     : "fail";
                break;
            }
            case ExperimentKind::Variance: {
                const ObservableProcess obs = config.make_observable();
                const VarianceEstimate ve = green_kubo_variance(
                    ctx, obs, config.eps, config.n_max, config.omega_count,
                    config.seed, config.depth);
                std::string csv = "eps,sigma2,tail_bound,mc_stderr\n";
                csv += csv_row({ve.eps, ve.sigma2, ve.tail_bound, ve.mc_stderr});
                out.write("variance_curve.csv", csv);
                report["sigma2"] = ve.sigma2;
                report["term0"] = ve.term0;
                report["tail_bound"] = ve.tail_bound;
                report["mc_stderr"] = ve.mc_stderr;
                report["residual_max"] = ve.residual_max;
                result.verdict = "pass";
                break;
            }
            case ExperimentKind::Continuity: {
                const ObservableProcess obs = config.make_observable();
                const ContinuityReport cr = variance_continuity_experiment(
                    ctx, obs, config.eps_grid, config.n_max, config.omega_count,
                    config.seed, config.depth);
                std::string csv = "eps,sigma2,tail_bound,mc_stderr\n";
                csv += csv_row({0.0, cr.sigma2_zero, cr.budget, 0.0});
                for (const auto& pt : cr.curve) {
                    csv += csv_row({pt.eps, pt.sigma2, pt.tail_bound, pt.mc_stderr});
                }
                out.write("variance_curve.csv", csv);
                report["sigma2_zero"] = cr.sigma2_zero;
                report["max_abs_delta"] = cr.max_abs_delta;
                report["monotone_up_to_err"] = cr.monotone_up_to_err;
                report["modulus_fit"] = fit_to_json(cr.modulus_fit);
                result.verdict = cr.monotone_up_to_err ? "pass" : "inconclusive";
                break;
            }
            case ExperimentKind::Response: {
                const ResponseValidation rv = response_validate(
                    ctx, omega, config.eps_grid, config.K, config.depth);
                std::string csv = "eps,residual\n";
                for (std::size_t i = 0; i < rv.eps.size(); ++i) {
                    csv += csv_row({rv.eps[i], rv.residual[i]});
                }
                out.write("response_curve.csv", csv);
                std::string scsv = "eps,l1_distance\n";
                for (std::size_t i = 0; i < rv.eps.size(); ++i) {
                    scsv += csv_row({rv.eps[i], rv.stability[i]});
                }
                out.write("stability_curve.csv", scsv);
                report["response_fit"] = fit_to_json(rv.response_fit);
                report["stability_fit"] = fit_to_json(rv.stability_fit);
                report["truncation_floor"] = rv.truncation_floor;
                report["hhat_l1"] = rv.series.hhat_l1;
                report["tail_estimate"] = rv.series.tail_estimate;
                const double needed = 1.0 - 2.0 * params.alpha_upper - 0.25;
                report["required_slope"] = needed;
                if (rv.inconclusive) {
                    result.verdict = "inconclusive";
                } else {
                    result.verdict = rv.response_fit.slope >= needed ? "pass" : "fail";
                }
                break;
            }
            case ExperimentKind::DiffVar:
            case ExperimentKind::Special: {
                const ObservableProcess obs = config.make_observable();
                const DerivativeReport dr = variance_derivative(
                    ctx, obs, config.K, config.n_max, config.j_max,
                    config.omega_count, config.seed, config.depth);
                json dj = {{"term1", dr.term1},
                           {"term2", dr.term2},
                           {"term3", dr.term3},
                           {"term4", dr.term4},
                           {"formula_value", dr.formula_value},
                           {"fd_value", dr.fd_value},
                           {"fd_eps", dr.fd_eps},
                           {"agreement_gap", dr.agreement_gap},
                           {"error_budget", dr.error_budget},
                           {"tail3", dr.tail3},
                           {"tail4", dr.tail4},
                           {"khat_tail", dr.khat_tail},
                           {"mc_stderr", dr.mc_stderr},
                           {"fd_model_error", dr.fd_model_error},
                           {"verdict", dr.pass ? "pass" : "inconclusive"}};
                out.write("derivative_report.json", dj.dump(2) + "\n");
                report["derivative"] = dj;
                result.verdict = dr.pass ? "pass" : "inconclusive";
                break;
            }
        }
    } catch (const ConfigError& e) {
        result.exit_code = 2;
        result.verdict = std::string("config error: ") + e.what();
        return result;
    } catch (const std::exception& e) {
        result.exit_code = 1;
        result.verdict = std::string("numeric failure: ") + e.what();
        report["error"] = e.what();
        out.write("report.json", report.dump(2) + "\n");
        return result;
    }

    report["verdict"] = result.verdict;
    out.write("report.json", report.dump(2) + "\n");

    const auto t1 = std::chrono::steady_clock::now();
    json manifest;
    {
        std::ostringstream hash;
        hash << std::hex << fnv1a64(config.canonical());
        manifest["config_hash"] = hash.str();
    }
    manifest["version"] = kVersionString;
    manifest["seed"] = config.seed;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(t1 - t0).count();
    manifest["verdict"] = result.verdict;
    json files = json::object();
    for (const auto& [name, sum] : out.files) {
        std::ostringstream os;
        os << std::hex << sum;
        files[name] = os.str();
    }
    manifest["outputs"] = files;
    atomic_write(out.dir / "manifest.json", manifest.dump(2) + "\n");
    result.manifest_path = out.dir / "manifest.json";
    return result;
}

}  // namespace qlsv
