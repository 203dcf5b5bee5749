#ifndef QLSV_CONFIG_HPP
#define QLSV_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "qlsv/base_system.hpp"
#include "qlsv/statistics.hpp"

namespace qlsv {

enum class ExperimentKind {
    Density,
    Cones,
    Decay,
    EntryTime,
    Clt,
    Variance,
    Continuity,
    Response,
    DiffVar,
    Special  // variance differentiability with a vanishing observable,
             // under the relaxed alpha < (1+eta)/5 gate
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

/// Declarative experiment description.  Keys (JSON):
///   base.kind, base.angle | base.law | base.kernel,
///   params.beta_expr, params.delta_expr, params.alpha_lower,
///   params.alpha_upper, params.eps0,
///   grid.N, grid.p,
///   observable.f | observable.{u,g,gamma_obs},
///   experiment.kind plus kind-specific knobs
///   (n, trials, n_max, K, j_max, eps, eps_grid, omega_count, depth),
///   rng.seed, cache.dir, out.dir.
struct ExperimentConfig {
    // base
    BaseKind base_kind = BaseKind::Rotation;
    double angle = 0.0;
    FiniteLaw law;
    std::vector<std::vector<double>> kernel;
    std::vector<double> kernel_values;

    // parameter process
    std::string beta_expr = "const:0.25";
    std::string delta_expr = "const:0.0";
    double alpha_lower = 0.05;
    double alpha_upper = 0.45;
    double eps0 = 0.0;
    bool boundary_mode = false;

    // grid
    int grid_n = 4096;
    double grid_p = 3.0;

    // observable
    std::string observable_f;  // constant family when set
    std::string observable_u;  // special family when both u and g set
    std::string observable_g;
    double gamma_obs = 0.0;

    // experiment
    ExperimentKind kind = ExperimentKind::Density;
    int n = 10000;
    int trials = 10000;
    int n_max = 512;
    int K = 512;
    int j_max = 64;
    int depth = 2000;
    int omega_count = 16;
    double eps = 0.0;
    std::vector<double> eps_grid;

    std::uint64_t seed = 1;
    std::string cache_dir;
    std::string out_dir = ".";

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);

    /// Regime gates and structural invariants; throws ConfigError.
    void validate() const;

    bool special_observable() const {
        return !observable_u.empty() && !observable_g.empty();
    }

    BaseSystem make_base() const;
    ParameterProcess make_params() const;
    ObservableProcess make_observable() const;

    /// Canonical serialized form used for the config hash.
    std::string canonical() const;
};

}  // namespace qlsv

#endif
