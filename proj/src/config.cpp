#include "qlsv/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qlsv {

using nlohmann::json;

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "density") return ExperimentKind::Density;
    if (s == "cones") return ExperimentKind::Cones;
    if (s == "decay") return ExperimentKind::Decay;
    if (s == "entrytime") return ExperimentKind::EntryTime;
    if (s == "clt") return ExperimentKind::Clt;
    if (s == "variance") return ExperimentKind::Variance;
    if (s == "continuity") return ExperimentKind::Continuity;
    if (s == "response") return ExperimentKind::Response;
    if (s == "diffvar") return ExperimentKind::DiffVar;
    if (s == "special") return ExperimentKind::Special;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Density: return "density";
        case ExperimentKind::Cones: return "cones";
        case ExperimentKind::Decay: return "decay";
        case ExperimentKind::EntryTime: return "entrytime";
        case ExperimentKind::Clt: return "clt";
        case ExperimentKind::Variance: return "variance";
        case ExperimentKind::Continuity: return "continuity";
        case ExperimentKind::Response: return "response";
        case ExperimentKind::DiffVar: return "diffvar";
        case ExperimentKind::Special: return "special";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    ExperimentConfig c;
    try {
        const auto& base = j.at("base");
        const std::string kind = base.at("kind").get<std::string>();
        if (kind == "rotation") {
            c.base_kind = BaseKind::Rotation;
            c.angle = base.at("angle").get<double>();
        } else if (kind == "iid") {
            c.base_kind = BaseKind::Iid;
            for (const auto& row : base.at("law")) {
                c.law.values.push_back(row.at(0).get<double>());
                c.law.probs.push_back(row.at(1).get<double>());
            }
        } else if (kind == "markov") {
            c.base_kind = BaseKind::Markov;
            c.kernel = base.at("kernel").get<std::vector<std::vector<double>>>();
            c.kernel_values = base.at("values").get<std::vector<double>>();
        } else {
            throw ConfigError("base.kind must be rotation|iid|markov");
        }

        const auto& params = j.at("params");
        c.beta_expr = params.at("beta_expr").get<std::string>();
        c.delta_expr = params.at("delta_expr").get<std::string>();
        c.alpha_lower = params.at("alpha_lower").get<double>();
        c.alpha_upper = params.at("alpha_upper").get<double>();
        c.eps0 = params.value("eps0", 0.0);
        c.boundary_mode = params.value("boundary_mode", false);

        if (j.contains("grid")) {
            c.grid_n = j["grid"].value("N", c.grid_n);
            c.grid_p = j["grid"].value("p", c.grid_p);
        }

        if (j.contains("observable")) {
            const auto& obs = j["observable"];
            c.observable_f = obs.value("f", "");
            c.observable_u = obs.value("u", "");
            c.observable_g = obs.value("g", "");
            c.gamma_obs = obs.value("gamma_obs", 0.0);
        }

        const auto& exp = j.at("experiment");
        c.kind = experiment_kind_from_string(exp.at("kind").get<std::string>());
        c.n = exp.value("n", c.n);
        c.trials = exp.value("trials", c.trials);
        c.n_max = exp.value("n_max", c.n_max);
        c.K = exp.value("K", c.K);
        c.j_max = exp.value("j_max", c.j_max);
        c.depth = exp.value("depth", c.depth);
        c.omega_count = exp.value("omega_count", c.omega_count);
        c.eps = exp.value("eps", 0.0);
        if (exp.contains("eps_grid")) {
            c.eps_grid = exp["eps_grid"].get<std::vector<double>>();
        }

        if (j.contains("rng")) c.seed = j["rng"].value("seed", c.seed);
        if (j.contains("cache")) c.cache_dir = j["cache"].value("dir", "");
        if (j.contains("out")) c.out_dir = j["out"].value("dir", ".");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void ExperimentConfig::validate() const {
    if (grid_n < 8) throw ConfigError("grid.N must be >= 8");
    if (!(grid_p >= 1.0)) throw ConfigError("grid.p must be >= 1");
    const double alpha = alpha_upper;
    if (!boundary_mode) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ConfigError("alpha_upper must lie in (0,1)");
        }
        if (grid_p < 1.0 / (1.0 - alpha)) {
            throw ConfigError("grid.p must be >= 1/(1-alpha_upper) to resolve "
                              "the density singularity");
        }
    }

    const bool special = special_observable();
    if (special && !(gamma_obs > 0.0)) {
        throw ConfigError("special observable requires gamma_obs > 0");
    }

    switch (kind) {
        case ExperimentKind::Clt:
        case ExperimentKind::Variance:
        case ExperimentKind::Continuity:
            if (!(alpha < 0.5) && !(special && gamma_obs > 2.0 * alpha - 1.0)) {
                throw ConfigError(
                    "correlations are summable only for alpha < 1/2 or a "
                    "vanishing observable with gamma_obs > 2 alpha - 1");
            }
            break;
        case ExperimentKind::Response:
            if (!(alpha < 0.5)) {
                throw ConfigError("response experiments require alpha < 1/2");
            }
            break;
        case ExperimentKind::DiffVar: {
            const double eta = special ? std::min(gamma_obs, alpha) : 0.0;
            if (!(alpha < (1.0 + eta) / 5.0)) {
                throw ConfigError("diffvar requires alpha < 1/5 (or the "
                                  "vanishing-observable relaxation)");
            }
            break;
        }
        case ExperimentKind::Special: {
            if (!special) {
                throw ConfigError("kind=special needs observable.u/g/gamma_obs");
            }
            const double eta = std::min(gamma_obs, alpha);
            if (!(alpha < (1.0 + eta) / 5.0)) {
                throw ConfigError("kind=special requires alpha < (1+eta)/5");
            }
            break;
        }
        default:
            break;
    }

    // constructing these validates expressions and bounds
    const BaseSystem base = make_base();
    make_params().validate(base);
}

BaseSystem ExperimentConfig::make_base() const {
    switch (base_kind) {
        case BaseKind::Rotation: return BaseSystem::rotation(angle);
        case BaseKind::Iid: return BaseSystem::iid(law, seed);
        case BaseKind::Markov:
            return BaseSystem::markov(kernel, kernel_values, seed);
    }
    throw ConfigError("unknown base kind");
}

ParameterProcess ExperimentConfig::make_params() const {
    ParameterProcess p;
    p.beta_expr = ParamExpr::parse(beta_expr);
    p.delta_expr = ParamExpr::parse(delta_expr);
    p.alpha_lower = alpha_lower;
    p.alpha_upper = alpha_upper;
    p.eps0 = eps0;
    return p;
}

ObservableProcess ExperimentConfig::make_observable() const {
    if (special_observable()) {
        return ObservableProcess::special(Observable::parse(observable_u),
                                          Observable::parse(observable_g),
                                          gamma_obs);
    }
    if (observable_f.empty()) {
        throw ConfigError("experiment needs observable.f (or u/g/gamma_obs)");
    }
    return ObservableProcess::constant(Observable::parse(observable_f));
}

std::string ExperimentConfig::canonical() const {
    json j;
    j["base"]["kind"] = base_kind == BaseKind::Rotation
                            ? "rotation"
                            : (base_kind == BaseKind::Iid ? "iid" : "markov");
    if (base_kind == BaseKind::Rotation) j["base"]["angle"] = angle;
    if (base_kind == BaseKind::Iid) {
        for (std::size_t i = 0; i < law.values.size(); ++i) {
            j["base"]["law"].push_back({law.values[i], law.probs[i]});
        }
    }
    if (base_kind == BaseKind::Markov) {
        j["base"]["kernel"] = kernel;
        j["base"]["values"] = kernel_values;
    }
    j["params"] = {{"beta_expr", beta_expr},   {"delta_expr", delta_expr},
                   {"alpha_lower", alpha_lower}, {"alpha_upper", alpha_upper},
                   {"eps0", eps0},             {"boundary_mode", boundary_mode}};
    j["grid"] = {{"N", grid_n}, {"p", grid_p}};
    j["observable"] = {{"f", observable_f},
                       {"u", observable_u},
                       {"g", observable_g},
                       {"gamma_obs", gamma_obs}};
    j["experiment"] = {{"kind", to_string(kind)},
                       {"n", n},
                       {"trials", trials},
                       {"n_max", n_max},
                       {"K", K},
                       {"j_max", j_max},
                       {"depth", depth},
                       {"omega_count", omega_count},
                       {"eps", eps},
                       {"eps_grid", eps_grid}};
    j["rng"] = {{"seed", seed}};
    return j.dump();
}

}  // namespace qlsv
