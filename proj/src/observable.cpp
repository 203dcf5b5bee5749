#include "qlsv/observable.hpp"

#include <cmath>

namespace qlsv {

Observable Observable::constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, "const:" + std::to_string(c)};
}

Observable Observable::identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; },
            [](double) { return 0.0; }, "identity"};
}

Observable Observable::affine(double a, double b) {
    return {[a, b](double x) { return a + b * x; }, [b](double) { return b; },
            [](double) { return 0.0; },
            "affine:" + std::to_string(a) + "," + std::to_string(b)};
}

Observable Observable::cosine() {
    constexpr double w = 2.0 * M_PI;
    return {[](double x) { return std::cos(w * x); },
            [](double x) { return -w * std::sin(w * x); },
            [](double x) { return -w * w * std::cos(w * x); }, "cos"};
}

Observable Observable::power(double gamma) {
    if (!(gamma > 0.0)) throw DomainError("power observable: gamma must be > 0");
    return {[gamma](double x) { return x == 0.0 ? 0.0 : std::pow(x, gamma); },
            [gamma](double x) {
                return x == 0.0 ? (gamma >= 1.0 ? (gamma == 1.0 ? 1.0 : 0.0)
                                                : 0.0)  // one-sided, clipped
                                : gamma * std::pow(x, gamma - 1.0);
            },
            [gamma](double x) {
                return x == 0.0 ? 0.0
                               : gamma * (gamma - 1.0) * std::pow(x, gamma - 2.0);
            },
            "power:" + std::to_string(gamma)};
}

Observable Observable::parse(const std::string& text) {
    if (text == "identity") return identity();
    if (text == "cos") return cosine();
    if (text == "zero") return zero();
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("observable spec '" + text + "' not recognized");
    }
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "const") return constant(std::stod(rest));
    if (kind == "power") return power(std::stod(rest));
    if (kind == "affine") {
        const auto comma = rest.find(',');
        if (comma == std::string::npos) throw ConfigError("affine:a,b expected");
        return affine(std::stod(rest.substr(0, comma)),
                      std::stod(rest.substr(comma + 1)));
    }
    throw ConfigError("observable spec '" + text + "' not recognized");
}

CenteredObservable center_observable(const Observable& f, const GridFunction& h) {
    if (h.tag != FunctionTag::Density) {
        throw DomainError("center_observable: h must be a density");
    }
    const GridFunction avg = f.averages(h.grid);
    const double mass = integrate(h);
    return {f, cell_dot(avg, h) / mass};
}

SpecialObservable build_special_observable(const Observable& u, const Observable& g,
                                           double gamma_obs, const GridFunction& h) {
    if (h.tag != FunctionTag::Density) {
        throw DomainError("build_special_observable: h must be a density");
    }
    const GridFunction u_avg = u.averages(h.grid);
    GridFunction gu_avg = sample_cell_averages(
        h.grid, [&](double x) { return g.f(x) * u.f(x); });
    const double u_mass = cell_dot(u_avg, h);
    if (u_mass < 1e-12) {
        throw DegenerateDensityError(
            "build_special_observable: int u dmu below 1e-12");
    }
    SpecialObservable out;
    out.u = u;
    out.g = g;
    out.gamma_obs = gamma_obs;
    out.c = cell_dot(gu_avg, h) / u_mass;
    return out;
}

}  // namespace qlsv
