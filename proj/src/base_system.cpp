#include "qlsv/base_system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qlsv {

namespace {

double frac(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f = 0.0;
    return f;
}

}  // namespace

bool angle_is_irrational_surrogate(double angle, std::int64_t min_denominator) {
    if (!(angle > 0.0 && angle < 1.0)) return false;
    // continued fraction expansion of the double; if it terminates (to float
    // resolution) with a small denominator, the angle is a low-order rational
    double x = angle;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;  // convergents
    for (int it = 0; it < 64; ++it) {
        const double ai = std::floor(x);
        const auto a = static_cast<std::int64_t>(ai);
        const std::int64_t h2 = a * h1 + h0;
        const std::int64_t k2 = a * k1 + k0;
        if (k2 <= 0) break;  // overflow guard
        if (std::abs(angle - static_cast<double>(h2) / static_cast<double>(k2)) <
            1e-15) {
            return k2 >= min_denominator;
        }
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        const double r = x - ai;
        if (r < 1e-18) return k1 >= min_denominator;
        x = 1.0 / r;
    }
    return true;
}

BaseSystem BaseSystem::rotation(double angle) {
    if (!angle_is_irrational_surrogate(angle)) {
        throw ConfigError("rotation angle fails the irrationality surrogate");
    }
    BaseSystem b;
    b.kind_ = BaseKind::Rotation;
    b.angle_ = angle;
    return b;
}

BaseSystem BaseSystem::iid(FiniteLaw law, std::uint64_t seed) {
    if (law.values.empty() || law.values.size() != law.probs.size()) {
        throw ConfigError("iid law: values/probs size mismatch");
    }
    double total = 0.0;
    for (double p : law.probs) {
        if (!(p >= 0.0)) throw ConfigError("iid law: negative probability");
        total += p;
    }
    if (!(total > 0.0)) throw ConfigError("iid law: zero total mass");
    for (double& p : law.probs) p /= total;
    BaseSystem b;
    b.kind_ = BaseKind::Iid;
    b.law_ = std::move(law);
    b.seed_ = seed;
    b.stationary_ = b.law_.probs;
    b.values_ = b.law_.values;
    return b;
}

BaseSystem BaseSystem::markov(std::vector<std::vector<double>> kernel,
                              std::vector<double> values, std::uint64_t seed) {
    const std::size_t m = kernel.size();
    if (m == 0 || values.size() != m) {
        throw ConfigError("markov: kernel/values size mismatch");
    }
    for (auto& row : kernel) {
        if (row.size() != m) throw ConfigError("markov: kernel not square");
        double s = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw ConfigError("markov: negative entry");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ConfigError("markov: row not stochastic");
        for (double& p : row) p /= s;
    }
    // stationary law by power iteration on the transpose
    std::vector<double> pi(m, 1.0 / static_cast<double>(m)), next(m);
    for (int it = 0; it < 100000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) next[j] += pi[i] * kernel[i][j];
        }
        double diff = 0.0;
        for (std::size_t j = 0; j < m; ++j) diff += std::abs(next[j] - pi[j]);
        pi.swap(next);
        if (diff < 1e-15) break;
    }
    for (double p : pi) {
        if (!(p > 0.0)) {
            throw ConfigError("markov: stationary law not strictly positive "
                              "(chain not ergodic?)");
        }
    }
    BaseSystem b;
    b.kind_ = BaseKind::Markov;
    b.kernel_ = std::move(kernel);
    b.values_ = std::move(values);
    b.stationary_ = pi;
    b.seed_ = seed;
    // time-reversed kernel: Phat(i -> j) = pi_j P(j -> i) / pi_i
    b.reversed_.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            b.reversed_[i][j] = pi[j] * b.kernel_[j][i] / pi[i];
        }
    }
    b.memo_ = std::make_shared<MarkovMemo>();
    return b;
}

BasePoint BaseSystem::advance(const BasePoint& w, std::int64_t k) const {
    BasePoint out = w;
    out.index += k;
    return out;
}

int BaseSystem::draw_from(const std::vector<double>& probs, double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

double BaseSystem::markov_state(std::uint64_t stream, std::int64_t index) const {
    std::lock_guard<std::mutex> lock(memo_->mutex);
    std::shared_ptr<Path> path;
    for (auto& [s, p] : memo_->paths) {
        if (s == stream) { path = p; break; }
    }
    if (!path) {
        path = std::make_shared<Path>();
        path->states.push_back(
            draw_from(stationary_, rng_uniform(seed_, stream, 0)));
        path->offset = 0;
        memo_->paths.emplace_back(stream, path);
    }
    // extend forward with the kernel, backward with the reversed kernel;
    // coordinate c uses RNG counter 2|c| (+1 for negative side)
    while (path->offset + static_cast<std::int64_t>(path->states.size()) <= index) {
        const std::int64_t c =
            path->offset + static_cast<std::int64_t>(path->states.size());
        const double u = rng_uniform(seed_, stream, 2 * static_cast<std::uint64_t>(c));
        path->states.push_back(draw_from(kernel_[path->states.back()], u));
    }
    while (path->offset > index) {
        const std::int64_t c = path->offset - 1;
        const double u =
            rng_uniform(seed_, stream, 2 * static_cast<std::uint64_t>(-c) + 1);
        path->states.push_front(draw_from(reversed_[path->states.front()], u));
        path->offset = c;
    }
    return values_[path->states[static_cast<std::size_t>(index - path->offset)]];
}

double BaseSystem::state(const BasePoint& w) const {
    switch (kind_) {
        case BaseKind::Rotation:
            return frac(w.origin + static_cast<double>(w.index) * angle_);
        case BaseKind::Iid: {
            // coordinate c maps to counter 2|c| / 2|c|+1 to keep the
            // two-sided indices disjoint
            const std::uint64_t counter =
                w.index >= 0 ? 2 * static_cast<std::uint64_t>(w.index)
                             : 2 * static_cast<std::uint64_t>(-w.index) + 1;
            const double u = rng_uniform(seed_, w.stream, counter);
            return law_.values[draw_from(law_.probs, u)];
        }
        case BaseKind::Markov:
            return markov_state(w.stream, w.index);
    }
    throw DomainError("unknown base kind");
}

std::vector<BasePoint> BaseSystem::sample_omegas(int count, std::uint64_t seed,
                                                 int burn_in) const {
    if (count < 1) throw DomainError("sample_omegas: count must be >= 1");
    std::vector<BasePoint> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        BasePoint w;
        if (kind_ == BaseKind::Rotation) {
            w.origin = rng_uniform(seed, 0x5a5a, static_cast<std::uint64_t>(i));
            w.index = 0;
        } else {
            w.stream = mix64(seed) ^ static_cast<std::uint64_t>(i);
            w.index = burn_in;  // stationary start; burn-in only shifts the window
        }
        out.push_back(w);
    }
    return out;
}

double ParamExpr::eval(double t) const {
    switch (kind) {
        case Kind::Const: return a;
        case Kind::Affine: return a + b * t;
        case Kind::Sin: return a + b * std::sin(2.0 * M_PI * t);
        case Kind::Step: {
            if (steps.empty()) throw ConfigError("step expression without values");
            // finite-state drivers feed the state value directly; treat it as
            // an index when it is (close to) a small integer, otherwise bin t
            const double k = static_cast<double>(steps.size());
            long idx;
            if (t >= 0.0 && t < k && std::abs(t - std::round(t)) < 1e-9) {
                idx = std::lround(t);
            } else {
                idx = std::lround(std::floor(frac(t) * k));
            }
            idx = std::clamp(idx, 0L, static_cast<long>(steps.size()) - 1);
            return steps[static_cast<std::size_t>(idx)];
        }
    }
    throw ConfigError("unknown expression kind");
}

ParamExpr ParamExpr::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("parameter expression must look like kind:args, got '" +
                          text + "'");
    }
    const std::string kind = text.substr(0, colon);
    std::vector<double> args;
    {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) args.push_back(std::stod(tok));
        }
    }
    ParamExpr e;
    if (kind == "const") {
        if (args.size() != 1) throw ConfigError("const: expected 1 argument");
        e.kind = Kind::Const;
        e.a = args[0];
    } else if (kind == "affine") {
        if (args.size() != 2) throw ConfigError("affine: expected 2 arguments");
        e.kind = Kind::Affine;
        e.a = args[0];
        e.b = args[1];
    } else if (kind == "sin") {
        if (args.size() != 2) throw ConfigError("sin: expected 2 arguments");
        e.kind = Kind::Sin;
        e.a = args[0];
        e.b = args[1];
    } else if (kind == "step") {
        if (args.empty()) throw ConfigError("step: expected at least 1 value");
        e.kind = Kind::Step;
        e.steps = args;
    } else {
        throw ConfigError("unknown expression kind '" + kind + "'");
    }
    return e;
}

std::string ParamExpr::str() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Const: os << "const:" << a; break;
        case Kind::Affine: os << "affine:" << a << "," << b; break;
        case Kind::Sin: os << "sin:" << a << "," << b; break;
        case Kind::Step:
            os << "step:";
            for (std::size_t i = 0; i < steps.size(); ++i) {
                os << (i ? "," : "") << steps[i];
            }
            break;
    }
    return os.str();
}

double ParameterProcess::parameter_at(const BaseSystem& base, const BasePoint& w,
                                      double eps) const {
    if (std::abs(eps) > eps0 + 1e-15) {
        throw ConfigError("parameter_at: |eps| exceeds eps0");
    }
    const double g = beta(base, w) + eps * delta(base, w);
    if (!(g >= alpha_lower - 1e-12 && g <= alpha_upper + 1e-12)) {
        throw ConfigError("parameter_at: value " + std::to_string(g) +
                          " outside [alpha_lower, alpha_upper]");
    }
    return g;
}

void ParameterProcess::validate(const BaseSystem& base) const {
    if (!(alpha_lower > 0.0) && beta_expr.kind != ParamExpr::Kind::Const) {
        // boundary-mode oracles may use alpha_lower = 0 with constant beta
    }
    if (!(alpha_upper < 1.0) || !(alpha_lower < alpha_upper)) {
        throw ConfigError("parameter process: need 0 <= alpha_lower < alpha_upper < 1");
    }
    if (!(eps0 >= 0.0)) throw ConfigError("parameter process: eps0 must be >= 0");

    constexpr int kSamples = 4096;
    constexpr double kGuard = 1e-3;
    auto check_state = [&](double t) {
        const double b = beta_expr.eval(t);
        const double d = delta_expr.eval(t);
        if (!(d >= 0.0 && d <= 1.0)) {
            throw ConfigError("delta range must lie in [0,1]");
        }
        if (b - eps0 * d < alpha_lower - kGuard ||
            b + eps0 * d > alpha_upper + kGuard) {
            throw ConfigError(
                "beta/eps0 bounds violated at state t=" + std::to_string(t) +
                " (beta=" + std::to_string(b) + ")");
        }
    };
    if (base.kind() == BaseKind::Rotation) {
        for (int i = 0; i < kSamples; ++i) {
            check_state(static_cast<double>(i) / kSamples);
        }
    } else {
        for (double v : base.stationary()) (void)v;
        for (const BasePoint& w : base.sample_omegas(64, 17, 0)) {
            for (int k = 0; k < 64; ++k) check_state(base.state(base.advance(w, k)));
        }
    }
}

}  // namespace qlsv
