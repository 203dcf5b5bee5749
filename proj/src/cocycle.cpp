#include "qlsv/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qlsv {

OperatorPtr OperatorCache::get_or_build(const MapParameter& p, const GridPtr& grid,
                                        ExecMode mode) {
    const auto key = static_cast<std::int64_t>(std::llround(p.gamma * 1e12));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(key);
        if (it != map_.end() && it->second->grid->compatible(*grid)) {
            return it->second;
        }
    }
    OperatorPtr op = build_operator(p, grid, mode);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = map_.try_emplace(key, op);
        if (!inserted) {
            if (it->second->grid->compatible(*grid)) return it->second;
            it->second = op;
            return op;
        }
        order_.push_back(key);
        while (order_.size() > max_entries_) {
            map_.erase(order_.front());
            order_.pop_front();
        }
    }
    return op;
}

GridFunction compose_along(const CocycleContext& ctx, const BasePoint& omega,
                           int n, const GridFunction& f, double eps) {
    if (n < 0) throw DomainError("compose_along: n must be >= 0");
    GridFunction out = f;
    for (int k = 0; k < n; ++k) {
        out = apply(*ctx.op_at(ctx.base->advance(omega, k), eps), out, ctx.mode);
    }
    return out;
}

EquivariantDensity equivariant_density(const CocycleContext& ctx,
                                       const BasePoint& omega, int depth,
                                       double eps) {
    if (depth < 1) throw DomainError("equivariant_density: depth must be >= 1");
    const BasePoint start = ctx.base->advance(omega, -depth);

    GridFunction h(ctx.grid, FunctionTag::Density, 1.0);
    // one extra pullback step at the far end; its difference from 1 is
    // pushed through the same orbit and measured at omega
    GridFunction diff =
        apply(*ctx.op_at(ctx.base->advance(start, -1), eps),
              GridFunction(ctx.grid, FunctionTag::Density, 1.0), ctx.mode);
    for (auto& v : diff.values) v -= 1.0;
    diff.tag = FunctionTag::Signed;

    for (int k = 0; k < depth; ++k) {
        const OperatorPtr op = ctx.op_at(ctx.base->advance(start, k), eps);
        h = apply(*op, h, ctx.mode);
        diff = apply(*op, diff, ctx.mode);
    }

    EquivariantDensity out;
    out.anchor = omega;
    out.pullback_depth = depth;
    out.residual = l1_norm(diff);

    const double mass = integrate(h);
    out.mass_drift = std::abs(1.0 - mass);
    if (out.mass_drift > 1e-8) {
        throw NumericError("equivariant_density: mass drift " +
                           std::to_string(out.mass_drift));
    }
    for (auto& v : h.values) v /= mass;
    h.tag = FunctionTag::Density;
    out.min_value = *std::min_element(h.values.begin(), h.values.end());
    out.h = std::move(h);
    return out;
}

GridFunction normalized_apply(const CocycleContext& ctx, const BasePoint& omega,
                              const GridFunction& psi, int n,
                              const GridFunction& h_omega, double eps,
                              double rho) {
    require_same_grid(psi, h_omega);
    GridFunction num(psi.grid, FunctionTag::Signed);
    for (int i = 0; i < psi.size(); ++i) num[i] = psi[i] * h_omega[i];
    GridFunction den = h_omega;
    for (int k = 0; k < n; ++k) {
        const OperatorPtr op = ctx.op_at(ctx.base->advance(omega, k), eps);
        num = apply(*op, num, ctx.mode);
        den = apply(*op, den, ctx.mode);
    }
    GridFunction out(psi.grid, FunctionTag::Signed);
    for (int i = 0; i < psi.size(); ++i) {
        if (!(den[i] >= rho)) {
            throw DegenerateDensityError(
                "normalized_apply: pushed density below rho at cell " +
                std::to_string(i));
        }
        out[i] = num[i] / den[i];
    }
    return out;
}

DecayProfile decay_profile(const CocycleContext& ctx, const BasePoint& omega,
                           const GridFunction& phi_avg, const GridFunction& h,
                           int n_max, double eps) {
    if (n_max < 16) throw DomainError("decay_profile: n_max must be >= 16");
    require_same_grid(phi_avg, h);

    const double mean = cell_dot(phi_avg, h) / integrate(h);
    GridFunction u(phi_avg.grid, FunctionTag::Signed);
    for (int i = 0; i < u.size(); ++i) u[i] = (phi_avg[i] - mean) * h[i];

    DecayProfile prof;
    prof.n.reserve(static_cast<std::size_t>(n_max) + 1);
    prof.norm.reserve(static_cast<std::size_t>(n_max) + 1);
    prof.n.push_back(0);
    prof.norm.push_back(l1_norm(u));
    prof.floor = 10.0 * std::numeric_limits<double>::epsilon() * prof.norm[0];
    for (int n = 1; n <= n_max; ++n) {
        u = apply(*ctx.op_at(ctx.base->advance(omega, n - 1), eps), u, ctx.mode);
        prof.n.push_back(n);
        prof.norm.push_back(l1_norm(u));
    }

    std::vector<double> xs, ys;
    for (int n = std::max(1, n_max / 4); n <= n_max; ++n) {
        if (prof.norm[n] > prof.floor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(prof.norm[n]);
        }
    }
    if (xs.size() >= 2) prof.fit = fit_loglog(xs, ys);
    return prof;
}

DensitySampler::DensitySampler(const GridFunction& density)
    : grid_(density.grid), values_(density.values) {
    const int n = grid_->size();
    prefix_.resize(static_cast<std::size_t>(n) + 1);
    prefix_[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (values_[i] < 0.0) {
            throw DomainError("DensitySampler: negative density cell");
        }
        prefix_[i + 1] = prefix_[i] + values_[i] * grid_->cell_width(i);
    }
    const double total = prefix_[n];
    if (!(total > 0.0)) throw DomainError("DensitySampler: zero mass");
    for (auto& p : prefix_) p /= total;
    for (auto& v : values_) v /= total;
    prefix_[n] = 1.0;
}

double DensitySampler::draw(double u) const {
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), u);
    int i = static_cast<int>(it - prefix_.begin()) - 1;
    i = std::clamp(i, 0, grid_->size() - 1);
    const double v = values_[static_cast<std::size_t>(i)];
    if (v <= 0.0) return grid_->cell_center(i);
    double x = grid_->node(i) + (u - prefix_[i]) / v;
    return std::clamp(x, grid_->node(i), grid_->node(i + 1));
}

EntryTimeTail entry_time_tail(const CocycleContext& ctx, const BasePoint& omega,
                              const GridFunction& nu, int n_max, int trials,
                              std::uint64_t seed) {
    if (trials < 10000) throw DomainError("entry_time_tail: trials must be >= 1e4");
    DensitySampler sampler(nu);

    // per-step map parameters along the orbit
    std::vector<MapParameter> ps;
    ps.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int k = 0; k <= n_max; ++k) {
        ps.push_back(ctx.map_parameter(ctx.base->advance(omega, k), 0.0));
    }

    std::vector<int> tau(static_cast<std::size_t>(trials));
    parallel_for(trials, ctx.mode, [&](int t) {
        RngStream rng(seed, static_cast<std::uint64_t>(t));
        double x = sampler.draw(rng.uniform());
        int n = 0;
        while (n < n_max) {
            x = orbit_step(ps[static_cast<std::size_t>(n)], x, rng);
            ++n;
            if (x >= 0.5) break;
        }
        tau[static_cast<std::size_t>(t)] = n;  // n_max acts as censoring
    });

    EntryTimeTail out;
    out.trials = trials;
    std::vector<int> counts(static_cast<std::size_t>(n_max) + 2, 0);
    for (int t : tau) counts[static_cast<std::size_t>(t)]++;
    out.tail.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    double above = static_cast<double>(trials);
    // tail[n] = P(tau > n)
    for (int n = 0; n <= n_max; ++n) {
        above -= counts[static_cast<std::size_t>(n)];
        out.tail[static_cast<std::size_t>(n)] = above / trials;
    }

    std::vector<double> xs, ys;
    const double min_count = 30.0 / trials;
    for (int n = 2; n < n_max; ++n) {
        if (out.tail[static_cast<std::size_t>(n)] > min_count) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(out.tail[static_cast<std::size_t>(n)]);
        }
    }
    if (xs.size() >= 2) out.fit = fit_loglog(xs, ys);
    return out;
}

}  // namespace qlsv
