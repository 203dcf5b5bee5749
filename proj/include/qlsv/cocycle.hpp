#ifndef QLSV_COCYCLE_HPP
#define QLSV_COCYCLE_HPP

#include <cstdint>
#include <deque>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qlsv/base_system.hpp"
#include "qlsv/fit.hpp"
#include "qlsv/grid.hpp"
#include "qlsv/transfer_operator.hpp"

namespace qlsv {

/// Bounded insert-or-get cache of discretized operators keyed by the map
/// parameter rounded to 12 significant digits.  Parameters recur whenever
/// beta takes finitely many values and across eps grids; rotation orbits
/// mostly miss, which is harmless.  Safe for concurrent use.
class OperatorCache {
public:
    explicit OperatorCache(std::size_t max_entries = 256)
        : max_entries_(max_entries) {}

    OperatorPtr get_or_build(const MapParameter& p, const GridPtr& grid,
                             ExecMode mode);

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return map_.size();
    }

private:
    std::size_t max_entries_;
    mutable std::mutex mutex_;
    std::unordered_map<std::int64_t, OperatorPtr> map_;
    std::deque<std::int64_t> order_;
};

/// Everything needed to walk operators along base orbits: the driver, the
/// parameter process, the grid and the operator cache.
struct CocycleContext {
    const BaseSystem* base = nullptr;
    const ParameterProcess* params = nullptr;
    GridPtr grid;
    mutable OperatorCache cache;
    ExecMode mode = ExecMode::Parallel;
    bool boundary_mode = false;  // allow gamma = 0 (doubling-map oracle)

    CocycleContext(const BaseSystem& b, const ParameterProcess& pp, GridPtr g,
                   std::size_t cache_entries = 256)
        : base(&b), params(&pp), grid(std::move(g)), cache(cache_entries) {}

    MapParameter map_parameter(const BasePoint& w, double eps) const {
        return MapParameter(params->parameter_at(*base, w, eps), boundary_mode);
    }

    /// Operator of the fiber at w (maps densities over w to densities over
    /// sigma w).
    OperatorPtr op_at(const BasePoint& w, double eps) const {
        return cache.get_or_build(map_parameter(w, eps), grid, mode);
    }
};

/// L^n_{omega,eps} f: operators applied along the orbit w, sigma w, ...
GridFunction compose_along(const CocycleContext& ctx, const BasePoint& omega,
                           int n, const GridFunction& f, double eps);

struct EquivariantDensity {
    BasePoint anchor;
    GridFunction h;
    int pullback_depth = 0;
    double residual = 0.0;       // L1 distance to the depth+1 pullback
    double mass_drift = 0.0;     // |1 - mass| before renormalization
    double min_value = 0.0;      // measured lower bound (the rho surrogate)
};

/// Pullback density h_omega = lim L^depth_{sigma^{-depth} omega} 1.  The
/// residual compares against one extra pullback step pushed through the same
/// orbit; convergence is polynomial, so the residual is reported rather than
/// enforced.
EquivariantDensity equivariant_density(const CocycleContext& ctx,
                                       const BasePoint& omega, int depth,
                                       double eps);

/// Normalized (measure-preserving) operator: L^n psi = L^n(psi h) / (L^n h).
/// The denominator is the pushforward of h along the same orbit, so
/// constants are preserved exactly.  Cells where the pushed density falls
/// below rho raise DegenerateDensityError.
GridFunction normalized_apply(const CocycleContext& ctx, const BasePoint& omega,
                              const GridFunction& psi, int n,
                              const GridFunction& h_omega, double eps,
                              double rho = 1e-12);

struct DecayProfile {
    std::vector<int> n;
    std::vector<double> norm;
    LineFit fit;       // log norm vs log n over [n_max/4, n_max]
    double floor = 0.0;
};

/// Norms |L^n(phi_0 h)|_L1 for the centered observable phi_0 = phi - mean,
/// with the fitted log-log slope.
DecayProfile decay_profile(const CocycleContext& ctx, const BasePoint& omega,
                           const GridFunction& phi_avg, const GridFunction& h,
                           int n_max, double eps);

struct EntryTimeTail {
    std::vector<double> tail;  // tail[n] = P(tau > n)
    LineFit fit;
    int trials = 0;
};

/// Monte Carlo tail of the first entry time tau = inf{n >= 1 : orbit in
/// [1/2, 1]} for initial points drawn from nu.
EntryTimeTail entry_time_tail(const CocycleContext& ctx, const BasePoint& omega,
                              const GridFunction& nu, int n_max, int trials,
                              std::uint64_t seed);

/// One Monte Carlo orbit step.  Generic parameters use the map directly.
/// The boundary doubling map (gamma = 0) is a pure mantissa shift in
/// floating point and would collapse every orbit onto the fixed point after
/// ~53 steps; its natural extension appends a fresh uniform bit at the
/// bottom of the mantissa instead, which samples the exact stationary
/// process.
inline double orbit_step(const MapParameter& p, double x, RngStream& rng) {
    if (p.gamma == 0.0) {
        double y = 2.0 * x;
        if (y >= 1.0) y -= 1.0;
        y += static_cast<double>(rng.next_u64() & 1) * 0x1.0p-53;
        return y < 1.0 ? y : y - 0x1.0p-53;
    }
    return map_apply(p, x);
}

/// Inverse-CDF draw from a cell-average density: exact for the
/// representation, O(log N) per draw.
class DensitySampler {
public:
    explicit DensitySampler(const GridFunction& density);
    double draw(double u) const;

private:
    GridPtr grid_;
    std::vector<double> prefix_;
    std::vector<double> values_;
};

}  // namespace qlsv

#endif
