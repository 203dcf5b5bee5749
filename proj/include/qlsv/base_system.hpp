#ifndef QLSV_BASE_SYSTEM_HPP
#define QLSV_BASE_SYSTEM_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qlsv/common.hpp"

namespace qlsv {

enum class BaseKind { Rotation, Iid, Markov };

/// Point of the base space.  Advancing only shifts the integer index, so
/// advance(advance(w, j), k) == advance(w, j + k) exactly and the dynamics
/// is invertible on representable states.
struct BasePoint {
    std::int64_t index = 0;
    double origin = 0.0;      // rotation: orbit anchor in [0,1)
    std::uint64_t stream = 0; // iid/markov: which realization
};

struct FiniteLaw {
    std::vector<double> values;
    std::vector<double> probs;  // normalized at load
};

/// The ergodic driver (Omega, sigma, P).  Three kinds ship:
///  - irrational rotation: ergodic, invertible, not mixing;
///  - iid draws from a finite law (two-sided, counter-based RNG);
///  - stationary finite-state Markov chain, extended backward through the
///    time-reversed kernel so that sigma^{-1} is exact.
class BaseSystem {
public:
    static BaseSystem rotation(double angle);
    static BaseSystem iid(FiniteLaw law, std::uint64_t seed);
    static BaseSystem markov(std::vector<std::vector<double>> kernel,
                             std::vector<double> values, std::uint64_t seed);

    BaseKind kind() const { return kind_; }
    double angle() const { return angle_; }
    const std::vector<double>& stationary() const { return stationary_; }

    BasePoint advance(const BasePoint& w, std::int64_t k) const;

    /// Coordinate fed to the parameter expressions: the circle position for
    /// rotations, the current state value for iid/Markov.
    double state(const BasePoint& w) const;

    /// count points distributed per the invariant measure.
    std::vector<BasePoint> sample_omegas(int count, std::uint64_t seed,
                                         int burn_in = 0) const;

private:
    BaseSystem() = default;

    double markov_state(std::uint64_t stream, std::int64_t index) const;
    int draw_from(const std::vector<double>& probs, double u) const;

    BaseKind kind_ = BaseKind::Rotation;
    double angle_ = 0.0;
    FiniteLaw law_;
    std::vector<std::vector<double>> kernel_;
    std::vector<std::vector<double>> reversed_;
    std::vector<double> stationary_;
    std::vector<double> values_;
    std::uint64_t seed_ = 0;

    // memoized two-sided markov paths, one per stream; shared so the system
    // stays copyable (the memo is a cache, not state)
    struct Path {
        std::deque<int> states;     // states[i] is at index i + offset
        std::int64_t offset = 0;
    };
    struct MarkovMemo {
        std::mutex mutex;
        std::vector<std::pair<std::uint64_t, std::shared_ptr<Path>>> paths;
    };
    std::shared_ptr<MarkovMemo> memo_;
};

/// Rejects angles that are (as doubles) rational with denominator below
/// 10^6; such orbits would visibly fail equidistribution at experiment
/// scale.
bool angle_is_irrational_surrogate(double angle, std::int64_t min_denominator = 1000000);

/// Closed-form expression over the base coordinate; grammar:
///   const:c | affine:a,b (a + b*t) | sin:a,b (a + b*sin(2 pi t)) |
///   step:v0,v1,... (value selected by nearest state index for finite-state
///   drivers, by floor(t*k) for rotations)
struct ParamExpr {
    enum class Kind { Const, Affine, Sin, Step } kind = Kind::Const;
    double a = 0.0;
    double b = 0.0;
    std::vector<double> steps;

    double eval(double t) const;
    static ParamExpr parse(const std::string& text);
    std::string str() const;
};

/// Measurable parameter maps beta, delta with the guard bands required by
/// the perturbation theory: alpha_lower <= beta - eps0 and
/// beta + eps0 <= alpha_upper over the whole range.
struct ParameterProcess {
    ParamExpr beta_expr;
    ParamExpr delta_expr;
    double alpha_lower = 0.0;
    double alpha_upper = 0.0;
    double eps0 = 0.0;

    double beta(const BaseSystem& base, const BasePoint& w) const {
        return beta_expr.eval(base.state(w));
    }
    double delta(const BaseSystem& base, const BasePoint& w) const {
        return delta_expr.eval(base.state(w));
    }

    /// beta(w) + eps * delta(w); throws ConfigError when outside
    /// [alpha_lower, alpha_upper].
    double parameter_at(const BaseSystem& base, const BasePoint& w,
                        double eps) const;

    /// Checks the bound invariants on a dense coordinate sample with a 1e-3
    /// guard band; throws ConfigError on violation.
    void validate(const BaseSystem& base) const;
};

}  // namespace qlsv

#endif
