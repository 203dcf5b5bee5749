#include "qlsv/lsv_map.hpp"

#include <cmath>
#include <string>

namespace qlsv {

MapParameter::MapParameter(double g, bool allow_boundary) : gamma(g) {
    if (!(g >= 0.0) || g >= 1.0 || (g == 0.0 && !allow_boundary)) {
        throw DomainError("map parameter gamma=" + std::to_string(g) +
                          " outside (0,1)" +
                          (allow_boundary ? " [boundary mode]" : ""));
    }
    two_pow_gamma = std::exp2(g);
}

BranchPoint classify_point(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("point outside [0,1]");
    return {x, x < 0.5 ? Branch::Left : Branch::Right};
}

double map_apply_left(const MapParameter& p, double x) {
    if (x == 0.0) return 0.0;
    return x * (1.0 + p.two_pow_gamma * std::pow(x, p.gamma));
}

double map_apply(const MapParameter& p, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("map_apply: x outside [0,1]");
    if (x < 0.5) return map_apply_left(p, x);
    return 2.0 * x - 1.0;
}

double map_derivative_left(const MapParameter& p, double x, int order) {
    if (order == 1) {
        if (x == 0.0) return 1.0;
        return 1.0 + p.two_pow_gamma * (1.0 + p.gamma) * std::pow(x, p.gamma);
    }
    if (order == 2) {
        if (x == 0.0) {
            if (p.gamma == 0.0) return 0.0;
            throw SingularityError(
                "map_derivative: T'' singular at x=0 (gamma-1 < 0)");
        }
        return p.two_pow_gamma * p.gamma * (1.0 + p.gamma) *
               std::pow(x, p.gamma - 1.0);
    }
    throw DomainError("map_derivative: order must be 1 or 2");
}

double map_derivative(const MapParameter& p, double x, int order) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("map_derivative: x outside [0,1]");
    if (order != 1 && order != 2) throw DomainError("map_derivative: order must be 1 or 2");
    if (x >= 0.5) return order == 1 ? 2.0 : 0.0;
    return map_derivative_left(p, x, order);
}

double left_inverse(const MapParameter& p, double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("left_inverse: y outside [0,1]");
    if (y == 0.0) return 0.0;
    if (y == 1.0) return 0.5;
    if (p.gamma == 0.0) return 0.5 * y;

    constexpr double tol = 1e-14;  // contract; iteration polishes further
    constexpr int max_iter = 100;

    // T is increasing and convex on [0, 1/2]: the seed y/2 lies at or below
    // the root, the first Newton step lands at or above it, and subsequent
    // steps descend monotonically.  A bisection bracket catches any
    // float-level excursion.  Iterate to float stagnation so that node
    // preimages are machine-exact relative to the smallest graded cells.
    double lo = 0.0, hi = 0.5;
    double x = 0.5 * y;
    for (int it = 0; it < max_iter; ++it) {
        const double r = map_apply_left(p, x) - y;
        if (r == 0.0) return x;
        if (r > 0.0) hi = x; else lo = x;
        const double step = r / map_derivative_left(p, x, 1);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x) {
            if (std::abs(r) <= tol) return x;
            break;
        }
        x = next;
    }
    if (std::abs(map_apply_left(p, x) - y) <= tol) return x;
    throw NumericError("left_inverse: no convergence (gamma=" +
                       std::to_string(p.gamma) + ", y=" + std::to_string(y) +
                       ", residual=" +
                       std::to_string(map_apply_left(p, x) - y) + ")");
}

double left_inverse_prime_at_preimage(const MapParameter& p, double g) {
    return 1.0 / map_derivative_left(p, g, 1);
}

double left_inverse_prime(const MapParameter& p, double y) {
    return left_inverse_prime_at_preimage(p, left_inverse(p, y));
}

InverseDerivatives inverse_branch_derivatives(const MapParameter& p, double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("inverse_branch_derivatives: y outside [0,1]");
    if (y == 0.0 && p.gamma > 0.0) {
        throw SingularityError(
            "inverse_branch_derivatives: g'' singular at y=0");
    }
    const double g = left_inverse(p, y);
    const double t1 = map_derivative_left(p, g, 1);
    const double t2 = (g == 0.0) ? 0.0 : map_derivative_left(p, g, 2);
    return {1.0 / t1, -t2 / (t1 * t1 * t1)};
}

double parameter_velocity(const MapParameter& p, double x) {
    if (!(x >= 0.0 && x <= 0.5)) {
        throw DomainError("parameter_velocity: x outside (0,1/2]");
    }
    if (x == 0.0) return 0.0;  // x^{1+g} log(2x) -> 0, avoid 0*(-inf)
    return p.two_pow_gamma * std::pow(x, 1.0 + p.gamma) * std::log(2.0 * x);
}

double velocity_at_preimage(const MapParameter& p, double g) {
    if (g == 0.0) return 0.0;
    const double l = std::log(2.0 * g);
    if (l == 0.0) return 0.0;
    return p.two_pow_gamma * std::pow(g, 1.0 + p.gamma) * l;
}

double conjugated_velocity(const MapParameter& p, double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("conjugated_velocity: y outside [0,1]");
    return velocity_at_preimage(p, left_inverse(p, y));
}

}  // namespace qlsv
