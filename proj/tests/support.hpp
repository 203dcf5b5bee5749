#ifndef QLSV_TESTS_SUPPORT_HPP
#define QLSV_TESTS_SUPPORT_HPP

#include <cmath>
#include <vector>

#include "qlsv/grid.hpp"
#include "qlsv/lsv_map.hpp"

namespace qlsv::testsupport {

// Preimage of y under one monotone branch of the map, by bisection on
// map_apply alone.  Deliberately independent of left_inverse (Newton): this
// is the oracle side of the dual-route check.
inline double bisect_preimage(const MapParameter& p, double y, double lo,
                              double hi) {
    auto value = [&](double x) {
        return x < 0.5 ? map_apply_left(p, x) : 2.0 * x - 1.0;
    };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (value(mid) < y) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Dense Ulam kernel computed by brute-force preimage bisection per branch
// segment: dense[j][i] = m(cell_i n T^{-1} cell_j) / |cell_j|.
inline std::vector<std::vector<double>> dense_kernel_bisect(const MapParameter& p,
                                                            const GradedGrid& grid) {
    const int n = grid.size();
    std::vector<std::vector<double>> dense(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));

    auto scan_segment = [&](double a, double b, bool left_branch, int source) {
        if (!(b > a)) return;
        auto value = [&](double x) {
            return left_branch ? map_apply_left(p, x) : 2.0 * x - 1.0;
        };
        const double ya = value(a), yb = value(b);
        int j = grid.locate(std::min(ya, 1.0));
        double prev = a;
        while (true) {
            const double y_hi = grid.node(j + 1);
            double x_hi;
            if (yb <= y_hi) {
                x_hi = b;
            } else {
                x_hi = bisect_preimage(p, y_hi, prev, b);
            }
            dense[static_cast<std::size_t>(j)][static_cast<std::size_t>(source)] +=
                (x_hi - prev) / grid.cell_width(j);
            if (yb <= y_hi || j + 1 >= n) break;
            prev = x_hi;
            ++j;
        }
    };

    for (int i = 0; i < n; ++i) {
        const double a = grid.node(i), b = grid.node(i + 1);
        if (a < 0.5) scan_segment(a, std::min(b, 0.5), true, i);
        if (b > 0.5) scan_segment(std::max(a, 0.5), b, false, i);
    }
    return dense;
}

// Fixed density of a dense kernel by power iteration, mass-normalized.
inline std::vector<double> dense_power_fixed_density(
    const std::vector<std::vector<double>>& dense, const GradedGrid& grid,
    int max_iters = 400000, double tol = 3e-15) {
    const int n = grid.size();
    std::vector<double> v(static_cast<std::size_t>(n), 1.0), next(v);
    for (int it = 0; it < max_iters; ++it) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += dense[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] *
                     v[static_cast<std::size_t>(i)];
            }
            next[static_cast<std::size_t>(j)] = s;
        }
        double mass = 0.0;
        for (int j = 0; j < n; ++j) mass += next[static_cast<std::size_t>(j)] * grid.cell_width(j);
        for (auto& x : next) x /= mass;
        double diff = 0.0;
        for (int j = 0; j < n; ++j) {
            diff += std::abs(next[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(j)]) *
                    grid.cell_width(j);
        }
        v.swap(next);
        if (diff < tol) break;
    }
    return v;
}

// 2D Kronecker (quasi-random) sequence from a pair of algebraic irrationals.
inline std::pair<double, double> kronecker2(int k) {
    constexpr double a1 = 0.7548776662466927;  // 1/plastic constant
    constexpr double a2 = 0.5698402909980532;  // its square
    auto frac = [](double x) { return x - std::floor(x); };
    return {frac(0.5 + (k + 1) * a1), frac(0.5 + (k + 1) * a2)};
}

}  // namespace qlsv::testsupport

#endif
