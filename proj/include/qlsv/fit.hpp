#ifndef QLSV_FIT_HPP
#define QLSV_FIT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "qlsv/common.hpp"

namespace qlsv {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    int n = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DomainError("fit_line: need >= 2 matched points");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.n = static_cast<int>(x.size());
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
    }
    f.slope_stderr = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    return f;
}

/// Least-squares slope of log(y) against log(x); points with y below the
/// floor are dropped.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                          double y_floor = 0.0) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > y_floor) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return fit_line(lx, ly);
}

}  // namespace qlsv

#endif
