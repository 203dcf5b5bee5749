#include "qlsv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qlsv {

GradedGrid::GradedGrid(int n_cells, double grading)
    : n_cells_(n_cells), grading_(grading) {
    nodes_.resize(static_cast<std::size_t>(n_cells) + 1);
    for (int i = 0; i <= n_cells; ++i) {
        nodes_[i] = std::pow(static_cast<double>(i) / n_cells, grading);
    }
    nodes_.front() = 0.0;
    nodes_.back() = 1.0;
}

std::shared_ptr<const GradedGrid> GradedGrid::make(int n_cells, double grading) {
    if (n_cells < 2) throw DomainError("grid: need at least 2 cells");
    if (!(grading >= 1.0)) throw DomainError("grid: grading exponent must be >= 1");
    return std::shared_ptr<const GradedGrid>(new GradedGrid(n_cells, grading));
}

int GradedGrid::locate(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("locate: x outside [0,1]");
    // invert x = (i/N)^p directly, then fix float boundary cases
    double t = std::pow(x, 1.0 / grading_) * n_cells_;
    int i = std::clamp(static_cast<int>(t), 0, n_cells_ - 1);
    while (i > 0 && x < nodes_[i]) --i;
    while (i + 1 < n_cells_ && x >= nodes_[i + 1]) ++i;
    return i;
}

void require_same_grid(const GridFunction& f, const GridFunction& g) {
    if (!f.grid || !g.grid || !f.grid->compatible(*g.grid)) {
        throw GridMismatchError("grid functions live on different grids");
    }
}

double integrate(const GridFunction& f) {
    const auto& grid = *f.grid;
    std::vector<double> terms(f.values.size());
    for (int i = 0; i < grid.size(); ++i) terms[i] = f[i] * grid.cell_width(i);
    return pairwise_sum(terms);
}

double l1_norm(const GridFunction& f) {
    const auto& grid = *f.grid;
    std::vector<double> terms(f.values.size());
    for (int i = 0; i < grid.size(); ++i) {
        terms[i] = std::abs(f[i]) * grid.cell_width(i);
    }
    return pairwise_sum(terms);
}

double l1_distance(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f, g);
    const auto& grid = *f.grid;
    std::vector<double> terms(f.values.size());
    for (int i = 0; i < grid.size(); ++i) {
        terms[i] = std::abs(f[i] - g[i]) * grid.cell_width(i);
    }
    return pairwise_sum(terms);
}

double linf_norm(const GridFunction& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

GridFunction differentiate(const GridFunction& f) {
    const auto& grid = *f.grid;
    const int n = grid.size();
    if (n < 3) throw DomainError("differentiate: need at least 3 cells");
    GridFunction d(f.grid, FunctionTag::Signed);

    auto center = [&](int i) { return grid.cell_center(i); };
    for (int i = 1; i + 1 < n; ++i) {
        // central slope on nonuniform centers
        const double xl = center(i - 1), xc = center(i), xr = center(i + 1);
        const double hl = xc - xl, hr = xr - xc;
        d[i] = (f[i + 1] * hl * hl - f[i - 1] * hr * hr +
                f[i] * (hr * hr - hl * hl)) /
               (hl * hr * (hl + hr));
    }
    // one-sided second-order stencils at the ends
    auto one_sided = [&](int i0, int i1, int i2, double x) {
        const double x0 = center(i0), x1 = center(i1), x2 = center(i2);
        const double d0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        const double d1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        const double d2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        return f[i0] * d0 + f[i1] * d1 + f[i2] * d2;
    };
    d[0] = one_sided(0, 1, 2, center(0));
    d[n - 1] = one_sided(n - 3, n - 2, n - 1, center(n - 1));
    return d;
}

namespace {
// 5-point Gauss-Legendre on [-1,1]
constexpr double kGlNode[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
constexpr double kGlWeight[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
}  // namespace

GridFunction sample_cell_averages(const GridPtr& grid,
                                  const std::function<double(double)>& f,
                                  FunctionTag tag) {
    GridFunction out(grid, tag);
    for (int i = 0; i < grid->size(); ++i) {
        const double a = grid->node(i), b = grid->node(i + 1);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (int q = 0; q < 5; ++q) s += kGlWeight[q] * f(mid + half * kGlNode[q]);
        out[i] = 0.5 * s;
    }
    return out;
}

double cell_dot(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f, g);
    const auto& grid = *f.grid;
    std::vector<double> terms(f.values.size());
    for (int i = 0; i < grid.size(); ++i) {
        terms[i] = f[i] * g[i] * grid.cell_width(i);
    }
    return pairwise_sum(terms);
}

CNorms observable_norms(const std::function<double(double)>& f,
                        const std::function<double(double)>& df,
                        const std::function<double(double)>& d2f,
                        int n_samples) {
    if (n_samples < 2) throw DomainError("observable_norms: need >= 2 samples");
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int i = 0; i <= n_samples; ++i) {
        const double x = static_cast<double>(i) / n_samples;
        const double v0 = std::abs(f(x));
        const double v1 = std::abs(df(x));
        const double v2 = std::abs(d2f(x));
        if (!std::isfinite(v0) || !std::isfinite(v1) || !std::isfinite(v2)) {
            throw NumericError("observable_norms: non-finite sample at x=" +
                               std::to_string(x));
        }
        s0 = std::max(s0, v0);
        s1 = std::max(s1, v1);
        s2 = std::max(s2, v2);
    }
    // C^k = max of sup-norms of derivative orders 0..k
    return {s0, std::max(s0, s1), std::max({s0, s1, s2}), n_samples + 1};
}

}  // namespace qlsv
