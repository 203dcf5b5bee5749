#include "qlsv/cones.hpp"

#include <algorithm>
#include <cmath>

namespace qlsv {

const char* cone_condition_name(ConeCondition c) {
    switch (c) {
        case ConeCondition::Nonneg: return "nonneg";
        case ConeCondition::Decreasing: return "decreasing";
        case ConeCondition::WeightedIncreasing: return "x^{alpha+1} f increasing";
        case ConeCondition::IntegralBound: return "integral bound a x^{1-alpha}";
        case ConeCondition::DerivFirst: return "C2 first derivative b1";
        case ConeCondition::DerivSecond: return "C2 second derivative b2";
    }
    return "?";
}

double ConeReport::margin(ConeCondition c) const {
    for (const auto& v : worst) {
        if (v.condition == c) return v.margin;
    }
    return 0.0;
}

namespace {

struct MarginTracker {
    double margin = 1.0;
    double location = 0.0;
    void update(double m, double x) {
        if (m < margin) { margin = m; location = x; }
    }
};

}  // namespace

ConeReport cone_check(const GridFunction& f, const ConeParams& cp,
                      ConeWhich which, double slack) {
    const auto& grid = *f.grid;
    const int n = grid.size();
    if (n < 3) throw DomainError("cone_check: grid too small");
    const double scale = std::max(linf_norm(f), 1e-300);

    ConeReport report;
    report.slack = slack;

    const bool star = which != ConeWhich::C2;
    const bool c2 = which != ConeWhich::Star;

    if (star) {
        MarginTracker nonneg, dec, winc, ibound;
        for (int i = 0; i < n; ++i) {
            nonneg.update(f[i] / scale, grid.cell_center(i));
        }
        for (int i = 0; i + 1 < n; ++i) {
            const double loc = std::max(std::abs(f[i]), std::abs(f[i + 1]));
            dec.update((f[i] - f[i + 1]) / std::max(loc, 1e-300),
                       grid.node(i + 1));
        }
        for (int i = 0; i + 1 < n; ++i) {
            const double u0 = std::pow(grid.cell_center(i), cp.alpha + 1.0) * f[i];
            const double u1 =
                std::pow(grid.cell_center(i + 1), cp.alpha + 1.0) * f[i + 1];
            const double loc = std::max(std::abs(u0), std::abs(u1));
            winc.update((u1 - u0) / std::max(loc, 1e-300), grid.node(i + 1));
        }
        {
            const double total = integrate(f);
            double prefix = 0.0;
            for (int i = 0; i < n; ++i) {
                prefix += f[i] * grid.cell_width(i);
                const double x = grid.node(i + 1);
                const double cap = cp.a * std::pow(x, 1.0 - cp.alpha) * total;
                ibound.update((cap - prefix) / std::max(std::abs(cap), 1e-300), x);
            }
        }
        report.worst.push_back({ConeCondition::Nonneg, nonneg.location, nonneg.margin});
        report.worst.push_back({ConeCondition::Decreasing, dec.location, dec.margin});
        report.worst.push_back(
            {ConeCondition::WeightedIncreasing, winc.location, winc.margin});
        report.worst.push_back(
            {ConeCondition::IntegralBound, ibound.location, ibound.margin});
    }

    if (c2) {
        MarginTracker nonneg, d1, d2;
        for (int i = 0; i < n; ++i) nonneg.update(f[i] / scale, grid.cell_center(i));
        const GridFunction df = differentiate(f);
        const GridFunction d2f = differentiate(df);
        // first cell exempt: the representation cannot resolve derivatives
        // at the singular point
        for (int i = 1; i < n; ++i) {
            const double x = grid.cell_center(i);
            const double cap1 = cp.b1 / x * f[i];
            d1.update((cap1 - std::abs(df[i])) / std::max(std::abs(cap1), 1e-300), x);
            const double cap2 = cp.b2 / (x * x) * f[i];
            d2.update((cap2 - std::abs(d2f[i])) / std::max(std::abs(cap2), 1e-300), x);
        }
        if (!star) {
            report.worst.push_back(
                {ConeCondition::Nonneg, nonneg.location, nonneg.margin});
        }
        report.worst.push_back({ConeCondition::DerivFirst, d1.location, d1.margin});
        report.worst.push_back({ConeCondition::DerivSecond, d2.location, d2.margin});
    }

    report.member = true;
    for (const auto& w : report.worst) {
        if (w.margin < -slack) {
            report.member = false;
            report.violations.push_back(w);
        }
    }
    return report;
}

ConeDecomposition cone_decompose(const GridFunction& phi_avg,
                                 const CNorms& phi_norms, const GridFunction& h,
                                 const ConeParams& cp) {
    require_same_grid(phi_avg, h);
    const auto& grid = *phi_avg.grid;
    const double n1 = phi_norms.c1;
    const double lambda = -2.0 * n1;
    const double shift_a = 3.0 * n1;
    const double shift_b =
        std::max({cp.a / (cp.alpha + 1.0) * n1, 4.0 * cp.a / (cp.a - 1.0) * n1,
                  3.0 * cp.a / cp.b1 * n1,
                  cp.a / cp.b2 * phi_norms.c2 + 6.0 * cp.a * cp.b1 / cp.b2 * n1});

    ConeDecomposition out{GridFunction(phi_avg.grid, FunctionTag::Signed),
                          GridFunction(phi_avg.grid, FunctionTag::Signed),
                          lambda, shift_a, shift_b, 0.0};
    for (int i = 0; i < grid.size(); ++i) {
        const double x = grid.cell_center(i);
        const double base = (lambda * x + shift_a) * h[i] + shift_b;
        out.psi2[i] = base;
        out.psi1[i] = base + phi_avg[i] * h[i];
    }
    const double c2 = std::max(phi_norms.c2, 1e-300);
    out.d_ratio = std::max(l1_norm(out.psi1), l1_norm(out.psi2)) / c2;
    return out;
}

}  // namespace qlsv
