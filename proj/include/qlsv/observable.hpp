#ifndef QLSV_OBSERVABLE_HPP
#define QLSV_OBSERVABLE_HPP

#include <functional>
#include <string>

#include "qlsv/grid.hpp"

namespace qlsv {

/// C^2 function handle on [0,1] with analytic derivatives.
struct Observable {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    std::string name;

    double operator()(double x) const { return f(x); }

    static Observable constant(double c);
    static Observable identity();
    static Observable affine(double a, double b);     // a + b x
    static Observable cosine();                       // cos(2 pi x)
    static Observable power(double gamma);            // x^gamma
    static Observable zero() { return constant(0.0); }

    /// Parse "const:c", "identity", "cos", "affine:a,b", "power:g".
    static Observable parse(const std::string& text);

    CNorms norms(int n_samples = 16384) const {
        return observable_norms(f, df, d2f, n_samples);
    }

    GridFunction averages(const GridPtr& grid) const {
        return sample_cell_averages(grid, f);
    }
};

/// F_omega - integral of F_omega against the density: the fiberwise centered
/// observable.  Returned as the centering constant plus a check of the grid
/// mean.
struct CenteredObservable {
    Observable base;
    double centering = 0.0;  // subtracted constant

    double operator()(double x) const { return base.f(x) - centering; }
};

CenteredObservable center_observable(const Observable& f, const GridFunction& h);

/// Special vanishing-at-zero observable phi = u (g - c) with
/// c = int g u dmu / int u dmu; by construction int phi dmu = 0 and
/// |phi(x)| <= 2 K |g|_inf x^{gamma} whenever u <= K x^{gamma}.
struct SpecialObservable {
    Observable u;
    Observable g;
    double gamma_obs = 0.0;
    double c = 0.0;  // fiber constant

    double operator()(double x) const { return u.f(x) * (g.f(x) - c); }
};

SpecialObservable build_special_observable(const Observable& u, const Observable& g,
                                           double gamma_obs, const GridFunction& h);

}  // namespace qlsv

#endif
