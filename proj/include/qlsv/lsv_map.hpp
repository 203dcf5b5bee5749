#ifndef QLSV_LSV_MAP_HPP
#define QLSV_LSV_MAP_HPP

#include "qlsv/common.hpp"

namespace qlsv {

/// Exponent of one interval map from the intermittent family
///   T(x) = x (1 + 2^g x^g)  on [0, 1/2),   T(x) = 2x - 1  on [1/2, 1].
/// gamma = 0 (the doubling map) is accepted only in explicit boundary mode;
/// it serves as an exactly solvable oracle for tests.
struct MapParameter {
    double gamma;
    double two_pow_gamma;  // cached 2^gamma

    explicit MapParameter(double g, bool allow_boundary = false);
};

enum class Branch { Left, Right };

// x = 1/2 belongs to the right branch.
struct BranchPoint {
    double x;
    Branch branch;
};

BranchPoint classify_point(double x);

/// T(x).  Throws DomainError outside [0,1].
double map_apply(const MapParameter& p, double x);

/// Left-branch formula evaluated on [0, 1/2] including the endpoint, where
/// it attains the limit value T(1/2-) = 1.  Used by continuity tests and the
/// inverse solve.
double map_apply_left(const MapParameter& p, double x);

/// T'(x) or T''(x).  order must be 1 or 2.  The second derivative at x = 0
/// on the left branch diverges like x^{gamma-1}; that request throws
/// SingularityError.
double map_derivative(const MapParameter& p, double x, int order);

// Left-branch derivatives without branch classification (valid on [0, 1/2]).
double map_derivative_left(const MapParameter& p, double x, int order);

/// g(y): inverse of the left branch, strictly increasing [0,1] -> [0,1/2].
/// Safeguarded Newton seeded at y/2 with a bisection bracket; terminates
/// with |T(g(y)) - y| <= 1e-14.
double left_inverse(const MapParameter& p, double y);

struct InverseDerivatives {
    double g1;  // g'(y)  = 1/T'(g(y))
    double g2;  // g''(y) = -T''(g(y)) / T'(g(y))^3
};

/// Both derivatives of the inverse branch at y in (0, 1].  y = 0 is a
/// singular request for g'' (throws SingularityError); g' alone is available
/// through left_inverse_prime.
InverseDerivatives inverse_branch_derivatives(const MapParameter& p, double y);

/// g'(y), defined on all of [0,1] with g'(0) = 1.
double left_inverse_prime(const MapParameter& p, double y);

/// v(x) = d/dgamma T(x) = 2^g x^{1+g} log(2x), left branch only (x in (0,1/2]).
/// v -> 0 as x -> 0; the x = 0 value is short-circuited to 0.
double parameter_velocity(const MapParameter& p, double x);

/// X(y) = v(g(y)) on [0,1]; vanishes at both endpoints.
double conjugated_velocity(const MapParameter& p, double y);

// Internal fast paths taking a precomputed preimage g = left_inverse(p, y);
// operator assembly evaluates these at every grid node and must not redo the
// root solve.
double velocity_at_preimage(const MapParameter& p, double g);
double left_inverse_prime_at_preimage(const MapParameter& p, double g);

}  // namespace qlsv

#endif
