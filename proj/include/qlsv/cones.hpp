#ifndef QLSV_CONES_HPP
#define QLSV_CONES_HPP

#include <string>
#include <vector>

#include "qlsv/grid.hpp"

namespace qlsv {

/// Cone parameters: C*(a) with the singularity exponent alpha, and
/// C2(b1, b2) for the pointwise derivative bounds.
struct ConeParams {
    double a = 2.0;
    double alpha = 0.5;
    double b1 = 4.0;
    double b2 = 40.0;
};

enum class ConeCondition {
    Nonneg,            // f >= 0
    Decreasing,        // f decreasing
    WeightedIncreasing,// x^{alpha+1} f increasing
    IntegralBound,     // int_0^x f <= a x^{1-alpha} int_0^1 f
    DerivFirst,        // |f'| <= (b1/x) f
    DerivSecond        // |f''| <= (b2/x^2) f
};

const char* cone_condition_name(ConeCondition c);

enum class ConeWhich { Star, C2, Both };

struct ConeViolation {
    ConeCondition condition;
    double location;  // worst x
    double margin;    // relative margin; negative means violated
};

struct ConeReport {
    bool member = false;
    double slack = 0.0;
    // worst margin per checked condition, violation entries for those below
    // -slack
    std::vector<ConeViolation> worst;
    std::vector<ConeViolation> violations;

    double margin(ConeCondition c) const;
};

/// Checks cone membership on the grid: monotonicity conditions on
/// consecutive cell averages, the integral condition at every node,
/// derivative conditions via grid differentiation away from the first cell
/// (the singular point is exempt by convention).  Margins are relative to
/// the local scale of the tested quantity.
ConeReport cone_check(const GridFunction& f, const ConeParams& cp,
                      ConeWhich which = ConeWhich::Star, double slack = 1e-6);

/// Explicit decomposition phi h = psi1 - psi2 with both parts in C* n C2:
///   psi1 = (phi + lambda x + A) h + B,   psi2 = (lambda x + A) h + B,
///   lambda = -2 |phi|_C1, A = 3 |phi|_C1,
///   B = max{ a/(alpha+1), 4a/(a-1), 3a/b1 } |phi|_C1
///       and B >= (a/b2) |phi''|_inf + (6 a b1 / b2) |phi|_C1.
struct ConeDecomposition {
    GridFunction psi1;
    GridFunction psi2;
    double lambda;
    double shift_a;
    double shift_b;
    double d_ratio;  // max |psi_i|_L1 / |phi|_C2
};

ConeDecomposition cone_decompose(const GridFunction& phi_avg, const CNorms& phi_norms,
                                 const GridFunction& h, const ConeParams& cp);

}  // namespace qlsv

#endif
