#ifndef QLSV_GRID_HPP
#define QLSV_GRID_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "qlsv/common.hpp"

namespace qlsv {

/// Partition of [0,1] with breakpoints x_i = (i/N)^p.  The grading exponent
/// p clusters cells at the origin so that the x^{-alpha} density singularity
/// is resolved; p >= 1/(1-alpha) keeps the cellwise quadrature error of such
/// functions bounded relative to the cell mass.
class GradedGrid {
public:
    static std::shared_ptr<const GradedGrid> make(int n_cells, double grading);

    int size() const { return n_cells_; }
    double grading() const { return grading_; }
    const std::vector<double>& nodes() const { return nodes_; }
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    double cell_width(int i) const { return nodes_[i + 1] - nodes_[i]; }
    double cell_center(int i) const { return 0.5 * (nodes_[i] + nodes_[i + 1]); }

    /// Index of the cell containing x (cells are [x_i, x_{i+1}), the last
    /// one closed).
    int locate(double x) const;

    bool compatible(const GradedGrid& other) const {
        return n_cells_ == other.n_cells_ && grading_ == other.grading_;
    }

private:
    GradedGrid(int n_cells, double grading);
    int n_cells_;
    double grading_;
    std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const GradedGrid>;

enum class FunctionTag : std::uint8_t { Density = 0, Signed = 1 };

/// Real function on a graded grid in cell-average (Ulam-compatible)
/// representation: one value per cell, understood as the mean of the
/// function over that cell.
struct GridFunction {
    GridPtr grid;
    std::vector<double> values;
    FunctionTag tag = FunctionTag::Signed;

    GridFunction() = default;
    GridFunction(GridPtr g, FunctionTag t, double fill = 0.0)
        : grid(std::move(g)),
          values(static_cast<std::size_t>(grid->size()), fill),
          tag(t) {}

    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    int size() const { return grid->size(); }

    /// Piecewise-constant point evaluation.
    double at(double x) const { return values[static_cast<std::size_t>(grid->locate(x))]; }
};

void require_same_grid(const GridFunction& f, const GridFunction& g);

/// Integral against Lebesgue measure; exact for the cell-average
/// representation.
double integrate(const GridFunction& f);

double l1_norm(const GridFunction& f);
double l1_distance(const GridFunction& f, const GridFunction& g);
double linf_norm(const GridFunction& f);

/// Cellwise slopes from neighboring cell centers (second-order one-sided
/// stencils at the ends).  Requires N >= 3.
GridFunction differentiate(const GridFunction& f);

/// Cell averages of a pointwise function via 5-point Gauss-Legendre per
/// cell.
GridFunction sample_cell_averages(const GridPtr& grid,
                                  const std::function<double(double)>& f,
                                  FunctionTag tag = FunctionTag::Signed);

/// Sum f_i * g_i * |cell_i|  ==  integral of the cellwise product.
double cell_dot(const GridFunction& f, const GridFunction& g);

struct CNorms {
    double c0;
    double c1;
    double c2;
    int sample_count;
};

/// sup-norm estimates of F, F', F'' on a dense sample (4N points plus the
/// endpoints); the C^k value is the max over orders 0..k.
CNorms observable_norms(const std::function<double(double)>& f,
                        const std::function<double(double)>& df,
                        const std::function<double(double)>& d2f,
                        int n_samples);

}  // namespace qlsv

#endif
