#include "qlsv/transfer_operator.hpp"

#include <algorithm>
#include <cmath>

namespace qlsv {

namespace {

// Entries of one target row: overlap masses of a preimage segment
// [lo, hi] with the source cells, divided by the target cell width.
// Successive rows share segment endpoints, so the per-source-cell masses
// telescope exactly to the cell widths (mass conservation).
void emit_segment(const GradedGrid& grid, double lo, double hi,
                  double inv_target_width, std::vector<int>& cols,
                  std::vector<double>& weights) {
    if (!(hi > lo)) return;
    int i = grid.locate(lo);
    while (true) {
        const double cell_hi = grid.node(i + 1);
        const double a = std::max(lo, grid.node(i));
        const double b = std::min(hi, cell_hi);
        if (b > a) {
            cols.push_back(i);
            weights.push_back((b - a) * inv_target_width);
        }
        if (hi <= cell_hi || i + 1 >= grid.size()) break;
        ++i;
    }
}

}  // namespace

OperatorPtr build_operator(const MapParameter& p, const GridPtr& grid,
                           ExecMode mode) {
    const int n = grid->size();
    auto op = std::make_shared<TransferOperatorDisc>();
    op->gamma = p.gamma;
    op->grid = grid;

    // left-branch preimages of all nodes; monotone by construction
    auto& G = op->node_preimage;
    G.resize(static_cast<std::size_t>(n) + 1);
    {
        const auto& nodes = grid->nodes();
        std::vector<double>& g = G;
        parallel_for(n + 1, mode, [&](int j) { g[j] = left_inverse(p, nodes[j]); });
        for (int j = 0; j < n; ++j) g[j + 1] = std::max(g[j + 1], g[j]);
    }

    // per-row assembly, then CSR concatenation
    std::vector<std::vector<int>> row_cols(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> row_w(static_cast<std::size_t>(n));
    parallel_for(n, mode, [&](int j) {
        const double inv_w = 1.0 / grid->cell_width(j);
        auto& cols = row_cols[j];
        auto& ws = row_w[j];
        emit_segment(*grid, G[j], G[j + 1], inv_w, cols, ws);
        emit_segment(*grid, 0.5 * (grid->node(j) + 1.0),
                     0.5 * (grid->node(j + 1) + 1.0), inv_w, cols, ws);
    });

    op->row_ptr.resize(static_cast<std::size_t>(n) + 1);
    op->row_ptr[0] = 0;
    for (int j = 0; j < n; ++j) {
        op->row_ptr[j + 1] = op->row_ptr[j] + static_cast<int>(row_cols[j].size());
    }
    op->col.resize(static_cast<std::size_t>(op->row_ptr[n]));
    op->weight.resize(static_cast<std::size_t>(op->row_ptr[n]));
    for (int j = 0; j < n; ++j) {
        std::copy(row_cols[j].begin(), row_cols[j].end(),
                  op->col.begin() + op->row_ptr[j]);
        std::copy(row_w[j].begin(), row_w[j].end(),
                  op->weight.begin() + op->row_ptr[j]);
    }
    return op;
}

void apply_into(const TransferOperatorDisc& op, const std::vector<double>& in,
                std::vector<double>& out, ExecMode mode) {
    const int n = op.grid->size();
    if (static_cast<int>(in.size()) != n) {
        throw GridMismatchError("apply: size mismatch");
    }
    out.resize(static_cast<std::size_t>(n));
    const int* rp = op.row_ptr.data();
    const int* col = op.col.data();
    const double* w = op.weight.data();
    const double* x = in.data();
    double* y = out.data();
    parallel_for(n, mode, [&](int j) {
        double s = 0.0;
        for (int k = rp[j]; k < rp[j + 1]; ++k) s += w[k] * x[col[k]];
        y[j] = s;
    });
}

GridFunction apply(const TransferOperatorDisc& op, const GridFunction& f,
                   ExecMode mode) {
    if (!f.grid->compatible(*op.grid)) {
        throw GridMismatchError("apply: function grid does not match operator grid");
    }
    GridFunction out(op.grid, f.tag);
    apply_into(op, f.values, out.values, mode);
    return out;
}

GridFunction operator_parameter_derivative(const MapParameter& p,
                                           const GridFunction& f) {
    const auto& grid = *f.grid;
    const int n = grid.size();
    GridFunction out(f.grid, FunctionTag::Signed);

    // W(y) = X(y) g'(y) f(g(y)) at the nodes; W(0) = W(1) = 0 since X
    // vanishes at both endpoints.
    std::vector<double> w_node(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 1; j < n; ++j) {
        const double g = left_inverse(p, grid.node(j));
        const double x_val = velocity_at_preimage(p, g);
        if (x_val == 0.0) continue;
        const double gp = left_inverse_prime_at_preimage(p, g);
        w_node[j] = x_val * gp * f[grid.locate(g)];
    }
    for (int j = 0; j < n; ++j) {
        out[j] = (w_node[j] - w_node[j + 1]) / grid.cell_width(j);
    }
    return out;
}

GridFunction operator_parameter_derivative_chainrule(const MapParameter& p,
                                                     const GridFunction& f) {
    const auto& grid = *f.grid;
    const int n = grid.size();
    const GridFunction df = differentiate(f);
    GridFunction out(f.grid, FunctionTag::Signed);
    for (int j = 0; j < n; ++j) {
        const double y = grid.cell_center(j);
        const double g = left_inverse(p, y);
        const auto [g1, g2] = inverse_branch_derivatives(p, y);
        const double x_val = velocity_at_preimage(p, g);
        // X'(y) = v'(g) g'
        const double vp = p.two_pow_gamma * std::pow(g, p.gamma) *
                          ((1.0 + p.gamma) * std::log(2.0 * g) + 1.0);
        const double xp = vp * g1;
        const int src = grid.locate(g);
        out[j] = -(xp * g1 * f[src] + x_val * (g2 * f[src] + g1 * g1 * df[src]));
    }
    return out;
}

namespace {

// Node-difference derivative kernel with piecewise-linear reconstruction of
// f.  The piecewise-constant variant is the exact derivative of the discrete
// kernel but is a step function of gamma (source-cell crossings), so its
// gamma-differences do not converge; the linear reconstruction smooths the
// crossings and is used for the second-derivative diagnostic only.
GridFunction derivative_kernel_linear(const MapParameter& p,
                                      const GridFunction& f) {
    const auto& grid = *f.grid;
    const int n = grid.size();
    auto interp = [&](double x) {
        const int i = grid.locate(x);
        const double c = grid.cell_center(i);
        if (x < c) {
            if (i == 0) return f[0];
            const double cl = grid.cell_center(i - 1);
            const double t = (x - cl) / (c - cl);
            return f[i - 1] + t * (f[i] - f[i - 1]);
        }
        if (i + 1 >= n) return f[n - 1];
        const double cr = grid.cell_center(i + 1);
        const double t = (x - c) / (cr - c);
        return f[i] + t * (f[i + 1] - f[i]);
    };
    GridFunction out(f.grid, FunctionTag::Signed);
    std::vector<double> w_node(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 1; j < n; ++j) {
        const double g = left_inverse(p, grid.node(j));
        const double x_val = velocity_at_preimage(p, g);
        if (x_val == 0.0) continue;
        w_node[j] = x_val * left_inverse_prime_at_preimage(p, g) * interp(g);
    }
    for (int j = 0; j < n; ++j) {
        out[j] = (w_node[j] - w_node[j + 1]) / grid.cell_width(j);
    }
    return out;
}

}  // namespace

GridFunction operator_parameter_second_derivative(const MapParameter& p,
                                                  const GridFunction& f,
                                                  double step) {
    if (!(step > 0.0)) throw DomainError("second derivative: step must be positive");
    if (step < 1e-7) {
        throw NumericError("second derivative: step too small, cancellation");
    }
    const MapParameter lo(p.gamma - step), hi(p.gamma + step);
    const GridFunction a = derivative_kernel_linear(lo, f);
    const GridFunction b = derivative_kernel_linear(hi, f);
    GridFunction out(f.grid, FunctionTag::Signed);
    for (int i = 0; i < f.size(); ++i) out[i] = (b[i] - a[i]) / (2.0 * step);
    return out;
}

}  // namespace qlsv
