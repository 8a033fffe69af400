#include "mot/gromov.hpp"

#include <cmath>
#include <string>

#include "mot/core.hpp"

namespace mot {

namespace {

constexpr double kMarginalGate = 1e-6;
constexpr double kSymmetryTol = 1e-9;

void require_symmetric_square(const CostMatrix& c, const char* which) {
    if (c.rows() != c.cols())
        throw Error(ErrorCode::ShapeMismatch, std::string(which) + " must be square");
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = i + 1; j < c.cols(); ++j)
            if (std::abs(c(i, j) - c(j, i)) > kSymmetryTol)
                throw Error(ErrorCode::InvalidInput,
                            std::string(which) + " must be symmetric within 1e-9");
}

Matrix apply_pointwise(const Matrix& m, double (*fn)(double)) {
    Matrix out = m;
    for (double& v : out.data())
        v = fn(v);
    return out;
}

/// Ungated contraction core: constant blocks use the supplied marginal
/// vectors, which callers pick as either the nominal (a, b) or the plan's own
/// row/column sums (exact for any coupling, feasible or not).
Matrix linearize(const CostMatrix& cx, const CostMatrix& cy, const TransportPlan& plan,
                 const Vec& row_marginal, const Vec& col_marginal, GwLoss loss) {
    const std::size_t n = plan.rows();
    const std::size_t m = plan.cols();
    const GwLossDecomposition d = gw_loss_decomposition(loss);
    Vec row_const(n, 0.0), col_const(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            row_const[i] += d.f1(cx(i, k)) * row_marginal[k];
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = 0; l < m; ++l)
            col_const[j] += d.f2(cy(j, l)) * col_marginal[l];

    const Matrix cross =
        matmul(matmul(apply_pointwise(cx.values(), d.h1), plan.values()),
               transpose(apply_pointwise(cy.values(), d.h2)));

    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out(i, j) = row_const[i] + col_const[j] - cross(i, j);
    return out;
}

double support_inner_product(const Matrix& linearized, const TransportPlan& plan) {
    double total = 0.0;
    for (std::size_t i = 0; i < plan.rows(); ++i)
        for (std::size_t j : plan.mask().row_support(i))
            total += linearized(i, j) * plan(i, j);
    return total;
}

} // namespace

GwLossDecomposition gw_loss_decomposition(GwLoss loss) {
    switch (loss) {
    case GwLoss::SquaredLoss:
        return GwLossDecomposition{
            [](double x) { return x * x; },
            [](double y) { return y * y; },
            [](double x) { return 2.0 * x; },
            [](double y) { return y; },
        };
    }
    throw Error(ErrorCode::InvalidInput, "unknown structure loss");
}

double gw_loss(GwLoss loss, double x, double y) {
    const GwLossDecomposition d = gw_loss_decomposition(loss);
    return d.f1(x) + d.f2(y) - d.h1(x) * d.h2(y);
}

CostMatrix pseudo_cost(const CostMatrix& cx, const CostMatrix& cy, const TransportPlan& plan,
                       const ProbVec& a, const ProbVec& b, GwLoss loss) {
    require_symmetric_square(cx, "cx");
    require_symmetric_square(cy, "cy");
    const std::size_t n = plan.rows();
    const std::size_t m = plan.cols();
    if (cx.rows() != n || cy.rows() != m)
        throw Error(ErrorCode::ShapeMismatch, "structure matrices disagree with plan shape");
    if (a.size() != n || b.size() != m)
        throw Error(ErrorCode::ShapeMismatch, "marginal sizes disagree with plan");
    const auto [row_res, col_res] = plan.marginal_residuals(a, b);
    if (std::max(row_res, col_res) > kMarginalGate)
        throw Error(ErrorCode::InfeasiblePlan,
                    "plan marginals are off (a, b) by " + std::to_string(std::max(row_res, col_res)) +
                        "; the linearization assumes a feasible coupling");

    return CostMatrix(linearize(cx, cy, plan, a.values(), b.values(), loss));
}

double quadratic_objective(const CostMatrix& cx, const CostMatrix& cy, const TransportPlan& plan,
                           const ProbVec& a, const ProbVec& b, GwLoss loss) {
    const CostMatrix linearized = pseudo_cost(cx, cy, plan, a, b, loss);
    return support_inner_product(linearized.values(), plan);
}

MgwdSolution solve_mgwd(const CostMatrix& cx, const CostMatrix& cy, const MaskMatrix& mask,
                        const ProbVec& a, const ProbVec& b, const SolverConfig& config,
                        int outer_iterations, GwLoss loss) {
    config.validate();
    if (outer_iterations < 1)
        throw Error(ErrorCode::InvalidInput, "outer_iterations must be >= 1");
    require_symmetric_square(cx, "cx");
    require_symmetric_square(cy, "cy");
    if (cx.rows() != mask.rows() || cy.rows() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "structure matrices disagree with mask shape");
    validate_feasibility_inputs(mask, a, b);

    SolverConfig inner = config;
    inner.tau = std::min(config.tau, 1e-8);
    inner.record_dual_trace = false;

    MwdSolution warm = solve_mwd(CostMatrix::zeros(mask.rows(), mask.cols()), mask, a, b, inner);
    TransportPlan plan = warm.plan;
    SolveReport last_inner = warm.report;

    SolveReport outer_report;
    for (int round = 1; round <= outer_iterations; ++round) {
        // Linearize at the plan's own marginals: inner solves stop on the
        // potential-change rule, so their couplings can sit slightly off
        // (a, b), and the contraction stays exact for what they actually are.
        const CostMatrix linearized(
            linearize(cx, cy, plan, plan.row_sums(), plan.col_sums(), loss));
        MwdSolution sol = solve_mwd(linearized, mask, a, b, inner);
        const double shift = l1_distance(sol.plan.values(), plan.values());
        plan = sol.plan;
        last_inner = sol.report;
        outer_report.iterations = round;
        if (shift < config.tau) {
            outer_report.converged = true;
            break;
        }
    }
    outer_report.marginal_residual_row = last_inner.marginal_residual_row;
    outer_report.marginal_residual_col = last_inner.marginal_residual_col;

    const double value = support_inner_product(
        linearize(cx, cy, plan, plan.row_sums(), plan.col_sums(), loss), plan);
    return MgwdSolution{std::move(plan), value, std::move(outer_report)};
}

} // namespace mot
