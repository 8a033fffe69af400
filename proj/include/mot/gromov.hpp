#pragma once

#include "mot/sinkhorn.hpp"
#include "mot/types.hpp"

namespace mot {

/// Pointwise losses L(x, y) that split as f1(x) + f2(y) - h1(x) h2(y), which
/// is what lets the quartic coupling objective collapse to matrix products.
enum class GwLoss {
    SquaredLoss, // (x - y)^2 = x^2 + y^2 - (2x)(y)
};

struct GwLossDecomposition {
    double (*f1)(double);
    double (*f2)(double);
    double (*h1)(double);
    double (*h2)(double);
};

GwLossDecomposition gw_loss_decomposition(GwLoss loss);

/// L(x, y) evaluated through the decomposition to keep one code path.
double gw_loss(GwLoss loss, double x, double y);

/// Linearization of the quadratic structure objective at coupling Q:
/// C^_ij = sum_k f1(cx_ik) a_k + sum_l f2(cy_jl) b_l - [h1(cx) Q h2(cy)'].
/// Q must respect (a, b) within 1e-6 L1 residual (InfeasiblePlan otherwise),
/// since the constant block substitutes the marginals for Q's own sums.
CostMatrix pseudo_cost(const CostMatrix& cx, const CostMatrix& cy, const TransportPlan& plan,
                       const ProbVec& a, const ProbVec& b, GwLoss loss = GwLoss::SquaredLoss);

/// sum_{ijkl} L(cx_ik, cy_jl) Q_ij Q_kl evaluated as <pseudo_cost(Q), Q>.
double quadratic_objective(const CostMatrix& cx, const CostMatrix& cy, const TransportPlan& plan,
                           const ProbVec& a, const ProbVec& b, GwLoss loss = GwLoss::SquaredLoss);

struct MgwdSolution {
    TransportPlan plan;
    double distance = 0.0;
    SolveReport report; // iterations counts outer rounds
};

/// Masked entropic structure matching: alternates the pseudo-cost
/// linearization with masked entropic transport solves, starting from the
/// plan of a zero-cost solve. Stops when the plan moves less than tau in L1
/// or the outer round budget runs out. Inner solves run at a tightened
/// tolerance (min(tau, 1e-8)); the linearization between rounds uses each
/// plan's own marginals, so slightly-off inner couplings stay exact. The
/// returned value is stationary, not certified global.
MgwdSolution solve_mgwd(const CostMatrix& cx, const CostMatrix& cy, const MaskMatrix& mask,
                        const ProbVec& a, const ProbVec& b, const SolverConfig& config = {},
                        int outer_iterations = 50, GwLoss loss = GwLoss::SquaredLoss);

} // namespace mot
