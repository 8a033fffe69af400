#pragma once

#include "mot/types.hpp"

namespace mot {

struct DualPotentials {
    Vec f; // row potentials
    Vec g; // column potentials
};

struct MwdSolution {
    TransportPlan plan;
    double distance = 0.0;
    DualPotentials duals;
    SolveReport report;
};

/// Entropic masked transport in the log domain. Row and column potentials are
/// updated by masked log-sum-exp sweeps (rows first), starting from f = g = 0,
/// until the L1 change of f drops below epsilon * tau. Rows and columns with
/// zero mass are frozen at zero potential and excluded from every sweep, so
/// the returned duals stay finite. Stagnating marginal residuals above 1e-3
/// at the iteration cap raise Infeasible.
MwdSolution solve_mwd(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                      const ProbVec& b, const SolverConfig& config = {});

/// Same fixed point iterated on the scaling vectors u, v directly
/// (u = a / Kv, v = b / K'u with K = exp(-C/eps) on the mask support,
/// v initialized to ones). Kept as the cross-check path; overflow-prone by
/// design and raises NumericalUnderflow when a denominator hits zero.
MwdSolution solve_mwd_vanilla(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                              const ProbVec& b, const SolverConfig& config = {});

/// F(f, g) = <f, a> + <g, b> - eps * sum over unmasked (i, j) of
/// exp((f_i + g_j - C_ij) / eps), with the exponential sum evaluated through
/// a single log-sum-exp.
double dual_objective(const Vec& f, const Vec& g, const CostMatrix& cost, const MaskMatrix& mask,
                      const ProbVec& a, const ProbVec& b, double epsilon);

/// d(distance)/dC of a converged solve is the optimal plan itself (envelope
/// rule, plans treated as constant). Throws NotConverged otherwise.
Matrix mwd_gradient_wrt_cost(const MwdSolution& solution);

/// <P, C> + eps * sum P_ij (log P_ij - 1) over the plan support, with
/// 0 log 0 = 0. This is the quantity whose cost-derivative the plan is.
double regularized_value(const TransportPlan& plan, const CostMatrix& cost, double epsilon);

} // namespace mot
