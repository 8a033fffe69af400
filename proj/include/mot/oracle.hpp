#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mot/types.hpp"

namespace mot {

/// Exact masked transport solve on small instances. `plan` empty means the
/// masked transport polytope is certifiably empty for the rounded masses.
struct ExactMwd {
    std::optional<TransportPlan> plan;
    double value = 0.0;

    bool feasible() const { return plan.has_value(); }
};

/// Linear-program reference for the masked transport distance, solved as a
/// min-cost flow over integerized masses (largest-remainder rounding at
/// 1e6 units, costs scaled by 1e9). Instances are capped at 64 x 64.
ExactMwd exact_mwd(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                   const ProbVec& b);

/// Quadruple-loop evaluation of sum_{ijkl} (cx_ik - cy_jl)^2 q_ij q_kl on an
/// already-masked coupling q. Capped at 8 x 8.
double naive_gw_objective(const Matrix& cx, const Matrix& cy, const Matrix& masked_plan);

struct PermutationGw {
    double value = 0.0;
    std::vector<std::size_t> permutation;
};

/// Brute-force minimum of (1/n^2) sum_{ik} (cx_ik - cy_{s(i)s(k)})^2 over all
/// vertex bijections s. Capped at n = 6.
PermutationGw permutation_gw_search(const Matrix& cx, const Matrix& cy);

} // namespace mot
