#pragma once

#include <cstdint>
#include <span>

#include "mot/types.hpp"

namespace mot {

/// C_ij = (1 - cos(x_i, x_j)) / 2 between rows of two equally shaped n x d
/// feature matrices. Entries land in [0, 1] (clamped against rounding spill).
/// Throws ZeroRow when a row norm falls below 1e-12.
CostMatrix cosine_cost(const Matrix& source_rows, const Matrix& target_rows);

/// Rescales by 2 / max entry so the largest cost becomes exactly 2. A zero
/// matrix passes through unchanged; negative entries are rejected.
CostMatrix normalize_cost(const CostMatrix& cost);

/// log(sum_{k : mask_k = 1} exp(values_k)) without evaluating masked slots.
/// Throws EmptyMask when no entry survives the mask.
double masked_logsumexp(std::span<const double> values, std::span<const std::uint8_t> mask);

/// Shape agreement between mask and marginals plus the no-zero-row/column
/// requirement on the mask. Shared entry gate for every masked solver.
void validate_feasibility_inputs(const MaskMatrix& mask, const ProbVec& a, const ProbVec& b);

} // namespace mot
