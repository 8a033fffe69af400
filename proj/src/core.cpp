#include "mot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mot {

CostMatrix cosine_cost(const Matrix& source_rows, const Matrix& target_rows) {
    if (!source_rows.same_shape(target_rows))
        throw Error(ErrorCode::ShapeMismatch, "feature matrices must have identical shape");
    const std::size_t n = source_rows.rows();
    const std::size_t d = source_rows.cols();
    if (n == 0 || d == 0)
        throw Error(ErrorCode::InvalidInput, "feature matrices must be nonempty");

    auto row_norms = [d](const Matrix& m, const char* which) {
        Vec norms(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                sq += m(i, k) * m(i, k);
            norms[i] = std::sqrt(sq);
            if (norms[i] < 1e-12)
                throw Error(ErrorCode::ZeroRow, std::string(which) + " row " + std::to_string(i) +
                                                    " has near-zero norm");
        }
        return norms;
    };
    const Vec sn = row_norms(source_rows, "source");
    const Vec tn = row_norms(target_rows, "target");

    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                dot += source_rows(i, k) * target_rows(j, k);
            const double cosine = dot / (sn[i] * tn[j]);
            c(i, j) = std::clamp(0.5 * (1.0 - cosine), 0.0, 1.0);
        }
    return CostMatrix(std::move(c));
}

CostMatrix normalize_cost(const CostMatrix& cost) {
    double max_entry = 0.0;
    for (double v : cost.values().data()) {
        if (v < 0.0)
            throw Error(ErrorCode::NegativeCost, "normalization requires nonnegative costs");
        max_entry = std::max(max_entry, v);
    }
    if (max_entry == 0.0)
        return cost;
    Matrix scaled = cost.values();
    const double scale = 2.0 / max_entry;
    for (double& v : scaled.data())
        v *= scale;
    return CostMatrix(std::move(scaled));
}

double masked_logsumexp(std::span<const double> values, std::span<const std::uint8_t> mask) {
    if (values.size() != mask.size())
        throw Error(ErrorCode::ShapeMismatch, "values and mask lengths disagree");
    double peak = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (mask[k]) {
            any = true;
            peak = std::max(peak, values[k]);
        }
    if (!any)
        throw Error(ErrorCode::EmptyMask, "log-sum-exp over an empty mask");
    double acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (mask[k])
            acc += std::exp(values[k] - peak);
    return peak + std::log(acc);
}

void validate_feasibility_inputs(const MaskMatrix& mask, const ProbVec& a, const ProbVec& b) {
    if (a.size() != mask.rows())
        throw Error(ErrorCode::ShapeMismatch, "row marginal length disagrees with mask rows");
    if (b.size() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "column marginal length disagrees with mask columns");
    mask.require_no_zero_line();
}

} // namespace mot
