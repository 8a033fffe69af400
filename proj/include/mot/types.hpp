#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mot {

using Vec = std::vector<double>;

enum class ErrorCode {
    ShapeMismatch,
    ZeroRow,
    ZeroRowOrColumn,
    EmptyMask,
    NegativeCost,
    InvalidInput,
    Infeasible,
    NumericalUnderflow,
    NotConverged,
    InfeasiblePlan,
    TooLarge,
    InvalidDelta,
    DimensionMismatch,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// Dense row-major matrix of doubles. All solver state is held in these at
/// desk scale; no view/expression machinery on purpose.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, Vec data);

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    double max_abs() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
double l1_distance(const Matrix& a, const Matrix& b);

/// Discrete probability vector: nonnegative, at least one positive entry,
/// total mass 1 within 1e-12.
class ProbVec {
public:
    explicit ProbVec(Vec values);

    static ProbVec uniform(std::size_t n);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const Vec& values() const { return values_; }

private:
    Vec values_;
};

/// Binary support constraint on a transport plan. Stored densely with
/// precomputed unmasked index lists per row and column; construction accepts
/// any 0/1 pattern, the no-zero-row-or-column requirement is checked by
/// validate_feasibility_inputs at solve entry.
class MaskMatrix {
public:
    MaskMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> entries);

    static MaskMatrix ones(std::size_t rows, std::size_t cols);
    static MaskMatrix identity(std::size_t n);
    /// Entry = 1 wherever m(i,j) > 0.
    static MaskMatrix from_support(const Matrix& m);

    std::uint8_t operator()(std::size_t i, std::size_t j) const {
        return entries_[i * cols_ + j];
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<std::uint8_t>& entries() const { return entries_; }

    /// Column indices of the unmasked entries in row i, ascending.
    const std::vector<std::size_t>& row_support(std::size_t i) const { return row_support_[i]; }
    /// Row indices of the unmasked entries in column j, ascending.
    const std::vector<std::size_t>& col_support(std::size_t j) const { return col_support_[j]; }

    /// True iff this mask is 0 everywhere `other` is 0 (support containment).
    bool subset_of(const MaskMatrix& other) const;

    /// Throws ZeroRowOrColumn if some row or column has no unmasked entry.
    void require_no_zero_line() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> entries_;
    std::vector<std::vector<std::size_t>> row_support_;
    std::vector<std::vector<std::size_t>> col_support_;
};

/// Pairwise ground cost. Entries must be finite; sign is unconstrained here
/// (normalize_cost rejects negatives, Gromov pseudo-costs may carry tiny
/// negative rounding residue).
class CostMatrix {
public:
    explicit CostMatrix(Matrix values);
    CostMatrix(std::size_t rows, std::size_t cols, Vec data)
        : CostMatrix(Matrix(rows, cols, std::move(data))) {}

    static CostMatrix zeros(std::size_t rows, std::size_t cols) {
        return CostMatrix(Matrix(rows, cols, 0.0));
    }

    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    double max() const;
    double min() const;

private:
    Matrix values_;
};

/// Coupling with an explicit support mask: entries are bitwise zero wherever
/// the mask is zero, nonnegative elsewhere.
class TransportPlan {
public:
    TransportPlan(Matrix values, MaskMatrix mask);

    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }
    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    const Matrix& values() const { return values_; }
    const MaskMatrix& mask() const { return mask_; }

    Vec row_sums() const;
    Vec col_sums() const;
    double total_mass() const;
    /// (L1 row-marginal residual, L1 column-marginal residual) against (a, b).
    std::pair<double, double> marginal_residuals(const ProbVec& a, const ProbVec& b) const;

private:
    Matrix values_;
    MaskMatrix mask_;
};

struct SolverConfig {
    double epsilon = 0.05;
    double tau = 1e-6;
    int max_iter = 10000;
    bool record_dual_trace = false;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double marginal_residual_row = 0.0;
    double marginal_residual_col = 0.0;
    std::optional<std::vector<double>> dual_trace;
};

} // namespace mot
