#include "mot/types.hpp"

#include <cmath>
#include <cstdlib>

namespace mot {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::ZeroRowOrColumn: return "ZeroRowOrColumn";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NegativeCost: return "NegativeCost";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    }
    return "UnknownError";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw Error(ErrorCode::ShapeMismatch, "matrix data size does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

double Matrix::max_abs() const {
    double best = 0.0;
    for (double v : data_)
        best = std::max(best, std::abs(v));
    return best;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions disagree");
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(j, i) = m(i, j);
    return out;
}

double l1_distance(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw Error(ErrorCode::ShapeMismatch, "l1_distance requires equal shapes");
    double total = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k)
        total += std::abs(a.data()[k] - b.data()[k]);
    return total;
}

ProbVec::ProbVec(Vec values) : values_(std::move(values)) {
    if (values_.empty())
        throw Error(ErrorCode::InvalidInput, "probability vector must be nonempty");
    double sum = 0.0;
    bool any_positive = false;
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error(ErrorCode::InvalidInput, "probability entries must be finite and >= 0");
        if (v > 0.0)
            any_positive = true;
        sum += v;
    }
    if (!any_positive)
        throw Error(ErrorCode::InvalidInput, "probability vector has no positive entry");
    if (std::abs(sum - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidInput, "probability entries must sum to 1 within 1e-12");
}

ProbVec ProbVec::uniform(std::size_t n) {
    if (n == 0)
        throw Error(ErrorCode::InvalidInput, "uniform probability vector needs n >= 1");
    return ProbVec(Vec(n, 1.0 / static_cast<double>(n)));
}

MaskMatrix::MaskMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows_ == 0 || cols_ == 0)
        throw Error(ErrorCode::InvalidInput, "mask must have at least one row and column");
    if (entries_.size() != rows_ * cols_)
        throw Error(ErrorCode::ShapeMismatch, "mask data size does not match rows*cols");
    for (std::uint8_t e : entries_)
        if (e > 1)
            throw Error(ErrorCode::InvalidInput, "mask entries must be 0 or 1");
    row_support_.resize(rows_);
    col_support_.resize(cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if (entries_[i * cols_ + j]) {
                row_support_[i].push_back(j);
                col_support_[j].push_back(i);
            }
}

MaskMatrix MaskMatrix::ones(std::size_t rows, std::size_t cols) {
    return MaskMatrix(rows, cols, std::vector<std::uint8_t>(rows * cols, 1));
}

MaskMatrix MaskMatrix::identity(std::size_t n) {
    std::vector<std::uint8_t> e(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        e[i * n + i] = 1;
    return MaskMatrix(n, n, std::move(e));
}

MaskMatrix MaskMatrix::from_support(const Matrix& m) {
    std::vector<std::uint8_t> e(m.rows() * m.cols(), 0);
    for (std::size_t k = 0; k < m.data().size(); ++k)
        e[k] = m.data()[k] > 0.0 ? 1 : 0;
    return MaskMatrix(m.rows(), m.cols(), std::move(e));
}

bool MaskMatrix::subset_of(const MaskMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        return false;
    for (std::size_t k = 0; k < entries_.size(); ++k)
        if (entries_[k] && !other.entries_[k])
            return false;
    return true;
}

void MaskMatrix::require_no_zero_line() const {
    for (std::size_t i = 0; i < rows_; ++i)
        if (row_support_[i].empty())
            throw Error(ErrorCode::ZeroRowOrColumn,
                        "mask row " + std::to_string(i) + " has no unmasked entry");
    for (std::size_t j = 0; j < cols_; ++j)
        if (col_support_[j].empty())
            throw Error(ErrorCode::ZeroRowOrColumn,
                        "mask column " + std::to_string(j) + " has no unmasked entry");
}

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() == 0 || values_.cols() == 0)
        throw Error(ErrorCode::InvalidInput, "cost matrix must be nonempty");
    if (!values_.all_finite())
        throw Error(ErrorCode::InvalidInput, "cost matrix entries must be finite");
}

double CostMatrix::max() const {
    double best = values_.data()[0];
    for (double v : values_.data())
        best = std::max(best, v);
    return best;
}

double CostMatrix::min() const {
    double best = values_.data()[0];
    for (double v : values_.data())
        best = std::min(best, v);
    return best;
}

TransportPlan::TransportPlan(Matrix values, MaskMatrix mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols())
        throw Error(ErrorCode::ShapeMismatch, "plan and mask shapes disagree");
    for (std::size_t i = 0; i < values_.rows(); ++i)
        for (std::size_t j = 0; j < values_.cols(); ++j) {
            if (!mask_(i, j)) {
                values_(i, j) = 0.0; // exact zero off-support by construction
            } else if (!(values_(i, j) >= 0.0) || !std::isfinite(values_(i, j))) {
                throw Error(ErrorCode::InvalidInput, "plan entries must be finite and >= 0");
            }
        }
}

Vec TransportPlan::row_sums() const {
    Vec out(values_.rows(), 0.0);
    for (std::size_t i = 0; i < values_.rows(); ++i)
        for (std::size_t j : mask_.row_support(i))
            out[i] += values_(i, j);
    return out;
}

Vec TransportPlan::col_sums() const {
    Vec out(values_.cols(), 0.0);
    for (std::size_t j = 0; j < values_.cols(); ++j)
        for (std::size_t i : mask_.col_support(j))
            out[j] += values_(i, j);
    return out;
}

double TransportPlan::total_mass() const {
    double total = 0.0;
    for (double v : values_.data())
        total += v;
    return total;
}

std::pair<double, double> TransportPlan::marginal_residuals(const ProbVec& a,
                                                            const ProbVec& b) const {
    if (a.size() != rows() || b.size() != cols())
        throw Error(ErrorCode::ShapeMismatch, "marginal sizes disagree with plan");
    const Vec rs = row_sums();
    const Vec cs = col_sums();
    double row_res = 0.0, col_res = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        row_res += std::abs(rs[i] - a[i]);
    for (std::size_t j = 0; j < cs.size(); ++j)
        col_res += std::abs(cs[j] - b[j]);
    return {row_res, col_res};
}

void SolverConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw Error(ErrorCode::InvalidInput, "epsilon must be positive and finite");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw Error(ErrorCode::InvalidInput, "tau must be positive and finite");
    if (max_iter < 1)
        throw Error(ErrorCode::InvalidInput, "max_iter must be >= 1");
}

} // namespace mot
