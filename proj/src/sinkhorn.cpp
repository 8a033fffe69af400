#include "mot/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mot/core.hpp"

namespace mot {

namespace {

constexpr double kStallResidualGate = 1e-3;
constexpr double kStallImprovement = 1e-12;
constexpr std::size_t kStallWindow = 100;

// Rows and columns carrying mass, with mask supports restricted to them.
// Zero-mass lines stay out of every sweep so their potentials remain 0.
struct ActiveSets {
    std::vector<std::size_t> rows, cols;
    std::vector<std::vector<std::size_t>> row_sup, col_sup;
};

ActiveSets build_active(const MaskMatrix& mask, const ProbVec& a, const ProbVec& b) {
    ActiveSets act;
    act.row_sup.resize(mask.rows());
    act.col_sup.resize(mask.cols());
    for (std::size_t i = 0; i < mask.rows(); ++i) {
        if (a[i] <= 0.0)
            continue;
        act.rows.push_back(i);
        for (std::size_t j : mask.row_support(i))
            if (b[j] > 0.0)
                act.row_sup[i].push_back(j);
        if (act.row_sup[i].empty())
            throw Error(ErrorCode::Infeasible,
                        "row " + std::to_string(i) +
                            " carries mass but every unmasked column has zero mass");
    }
    for (std::size_t j = 0; j < mask.cols(); ++j) {
        if (b[j] <= 0.0)
            continue;
        act.cols.push_back(j);
        for (std::size_t i : mask.col_support(j))
            if (a[i] > 0.0)
                act.col_sup[j].push_back(i);
        if (act.col_sup[j].empty())
            throw Error(ErrorCode::Infeasible,
                        "column " + std::to_string(j) +
                            " carries mass but every unmasked row has zero mass");
    }
    return act;
}

// Dual objective restricted to the mass-carrying subproblem; this is the
// quantity the alternating updates ascend.
double active_dual_value(const CostMatrix& cost, const ActiveSets& act, const Vec& f, const Vec& g,
                         const ProbVec& a, const ProbVec& b, double eps) {
    double lin = 0.0;
    for (std::size_t i : act.rows)
        lin += f[i] * a[i];
    for (std::size_t j : act.cols)
        lin += g[j] * b[j];
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i])
            peak = std::max(peak, (f[i] + g[j] - cost(i, j)) / eps);
    if (peak == -std::numeric_limits<double>::infinity())
        return lin;
    double acc = 0.0;
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i])
            acc += std::exp((f[i] + g[j] - cost(i, j)) / eps - peak);
    return lin - eps * std::exp(peak + std::log(acc));
}

void marginal_sums(const CostMatrix& cost, const ActiveSets& act, const Vec& f, const Vec& g,
                   double eps, Vec& rows, Vec& cols) {
    std::fill(rows.begin(), rows.end(), 0.0);
    std::fill(cols.begin(), cols.end(), 0.0);
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i]) {
            const double p = std::exp((-cost(i, j) + f[i] + g[j]) / eps);
            rows[i] += p;
            cols[j] += p;
        }
}

struct ResidualPair {
    double row = 0.0, col = 0.0;
    double max() const { return std::max(row, col); }
};

ResidualPair residuals_against(const Vec& rows, const Vec& cols, const ProbVec& a,
                               const ProbVec& b) {
    ResidualPair r;
    for (std::size_t i = 0; i < rows.size(); ++i)
        r.row += std::abs(rows[i] - a[i]);
    for (std::size_t j = 0; j < cols.size(); ++j)
        r.col += std::abs(cols[j] - b[j]);
    return r;
}

bool residual_stalled(const std::vector<double>& history) {
    if (history.size() < kStallWindow + 1)
        return false;
    const double before = history[history.size() - 1 - kStallWindow];
    return before - history.back() < kStallImprovement;
}

MwdSolution finish_solution(const CostMatrix& cost, const MaskMatrix& mask, const ActiveSets& act,
                            const Vec& f, const Vec& g, double eps, SolveReport report) {
    Matrix plan(mask.rows(), mask.cols(), 0.0);
    double distance = 0.0;
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i]) {
            const double p = std::exp((-cost(i, j) + f[i] + g[j]) / eps);
            plan(i, j) = p;
            distance += p * cost(i, j);
        }
    return MwdSolution{TransportPlan(std::move(plan), mask), distance, DualPotentials{f, g},
                       std::move(report)};
}

void check_problem_shapes(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                          const ProbVec& b, const SolverConfig& config) {
    config.validate();
    if (cost.rows() != mask.rows() || cost.cols() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "cost and mask shapes disagree");
    validate_feasibility_inputs(mask, a, b);
}

} // namespace

MwdSolution solve_mwd(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                      const ProbVec& b, const SolverConfig& config) {
    check_problem_shapes(cost, mask, a, b, config);
    const ActiveSets act = build_active(mask, a, b);
    const double eps = config.epsilon;

    Vec f(mask.rows(), 0.0), g(mask.cols(), 0.0);
    Vec log_a(mask.rows(), 0.0), log_b(mask.cols(), 0.0);
    for (std::size_t i : act.rows)
        log_a[i] = std::log(a[i]);
    for (std::size_t j : act.cols)
        log_b[j] = std::log(b[j]);

    Vec row_sums(mask.rows()), col_sums(mask.cols());
    std::vector<double> residual_history;
    residual_history.reserve(static_cast<std::size_t>(config.max_iter));
    std::vector<double> trace;
    if (config.record_dual_trace)
        trace.push_back(active_dual_value(cost, act, f, g, a, b, eps));

    SolveReport report;
    ResidualPair res;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        double delta = 0.0;
        for (std::size_t i : act.rows) {
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t j : act.row_sup[i])
                peak = std::max(peak, (-cost(i, j) + f[i] + g[j]) / eps);
            double acc = 0.0;
            for (std::size_t j : act.row_sup[i])
                acc += std::exp((-cost(i, j) + f[i] + g[j]) / eps - peak);
            const double lse = peak + std::log(acc);
            const double next = f[i] + eps * (log_a[i] - lse);
            delta += std::abs(next - f[i]);
            f[i] = next;
        }
        for (std::size_t j : act.cols) {
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t i : act.col_sup[j])
                peak = std::max(peak, (-cost(i, j) + f[i] + g[j]) / eps);
            double acc = 0.0;
            for (std::size_t i : act.col_sup[j])
                acc += std::exp((-cost(i, j) + f[i] + g[j]) / eps - peak);
            g[j] += eps * (log_b[j] - (peak + std::log(acc)));
        }

        marginal_sums(cost, act, f, g, eps, row_sums, col_sums);
        res = residuals_against(row_sums, col_sums, a, b);
        residual_history.push_back(res.max());
        if (config.record_dual_trace)
            trace.push_back(active_dual_value(cost, act, f, g, a, b, eps));

        report.iterations = iter;
        if (delta < eps * config.tau) {
            report.converged = true;
            break;
        }
    }

    if (!report.converged && res.max() > kStallResidualGate && residual_stalled(residual_history))
        throw Error(ErrorCode::Infeasible,
                    "marginal residual " + std::to_string(res.max()) +
                        " stalled above 1e-3 at the iteration cap");

    report.marginal_residual_row = res.row;
    report.marginal_residual_col = res.col;
    if (config.record_dual_trace)
        report.dual_trace = std::move(trace);
    return finish_solution(cost, mask, act, f, g, eps, std::move(report));
}

MwdSolution solve_mwd_vanilla(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                              const ProbVec& b, const SolverConfig& config) {
    check_problem_shapes(cost, mask, a, b, config);
    const ActiveSets act = build_active(mask, a, b);
    const double eps = config.epsilon;

    Matrix kernel(mask.rows(), mask.cols(), 0.0);
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i])
            kernel(i, j) = std::exp(-cost(i, j) / eps);

    Vec u(mask.rows(), 1.0), v(mask.cols(), 1.0);
    Vec row_sums(mask.rows()), col_sums(mask.cols());
    std::vector<double> residual_history;
    residual_history.reserve(static_cast<std::size_t>(config.max_iter));
    std::vector<double> trace;
    Vec f(mask.rows(), 0.0), g(mask.cols(), 0.0);
    if (config.record_dual_trace)
        trace.push_back(active_dual_value(cost, act, f, g, a, b, eps));

    SolveReport report;
    ResidualPair res;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        double delta = 0.0;
        for (std::size_t i : act.rows) {
            double denom = 0.0;
            for (std::size_t j : act.row_sup[i])
                denom += kernel(i, j) * v[j];
            if (denom <= 0.0 || !std::isfinite(denom))
                throw Error(ErrorCode::NumericalUnderflow,
                            "kernel row sum underflowed; rerun in the log domain or raise epsilon");
            const double next = a[i] / denom;
            if (!std::isfinite(next))
                throw Error(ErrorCode::NumericalUnderflow,
                            "scaling vector overflowed; rerun in the log domain or raise epsilon");
            delta += std::abs(next - u[i]);
            u[i] = next;
        }
        for (std::size_t j : act.cols) {
            double denom = 0.0;
            for (std::size_t i : act.col_sup[j])
                denom += kernel(i, j) * u[i];
            if (denom <= 0.0 || !std::isfinite(denom))
                throw Error(ErrorCode::NumericalUnderflow,
                            "kernel column sum underflowed; rerun in the log domain or raise "
                            "epsilon");
            v[j] = b[j] / denom;
            if (!std::isfinite(v[j]))
                throw Error(ErrorCode::NumericalUnderflow,
                            "scaling vector overflowed; rerun in the log domain or raise epsilon");
        }

        std::fill(row_sums.begin(), row_sums.end(), 0.0);
        std::fill(col_sums.begin(), col_sums.end(), 0.0);
        for (std::size_t i : act.rows)
            for (std::size_t j : act.row_sup[i]) {
                const double p = u[i] * kernel(i, j) * v[j];
                row_sums[i] += p;
                col_sums[j] += p;
            }
        res = residuals_against(row_sums, col_sums, a, b);
        residual_history.push_back(res.max());
        if (config.record_dual_trace) {
            for (std::size_t i : act.rows)
                f[i] = eps * std::log(u[i]);
            for (std::size_t j : act.cols)
                g[j] = eps * std::log(v[j]);
            trace.push_back(active_dual_value(cost, act, f, g, a, b, eps));
        }

        report.iterations = iter;
        if (delta < config.tau) {
            report.converged = true;
            break;
        }
    }

    if (!report.converged && res.max() > kStallResidualGate && residual_stalled(residual_history))
        throw Error(ErrorCode::Infeasible,
                    "marginal residual " + std::to_string(res.max()) +
                        " stalled above 1e-3 at the iteration cap");

    report.marginal_residual_row = res.row;
    report.marginal_residual_col = res.col;
    for (std::size_t i : act.rows)
        f[i] = eps * std::log(u[i]);
    for (std::size_t j : act.cols)
        g[j] = eps * std::log(v[j]);
    if (config.record_dual_trace)
        report.dual_trace = std::move(trace);

    Matrix plan(mask.rows(), mask.cols(), 0.0);
    double distance = 0.0;
    for (std::size_t i : act.rows)
        for (std::size_t j : act.row_sup[i]) {
            const double p = u[i] * kernel(i, j) * v[j];
            plan(i, j) = p;
            distance += p * cost(i, j);
        }
    return MwdSolution{TransportPlan(std::move(plan), mask), distance, DualPotentials{f, g},
                       std::move(report)};
}

double dual_objective(const Vec& f, const Vec& g, const CostMatrix& cost, const MaskMatrix& mask,
                      const ProbVec& a, const ProbVec& b, double epsilon) {
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::InvalidInput, "epsilon must be positive");
    if (f.size() != mask.rows() || g.size() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "potential lengths disagree with mask");
    if (cost.rows() != mask.rows() || cost.cols() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "cost and mask shapes disagree");
    if (a.size() != mask.rows() || b.size() != mask.cols())
        throw Error(ErrorCode::ShapeMismatch, "marginal sizes disagree with mask");

    double lin = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        lin += f[i] * a[i];
    for (std::size_t j = 0; j < g.size(); ++j)
        lin += g[j] * b[j];

    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mask.rows(); ++i)
        for (std::size_t j : mask.row_support(i))
            peak = std::max(peak, (f[i] + g[j] - cost(i, j)) / epsilon);
    if (peak == -std::numeric_limits<double>::infinity())
        return lin;
    double acc = 0.0;
    for (std::size_t i = 0; i < mask.rows(); ++i)
        for (std::size_t j : mask.row_support(i))
            acc += std::exp((f[i] + g[j] - cost(i, j)) / epsilon - peak);
    return lin - epsilon * std::exp(peak + std::log(acc));
}

Matrix mwd_gradient_wrt_cost(const MwdSolution& solution) {
    if (!solution.report.converged)
        throw Error(ErrorCode::NotConverged,
                    "gradient requested from a solve that did not converge");
    return solution.plan.values();
}

double regularized_value(const TransportPlan& plan, const CostMatrix& cost, double epsilon) {
    if (cost.rows() != plan.rows() || cost.cols() != plan.cols())
        throw Error(ErrorCode::ShapeMismatch, "cost and plan shapes disagree");
    double linear = 0.0, entropy_term = 0.0;
    for (std::size_t i = 0; i < plan.rows(); ++i)
        for (std::size_t j : plan.mask().row_support(i)) {
            const double p = plan(i, j);
            if (p <= 0.0)
                continue;
            linear += p * cost(i, j);
            entropy_term += p * (std::log(p) - 1.0);
        }
    return linear + epsilon * entropy_term;
}

} // namespace mot
