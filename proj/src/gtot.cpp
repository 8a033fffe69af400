#include "mot/gtot.hpp"

#include <cmath>
#include <string>

#include "mot/core.hpp"

namespace mot {

namespace {

void check_embedding_rows(const GraphTopology& topology, const Matrix& embeddings,
                          const char* which) {
    if (embeddings.rows() != topology.n)
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(which) + " embeddings have " + std::to_string(embeddings.rows()) +
                        " rows for a graph on " + std::to_string(topology.n) + " vertices");
}

} // namespace

RegularizerValue gtot_regularizer(const GraphTopology& topology, const Matrix& source_embeddings,
                                  const Matrix& target_embeddings, const MaskSpec& mask_spec,
                                  const SolverConfig& config, bool normalize) {
    topology.validate();
    check_embedding_rows(topology, source_embeddings, "source");
    check_embedding_rows(topology, target_embeddings, "target");

    CostMatrix cost = cosine_cost(source_embeddings, target_embeddings);
    if (normalize)
        cost = normalize_cost(cost);
    const MaskMatrix mask = build_mask(topology, mask_spec);
    if (topology.weighted()) {
        const Matrix w = topology.weight_matrix();
        Matrix scaled = cost.values();
        for (std::size_t i = 0; i < mask.rows(); ++i)
            for (std::size_t j : mask.row_support(i))
                scaled(i, j) *= w(i, j);
        cost = CostMatrix(std::move(scaled));
    }

    const ProbVec q = ProbVec::uniform(topology.n);
    MwdSolution sol = solve_mwd(cost, mask, q, q, config);
    return RegularizerValue{sol.distance, std::move(sol.plan), std::move(sol.report)};
}

RegularizerValue mgwd_regularizer(const GraphTopology& topology, const Matrix& source_embeddings,
                                  const Matrix& target_embeddings, const MaskSpec& mask_spec,
                                  const SolverConfig& config, int outer_iterations,
                                  bool normalize) {
    topology.validate();
    check_embedding_rows(topology, source_embeddings, "source");
    check_embedding_rows(topology, target_embeddings, "target");

    CostMatrix cx = cosine_cost(source_embeddings, source_embeddings);
    CostMatrix cy = cosine_cost(target_embeddings, target_embeddings);
    if (normalize) {
        cx = normalize_cost(cx);
        cy = normalize_cost(cy);
    }
    const MaskMatrix mask = build_mask(topology, mask_spec);
    const ProbVec q = ProbVec::uniform(topology.n);
    MgwdSolution sol = solve_mgwd(cx, cy, mask, q, q, config, outer_iterations);
    return RegularizerValue{sol.distance, std::move(sol.plan), std::move(sol.report)};
}

double combined_objective(double task_loss, double mwd_value, double mgwd_value, double lambda,
                          double beta) {
    if (!std::isfinite(task_loss) || !std::isfinite(mwd_value) || !std::isfinite(mgwd_value))
        throw Error(ErrorCode::InvalidInput, "objective terms must be finite");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::InvalidInput, "lambda must be >= 0 and finite");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw Error(ErrorCode::InvalidInput, "beta must be >= 0 and finite");
    return task_loss + lambda * mwd_value + beta * mgwd_value;
}

double smooth_value(const GraphTopology& topology, const Vec& signal,
                    const SolverConfig& config) {
    topology.validate();
    if (signal.size() != topology.n)
        throw Error(ErrorCode::DimensionMismatch, "signal length disagrees with vertex count");
    for (double s : signal)
        if (!std::isfinite(s))
            throw Error(ErrorCode::InvalidInput, "signal entries must be finite");

    const std::size_t n = topology.n;
    Matrix cost(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double gap = signal[i] - signal[j];
            cost(i, j) = gap * gap;
        }
    const MaskMatrix mask = build_mask(topology, MaskSpec::adjacency());
    const ProbVec q = ProbVec::uniform(n);
    return solve_mwd(CostMatrix(std::move(cost)), mask, q, q, config).distance;
}

double generalization_bound(const BoundParams& params) {
    if (!(params.delta > 0.0) || !(params.delta < 1.0))
        throw Error(ErrorCode::InvalidDelta, "delta must lie strictly between 0 and 1");
    if (!(params.empirical_risk >= 0.0) || !std::isfinite(params.empirical_risk))
        throw Error(ErrorCode::InvalidInput, "empirical risk must be >= 0 and finite");
    if (!(params.loss_bound >= 0.0) || !std::isfinite(params.loss_bound))
        throw Error(ErrorCode::InvalidInput, "loss bound must be >= 0 and finite");
    if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda))
        throw Error(ErrorCode::InvalidInput, "lambda must be >= 0 and finite");
    if (!(params.lipschitz_q >= 0.0) || !std::isfinite(params.lipschitz_q))
        throw Error(ErrorCode::InvalidInput, "Q must be >= 0 and finite");
    if (params.sample_count < 1)
        throw Error(ErrorCode::InvalidInput, "sample count must be >= 1");

    const double n_samples = static_cast<double>(params.sample_count);
    const double root_b = std::sqrt(static_cast<double>(params.beta_vertices));
    const double tail = std::sqrt(std::log(1.0 / params.delta) / (2.0 * n_samples));
    return params.empirical_risk + 4.0 * params.loss_bound + 2.0 * params.lambda * root_b +
           (8.0 * n_samples * params.loss_bound + 4.0 * n_samples * params.lambda * root_b +
            params.lipschitz_q) *
               tail;
}

} // namespace mot
