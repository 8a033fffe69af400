#pragma once

#include "mot/graph.hpp"
#include "mot/gromov.hpp"
#include "mot/sinkhorn.hpp"
#include "mot/types.hpp"

namespace mot {

struct RegularizerValue {
    double value = 0.0;
    TransportPlan plan;
    SolveReport report;
};

/// Vertex-alignment penalty between two embeddings of one graph: cosine cost
/// between source and target rows, support from the mask spec, uniform
/// marginals. `normalize` max-normalizes the cost first; when the topology is
/// weighted, the weights multiply the cost at masked positions.
RegularizerValue gtot_regularizer(const GraphTopology& topology, const Matrix& source_embeddings,
                                  const Matrix& target_embeddings, const MaskSpec& mask_spec,
                                  const SolverConfig& config = {}, bool normalize = true);

/// Structure-drift penalty: within-domain cosine costs on both embedding sets
/// fed to the masked quadratic solver, uniform marginals. `normalize`
/// max-normalizes each structure matrix the same way for symmetry.
RegularizerValue mgwd_regularizer(const GraphTopology& topology, const Matrix& source_embeddings,
                                  const Matrix& target_embeddings, const MaskSpec& mask_spec,
                                  const SolverConfig& config = {}, int outer_iterations = 50,
                                  bool normalize = true);

/// task_loss + lambda * mwd_value + beta * mgwd_value, with nonnegative
/// finite weights.
double combined_objective(double task_loss, double mwd_value, double mgwd_value, double lambda,
                          double beta);

/// Transport-smoothness of a scalar vertex signal: squared-difference costs
/// over the self-loop adjacency support with uniform marginals. Zero for
/// constant signals and for the single-vertex graph.
double smooth_value(const GraphTopology& topology, const Vec& signal,
                    const SolverConfig& config = {});

struct BoundParams {
    double empirical_risk = 0.0;   // observed average loss
    double loss_bound = 0.0;       // uniform bound M on the pointwise loss
    double lambda = 0.0;           // transport penalty weight
    std::size_t beta_vertices = 0; // largest vertex count B across samples
    std::size_t sample_count = 1;  // N
    double lipschitz_q = 0.0;      // additive constant Q
    double delta = 0.05;           // confidence level, in (0, 1)
};

/// Stability-style risk bound
///   R <= R_m + 4M + 2 lambda sqrt(B)
///        + (8NM + 4N lambda sqrt(B) + Q) sqrt(ln(1/delta) / (2N)),
/// i.e. R_m + 2 beta + (4N beta + Q) sqrt(ln(1/delta) / (2N)) with stability
/// constant beta = 2M + lambda sqrt(B).
double generalization_bound(const BoundParams& params);

} // namespace mot
