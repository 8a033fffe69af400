#pragma once

#include <cstddef>
#include <vector>

#include "mot/graph.hpp"
#include "mot/rng.hpp"
#include "mot/types.hpp"

namespace mot {

/// One labelled graph with per-vertex features.
struct ToyGraphSample {
    GraphTopology topology;
    Matrix features; // n x d
    int label = 0;
};

/// K rounds of mean aggregation over closed neighbourhoods with a tanh
/// head on each round, then mean pooling into a bias-free linear readout:
///   X_k = tanh(Abar X_{k-1} W_k' + 1 b_k'),  logits = R' mean_rows(X_K).
struct ToyMpnn {
    std::vector<Matrix> layer_weights; // K of d x d
    std::vector<Vec> layer_biases;     // K of d
    Matrix readout;                    // d x classes

    std::size_t layers() const { return layer_weights.size(); }
    std::size_t dim() const { return readout.rows(); }
    std::size_t classes() const { return readout.cols(); }

    void validate() const;

    static ToyMpnn random_init(std::size_t layers, std::size_t dim, std::size_t classes, Rng& rng,
                               double scale = 0.5);
};

/// Forward pass with everything backward needs. embeddings[0] is the input,
/// embeddings[k] the output of layer k; aggregated[k-1] holds Abar X_{k-1}.
struct MpnnTrace {
    std::vector<Matrix> embeddings;
    std::vector<Matrix> aggregated;
    Vec pooled;
    Vec logits;
};

struct MpnnGradients {
    std::vector<Matrix> layer_weights;
    std::vector<Vec> layer_biases;
    Matrix readout;

    static MpnnGradients zeros_like(const ToyMpnn& model);
    void add_scaled(const MpnnGradients& other, double scale);
};

/// Row-stochastic closed-neighbourhood averaging operator of the sample's
/// graph (self loop included, so every row sums to 1).
Matrix mean_aggregation(const GraphTopology& topology);

MpnnTrace mpnn_forward(const ToyMpnn& model, const ToyGraphSample& sample);

/// Reverse pass. `dlogits` is the loss gradient at the logits;
/// `extra_embedding_grad`, when given, is added to the loss gradient at
/// embeddings[extra_layer] (1 <= extra_layer <= K) before that layer's
/// backward step — the hook for transport penalties on hidden embeddings.
MpnnGradients mpnn_backward(const ToyMpnn& model, const ToyGraphSample& sample,
                            const MpnnTrace& trace, const Vec& dlogits,
                            const Matrix* extra_embedding_grad = nullptr,
                            std::size_t extra_layer = 0);

Vec softmax(const Vec& logits);
double cross_entropy(const Vec& logits, int label);
/// softmax(logits) - onehot(label): the loss gradient at the logits.
Vec cross_entropy_grad(const Vec& logits, int label);

} // namespace mot
