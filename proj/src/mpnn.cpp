#include "mot/mpnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mot/core.hpp"

namespace mot {

void ToyMpnn::validate() const {
    if (layer_weights.empty())
        throw Error(ErrorCode::InvalidInput, "model needs at least one message-passing layer");
    if (layer_weights.size() != layer_biases.size())
        throw Error(ErrorCode::InvalidInput, "layer weight and bias counts disagree");
    const std::size_t d = readout.rows();
    if (d == 0 || readout.cols() == 0)
        throw Error(ErrorCode::InvalidInput, "readout must be d x classes with both >= 1");
    for (std::size_t k = 0; k < layer_weights.size(); ++k) {
        if (layer_weights[k].rows() != d || layer_weights[k].cols() != d)
            throw Error(ErrorCode::ShapeMismatch,
                        "layer " + std::to_string(k) + " weights must be d x d");
        if (layer_biases[k].size() != d)
            throw Error(ErrorCode::ShapeMismatch,
                        "layer " + std::to_string(k) + " bias must have length d");
    }
    for (const Matrix& w : layer_weights)
        if (!w.all_finite())
            throw Error(ErrorCode::InvalidInput, "layer weights must be finite");
    if (!readout.all_finite())
        throw Error(ErrorCode::InvalidInput, "readout weights must be finite");
}

ToyMpnn ToyMpnn::random_init(std::size_t layers, std::size_t dim, std::size_t classes, Rng& rng,
                             double scale) {
    if (layers == 0 || dim == 0 || classes == 0)
        throw Error(ErrorCode::InvalidInput, "layers, dim and classes must all be >= 1");
    const double spread = scale / std::sqrt(static_cast<double>(dim));
    ToyMpnn model;
    for (std::size_t k = 0; k < layers; ++k) {
        Matrix w(dim, dim);
        for (double& v : w.data())
            v = spread * rng.normal();
        model.layer_weights.push_back(std::move(w));
        model.layer_biases.emplace_back(dim, 0.0);
    }
    model.readout = Matrix(dim, classes);
    for (double& v : model.readout.data())
        v = spread * rng.normal();
    return model;
}

MpnnGradients MpnnGradients::zeros_like(const ToyMpnn& model) {
    MpnnGradients g;
    for (const Matrix& w : model.layer_weights)
        g.layer_weights.emplace_back(w.rows(), w.cols(), 0.0);
    for (const Vec& b : model.layer_biases)
        g.layer_biases.emplace_back(b.size(), 0.0);
    g.readout = Matrix(model.readout.rows(), model.readout.cols(), 0.0);
    return g;
}

void MpnnGradients::add_scaled(const MpnnGradients& other, double scale) {
    for (std::size_t k = 0; k < layer_weights.size(); ++k) {
        for (std::size_t idx = 0; idx < layer_weights[k].data().size(); ++idx)
            layer_weights[k].data()[idx] += scale * other.layer_weights[k].data()[idx];
        for (std::size_t idx = 0; idx < layer_biases[k].size(); ++idx)
            layer_biases[k][idx] += scale * other.layer_biases[k][idx];
    }
    for (std::size_t idx = 0; idx < readout.data().size(); ++idx)
        readout.data()[idx] += scale * other.readout.data()[idx];
}

Matrix mean_aggregation(const GraphTopology& topology) {
    const Matrix closed = topology.adjacency(true);
    Matrix abar(topology.n, topology.n, 0.0);
    for (std::size_t i = 0; i < topology.n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < topology.n; ++j)
            degree += closed(i, j);
        for (std::size_t j = 0; j < topology.n; ++j)
            abar(i, j) = closed(i, j) / degree;
    }
    return abar;
}

MpnnTrace mpnn_forward(const ToyMpnn& model, const ToyGraphSample& sample) {
    model.validate();
    sample.topology.validate();
    if (sample.features.rows() != sample.topology.n)
        throw Error(ErrorCode::DimensionMismatch, "feature rows disagree with vertex count");
    if (sample.features.cols() != model.dim())
        throw Error(ErrorCode::DimensionMismatch, "feature width disagrees with model dim");

    const Matrix abar = mean_aggregation(sample.topology);
    MpnnTrace trace;
    trace.embeddings.push_back(sample.features);
    for (std::size_t k = 0; k < model.layers(); ++k) {
        Matrix agg = matmul(abar, trace.embeddings.back());
        Matrix pre = matmul(agg, transpose(model.layer_weights[k]));
        for (std::size_t i = 0; i < pre.rows(); ++i)
            for (std::size_t j = 0; j < pre.cols(); ++j)
                pre(i, j) = std::tanh(pre(i, j) + model.layer_biases[k][j]);
        trace.aggregated.push_back(std::move(agg));
        trace.embeddings.push_back(std::move(pre));
    }

    const Matrix& final_emb = trace.embeddings.back();
    trace.pooled.assign(model.dim(), 0.0);
    for (std::size_t i = 0; i < final_emb.rows(); ++i)
        for (std::size_t j = 0; j < final_emb.cols(); ++j)
            trace.pooled[j] += final_emb(i, j);
    for (double& v : trace.pooled)
        v /= static_cast<double>(final_emb.rows());

    trace.logits.assign(model.classes(), 0.0);
    for (std::size_t c = 0; c < model.classes(); ++c)
        for (std::size_t j = 0; j < model.dim(); ++j)
            trace.logits[c] += model.readout(j, c) * trace.pooled[j];
    return trace;
}

MpnnGradients mpnn_backward(const ToyMpnn& model, const ToyGraphSample& sample,
                            const MpnnTrace& trace, const Vec& dlogits,
                            const Matrix* extra_embedding_grad, std::size_t extra_layer) {
    const std::size_t layer_count = model.layers();
    if (dlogits.size() != model.classes())
        throw Error(ErrorCode::ShapeMismatch, "dlogits length disagrees with class count");
    if (extra_embedding_grad &&
        (extra_layer < 1 || extra_layer > layer_count ||
         !extra_embedding_grad->same_shape(trace.embeddings[extra_layer])))
        throw Error(ErrorCode::InvalidInput, "extra gradient layer index or shape is off");

    const Matrix abar = mean_aggregation(sample.topology);
    const std::size_t n = sample.topology.n;
    MpnnGradients grads = MpnnGradients::zeros_like(model);

    for (std::size_t j = 0; j < model.dim(); ++j)
        for (std::size_t c = 0; c < model.classes(); ++c)
            grads.readout(j, c) = trace.pooled[j] * dlogits[c];

    Vec dpooled(model.dim(), 0.0);
    for (std::size_t j = 0; j < model.dim(); ++j)
        for (std::size_t c = 0; c < model.classes(); ++c)
            dpooled[j] += model.readout(j, c) * dlogits[c];

    Matrix demb(n, model.dim());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < model.dim(); ++j)
            demb(i, j) = dpooled[j] / static_cast<double>(n);

    for (std::size_t k = layer_count; k >= 1; --k) {
        if (extra_embedding_grad && extra_layer == k)
            for (std::size_t idx = 0; idx < demb.data().size(); ++idx)
                demb.data()[idx] += extra_embedding_grad->data()[idx];

        const Matrix& out = trace.embeddings[k];
        Matrix dpre = demb;
        for (std::size_t idx = 0; idx < dpre.data().size(); ++idx)
            dpre.data()[idx] *= 1.0 - out.data()[idx] * out.data()[idx];

        const Matrix dw = matmul(transpose(dpre), trace.aggregated[k - 1]);
        for (std::size_t idx = 0; idx < dw.data().size(); ++idx)
            grads.layer_weights[k - 1].data()[idx] += dw.data()[idx];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < model.dim(); ++j)
                grads.layer_biases[k - 1][j] += dpre(i, j);

        demb = matmul(transpose(abar), matmul(dpre, model.layer_weights[k - 1]));
    }
    return grads;
}

Vec softmax(const Vec& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double total = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out[c] = std::exp(logits[c] - peak);
        total += out[c];
    }
    for (double& v : out)
        v /= total;
    return out;
}

double cross_entropy(const Vec& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw Error(ErrorCode::InvalidInput, "label out of range");
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits)
        total += std::exp(v - peak);
    return -(logits[static_cast<std::size_t>(label)] - peak - std::log(total));
}

Vec cross_entropy_grad(const Vec& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw Error(ErrorCode::InvalidInput, "label out of range");
    Vec g = softmax(logits);
    g[static_cast<std::size_t>(label)] -= 1.0;
    return g;
}

} // namespace mot
