#include "mot/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mot {

void GraphTopology::validate() const {
    if (n == 0)
        throw Error(ErrorCode::InvalidInput, "graph needs at least one vertex");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n)
            throw Error(ErrorCode::InvalidInput,
                        "edge endpoint out of range: (" + std::to_string(u) + ", " +
                            std::to_string(v) + ")");
        const auto key = std::minmax(u, v);
        if (!seen.insert(key).second)
            throw Error(ErrorCode::InvalidInput,
                        "duplicate edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    }
    if (!edge_weights.empty()) {
        if (edge_weights.size() != edges.size())
            throw Error(ErrorCode::InvalidInput, "need one weight per edge or none at all");
        for (double w : edge_weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw Error(ErrorCode::InvalidInput, "edge weights must be positive and finite");
    }
}

Matrix GraphTopology::adjacency(bool with_self_loops) const {
    validate();
    Matrix a(n, n, 0.0);
    for (const auto& [u, v] : edges) {
        a(u, v) = 1.0;
        a(v, u) = 1.0;
    }
    if (with_self_loops)
        for (std::size_t i = 0; i < n; ++i)
            a(i, i) = 1.0;
    return a;
}

Matrix GraphTopology::weight_matrix() const {
    validate();
    Matrix w(n, n, 1.0);
    for (std::size_t e = 0; e < edge_weights.size(); ++e) {
        const auto& [u, v] = edges[e];
        w(u, v) = edge_weights[e];
        w(v, u) = edge_weights[e];
    }
    return w;
}

namespace {

Matrix binarize_positive(const Matrix& m) {
    Matrix out(m.rows(), m.cols(), 0.0);
    for (std::size_t k = 0; k < m.data().size(); ++k)
        out.data()[k] = m.data()[k] > 0.0 ? 1.0 : 0.0;
    return out;
}

} // namespace

MaskMatrix build_mask(const GraphTopology& topology, const MaskSpec& spec) {
    topology.validate();
    const std::size_t n = topology.n;
    switch (spec.variant) {
    case MaskSpec::Variant::Ones:
        return MaskMatrix::ones(n, n);
    case MaskSpec::Variant::Identity:
        return MaskMatrix::identity(n);
    case MaskSpec::Variant::Adjacency:
        return MaskMatrix::from_support(topology.adjacency(true));
    case MaskSpec::Variant::AdjacencyPower: {
        if (spec.power < 1)
            throw Error(ErrorCode::InvalidInput, "adjacency power must be >= 1");
        const Matrix base = topology.adjacency(true);
        Matrix reach = base;
        for (int step = 1; step < spec.power; ++step)
            reach = binarize_positive(matmul(reach, base));
        return MaskMatrix::from_support(reach);
    }
    case MaskSpec::Variant::Polynomial: {
        if (spec.coefficients.empty())
            throw Error(ErrorCode::InvalidInput, "polynomial mask needs coefficients");
        const Matrix base = topology.adjacency(true);
        Matrix power = Matrix::identity(n);
        Matrix total(n, n, 0.0);
        for (std::size_t k = 0; k < spec.coefficients.size(); ++k) {
            if (k > 0)
                power = matmul(power, base);
            for (std::size_t idx = 0; idx < total.data().size(); ++idx)
                total.data()[idx] += spec.coefficients[k] * power.data()[idx];
        }
        return MaskMatrix::from_support(total);
    }
    }
    throw Error(ErrorCode::InvalidInput, "unknown mask variant");
}

} // namespace mot
