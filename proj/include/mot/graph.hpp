#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mot/types.hpp"

namespace mot {

/// Undirected graph over vertices 0..n-1. Weights are optional; when present
/// there is one positive weight per edge. `self_loops_added` records whether
/// the edge list already carries explicit (i, i) loops — mask construction
/// puts the diagonal in regardless.
struct GraphTopology {
    std::size_t n = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    Vec edge_weights;
    bool self_loops_added = false;

    void validate() const;

    bool weighted() const { return !edge_weights.empty(); }

    /// Binary symmetric adjacency; unit diagonal forced when requested.
    Matrix adjacency(bool with_self_loops) const;

    /// Symmetric positive edge-weight lookup: explicit weight on listed
    /// edges, 1 everywhere else (including the diagonal). Only meaningful at
    /// masked positions.
    Matrix weight_matrix() const;
};

/// Which support pattern to hand the transport solver.
struct MaskSpec {
    enum class Variant {
        Ones,           // dense coupling, no structural constraint
        Identity,       // vertex-to-same-vertex only
        Adjacency,      // graph neighbours plus self loops
        AdjacencyPower, // k-hop reachability support
        Polynomial,     // support of sum_k coefficients[k] * A^k, entries > 0
    };

    Variant variant = Variant::Adjacency;
    int power = 1;
    Vec coefficients;

    static MaskSpec ones() { return {Variant::Ones, 1, {}}; }
    static MaskSpec identity() { return {Variant::Identity, 1, {}}; }
    static MaskSpec adjacency() { return {Variant::Adjacency, 1, {}}; }
    static MaskSpec adjacency_power(int k) { return {Variant::AdjacencyPower, k, {}}; }
    static MaskSpec polynomial(Vec coefficients) {
        return {Variant::Polynomial, 1, std::move(coefficients)};
    }
};

/// n x n mask for coupling a graph with itself under the given spec. Self
/// loops are always present in the adjacency before any power or polynomial
/// is taken, so the diagonal survives in every graph-derived variant.
MaskMatrix build_mask(const GraphTopology& topology, const MaskSpec& spec);

} // namespace mot
