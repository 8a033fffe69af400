#include "mot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace mot {

namespace {

constexpr double kCostScale = 1e9;
constexpr std::int64_t kMassScale = 1000000; // transported mass is measured in 1e-6 units
constexpr std::size_t kMaxFlowSide = 64;

// Integerize a probability vector to kMassScale units, reconciling the
// flooring deficit by largest remainder (ties broken toward lower index).
std::vector<std::int64_t> integer_masses(const ProbVec& p) {
    const std::size_t n = p.size();
    std::vector<std::int64_t> units(n);
    std::vector<double> remainder(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scaled = p[i] * static_cast<double>(kMassScale);
        units[i] = static_cast<std::int64_t>(std::floor(scaled));
        remainder[i] = scaled - static_cast<double>(units[i]);
        assigned += units[i];
    }
    std::int64_t deficit = kMassScale - assigned;
    if (deficit < 0)
        throw Error(ErrorCode::InvalidInput, "mass integerization overshot total");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
    for (std::size_t k = 0; k < order.size() && deficit > 0; ++k, --deficit)
        units[order[k]] += 1;
    if (deficit != 0)
        throw Error(ErrorCode::InvalidInput, "mass integerization could not reconcile total");
    return units;
}

// Successive-shortest-path min-cost max-flow with vertex potentials.
// Sized for two-layer transportation networks; no scaling tricks needed.
class MinCostFlow {
public:
    explicit MinCostFlow(std::size_t node_count)
        : head_(node_count), dist_(node_count), potential_(node_count, 0.0),
          prev_edge_(node_count), in_queue_(node_count) {}

    void add_edge(std::size_t from, std::size_t to, std::int64_t capacity, double cost) {
        head_[from].push_back(edges_.size());
        edges_.push_back({to, capacity, cost});
        head_[to].push_back(edges_.size());
        edges_.push_back({from, 0, -cost});
    }

    // Pushes flow from s to t until `amount` is routed or no path remains.
    // Returns the routed amount.
    std::int64_t run(std::size_t s, std::size_t t, std::int64_t amount) {
        bellman_ford(s);
        std::int64_t routed = 0;
        while (routed < amount) {
            if (!dijkstra(s, t))
                break;
            for (std::size_t v = 0; v < head_.size(); ++v)
                if (dist_[v] < kInf)
                    potential_[v] += dist_[v];
            std::int64_t bottleneck = amount - routed;
            for (std::size_t v = t; v != s;) {
                const Edge& e = edges_[prev_edge_[v]];
                bottleneck = std::min(bottleneck, e.capacity);
                v = edges_[prev_edge_[v] ^ 1].to;
            }
            for (std::size_t v = t; v != s;) {
                edges_[prev_edge_[v]].capacity -= bottleneck;
                edges_[prev_edge_[v] ^ 1].capacity += bottleneck;
                v = edges_[prev_edge_[v] ^ 1].to;
            }
            routed += bottleneck;
        }
        return routed;
    }

    std::int64_t edge_flow(std::size_t edge_index) const {
        return edges_[edge_index ^ 1].capacity;
    }

    std::size_t edge_count() const { return edges_.size(); }

private:
    struct Edge {
        std::size_t to;
        std::int64_t capacity;
        double cost;
    };

    static constexpr double kInf = std::numeric_limits<double>::infinity();

    // Arc costs may be negative (Gromov pseudo-costs); one label-correcting
    // pass seeds valid potentials before the Dijkstra rounds.
    void bellman_ford(std::size_t s) {
        std::fill(potential_.begin(), potential_.end(), kInf);
        potential_[s] = 0.0;
        std::vector<std::size_t> queue{s};
        std::fill(in_queue_.begin(), in_queue_.end(), false);
        in_queue_[s] = true;
        while (!queue.empty()) {
            const std::size_t u = queue.back();
            queue.pop_back();
            in_queue_[u] = false;
            for (std::size_t ei : head_[u]) {
                const Edge& e = edges_[ei];
                if (e.capacity > 0 && potential_[u] + e.cost < potential_[e.to] - 1e-12) {
                    potential_[e.to] = potential_[u] + e.cost;
                    if (!in_queue_[e.to]) {
                        in_queue_[e.to] = true;
                        queue.push_back(e.to);
                    }
                }
            }
        }
        for (double& p : potential_)
            if (p == kInf)
                p = 0.0;
    }

    bool dijkstra(std::size_t s, std::size_t t) {
        std::fill(dist_.begin(), dist_.end(), kInf);
        std::vector<bool> done(head_.size(), false);
        dist_[s] = 0.0;
        while (true) {
            std::size_t u = head_.size();
            double best = kInf;
            for (std::size_t v = 0; v < head_.size(); ++v)
                if (!done[v] && dist_[v] < best) {
                    best = dist_[v];
                    u = v;
                }
            if (u == head_.size())
                break;
            done[u] = true;
            for (std::size_t ei : head_[u]) {
                const Edge& e = edges_[ei];
                if (e.capacity <= 0 || done[e.to])
                    continue;
                const double cand = dist_[u] + e.cost + potential_[u] - potential_[e.to];
                if (cand < dist_[e.to]) {
                    dist_[e.to] = cand;
                    prev_edge_[e.to] = ei;
                }
            }
        }
        return dist_[t] < kInf;
    }

    std::vector<std::vector<std::size_t>> head_;
    std::vector<Edge> edges_;
    std::vector<double> dist_;
    std::vector<double> potential_;
    std::vector<std::size_t> prev_edge_;
    std::vector<bool> in_queue_;
};

} // namespace

ExactMwd exact_mwd(const CostMatrix& cost, const MaskMatrix& mask, const ProbVec& a,
                   const ProbVec& b) {
    const std::size_t n = mask.rows();
    const std::size_t m = mask.cols();
    if (cost.rows() != n || cost.cols() != m)
        throw Error(ErrorCode::ShapeMismatch, "cost and mask shapes disagree");
    if (a.size() != n || b.size() != m)
        throw Error(ErrorCode::ShapeMismatch, "marginal sizes disagree with mask");
    if (n > kMaxFlowSide || m > kMaxFlowSide)
        throw Error(ErrorCode::TooLarge, "exact solver is capped at 64 x 64 instances");
    mask.require_no_zero_line();

    const std::vector<std::int64_t> supply = integer_masses(a);
    const std::vector<std::int64_t> demand = integer_masses(b);

    const std::size_t source = n + m;
    const std::size_t sink = n + m + 1;
    MinCostFlow flow(n + m + 2);
    for (std::size_t i = 0; i < n; ++i)
        flow.add_edge(source, i, supply[i], 0.0);
    // Remember which forward edge carries each (i, j) cell of the plan.
    Matrix edge_of(n, m, -1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : mask.row_support(i)) {
            edge_of(i, j) = static_cast<double>(flow.edge_count());
            flow.add_edge(i, n + j, kMassScale, std::round(cost(i, j) * kCostScale));
        }
    for (std::size_t j = 0; j < m; ++j)
        flow.add_edge(n + j, sink, demand[j], 0.0);

    const std::int64_t routed = flow.run(source, sink, kMassScale);
    if (routed < kMassScale)
        return ExactMwd{}; // no routing exists: the masked polytope is empty

    Matrix plan(n, m, 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : mask.row_support(i)) {
            const auto ei = static_cast<std::size_t>(edge_of(i, j));
            const double mass =
                static_cast<double>(flow.edge_flow(ei)) / static_cast<double>(kMassScale);
            plan(i, j) = mass;
            value += mass * cost(i, j);
        }
    ExactMwd out;
    out.plan.emplace(std::move(plan), mask);
    out.value = value;
    return out;
}

double naive_gw_objective(const Matrix& cx, const Matrix& cy, const Matrix& masked_plan) {
    const std::size_t n = masked_plan.rows();
    const std::size_t m = masked_plan.cols();
    if (cx.rows() != n || cx.cols() != n)
        throw Error(ErrorCode::ShapeMismatch, "cx must be n x n for an n-row plan");
    if (cy.rows() != m || cy.cols() != m)
        throw Error(ErrorCode::ShapeMismatch, "cy must be m x m for an m-column plan");
    if (n > 8 || m > 8)
        throw Error(ErrorCode::TooLarge, "naive quadratic objective is capped at 8 x 8");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (masked_plan(i, j) == 0.0)
                continue;
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < m; ++l) {
                    const double gap = cx(i, k) - cy(j, l);
                    total += gap * gap * masked_plan(i, j) * masked_plan(k, l);
                }
        }
    return total;
}

PermutationGw permutation_gw_search(const Matrix& cx, const Matrix& cy) {
    const std::size_t n = cx.rows();
    if (cx.cols() != n || cy.rows() != n || cy.cols() != n)
        throw Error(ErrorCode::ShapeMismatch, "permutation search needs two n x n matrices");
    if (n == 0)
        throw Error(ErrorCode::InvalidInput, "permutation search needs n >= 1");
    if (n > 6)
        throw Error(ErrorCode::TooLarge, "permutation search is capped at n = 6");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    PermutationGw best;
    best.value = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const double gap = cx(i, k) - cy(perm[i], perm[k]);
                total += gap * gap;
            }
        total /= static_cast<double>(n * n);
        if (total < best.value) {
            best.value = total;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace mot
