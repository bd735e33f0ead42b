#pragma once

#include "octolb/forest.hpp"
#include "octolb/scenario.hpp"
#include "octolb/sfc.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace octolb {

/// Per-leaf computational weight plus per-face-pair communication weight
/// (the shared interface area). Keys of comm are ordered pairs (a < b).
struct WeightMap {
    std::map<BlockId, std::uint64_t> comp;
    std::map<std::pair<BlockId, BlockId>, double> comm;

    std::uint64_t total_comp() const {
        std::uint64_t t = 0;
        for (const auto& [id, w] : comp)
            t += w;
        return t;
    }

    std::uint64_t comp_at(const BlockId& id) const {
        const auto it = comp.find(id);
        if (it == comp.end())
            throw NotFoundError("weight map: no entry for " + id.str());
        return it->second;
    }

    void scale(std::uint64_t factor) {
        for (auto& [id, w] : comp)
            w *= factor;
    }
};

struct RankAssignment {
    std::map<BlockId, std::uint32_t> owner;
    std::uint32_t p = 1;
};

enum class WeightSource { ParticleCount, ContactCount };

/// comp from the chosen per-leaf source, comm from positive interface areas.
inline WeightMap assign_weights(const Forest& forest, WeightSource source,
                                const ParticleSet& particles) {
    WeightMap w;
    w.comp = source == WeightSource::ParticleCount ? particles_per_leaf(particles, forest)
                                                   : count_contacts(particles, forest);
    for (const BlockId& a : forest.leaves())
        for (const NeighborInfo& nb : forest.neighbors(a))
            if (nb.interface_area > 0.0 && a < nb.id)
                w.comm[{a, nb.id}] = nb.interface_area;
    return w;
}

struct RefinementThresholds {
    std::uint64_t refine_above = 0;
    std::uint64_t coarsen_below = 0;

    /// Coarsening 8 siblings must not immediately re-trigger refinement.
    void validate() const {
        if (coarsen_below * 8 > refine_above)
            throw ValidationError("thresholds.coarsen_below and thresholds.refine_above violate "
                                  "the hysteresis invariant (8 * coarsen_below <= refine_above)");
    }

    static RefinementThresholds defaults_for(std::uint64_t total_comp, std::uint32_t p) {
        RefinementThresholds t;
        t.refine_above = std::max<std::uint64_t>(1, 2 * (total_comp / std::max(1u, p)));
        t.coarsen_below = t.refine_above / 16;
        return t;
    }
};

/// Refine set: overweight leaves with headroom. Coarsen set: parents of
/// complete underweight sibling octets. Hysteresis keeps the sets disjoint.
inline std::pair<std::vector<BlockId>, std::vector<BlockId>>
decide_refinement(const Forest& forest, const WeightMap& w, const RefinementThresholds& t) {
    t.validate();
    std::vector<BlockId> refine;
    std::map<BlockId, std::pair<int, bool>> octets; // parent -> (leaf children, all light)
    for (const BlockId& id : forest.leaves()) {
        const std::uint64_t wt = w.comp_at(id);
        if (wt > t.refine_above && id.level < forest.max_level())
            refine.push_back(id);
        if (id.level > 0) {
            auto& [count, light] = octets.try_emplace(id.parent(), 0, true).first->second;
            ++count;
            light = light && wt < t.coarsen_below;
        }
    }
    std::vector<BlockId> coarsen;
    for (const auto& [parent, state] : octets)
        if (state.first == 8 && state.second)
            coarsen.push_back(parent);
    return {refine, coarsen};
}

enum class BalancerKind { SfcMorton, SfcHilbert, Diffusive, GreedyGlobal };

struct Balancer {
    BalancerKind kind = BalancerKind::SfcHilbert;
    std::uint32_t iterations = 10; ///< diffusive only

    std::string name() const {
        switch (kind) {
        case BalancerKind::SfcMorton:
            return "sfc_morton";
        case BalancerKind::SfcHilbert:
            return "sfc_hilbert";
        case BalancerKind::Diffusive:
            return "diffusive";
        case BalancerKind::GreedyGlobal:
            return "greedy_global";
        }
        return "?";
    }

    static Balancer parse(const std::string& name, std::uint32_t iterations = 10) {
        if (name == "sfc_morton")
            return {BalancerKind::SfcMorton, iterations};
        if (name == "sfc_hilbert")
            return {BalancerKind::SfcHilbert, iterations};
        if (name == "diffusive")
            return {BalancerKind::Diffusive, iterations};
        if (name == "greedy_global")
            return {BalancerKind::GreedyGlobal, iterations};
        throw ValidationError("unknown balancer \"" + name + "\"");
    }
};

/// Symmetric rank adjacency; the diffusive balancer exchanges load only
/// along these edges.
struct RankGraph {
    std::uint32_t p = 1;
    std::vector<std::vector<std::uint32_t>> adj;

    std::uint32_t max_degree() const {
        std::size_t d = 0;
        for (const auto& a : adj)
            d = std::max(d, a.size());
        return static_cast<std::uint32_t>(d);
    }

    bool has_edge(std::uint32_t a, std::uint32_t b) const {
        return std::binary_search(adj[a].begin(), adj[a].end(), b);
    }

    /// Ranks are adjacent when they own leaves sharing a face.
    static RankGraph from_assignment(const Forest& forest, const RankAssignment& a) {
        RankGraph g;
        g.p = a.p;
        std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (const BlockId& leaf : forest.leaves()) {
            const std::uint32_t ra = a.owner.at(leaf);
            for (const NeighborInfo& nb : forest.neighbors(leaf)) {
                if (nb.interface_area <= 0.0)
                    continue;
                const std::uint32_t rb = a.owner.at(nb.id);
                if (ra != rb)
                    edges.insert({std::min(ra, rb), std::max(ra, rb)});
            }
        }
        g.adj.assign(g.p, {});
        for (const auto& [x, y] : edges) {
            g.adj[x].push_back(y);
            g.adj[y].push_back(x);
        }
        for (auto& v : g.adj)
            std::sort(v.begin(), v.end());
        return g;
    }
};

/// Operation counts and message traffic of one balancer run.
struct BalanceStats {
    std::uint64_t global_ops = 0; ///< work every rank replays (SFC, greedy)
    std::vector<std::uint64_t> per_rank_ops;
    std::set<std::pair<std::uint32_t, std::uint32_t>> message_pairs; ///< diffusive traffic
};

/// Greedy prefix-sum walk over the curve order: advance while the running
/// sum stays within the cumulative target, include a straddling leaf only
/// when that lands strictly closer to the target. Guarantees
/// l_max < total/p + max leaf weight.
inline RankAssignment balance_sfc(const std::vector<BlockId>& order, const WeightMap& w,
                                  std::uint32_t p, BalanceStats* stats = nullptr) {
    if (p < 1)
        throw DomainError("balance_sfc: p must be at least 1");
    if (order.size() != w.comp.size())
        throw ConsistencyError("balance_sfc: order does not cover the weight map");
    using i128 = __int128;
    std::uint64_t total = 0;
    for (const BlockId& id : order)
        total += w.comp_at(id);

    RankAssignment out;
    out.p = p;
    std::uint64_t cum = 0;
    std::uint32_t rank = 0;
    std::uint64_t ops = 0;
    for (const BlockId& id : order) {
        const std::uint64_t wt = w.comp_at(id);
        for (;;) {
            ++ops;
            if (rank + 1 >= p)
                break; // last rank absorbs the tail
            const i128 target = i128(total) * (rank + 1);
            const i128 before = i128(cum) * p;
            const i128 after = before + i128(wt) * p;
            if (after <= target)
                break;
            if (after + before < 2 * target) {
                // straddler lands closer: keep it, then close this rank
                out.owner[id] = rank;
                ++rank;
                break;
            }
            ++rank; // close the rank short; retry against the next target
        }
        if (!out.owner.count(id))
            out.owner[id] = rank;
        cum += wt;
    }
    if (stats)
        stats->global_ops += ops;
    return out;
}

/// One load-gradient iteration moves leaves only between adjacent ranks:
/// outflow f_ij = alpha * max(0, l_i - l_j) with alpha = 1/(1 + max degree),
/// filled largest-first preferring leaves that touch the receiver's
/// territory. Runs exactly `iterations` Jacobi rounds.
inline RankAssignment
balance_diffusive(const RankAssignment& a, const WeightMap& w, const RankGraph& graph,
                  std::uint32_t iterations,
                  const std::map<BlockId, std::vector<BlockId>>* leaf_adjacency = nullptr,
                  BalanceStats* stats = nullptr) {
    const std::uint32_t p = a.p;
    if (graph.p != p)
        throw ConsistencyError("balance_diffusive: rank graph size mismatch");
    const double alpha = 1.0 / (1.0 + double(graph.max_degree()));

    RankAssignment cur = a;
    if (stats)
        stats->per_rank_ops.assign(p, 0);
    for (std::uint32_t iter = 0; iter < iterations; ++iter) {
        std::vector<std::uint64_t> load(p, 0);
        std::vector<std::vector<BlockId>> owned(p);
        for (const auto& [id, r] : cur.owner) {
            load[r] += w.comp_at(id);
            if (w.comp_at(id) > 0)
                owned[r].push_back(id); // weightless blocks never move
        }
        if (stats)
            for (std::uint32_t r = 0; r < p; ++r)
                for (const std::uint32_t j : graph.adj[r])
                    stats->message_pairs.insert({r, j}); // gradient exchange

        std::vector<std::pair<BlockId, std::uint32_t>> moves;
        for (std::uint32_t r = 0; r < p; ++r) {
            if (owned[r].empty())
                continue;
            std::vector<BlockId> pool = owned[r];
            for (const std::uint32_t j : graph.adj[r]) {
                if (load[r] <= load[j] || pool.empty())
                    continue;
                const double flow = alpha * double(load[r] - load[j]);
                auto touches_j = [&](const BlockId& id) {
                    if (!leaf_adjacency)
                        return false;
                    const auto it = leaf_adjacency->find(id);
                    if (it == leaf_adjacency->end())
                        return false;
                    for (const BlockId& nb : it->second)
                        if (cur.owner.at(nb) == j)
                            return true;
                    return false;
                };
                std::sort(pool.begin(), pool.end(), [&](const BlockId& x, const BlockId& y) {
                    const bool tx = touches_j(x), ty = touches_j(y);
                    if (tx != ty)
                        return tx;
                    const std::uint64_t wx = w.comp_at(x), wy = w.comp_at(y);
                    if (wx != wy)
                        return wx > wy;
                    return x < y;
                });
                if (stats)
                    stats->per_rank_ops[r] += pool.size();
                std::uint64_t taken = 0;
                std::vector<BlockId> kept;
                for (const BlockId& id : pool) {
                    const std::uint64_t wt = w.comp_at(id);
                    if (double(taken + wt) <= flow) {
                        taken += wt;
                        moves.push_back({id, j});
                        if (stats)
                            stats->message_pairs.insert({r, j});
                    } else {
                        kept.push_back(id);
                    }
                }
                pool.swap(kept);
            }
        }
        for (const auto& [id, to] : moves)
            cur.owner[id] = to;
    }
    return cur;
}

/// Longest-processing-time list scheduling: sort by descending weight,
/// assign each leaf to the least-loaded rank. Needs the global weight view.
inline RankAssignment balance_greedy_global(const WeightMap& w, std::uint32_t p,
                                            BalanceStats* stats = nullptr) {
    if (p < 1)
        throw DomainError("balance_greedy_global: p must be at least 1");
    std::uint64_t ops = 0;
    std::vector<const std::pair<const BlockId, std::uint64_t>*> items;
    items.reserve(w.comp.size());
    for (const auto& kv : w.comp)
        items.push_back(&kv);
    std::sort(items.begin(), items.end(), [&ops](const auto* x, const auto* y) {
        ++ops;
        if (x->second != y->second)
            return x->second > y->second;
        return x->first < y->first;
    });

    using HeapItem = std::pair<std::uint64_t, std::uint32_t>; // (load, rank)
    auto cmp = [&ops](const HeapItem& x, const HeapItem& y) {
        ++ops;
        return x > y; // min-heap, ties to the lowest rank
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(cmp)> heap(cmp);
    for (std::uint32_t r = 0; r < p; ++r)
        heap.push({0, r});

    RankAssignment out;
    out.p = p;
    for (const auto* kv : items) {
        auto [load, rank] = heap.top();
        heap.pop();
        out.owner[kv->first] = rank;
        heap.push({load + kv->second, rank});
    }
    if (stats)
        stats->global_ops += ops;
    return out;
}

} // namespace octolb
